#include "skcache/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skcache/errors.hpp"

namespace skcache {

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
    return acc;
}

double cosine_with_norms(std::span<const float> a, double norm_a, std::span<const float> b,
                         double norm_b) {
    if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
    // Rounding can push |cos| a hair past 1.
    return std::clamp(dot(a, b) / (norm_a * norm_b), -1.0, 1.0);
}

}  // namespace

void AffinityConfig::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be > 0");
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw GeometryError("cosine of vectors of length " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
    }
    return cosine_with_norms(a, std::sqrt(dot(a, a)), b, std::sqrt(dot(b, b)));
}

double affinity(std::span<const float> query, std::span<const float> key, double beta) {
    return std::exp(-beta * (1.0 - cosine(query, key)));
}

DescriptorLogits retrieve(const DescriptorSet& query, const SkeletonCache& cache,
                          const AffinityConfig& config) {
    config.validate();
    cache.check_key(query);
    const std::size_t rows = query.rows();
    const std::size_t classes = cache.geometry().classes;

    std::vector<double> query_norms(rows);
    for (std::size_t d = 0; d < rows; ++d) query_norms[d] = std::sqrt(dot(query.row(d), query.row(d)));

    DescriptorLogits out(rows, classes);
    for (std::size_t j = 0; j < classes; ++j) {
        const auto block = cache.block(j);
        const auto norms = cache.block_norms(j);
        for (std::size_t i = 0; i < block.size(); ++i) {
            for (std::size_t d = 0; d < rows; ++d) {
                const double c =
                    cosine_with_norms(query.row(d), query_norms[d], block[i].key.row(d), norms[i][d]);
                out(d, j) += std::exp(-config.beta * (1.0 - c));
            }
        }
    }
    return out;
}

}  // namespace skcache
