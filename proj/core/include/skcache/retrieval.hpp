#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "skcache/cache.hpp"
#include "skcache/descriptors.hpp"

namespace skcache {

struct AffinityConfig {
    double beta = 3.0;

    void validate() const;
};

/// Per-descriptor class scores O, (P+Z+1) rows x C columns, row-major.
class DescriptorLogits {
public:
    DescriptorLogits() = default;
    DescriptorLogits(std::size_t rows, std::size_t classes)
        : rows_(rows), classes_(classes), values_(rows * classes, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t classes() const noexcept { return classes_; }

    double operator()(std::size_t d, std::size_t j) const noexcept { return values_[d * classes_ + j]; }
    double& operator()(std::size_t d, std::size_t j) noexcept { return values_[d * classes_ + j]; }

    std::span<const double> row(std::size_t d) const noexcept {
        return {values_.data() + d * classes_, classes_};
    }

private:
    std::size_t rows_ = 0;
    std::size_t classes_ = 0;
    std::vector<double> values_;
};

/// Cosine similarity; 0 when either vector has zero norm.
double cosine(std::span<const float> a, std::span<const float> b);

/// exp(-beta * (1 - cos(q, k))). Throws GeometryError on length mismatch.
double affinity(std::span<const float> query, std::span<const float> key, double beta);

/// O[d][j] = sum over entries i of block j of affinity(q^(d), k_{j,i}^(d)).
/// Equivalent to a^(d) Y with Y the one-hot label matrix of all entries.
DescriptorLogits retrieve(const DescriptorSet& query, const SkeletonCache& cache,
                          const AffinityConfig& config);

}  // namespace skcache
