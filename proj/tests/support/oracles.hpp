#pragma once

// Brute-force reference implementations used only by tests. They follow
// the textbook definitions literally (explicit index sets, materialized
// one-hot label matrix) and share no code with the engine's fast paths.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "skcache/cache.hpp"
#include "skcache/tensorio.hpp"

namespace skcache::testing {

/// Mean of F[n, t, v] over t in `frames`, v in `joints` for every channel n.
inline std::vector<double> pooled_mean(const FeatureTensor& f, const std::vector<std::size_t>& frames,
                                       const std::vector<std::size_t>& joints) {
    std::vector<double> out(f.dims().channels, 0.0);
    for (std::size_t n = 0; n < f.dims().channels; ++n) {
        double acc = 0.0;
        for (auto t : frames) {
            for (auto v : joints) acc += f.at(n, t, v);
        }
        out[n] = acc / static_cast<double>(frames.size() * joints.size());
    }
    return out;
}

inline std::vector<std::size_t> iota_vec(std::size_t begin, std::size_t end) {
    std::vector<std::size_t> v;
    for (std::size_t i = begin; i < end; ++i) v.push_back(i);
    return v;
}

/// Frames of the three thirds using integer floor division on 1-based
/// indices: [1, T/3], [T/3+1, 2T/3], [2T/3+1, T], returned 0-based.
inline std::vector<std::vector<std::size_t>> thirds(std::size_t T) {
    const std::size_t a = T / 3;
    const std::size_t b = 2 * T / 3;
    return {iota_vec(0, a), iota_vec(a, b), iota_vec(b, T)};
}

/// Descriptor rows for an explicit scheme: [global, groups..., segments...].
inline std::vector<std::vector<double>> descriptor_oracle(
    const FeatureTensor& f, const std::vector<std::vector<std::size_t>>& groups,
    const std::vector<std::vector<std::size_t>>& segments) {
    const auto all_t = iota_vec(0, f.dims().frames);
    const auto all_v = iota_vec(0, f.dims().joints);
    std::vector<std::vector<double>> rows;
    rows.push_back(pooled_mean(f, all_t, all_v));
    for (const auto& g : groups) rows.push_back(pooled_mean(f, all_t, g));
    for (const auto& s : segments) rows.push_back(pooled_mean(f, s, all_v));
    return rows;
}

inline double cosine_oracle(std::span<const float> a, std::span<const float> b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return static_cast<double>(dot / std::sqrt(na * nb));
}

/// O[d][j] = (a^(d) Y)[j] with a^(d) the concatenated affinity row over every
/// cached entry and Y the dense one-hot label matrix (entries x classes).
inline std::vector<std::vector<double>> retrieval_oracle(const DescriptorSet& query,
                                                         const SkeletonCache& cache, double beta) {
    const std::size_t C = cache.geometry().classes;
    const std::size_t D = cache.geometry().descriptor_count();
    std::vector<const CacheEntry*> entries;
    for (std::size_t j = 0; j < C; ++j) {
        for (const auto& e : cache.block(j)) entries.push_back(&e);
    }
    std::vector<std::vector<double>> Y(entries.size(), std::vector<double>(C, 0.0));
    for (std::size_t r = 0; r < entries.size(); ++r) Y[r][entries[r]->value_class] = 1.0;

    std::vector<std::vector<double>> O(D, std::vector<double>(C, 0.0));
    for (std::size_t d = 0; d < D; ++d) {
        std::vector<double> a(entries.size());
        for (std::size_t r = 0; r < entries.size(); ++r) {
            a[r] = std::exp(-beta * (1.0 - cosine_oracle(query.row(d), entries[r]->key.row(d))));
        }
        for (std::size_t j = 0; j < C; ++j) {
            for (std::size_t r = 0; r < entries.size(); ++r) O[d][j] += a[r] * Y[r][j];
        }
    }
    return O;
}

/// s_j = sum_d w_d O[d][j] by explicit double loop.
inline std::vector<double> fuse_oracle(const std::vector<std::vector<double>>& O,
                                       const std::vector<double>& w) {
    std::vector<double> s(O.empty() ? 0 : O[0].size(), 0.0);
    for (std::size_t j = 0; j < s.size(); ++j) {
        for (std::size_t d = 0; d < O.size(); ++d) s[j] += w[d] * O[d][j];
    }
    return s;
}

inline FeatureTensor random_tensor(TensorDims dims, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    FeatureTensor f(dims);
    for (float& v : f.data()) v = static_cast<float>(dist(rng));
    return f;
}

inline DescriptorSet random_descriptors(std::size_t rows, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    DescriptorSet d(rows, dim);
    for (float& v : d.values()) v = static_cast<float>(dist(rng));
    return d;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() /
                ("skcache_test_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace skcache::testing
