#pragma once

// Weighted fusion of descriptor-wise cache logits and enhancement of the
// zero-shot logits: phi = phi_hat + alpha_s * (w . O).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "skcache/retrieval.hpp"

namespace skcache {

enum class WeightMode { Llm, Uniform, Random };

struct FusionConfig {
    double alpha_s = 5.0;
    WeightMode weight_mode = WeightMode::Llm;
    std::uint64_t random_seed = 0;  // used by WeightMode::Random only

    void validate() const;
};

struct Prediction {
    std::vector<double> adapted_logits;
    std::vector<double> probabilities;
    std::size_t predicted_class = 0;
    double entropy = 0.0;
};

/// Numerically stable softmax (max-subtracted).
std::vector<double> softmax(std::span<const double> logits);

/// Shannon entropy in nats with 0 ln 0 = 0. Throws ValidationError unless
/// `probabilities` is non-negative and sums to 1 within 1e-6.
double entropy(std::span<const double> probabilities);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// s_j = sum_d w_d * O(d, j).
std::vector<double> fuse(const DescriptorLogits& logits, std::span<const double> weights);

/// Softmax, entropy and argmax of phi_hat + alpha_s * s.
Prediction enhance(std::span<const double> zero_shot_logits, std::span<const double> fused,
                   const FusionConfig& config);

/// Prediction of the unadapted logits (alpha_s = 0).
Prediction baseline_prediction(std::span<const double> zero_shot_logits);

}  // namespace skcache
