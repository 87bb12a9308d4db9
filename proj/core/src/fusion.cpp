#include "skcache/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skcache/errors.hpp"

namespace skcache {

void FusionConfig::validate() const {
    if (!(alpha_s >= 0.0) || !std::isfinite(alpha_s)) throw ValidationError("alpha_s must be >= 0");
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) return {};
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

double entropy(std::span<const double> probabilities) {
    double total = 0.0;
    double h = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw ValidationError("entropy: probabilities must be finite and non-negative");
        }
        total += p;
        if (p > 0.0) h -= p * std::log(p);
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw ValidationError("entropy: probabilities sum to " + std::to_string(total));
    }
    return std::max(h, 0.0);
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<double> fuse(const DescriptorLogits& logits, std::span<const double> weights) {
    if (weights.size() != logits.rows()) {
        throw GeometryError("fuse: " + std::to_string(weights.size()) + " weights for " +
                            std::to_string(logits.rows()) + " descriptor rows");
    }
    std::vector<double> s(logits.classes(), 0.0);
    for (std::size_t d = 0; d < logits.rows(); ++d) {
        const double w = weights[d];
        if (w == 0.0) continue;
        const auto row = logits.row(d);
        for (std::size_t j = 0; j < s.size(); ++j) s[j] += w * row[j];
    }
    return s;
}

Prediction enhance(std::span<const double> zero_shot_logits, std::span<const double> fused,
                   const FusionConfig& config) {
    config.validate();
    if (zero_shot_logits.size() != fused.size()) {
        throw GeometryError("enhance: " + std::to_string(zero_shot_logits.size()) +
                            " zero-shot logits vs " + std::to_string(fused.size()) + " fused");
    }
    Prediction p;
    p.adapted_logits.resize(fused.size());
    for (std::size_t j = 0; j < fused.size(); ++j) {
        p.adapted_logits[j] = zero_shot_logits[j] + config.alpha_s * fused[j];
    }
    p.probabilities = softmax(p.adapted_logits);
    p.entropy = entropy(p.probabilities);
    p.predicted_class = argmax(p.adapted_logits);
    return p;
}

Prediction baseline_prediction(std::span<const double> zero_shot_logits) {
    Prediction p;
    p.adapted_logits.assign(zero_shot_logits.begin(), zero_shot_logits.end());
    p.probabilities = softmax(p.adapted_logits);
    p.entropy = entropy(p.probabilities);
    p.predicted_class = argmax(p.adapted_logits);
    return p;
}

}  // namespace skcache
