#include "skcache/pipeline.hpp"

#include <string>

#include "skcache/errors.hpp"

namespace skcache {

namespace {

using Clock = std::chrono::steady_clock;

CacheGeometry make_geometry(const PartitionScheme& scheme, const PriorMatrix& priors,
                            std::uint32_t dim, std::uint32_t capacity) {
    return {static_cast<std::uint32_t>(priors.classes()), capacity,
            static_cast<std::uint32_t>(scheme.spatial_count()),
            static_cast<std::uint32_t>(scheme.temporal_count()), dim};
}

}  // namespace

void AdapterOptions::validate() const {
    if (capacity < 1) throw ValidationError("K must be >= 1");
    affinity.validate();
    if (!(alpha_s >= 0.0)) throw ValidationError("alpha_s must be >= 0");
}

StreamAdapter::StreamAdapter(PartitionScheme scheme, PriorMatrix priors, std::uint32_t feature_dim,
                             AdapterOptions options)
    : scheme_(std::move(scheme)),
      priors_(std::move(priors)),
      options_(options),
      cache_(make_geometry(scheme_, priors_, feature_dim, options.capacity)) {
    options_.validate();
    if (priors_.spatial() != scheme_.spatial_count() ||
        priors_.temporal() != scheme_.temporal_count()) {
        throw GeometryError("prior matrix P/Z (" + std::to_string(priors_.spatial()) + "/" +
                            std::to_string(priors_.temporal()) +
                            ") does not match the partition scheme (" +
                            std::to_string(scheme_.spatial_count()) + "/" +
                            std::to_string(scheme_.temporal_count()) + ")");
    }
}

StepResult StreamAdapter::process(const FeatureTensor& features,
                                  std::span<const double> zero_shot_logits) {
    return step(extract_descriptors(features, scheme_), zero_shot_logits);
}

std::vector<double> StreamAdapter::fused_scores(const DescriptorLogits& logits,
                                                std::size_t predicted_class) const {
    if (options_.prior_select == PriorSelect::PredictedClass) {
        return fuse(logits, priors_.row(predicted_class));
    }
    std::vector<double> s(logits.classes(), 0.0);
    for (std::size_t j = 0; j < s.size(); ++j) {
        const auto& w = priors_.row(j);
        for (std::size_t d = 0; d < logits.rows(); ++d) s[j] += w[d] * logits(d, j);
    }
    return s;
}

UpdateOutcome StreamAdapter::insert(const DescriptorSet& descriptors, const Prediction& gate) {
    return cache_.update(CacheEntry{descriptors, static_cast<std::uint32_t>(gate.predicted_class),
                                    static_cast<float>(gate.entropy)});
}

StepResult StreamAdapter::step(const DescriptorSet& descriptors,
                               std::span<const double> zero_shot_logits) {
    if (zero_shot_logits.size() != priors_.classes()) {
        throw GeometryError("sample has " + std::to_string(zero_shot_logits.size()) +
                            " logits, adapter expects " + std::to_string(priors_.classes()));
    }
    StepResult r;
    r.baseline = baseline_prediction(zero_shot_logits);

    const bool update_first = !options_.retrieve_before_update && !options_.gate_on_adapted;
    if (update_first) {
        const auto t0 = Clock::now();
        r.update = insert(descriptors, r.baseline);
        r.timings.update = Clock::now() - t0;
    }

    const auto t1 = Clock::now();
    const auto logits = retrieve(descriptors, cache_, options_.affinity);
    const auto t2 = Clock::now();
    const auto s = fused_scores(logits, r.baseline.predicted_class);
    r.adapted = enhance(zero_shot_logits, s, FusionConfig{options_.alpha_s});
    const auto t3 = Clock::now();
    r.timings.retrieval = t2 - t1;
    r.timings.fusion = t3 - t2;

    if (!update_first) {
        const auto t4 = Clock::now();
        r.update = insert(descriptors, options_.gate_on_adapted ? r.adapted : r.baseline);
        r.timings.update = Clock::now() - t4;
    }
    return r;
}

}  // namespace skcache
