#pragma once

// Per-sample streaming adaptation: descriptor extraction, baseline
// prediction, cache update, retrieval, prior-weighted fusion and logit
// enhancement, in that order by default.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "skcache/cache.hpp"
#include "skcache/descriptors.hpp"
#include "skcache/fusion.hpp"
#include "skcache/priors.hpp"
#include "skcache/retrieval.hpp"

namespace skcache {

/// Which prior row weights the fusion of a test sample.
enum class PriorSelect {
    /// Row of the zero-shot predicted class.
    PredictedClass,
    /// s_j computed with row j for every class j.
    PerClassDiagonal,
};

struct AdapterOptions {
    std::uint32_t capacity = 8;  // K
    AffinityConfig affinity{};
    double alpha_s = 5.0;
    /// Retrieve first, then update the cache (default updates first).
    bool retrieve_before_update = false;
    /// Gate and label cache entries with the adapted prediction instead of
    /// the zero-shot one. Implies retrieve-before-update.
    bool gate_on_adapted = false;
    PriorSelect prior_select = PriorSelect::PredictedClass;

    void validate() const;
};

struct StepTimings {
    std::chrono::nanoseconds update{0};
    std::chrono::nanoseconds retrieval{0};
    std::chrono::nanoseconds fusion{0};
};

struct StepResult {
    Prediction baseline;
    Prediction adapted;
    UpdateOutcome update = Rejected{};
    StepTimings timings;
};

class StreamAdapter {
public:
    /// `priors` rows are indexed in the adapter's dense class space.
    StreamAdapter(PartitionScheme scheme, PriorMatrix priors, std::uint32_t feature_dim,
                  AdapterOptions options);

    /// Extracts descriptors from `features`, then runs step().
    StepResult process(const FeatureTensor& features, std::span<const double> zero_shot_logits);

    /// One streaming step on precomputed descriptors.
    StepResult step(const DescriptorSet& descriptors, std::span<const double> zero_shot_logits);

    /// Fused cache logits for a query under the configured prior selection.
    std::vector<double> fused_scores(const DescriptorLogits& logits,
                                     std::size_t predicted_class) const;

    const SkeletonCache& cache() const noexcept { return cache_; }
    SkeletonCache& cache() noexcept { return cache_; }
    const PartitionScheme& scheme() const noexcept { return scheme_; }
    const AdapterOptions& options() const noexcept { return options_; }

private:
    UpdateOutcome insert(const DescriptorSet& descriptors, const Prediction& gate);

    PartitionScheme scheme_;
    PriorMatrix priors_;
    AdapterOptions options_;
    SkeletonCache cache_;
};

}  // namespace skcache
