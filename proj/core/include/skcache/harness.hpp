#pragma once

// Streaming evaluation harness: runs a container through the adapter one
// sample at a time, accumulates ZSL/GZSL metrics, and writes report files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skcache/pipeline.hpp"
#include "skcache/tensorio.hpp"

namespace skcache {

struct RunConfig {
    std::filesystem::path container;
    std::optional<std::filesystem::path> priors;
    /// Defaults to Llm when `priors` is set and Uniform otherwise.
    std::optional<WeightMode> weight_mode;
    std::optional<std::filesystem::path> scheme;
    std::uint32_t k = 8;
    double beta = 3.0;
    double alpha_s = 5.0;
    bool retrieve_before_update = false;
    bool gate_on_adapted = false;
    bool gzsl = false;
    PriorSelect prior_select = PriorSelect::PredictedClass;
    std::optional<std::filesystem::path> output_dir;
    /// Seeds the Random weight mode.
    std::uint64_t seed = 0;

    void validate() const;
    WeightMode effective_weight_mode() const;
};

/// Everything a run needs, already loaded.
struct RunInputs {
    StreamContainer container;
    std::optional<PriorMatrix> priors;
    PartitionScheme scheme = default_scheme();

    static RunInputs load(const RunConfig& config);
};

struct GzslScores {
    double seen = 0.0;      // S
    double unseen = 0.0;    // U
    double harmonic = 0.0;  // H
};

/// S = correct_seen / total_seen, U likewise, H = 2SU / (S + U) (0 when
/// both are 0). Throws ValidationError when a total is zero.
GzslScores gzsl_metrics(std::size_t correct_seen, std::size_t total_seen,
                        std::size_t correct_unseen, std::size_t total_unseen);
/// Harmonic mean of already-computed accuracies.
double harmonic_mean(double seen, double unseen);

struct ClassDelta {
    std::string name;
    std::size_t samples = 0;
    double baseline_accuracy = 0.0;
    double adapted_accuracy = 0.0;
};

struct TopEntry {
    std::uint32_t cls = 0;
    double probability = 0.0;
};

struct Top5Record {
    std::size_t index = 0;      // position in the container
    std::uint32_t true_label = 0;
    std::vector<TopEntry> baseline;
    std::vector<TopEntry> adapted;
};

struct PhaseTimings {
    double extraction_s = 0.0;
    double update_s = 0.0;
    double retrieval_s = 0.0;
    double fusion_s = 0.0;
    double total_s = 0.0;
};

struct RunReport {
    std::string mode;                      // "zsl" or "gzsl"
    std::vector<std::string> class_names;  // prediction space, confusion axes
    std::size_t samples = 0;
    double top1_baseline = 0.0;
    double top1_adapted = 0.0;
    std::optional<GzslScores> gzsl_baseline;
    std::optional<GzslScores> gzsl_adapted;
    std::vector<std::vector<std::uint64_t>> confusion_baseline;  // [true][predicted]
    std::vector<std::vector<std::uint64_t>> confusion_adapted;
    std::vector<ClassDelta> per_class;
    std::vector<Top5Record> top5;
    std::vector<std::uint64_t> key_bytes_trace;  // after each sample
    std::size_t inserted = 0;
    std::size_t replaced = 0;
    std::size_t rejected = 0;
    PhaseTimings timings;
    /// Echo of the hyperparameters that produced the report.
    std::string config_json;

    /// Full report, timings included.
    std::string to_json() const;
    static RunReport from_json(const std::string& text);
    /// Deterministic subset (no wall-clock data).
    std::string metrics_json() const;
};

RunReport run_stream(const RunInputs& inputs, const RunConfig& config);
/// Loads inputs from the paths in `config`; writes reports when output_dir is set.
RunReport run_stream(const RunConfig& config);

/// Writes metrics.json, confusion_baseline.csv, confusion_adapted.csv,
/// per_class_delta.csv, top5_changes.jsonl, timing.json, cache_trace.csv
/// and report.json into `dir` (created if missing).
void emit_reports(const RunReport& report, const std::filesystem::path& dir);

enum class SweepParameter { K, AlphaS, Beta };
SweepParameter parse_sweep_parameter(const std::string& name);
std::string to_string(SweepParameter p);

struct SweepRow {
    double value = 0.0;
    double top1_baseline = 0.0;
    double top1_adapted = 0.0;
    double runtime_s = 0.0;
};

/// One run per value, each with a fresh cache. `jobs` > 1 runs values on
/// worker threads.
std::vector<SweepRow> sweep(const RunInputs& inputs, const RunConfig& base, SweepParameter parameter,
                            const std::vector<double>& values, unsigned jobs = 1);
std::string sweep_csv(SweepParameter parameter, const std::vector<SweepRow>& rows);

struct BenchConfig {
    SyntheticConfig synthetic;  // frames overridden per T value
    std::vector<std::uint32_t> frame_counts{50, 500};
    std::size_t warmup_samples = 200;
    std::size_t measured_samples = 500;
    std::size_t passes = 3;
    AdapterOptions adapter{};

    void validate() const;
};

struct BenchRow {
    std::uint32_t frames = 0;
    std::size_t samples = 0;
    /// Best-of-passes mean per-sample retrieval+fusion time.
    double mean_us = 0.0;
    double median_us = 0.0;
    std::size_t cache_entries = 0;
};

/// Per-sample retrieval+fusion latency against a warm cache for each T.
/// Descriptor extraction happens before timing starts.
std::vector<BenchRow> bench_latency(const BenchConfig& config);
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace skcache
