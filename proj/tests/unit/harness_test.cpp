#include "skcache/harness.hpp"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "skcache/errors.hpp"
#include "support/oracles.hpp"

namespace skcache {
namespace {

SyntheticConfig small_config(std::uint64_t seed = 0) {
    SyntheticConfig cfg;
    cfg.classes = 5;
    cfg.dims = {16, 12, 25};
    cfg.samples_per_class = 12;
    cfg.logit_sigma = 0.8;
    cfg.seed = seed;
    return cfg;
}

RunInputs inputs_for(const SyntheticConfig& cfg) {
    RunInputs in;
    in.container = generate_synthetic(cfg);
    return in;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

TEST(GzslTest, HarmonicMean) {
    EXPECT_NEAR(harmonic_mean(0.6228, 0.7080), 0.6627, 1e-4);
    const auto g = gzsl_metrics(6228, 10000, 7080, 10000);
    EXPECT_NEAR(g.harmonic, 0.6627, 1e-4);
    EXPECT_DOUBLE_EQ(g.seen, 0.6228);
    EXPECT_EQ(harmonic_mean(0.0, 0.0), 0.0);
    EXPECT_THROW(gzsl_metrics(0, 0, 1, 2), ValidationError);
}

TEST(RunTest, ZeroAlphaMatchesBaseline) {
    const auto in = inputs_for(small_config(1));
    RunConfig cfg;
    cfg.alpha_s = 0.0;
    const auto r = run_stream(in, cfg);
    EXPECT_EQ(r.top1_adapted, r.top1_baseline);
    EXPECT_EQ(r.confusion_adapted, r.confusion_baseline);
}

TEST(RunTest, NoiselessStreamIsPerfect) {
    auto syn = small_config(2);
    syn.noise_sigma = 0.0;
    syn.logit_sigma = 0.0;
    const auto r = run_stream(inputs_for(syn), RunConfig{});
    EXPECT_EQ(r.top1_baseline, 1.0);
    EXPECT_EQ(r.top1_adapted, 1.0);
}

TEST(RunTest, AllAblationModesRun) {
    const auto in = inputs_for(small_config(3));
    for (bool rbu : {false, true})
        for (bool gate : {false, true})
            for (auto sel : {PriorSelect::PredictedClass, PriorSelect::PerClassDiagonal}) {
                RunConfig cfg;
                cfg.retrieve_before_update = rbu;
                cfg.gate_on_adapted = gate;
                cfg.prior_select = sel;
                const auto r = run_stream(in, cfg);
                EXPECT_EQ(r.samples, in.container.samples.size());
                EXPECT_EQ(r.inserted + r.replaced + r.rejected, r.samples);
                EXPECT_LE(r.key_bytes_trace.back(), 5u * 8u * 8u * 16u * 4u);
            }
}

TEST(RunTest, ZslRestrictsToUnseenClasses) {
    auto syn = small_config(4);
    syn.seen_classes = 2;
    const auto in = inputs_for(syn);
    const auto zsl = run_stream(in, RunConfig{});
    EXPECT_EQ(zsl.mode, "zsl");
    EXPECT_EQ(zsl.class_names.size(), 3u);
    EXPECT_EQ(zsl.samples, 3u * 12u);
    EXPECT_FALSE(zsl.gzsl_adapted);

    RunConfig g;
    g.gzsl = true;
    const auto gz = run_stream(in, g);
    EXPECT_EQ(gz.mode, "gzsl");
    EXPECT_EQ(gz.class_names.size(), 5u);
    EXPECT_EQ(gz.samples, 60u);
    ASSERT_TRUE(gz.gzsl_adapted);
    EXPECT_NEAR(gz.gzsl_adapted->harmonic,
                harmonic_mean(gz.gzsl_adapted->seen, gz.gzsl_adapted->unseen), 1e-12);
}

TEST(RunTest, WeightModesAndPriorGeometry) {
    const auto in = inputs_for(small_config(5));
    RunConfig cfg;
    cfg.weight_mode = WeightMode::Random;
    cfg.seed = 3;
    EXPECT_NO_THROW(run_stream(in, cfg));
    cfg.weight_mode = WeightMode::Llm;
    EXPECT_THROW(run_stream(in, cfg), ValidationError);  // no priors loaded

    auto with_priors = in;
    with_priors.priors = PriorMatrix::uniform(in.container.class_names, 2, 3);
    EXPECT_THROW(run_stream(with_priors, cfg), GeometryError);
}

TEST(RunTest, EmptyCacheFirstSampleKeepsBaselineArgmax) {
    const auto in = inputs_for(small_config(6));
    StreamAdapter adapter(default_scheme(), PriorMatrix::uniform(in.container.class_names, 4, 3), 16,
                          AdapterOptions{.retrieve_before_update = true});
    const auto& s = in.container.samples.front();
    std::vector<double> logits(s.zero_shot_logits.begin(), s.zero_shot_logits.end());
    const auto step = adapter.process(s.features, logits);
    EXPECT_EQ(step.adapted.predicted_class, step.baseline.predicted_class);
    EXPECT_EQ(step.adapted.adapted_logits, step.baseline.adapted_logits);
}

TEST(ReportTest, EmitsAllFilesWithConsistentContents) {
    testing::TempDir dir;
    auto syn = small_config(7);
    syn.classes = 3;
    const auto r = run_stream(inputs_for(syn), RunConfig{});
    emit_reports(r, dir.path());
    for (const char* f : {"metrics.json", "report.json", "confusion_baseline.csv", "confusion_adapted.csv",
                          "per_class_delta.csv", "top5_changes.jsonl", "timing.json", "cache_trace.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    std::istringstream conf(slurp(dir / "confusion_adapted.csv"));
    std::string line;
    std::getline(conf, line);
    EXPECT_EQ(line, "true\\predicted,class_0,class_1,class_2");
    std::uint64_t total = 0;
    int rows = 0;
    while (std::getline(conf, line)) {
        ++rows;
        std::istringstream cells(line);
        std::string cell;
        std::getline(cells, cell, ',');
        while (std::getline(cells, cell, ',')) total += std::stoull(cell);
    }
    EXPECT_EQ(rows, 3);
    EXPECT_EQ(total, r.samples);

    const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
    EXPECT_DOUBLE_EQ(metrics.at("top1_adapted").get<double>(), r.top1_adapted);

    const auto back = RunReport::from_json(slurp(dir / "report.json"));
    EXPECT_EQ(back.metrics_json(), r.metrics_json());
}

TEST(ReportTest, MetricsAreDeterministic) {
    testing::TempDir dir;
    const auto c = generate_synthetic(small_config(8));
    write_container(dir / "s.skc1", c);
    RunConfig cfg;
    cfg.container = dir / "s.skc1";
    cfg.output_dir = dir / "a";
    run_stream(cfg);
    cfg.output_dir = dir / "b";
    run_stream(cfg);
    EXPECT_EQ(slurp(dir / "a" / "metrics.json"), slurp(dir / "b" / "metrics.json"));
}

TEST(SweepTest, OneRowPerValueMatchingSingleRuns) {
    const auto in = inputs_for(small_config(9));
    const std::vector<double> ks{1, 2, 4};
    const auto rows = sweep(in, RunConfig{}, SweepParameter::K, ks, 2);
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        RunConfig single;
        single.k = static_cast<std::uint32_t>(ks[i]);
        EXPECT_EQ(rows[i].value, ks[i]);
        EXPECT_EQ(rows[i].top1_adapted, run_stream(in, single).top1_adapted);
    }
    const auto csv = sweep_csv(SweepParameter::K, rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "K,top1_baseline,top1_adapted,runtime_s");
    EXPECT_THROW(parse_sweep_parameter("gamma"), ValidationError);
    EXPECT_EQ(parse_sweep_parameter("alpha_s"), SweepParameter::AlphaS);
}

TEST(BenchTest, ProducesRowPerFrameCount) {
    BenchConfig b;
    b.synthetic = small_config(10);
    b.frame_counts = {6, 30};
    b.warmup_samples = 20;
    b.measured_samples = 20;
    b.passes = 1;
    const auto rows = bench_latency(b);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].frames, 6u);
    EXPECT_EQ(rows[1].samples, 20u);
    EXPECT_GT(rows[0].mean_us, 0.0);
    EXPECT_GT(rows[0].cache_entries, 0u);
}

TEST(RunConfigTest, Validation) {
    RunConfig cfg;
    cfg.k = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = RunConfig{};
    cfg.beta = 0.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = RunConfig{};
    EXPECT_EQ(cfg.effective_weight_mode(), WeightMode::Uniform);
    cfg.priors = "p.json";
    EXPECT_EQ(cfg.effective_weight_mode(), WeightMode::Llm);
}

}  // namespace
}  // namespace skcache
