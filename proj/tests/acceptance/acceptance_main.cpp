// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "skcache/cache.hpp"
#include "skcache/fusion.hpp"
#include "skcache/harness.hpp"
#include "skcache/priors.hpp"
#include "skcache/retrieval.hpp"
#include "support/oracles.hpp"

namespace {

using namespace skcache;
using Clock = std::chrono::steady_clock;

const std::filesystem::path kConfigs = SKCACHE_CONFIG_DIR;
const std::filesystem::path kFixtures = SKCACHE_TEST_FIXTURE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

Outcome oracle_equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 rng(20240917);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<std::uint32_t> pick_c(1, 10), pick_k(1, 8), pick_n(1, 64),
            pick_p(1, 4), pick_z(1, 3);
        const std::uint32_t C = pick_c(rng), K = pick_k(rng), N = pick_n(rng);
        const std::uint32_t P = pick_p(rng), Z = pick_z(rng);
        const std::size_t D = 1 + P + Z;
        SkeletonCache cache(C, K, P, Z, N);
        // Mixed fill: each block gets between 0 and 2K offers, so some stay
        // empty, some are partial and some are full with replacements.
        std::uniform_int_distribution<std::uint32_t> offers(0, 2 * K);
        std::uniform_real_distribution<float> h(0.0f, static_cast<float>(std::log(std::max<double>(C, 2))));
        for (std::uint32_t j = 0; j < C; ++j) {
            const auto n = offers(rng);
            for (std::uint32_t i = 0; i < n; ++i) {
                const float e = C == 1 ? 0.0f : h(rng);
                cache.update({testing::random_descriptors(D, N, rng), j, e});
            }
        }
        const auto query = testing::random_descriptors(D, N, rng);
        const double beta = std::uniform_real_distribution<double>(0.5, 10.0)(rng);
        const auto fast = retrieve(query, cache, {beta});
        const auto slow = testing::retrieval_oracle(query, cache, beta);
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t j = 0; j < C; ++j) worst = std::max(worst, std::abs(fast(d, j) - slow[d][j]));
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-5 && elapsed < 10.0,
            fmt("200 configs, max |diff| = %.3g, %.2f s", worst, elapsed)};
}

Outcome memory_check() {
    const std::uint32_t C = 3;
    SkeletonCache cache(C, 8, 4, 3, 512);
    std::mt19937_64 rng(1);
    for (std::uint32_t j = 0; j < C; ++j)
        for (int i = 0; i < 8; ++i) cache.update({testing::random_descriptors(8, 512, rng), j, 0.5f});
    bool full = true;
    for (std::uint32_t j = 0; j < C; ++j) full = full && cache.block(j).size() == 8;
    const std::size_t per_class = cache.key_bytes() / C;
    return {full && cache.key_bytes() == C * 131072u && per_class == 131072u,
            "key_bytes per class = " + std::to_string(per_class) + " (" +
                fmt("%.1f KB)", static_cast<double>(per_class) / 1024.0)};
}

Outcome harmonic_check() {
    const double h = harmonic_mean(0.6228, 0.7080);
    const auto g = gzsl_metrics(6228, 10000, 7080, 10000);
    return {std::abs(h - 0.6627) <= 1e-4 && std::abs(g.harmonic - 0.6627) <= 1e-4,
            fmt("H(0.6228, 0.7080) = %.6f", h)};
}

Outcome prior_assembly() {
    std::ifstream in(kFixtures / "priors" / "waving.json");
    const std::string text{std::istreambuf_iterator<char>(in), {}};
    const auto raw = parse_response(text, 4, 3);
    const auto w = assemble_weights(raw);
    const std::vector<double> expected{0.17647, 0.02059, 0.04118, 0.28824,
                                       0.06176, 0.06176, 0.24706, 0.10294};
    double worst = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) worst = std::max(worst, std::abs(w[i] - expected[i]));
    const auto u = raw_weight_vector(raw);
    const double l1 = std::accumulate(u.begin(), u.end(), 0.0);
    return {w.size() == 8 && worst <= 1e-5 && std::abs(l1 - 1.70) <= 1e-9,
            fmt("max |w - expected| = %.2g, |w~|_1 = %.12f", worst, l1)};
}

RunInputs default_inputs(std::uint64_t seed) {
    auto syn = load_synthetic_config(kConfigs / "default_synth.json");
    syn.seed = seed;
    RunInputs in;
    in.container = generate_synthetic(syn);
    return in;
}

Outcome identity_suite() {
    const auto in = default_inputs(0);

    RunConfig zero;
    zero.alpha_s = 0.0;
    const auto r0 = run_stream(in, zero);
    const bool alpha_identity = r0.top1_adapted == r0.top1_baseline &&
                                r0.confusion_adapted == r0.confusion_baseline;

    // Retrieval against an empty cache must leave every prediction unchanged.
    const auto scheme = default_scheme();
    const std::uint32_t C = static_cast<std::uint32_t>(in.container.class_count());
    const SkeletonCache empty(C, 8, 4, 3, in.container.dims.channels);
    const auto w = uniform_weights(8);
    std::size_t empty_mismatch = 0;
    for (const auto& s : in.container.samples) {
        const std::vector<double> phi(s.zero_shot_logits.begin(), s.zero_shot_logits.end());
        const auto O = retrieve(extract_descriptors(s.features, scheme), empty, {});
        const auto p = enhance(phi, fuse(O, w), {});
        empty_mismatch += p.predicted_class != argmax(phi);
    }

    auto syn = load_synthetic_config(kConfigs / "default_synth.json");
    syn.noise_sigma = 0.0;
    syn.logit_sigma = 0.0;
    RunInputs clean;
    clean.container = generate_synthetic(syn);
    const auto rc = run_stream(clean, RunConfig{});

    return {alpha_identity && empty_mismatch == 0 && rc.top1_baseline == 1.0 && rc.top1_adapted == 1.0,
            fmt("alpha=0 identical: %.0f, empty-cache argmax changes: %.0f, noiseless top1 = %.3f",
                alpha_identity ? 1.0 : 0.0, static_cast<double>(empty_mismatch), rc.top1_adapted)};
}

Outcome end_to_end() {
    const auto start = Clock::now();
    double sum_gain = 0.0;
    double mean_base = 0.0;
    int worse = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r = run_stream(default_inputs(seed), RunConfig{});
        sum_gain += r.top1_adapted - r.top1_baseline;
        mean_base += r.top1_baseline / 10.0;
        worse += r.top1_adapted < r.top1_baseline;
    }
    const double elapsed = seconds_since(start);
    return {worse == 0 && sum_gain > 0.0 && elapsed < 60.0,
            fmt("mean baseline %.4f, mean gain %+.4f, %.1f s", mean_base, sum_gain / 10.0, elapsed) +
                ", seeds worse: " + std::to_string(worse)};
}

Outcome sweep_shape() {
    const auto rows = sweep(default_inputs(0), RunConfig{}, SweepParameter::K, {2, 8});
    return {rows[1].top1_adapted >= rows[0].top1_adapted,
            fmt("top1 K=2: %.4f, K=8: %.4f", rows[0].top1_adapted, rows[1].top1_adapted)};
}

Outcome latency_structure() {
    BenchConfig b;
    b.synthetic = load_synthetic_config(kConfigs / "default_synth.json");
    b.synthetic.dims.channels = 32;
    b.frame_counts = {50, 500};
    b.warmup_samples = 200;
    b.measured_samples = 500;
    b.passes = 3;
    const auto rows = bench_latency(b);
    const double ratio = rows[1].mean_us / rows[0].mean_us;
    return {rows[0].samples >= 500 && rows[1].samples >= 500 && ratio <= 1.2,
            fmt("T=50: %.2f us, T=500: %.2f us, ratio %.3f", rows[0].mean_us, rows[1].mean_us, ratio)};
}

Outcome cache_policy() {
    std::mt19937_64 rng(77);
    const std::uint32_t C = 7, K = 5;
    SkeletonCache cache(C, K, 1, 1, 3);
    std::uniform_int_distribution<std::uint32_t> pick(0, C - 1);
    std::uniform_real_distribution<float> h(0.0f, static_cast<float>(std::log(C)));
    std::vector<float> max_once_full(C, std::numeric_limits<float>::infinity());
    std::size_t violations = 0, rejected = 0;
    for (int i = 0; i < 100000; ++i) {
        const auto j = pick(rng);
        DescriptorSet key(3, 3);
        for (float& v : key.values()) v = h(rng);
        const auto before = cache.snapshot();
        const auto outcome = cache.update({std::move(key), j, h(rng)});
        if (cache.block(j).size() > K) ++violations;
        if (std::holds_alternative<Rejected>(outcome)) {
            ++rejected;
            if (cache.snapshot() != before) ++violations;
        }
        if (cache.block(j).size() == K) {
            float m = 0.0f;
            for (const auto& e : cache.block(j)) m = std::max(m, e.entropy);
            if (m > max_once_full[j]) ++violations;
            max_once_full[j] = m;
        }
    }
    return {violations == 0, "100000 updates, " + std::to_string(rejected) + " rejected, " +
                                 std::to_string(violations) + " violations"};
}

Outcome determinism() {
    testing::TempDir dir;
    auto syn = load_synthetic_config(kConfigs / "default_synth.json");
    write_container(dir / "stream.skc1", generate_synthetic(syn));
    RunConfig cfg;
    cfg.container = dir / "stream.skc1";
    cfg.output_dir = dir / "a";
    run_stream(cfg);
    cfg.output_dir = dir / "b";
    run_stream(cfg);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string{std::istreambuf_iterator<char>(in), {}};
    };
    const auto a = slurp(dir / "a" / "metrics.json");
    const auto b = slurp(dir / "b" / "metrics.json");
    return {!a.empty() && a == b, "metrics.json " + std::to_string(a.size()) + " bytes, identical: " +
                                      (a == b ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle-equivalence", oracle_equivalence},
        {"memory-per-class", memory_check},
        {"harmonic-mean", harmonic_check},
        {"prior-assembly", prior_assembly},
        {"identity-suite", identity_suite},
        {"end-to-end-improvement", end_to_end},
        {"sweep-shape", sweep_shape},
        {"latency-structure", latency_structure},
        {"cache-policy", cache_policy},
        {"determinism", determinism},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
