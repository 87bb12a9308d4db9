#include "skcache/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <limits>
#include <thread>
#include <type_traits>
#include <variant>

#include <nlohmann/json.hpp>

#include "byte_io.hpp"
#include "skcache/errors.hpp"

namespace skcache {

namespace {

using Clock = std::chrono::steady_clock;
using ojson = nlohmann::ordered_json;

double seconds(std::chrono::nanoseconds ns) { return std::chrono::duration<double>(ns).count(); }

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

const char* weight_mode_name(WeightMode m) {
    switch (m) {
        case WeightMode::Llm: return "llm";
        case WeightMode::Uniform: return "uniform";
        case WeightMode::Random: return "random";
    }
    return "?";
}

const char* prior_select_name(PriorSelect p) {
    return p == PriorSelect::PredictedClass ? "predicted_class" : "per_class_max";
}

std::vector<TopEntry> top_k(const std::vector<double>& probs, std::size_t k) {
    std::vector<std::uint32_t> idx(probs.size());
    std::iota(idx.begin(), idx.end(), 0u);
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
                      });
    std::vector<TopEntry> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back({idx[i], probs[idx[i]]});
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    detail::write_file_bytes(path.string(),
                             {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

ojson gzsl_to_json(const GzslScores& g) {
    return ojson{{"seen", g.seen}, {"unseen", g.unseen}, {"harmonic", g.harmonic}};
}

GzslScores gzsl_from_json(const nlohmann::json& j) {
    return {j.at("seen").get<double>(), j.at("unseen").get<double>(), j.at("harmonic").get<double>()};
}

ojson top_to_json(const std::vector<TopEntry>& entries) {
    ojson arr = ojson::array();
    for (const auto& e : entries) arr.push_back({{"class", e.cls}, {"probability", e.probability}});
    return arr;
}

std::vector<TopEntry> top_from_json(const nlohmann::json& j) {
    std::vector<TopEntry> out;
    for (const auto& e : j) out.push_back({e.at("class").get<std::uint32_t>(), e.at("probability").get<double>()});
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
    if (k < 1) throw ValidationError("K must be >= 1");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be > 0");
    if (!(alpha_s >= 0.0) || !std::isfinite(alpha_s)) throw ValidationError("alpha_s must be >= 0");
}

WeightMode RunConfig::effective_weight_mode() const {
    if (weight_mode) return *weight_mode;
    return priors ? WeightMode::Llm : WeightMode::Uniform;
}

RunInputs RunInputs::load(const RunConfig& config) {
    RunInputs in;
    in.container = read_container(config.container);
    if (config.priors && config.effective_weight_mode() == WeightMode::Llm) {
        in.priors = load_priors(*config.priors);
    }
    if (config.scheme) in.scheme = PartitionScheme::load(*config.scheme);
    return in;
}

double harmonic_mean(double seen, double unseen) {
    if (seen + unseen == 0.0) return 0.0;
    return 2.0 * seen * unseen / (seen + unseen);
}

GzslScores gzsl_metrics(std::size_t correct_seen, std::size_t total_seen,
                        std::size_t correct_unseen, std::size_t total_unseen) {
    if (total_seen == 0 || total_unseen == 0) {
        throw ValidationError("GZSL metrics need at least one seen and one unseen sample");
    }
    if (correct_seen > total_seen || correct_unseen > total_unseen) {
        throw ValidationError("GZSL metrics: more correct predictions than samples");
    }
    GzslScores g;
    g.seen = static_cast<double>(correct_seen) / static_cast<double>(total_seen);
    g.unseen = static_cast<double>(correct_unseen) / static_cast<double>(total_unseen);
    g.harmonic = harmonic_mean(g.seen, g.unseen);
    return g;
}

// ---------------------------------------------------------------------------

RunReport run_stream(const RunInputs& inputs, const RunConfig& config) {
    config.validate();
    const auto& container = inputs.container;
    container.validate();
    const std::size_t C = container.class_count();

    // Prediction space: every class under GZSL, the unseen-sample labels otherwise.
    std::vector<std::uint32_t> space;
    if (config.gzsl) {
        space.resize(C);
        std::iota(space.begin(), space.end(), 0u);
    } else {
        std::set<std::uint32_t> unseen;
        for (const auto& s : container.samples) {
            if (!s.seen) unseen.insert(s.true_label);
        }
        if (unseen.empty()) throw ValidationError("ZSL run: container has no unseen samples");
        space.assign(unseen.begin(), unseen.end());
    }
    std::vector<std::int64_t> to_space(C, -1);
    for (std::size_t i = 0; i < space.size(); ++i) to_space[space[i]] = static_cast<std::int64_t>(i);
    std::vector<std::string> space_names;
    for (auto c : space) space_names.push_back(container.class_names[c]);

    const auto& scheme = inputs.scheme;
    const std::size_t P = scheme.spatial_count();
    const std::size_t Z = scheme.temporal_count();
    scheme.check_joints(container.dims.joints);
    scheme.resolve_segments(container.dims.frames);

    const WeightMode mode = config.effective_weight_mode();
    PriorMatrix full;
    switch (mode) {
        case WeightMode::Llm: {
            if (!inputs.priors) throw ValidationError("weight mode 'llm' needs a prior matrix");
            full = *inputs.priors;
            if (full.class_names() != container.class_names) {
                throw ValidationError("prior matrix classes (" + std::to_string(full.classes()) +
                                      ") do not match the container's " + std::to_string(C) +
                                      " classes");
            }
            break;
        }
        case WeightMode::Uniform:
            full = PriorMatrix::uniform(container.class_names, P, Z);
            break;
        case WeightMode::Random:
            full = PriorMatrix::random(container.class_names, P, Z, config.seed);
            break;
    }
    std::vector<std::vector<double>> rows;
    for (auto c : space) rows.push_back(full.row(c));
    PriorMatrix priors(space_names, full.spatial(), full.temporal(), std::move(rows));

    AdapterOptions options;
    options.capacity = config.k;
    options.affinity.beta = config.beta;
    options.alpha_s = config.alpha_s;
    options.retrieve_before_update = config.retrieve_before_update;
    options.gate_on_adapted = config.gate_on_adapted;
    options.prior_select = config.prior_select;
    StreamAdapter adapter(scheme, std::move(priors), container.dims.channels, options);

    RunReport report;
    report.mode = config.gzsl ? "gzsl" : "zsl";
    report.class_names = space_names;
    const std::size_t S = space.size();
    report.confusion_baseline.assign(S, std::vector<std::uint64_t>(S, 0));
    report.confusion_adapted.assign(S, std::vector<std::uint64_t>(S, 0));

    std::size_t correct_base = 0, correct_adapt = 0;
    std::size_t seen_total = 0, seen_base = 0, seen_adapt = 0;
    std::size_t unseen_total = 0, unseen_base = 0, unseen_adapt = 0;
    std::chrono::nanoseconds extraction{0}, update{0}, retrieval{0}, fusion{0};
    const auto run_start = Clock::now();

    std::vector<double> logits(S);
    for (std::size_t idx = 0; idx < container.samples.size(); ++idx) {
        const auto& sample = container.samples[idx];
        if (!config.gzsl && sample.seen) continue;
        for (std::size_t i = 0; i < S; ++i) logits[i] = sample.zero_shot_logits[space[i]];

        const auto t0 = Clock::now();
        const auto descriptors = extract_descriptors(sample.features, scheme);
        extraction += Clock::now() - t0;

        const auto step = adapter.step(descriptors, logits);
        update += step.timings.update;
        retrieval += step.timings.retrieval;
        fusion += step.timings.fusion;

        std::visit(
            [&](const auto& outcome) {
                using T = std::decay_t<decltype(outcome)>;
                if constexpr (std::is_same_v<T, Inserted>) ++report.inserted;
                else if constexpr (std::is_same_v<T, Replaced>) ++report.replaced;
                else ++report.rejected;
            },
            step.update);

        const auto truth = static_cast<std::size_t>(to_space[sample.true_label]);
        const std::size_t base = step.baseline.predicted_class;
        const std::size_t adapt = step.adapted.predicted_class;
        ++report.confusion_baseline[truth][base];
        ++report.confusion_adapted[truth][adapt];
        const bool ok_base = base == truth;
        const bool ok_adapt = adapt == truth;
        correct_base += ok_base;
        correct_adapt += ok_adapt;
        if (sample.seen) {
            ++seen_total;
            seen_base += ok_base;
            seen_adapt += ok_adapt;
        } else {
            ++unseen_total;
            unseen_base += ok_base;
            unseen_adapt += ok_adapt;
        }
        report.top5.push_back({idx, static_cast<std::uint32_t>(truth),
                               top_k(step.baseline.probabilities, 5),
                               top_k(step.adapted.probabilities, 5)});
        report.key_bytes_trace.push_back(adapter.cache().key_bytes());
        ++report.samples;
    }

    if (report.samples > 0) {
        report.top1_baseline = static_cast<double>(correct_base) / static_cast<double>(report.samples);
        report.top1_adapted = static_cast<double>(correct_adapt) / static_cast<double>(report.samples);
    }
    if (config.gzsl) {
        report.gzsl_baseline = gzsl_metrics(seen_base, seen_total, unseen_base, unseen_total);
        report.gzsl_adapted = gzsl_metrics(seen_adapt, seen_total, unseen_adapt, unseen_total);
    }
    for (std::size_t c = 0; c < S; ++c) {
        ClassDelta d;
        d.name = space_names[c];
        for (auto n : report.confusion_baseline[c]) d.samples += n;
        if (d.samples > 0) {
            d.baseline_accuracy = static_cast<double>(report.confusion_baseline[c][c]) / d.samples;
            d.adapted_accuracy = static_cast<double>(report.confusion_adapted[c][c]) / d.samples;
        }
        report.per_class.push_back(d);
    }
    report.timings.extraction_s = seconds(extraction);
    report.timings.update_s = seconds(update);
    report.timings.retrieval_s = seconds(retrieval);
    report.timings.fusion_s = seconds(fusion);
    report.timings.total_s = seconds(Clock::now() - run_start);

    ojson cfg;
    cfg["container"] = config.container.string();
    cfg["priors"] = config.priors ? config.priors->string() : "";
    cfg["weight_mode"] = weight_mode_name(mode);
    cfg["scheme"] = config.scheme ? config.scheme->string() : "default";
    cfg["k"] = config.k;
    cfg["beta"] = config.beta;
    cfg["alpha_s"] = config.alpha_s;
    cfg["retrieve_before_update"] = config.retrieve_before_update;
    cfg["gate_on_adapted"] = config.gate_on_adapted;
    cfg["gzsl"] = config.gzsl;
    cfg["prior_select"] = prior_select_name(config.prior_select);
    cfg["seed"] = config.seed;
    report.config_json = cfg.dump();
    return report;
}

RunReport run_stream(const RunConfig& config) {
    config.validate();
    const auto inputs = RunInputs::load(config);
    auto report = run_stream(inputs, config);
    if (config.output_dir) emit_reports(report, *config.output_dir);
    return report;
}

// ---------------------------------------------------------------------------

std::string RunReport::metrics_json() const {
    ojson j;
    j["config"] = ojson::parse(config_json.empty() ? "{}" : config_json);
    j["mode"] = mode;
    j["classes"] = class_names.size();
    j["samples"] = samples;
    j["top1_baseline"] = top1_baseline;
    j["top1_adapted"] = top1_adapted;
    j["top1_delta"] = top1_adapted - top1_baseline;
    if (gzsl_baseline) j["gzsl_baseline"] = gzsl_to_json(*gzsl_baseline);
    if (gzsl_adapted) j["gzsl_adapted"] = gzsl_to_json(*gzsl_adapted);
    j["cache"] = {{"inserted", inserted},
                  {"replaced", replaced},
                  {"rejected", rejected},
                  {"final_key_bytes", key_bytes_trace.empty() ? 0 : key_bytes_trace.back()},
                  {"peak_key_bytes", key_bytes_trace.empty()
                                         ? 0
                                         : *std::max_element(key_bytes_trace.begin(),
                                                             key_bytes_trace.end())}};
    return j.dump(2) + "\n";
}

std::string RunReport::to_json() const {
    ojson j;
    j["mode"] = mode;
    j["class_names"] = class_names;
    j["samples"] = samples;
    j["top1_baseline"] = top1_baseline;
    j["top1_adapted"] = top1_adapted;
    if (gzsl_baseline) j["gzsl_baseline"] = gzsl_to_json(*gzsl_baseline);
    if (gzsl_adapted) j["gzsl_adapted"] = gzsl_to_json(*gzsl_adapted);
    j["confusion_baseline"] = confusion_baseline;
    j["confusion_adapted"] = confusion_adapted;
    ojson pc = ojson::array();
    for (const auto& d : per_class) {
        pc.push_back({{"name", d.name},
                      {"samples", d.samples},
                      {"baseline_accuracy", d.baseline_accuracy},
                      {"adapted_accuracy", d.adapted_accuracy}});
    }
    j["per_class"] = pc;
    ojson t5 = ojson::array();
    for (const auto& r : top5) {
        t5.push_back({{"index", r.index},
                      {"true_label", r.true_label},
                      {"baseline", top_to_json(r.baseline)},
                      {"adapted", top_to_json(r.adapted)}});
    }
    j["top5"] = t5;
    j["key_bytes_trace"] = key_bytes_trace;
    j["inserted"] = inserted;
    j["replaced"] = replaced;
    j["rejected"] = rejected;
    j["timings"] = {{"extraction_s", timings.extraction_s},
                    {"update_s", timings.update_s},
                    {"retrieval_s", timings.retrieval_s},
                    {"fusion_s", timings.fusion_s},
                    {"total_s", timings.total_s}};
    j["config"] = ojson::parse(config_json.empty() ? "{}" : config_json);
    return j.dump() + "\n";
}

RunReport RunReport::from_json(const std::string& text) {
    try {
        const auto j = ojson::parse(text);
        RunReport r;
        r.mode = j.at("mode").get<std::string>();
        r.class_names = j.at("class_names").get<std::vector<std::string>>();
        r.samples = j.at("samples").get<std::size_t>();
        r.top1_baseline = j.at("top1_baseline").get<double>();
        r.top1_adapted = j.at("top1_adapted").get<double>();
        if (j.contains("gzsl_baseline")) r.gzsl_baseline = gzsl_from_json(j.at("gzsl_baseline"));
        if (j.contains("gzsl_adapted")) r.gzsl_adapted = gzsl_from_json(j.at("gzsl_adapted"));
        r.confusion_baseline = j.at("confusion_baseline").get<std::vector<std::vector<std::uint64_t>>>();
        r.confusion_adapted = j.at("confusion_adapted").get<std::vector<std::vector<std::uint64_t>>>();
        for (const auto& d : j.at("per_class")) {
            r.per_class.push_back({d.at("name").get<std::string>(), d.at("samples").get<std::size_t>(),
                                   d.at("baseline_accuracy").get<double>(),
                                   d.at("adapted_accuracy").get<double>()});
        }
        for (const auto& t : j.at("top5")) {
            r.top5.push_back({t.at("index").get<std::size_t>(), t.at("true_label").get<std::uint32_t>(),
                              top_from_json(t.at("baseline")), top_from_json(t.at("adapted"))});
        }
        r.key_bytes_trace = j.at("key_bytes_trace").get<std::vector<std::uint64_t>>();
        r.inserted = j.at("inserted").get<std::size_t>();
        r.replaced = j.at("replaced").get<std::size_t>();
        r.rejected = j.at("rejected").get<std::size_t>();
        const auto& t = j.at("timings");
        r.timings = {t.at("extraction_s").get<double>(), t.at("update_s").get<double>(),
                     t.at("retrieval_s").get<double>(), t.at("fusion_s").get<double>(),
                     t.at("total_s").get<double>()};
        r.config_json = ojson::parse(j.at("config").dump()).dump();
        const std::size_t S = r.class_names.size();
        if (r.confusion_baseline.size() != S || r.confusion_adapted.size() != S ||
            r.per_class.size() != S) {
            throw ValidationError("report: matrix sizes disagree with class list");
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("report: ") + e.what());
    }
}

void emit_reports(const RunReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

    write_text(dir / "metrics.json", report.metrics_json());
    write_text(dir / "report.json", report.to_json());

    const auto confusion = [&](const std::vector<std::vector<std::uint64_t>>& m) {
        std::ostringstream out;
        out << "true\\predicted";
        for (const auto& n : report.class_names) out << ',' << csv_field(n);
        out << '\n';
        for (std::size_t r = 0; r < m.size(); ++r) {
            out << csv_field(report.class_names[r]);
            for (auto v : m[r]) out << ',' << v;
            out << '\n';
        }
        return out.str();
    };
    write_text(dir / "confusion_baseline.csv", confusion(report.confusion_baseline));
    write_text(dir / "confusion_adapted.csv", confusion(report.confusion_adapted));

    {
        std::ostringstream out;
        out << "class,samples,baseline_accuracy,adapted_accuracy,delta\n";
        for (const auto& d : report.per_class) {
            out << csv_field(d.name) << ',' << d.samples << ',' << fixed(d.baseline_accuracy) << ','
                << fixed(d.adapted_accuracy) << ',' << fixed(d.adapted_accuracy - d.baseline_accuracy)
                << '\n';
        }
        write_text(dir / "per_class_delta.csv", out.str());
    }
    {
        std::ostringstream out;
        for (const auto& r : report.top5) {
            const auto named = [&](const std::vector<TopEntry>& entries) {
                ojson arr = ojson::array();
                for (const auto& e : entries) {
                    arr.push_back({{"class", report.class_names.at(e.cls)},
                                   {"probability", e.probability}});
                }
                return arr;
            };
            ojson line;
            line["index"] = r.index;
            line["true_class"] = report.class_names.at(r.true_label);
            line["baseline"] = named(r.baseline);
            line["adapted"] = named(r.adapted);
            out << line.dump() << '\n';
        }
        write_text(dir / "top5_changes.jsonl", out.str());
    }
    {
        ojson t;
        t["extraction_s"] = report.timings.extraction_s;
        t["update_s"] = report.timings.update_s;
        t["retrieval_s"] = report.timings.retrieval_s;
        t["fusion_s"] = report.timings.fusion_s;
        t["total_s"] = report.timings.total_s;
        t["samples"] = report.samples;
        t["retrieval_fusion_us_per_sample"] =
            report.samples ? (report.timings.retrieval_s + report.timings.fusion_s) * 1e6 /
                                 static_cast<double>(report.samples)
                           : 0.0;
        write_text(dir / "timing.json", t.dump(2) + "\n");
    }
    {
        std::ostringstream out;
        out << "step,key_bytes\n";
        for (std::size_t i = 0; i < report.key_bytes_trace.size(); ++i) {
            out << i << ',' << report.key_bytes_trace[i] << '\n';
        }
        write_text(dir / "cache_trace.csv", out.str());
    }
}

// ---------------------------------------------------------------------------

SweepParameter parse_sweep_parameter(const std::string& name) {
    if (name == "K" || name == "k") return SweepParameter::K;
    if (name == "alpha_s" || name == "alpha-s" || name == "alpha") return SweepParameter::AlphaS;
    if (name == "beta") return SweepParameter::Beta;
    throw ValidationError("unknown sweep parameter '" + name + "' (expected K, alpha_s or beta)");
}

std::string to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::K: return "K";
        case SweepParameter::AlphaS: return "alpha_s";
        case SweepParameter::Beta: return "beta";
    }
    return "?";
}

std::vector<SweepRow> sweep(const RunInputs& inputs, const RunConfig& base, SweepParameter parameter,
                            const std::vector<double>& values, unsigned jobs) {
    if (values.empty()) throw ValidationError("sweep needs at least one value");
    std::vector<RunConfig> configs;
    for (double v : values) {
        RunConfig c = base;
        c.output_dir.reset();
        switch (parameter) {
            case SweepParameter::K:
                if (!(v >= 1.0) || v != std::floor(v)) {
                    throw ValidationError("K values must be positive integers");
                }
                c.k = static_cast<std::uint32_t>(v);
                break;
            case SweepParameter::AlphaS: c.alpha_s = v; break;
            case SweepParameter::Beta: c.beta = v; break;
        }
        c.validate();
        configs.push_back(std::move(c));
    }

    std::vector<SweepRow> rows(values.size());
    const auto run_one = [&](std::size_t i) {
        const auto t0 = Clock::now();
        const auto report = run_stream(inputs, configs[i]);
        rows[i] = {values[i], report.top1_baseline, report.top1_adapted, seconds(Clock::now() - t0)};
    };

    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(values.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < values.size(); ++i) run_one(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < values.size(); i = next++) run_one(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return rows;
}

std::string sweep_csv(SweepParameter parameter, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << to_string(parameter) << ",top1_baseline,top1_adapted,runtime_s\n";
    for (const auto& r : rows) {
        char value[64];
        std::snprintf(value, sizeof value, "%g", r.value);
        out << value << ',' << fixed(r.top1_baseline) << ',' << fixed(r.top1_adapted) << ','
            << fixed(r.runtime_s) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------

void BenchConfig::validate() const {
    synthetic.validate();
    adapter.validate();
    if (frame_counts.empty()) throw ValidationError("bench needs at least one T value");
    if (measured_samples == 0 || passes == 0) {
        throw ValidationError("bench needs measured_samples >= 1 and passes >= 1");
    }
}

std::vector<BenchRow> bench_latency(const BenchConfig& config) {
    config.validate();
    const auto scheme = default_scheme();

    struct Prepared {
        std::vector<DescriptorSet> descriptors;
        std::vector<std::vector<double>> logits;
        SkeletonCache warm;
        PriorMatrix priors;
    };

    const std::size_t needed = config.warmup_samples + config.measured_samples;
    std::vector<Prepared> prepared;
    for (auto frames : config.frame_counts) {
        SyntheticConfig syn = config.synthetic;
        syn.dims.frames = frames;
        syn.samples_per_class =
            static_cast<std::uint32_t>((needed + syn.classes - 1) / syn.classes);
        SyntheticStream stream(syn);
        auto priors = PriorMatrix::uniform(stream.class_names(), scheme.spatial_count(),
                                           scheme.temporal_count());
        StreamAdapter adapter(scheme, priors, syn.dims.channels, config.adapter);

        Prepared p{{}, {}, adapter.cache(), priors};
        for (std::size_t i = 0; i < needed; ++i) {
            auto sample = stream.next();
            std::vector<double> logits(sample->zero_shot_logits.begin(), sample->zero_shot_logits.end());
            auto desc = extract_descriptors(sample->features, scheme);
            if (i < config.warmup_samples) {
                adapter.step(desc, logits);
            } else {
                p.descriptors.push_back(std::move(desc));
                p.logits.push_back(std::move(logits));
            }
        }
        p.warm = adapter.cache();
        prepared.push_back(std::move(p));
    }

    std::vector<BenchRow> rows(prepared.size());
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        rows[i].frames = config.frame_counts[i];
        rows[i].samples = config.measured_samples;
        rows[i].mean_us = std::numeric_limits<double>::infinity();
        rows[i].cache_entries = prepared[i].warm.size();
    }
    // Passes interleave T values so drift in machine load hits all of them.
    for (std::size_t pass = 0; pass < config.passes; ++pass) {
        for (std::size_t i = 0; i < prepared.size(); ++i) {
            const auto& p = prepared[i];
            StreamAdapter adapter(scheme, p.priors, config.synthetic.dims.channels, config.adapter);
            adapter.cache() = p.warm;
            std::vector<double> per_sample;
            per_sample.reserve(p.descriptors.size());
            for (std::size_t s = 0; s < p.descriptors.size(); ++s) {
                const auto r = adapter.step(p.descriptors[s], p.logits[s]);
                per_sample.push_back(
                    std::chrono::duration<double, std::micro>(r.timings.retrieval + r.timings.fusion)
                        .count());
            }
            const double mean = std::accumulate(per_sample.begin(), per_sample.end(), 0.0) /
                                static_cast<double>(per_sample.size());
            if (mean < rows[i].mean_us) {
                rows[i].mean_us = mean;
                std::nth_element(per_sample.begin(),
                                 per_sample.begin() + static_cast<std::ptrdiff_t>(per_sample.size() / 2),
                                 per_sample.end());
                rows[i].median_us = per_sample[per_sample.size() / 2];
            }
        }
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "T,samples,cache_entries,mean_us,median_us\n";
    for (const auto& r : rows) {
        out << r.frames << ',' << r.samples << ',' << r.cache_entries << ',' << fixed(r.mean_us, 3)
            << ',' << fixed(r.median_us, 3) << '\n';
    }
    return out.str();
}

}  // namespace skcache
