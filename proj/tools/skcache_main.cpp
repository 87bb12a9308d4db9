// skcache: streaming evaluation CLI for the skeleton descriptor cache.
//
// Exit codes: 0 success, 2 validation error (bad flags/config/inputs that
// break an invariant), 1 runtime error (I/O, parse, network).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skcache/errors.hpp"
#include "skcache/harness.hpp"
#include "skcache/priors.hpp"
#include "skcache/tensorio.hpp"

namespace {

using namespace skcache;

struct RunFlags {
    std::string container;
    std::string priors;
    std::string weight_mode;
    std::string scheme;
    std::uint32_t k = 8;
    double beta = 3.0;
    double alpha_s = 5.0;
    bool retrieve_before_update = false;
    bool gate_on_adapted = false;
    bool gzsl = false;
    std::string prior_select = "predicted_class";
    std::string output_dir;
    std::uint64_t seed = 0;

    void attach(CLI::App* app, bool with_output) {
        app->add_option("--container", container, "SKC1 stream container")->required();
        app->add_option("--priors", priors, "Prior-matrix JSON");
        app->add_option("--weight-mode", weight_mode, "llm | uniform | random")
            ->check(CLI::IsMember({"llm", "uniform", "random"}));
        app->add_option("--scheme", scheme, "Partition scheme JSON (default: Kinect-25)");
        app->add_option("--k", k, "Cache capacity per class")->capture_default_str();
        app->add_option("--beta", beta, "Affinity temperature")->capture_default_str();
        app->add_option("--alpha-s", alpha_s, "Balancing coefficient")->capture_default_str();
        app->add_flag("--retrieve-before-update", retrieve_before_update,
                      "Retrieve before inserting the current sample");
        app->add_flag("--gate-on-adapted", gate_on_adapted,
                      "Gate cache updates on the adapted prediction");
        app->add_flag("--gzsl", gzsl, "Generalized ZSL: predict over all classes");
        app->add_option("--prior-select", prior_select, "predicted_class | per_class_max")
            ->check(CLI::IsMember({"predicted_class", "per_class_max"}))
            ->capture_default_str();
        if (with_output) app->add_option("--output-dir", output_dir, "Report directory");
        app->add_option("--seed", seed, "Seed for the random weight mode")->capture_default_str();
    }

    RunConfig to_config() const {
        RunConfig c;
        c.container = container;
        if (!priors.empty()) c.priors = priors;
        if (weight_mode == "llm") c.weight_mode = WeightMode::Llm;
        if (weight_mode == "uniform") c.weight_mode = WeightMode::Uniform;
        if (weight_mode == "random") c.weight_mode = WeightMode::Random;
        if (!scheme.empty()) c.scheme = scheme;
        c.k = k;
        c.beta = beta;
        c.alpha_s = alpha_s;
        c.retrieve_before_update = retrieve_before_update;
        c.gate_on_adapted = gate_on_adapted;
        c.gzsl = gzsl;
        c.prior_select = prior_select == "per_class_max" ? PriorSelect::PerClassDiagonal
                                                          : PriorSelect::PredictedClass;
        if (!output_dir.empty()) c.output_dir = output_dir;
        c.seed = seed;
        return c;
    }
};

void write_or_print(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

void print_summary(const RunReport& r) {
    std::printf("mode=%s samples=%zu classes=%zu\n", r.mode.c_str(), r.samples, r.class_names.size());
    std::printf("top1 baseline=%.4f adapted=%.4f delta=%+.4f\n", r.top1_baseline, r.top1_adapted,
                r.top1_adapted - r.top1_baseline);
    if (r.gzsl_baseline && r.gzsl_adapted) {
        std::printf("gzsl baseline S=%.4f U=%.4f H=%.4f\n", r.gzsl_baseline->seen,
                    r.gzsl_baseline->unseen, r.gzsl_baseline->harmonic);
        std::printf("gzsl adapted  S=%.4f U=%.4f H=%.4f\n", r.gzsl_adapted->seen,
                    r.gzsl_adapted->unseen, r.gzsl_adapted->harmonic);
    }
    std::printf("cache inserted=%zu replaced=%zu rejected=%zu key_bytes=%llu\n", r.inserted,
                r.replaced, r.rejected,
                static_cast<unsigned long long>(r.key_bytes_trace.empty() ? 0 : r.key_bytes_trace.back()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free skeleton descriptor cache: streaming evaluation tools"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Stream a container through the cache and report metrics");
    run_flags.attach(run, true);

    RunFlags sweep_flags;
    std::string sweep_param;
    std::vector<double> sweep_values;
    std::string sweep_out;
    unsigned sweep_jobs = 1;
    auto* sw = app.add_subcommand("sweep", "Rerun with one hyperparameter varied");
    sweep_flags.attach(sw, false);
    sw->add_option("--parameter", sweep_param, "K | alpha_s | beta")->required();
    sw->add_option("--values", sweep_values, "Comma-separated values")->required()->delimiter(',');
    sw->add_option("--out", sweep_out, "CSV path (default: stdout)");
    sw->add_option("--jobs", sweep_jobs, "Worker threads")->capture_default_str();

    std::string bench_config_path;
    std::vector<std::uint32_t> bench_t{50, 500};
    BenchConfig bench_cfg;
    bench_cfg.synthetic.dims = {32, 50, 25};
    std::string bench_out;
    auto* bench = app.add_subcommand("bench", "Retrieval+fusion latency versus sequence length");
    bench->add_option("--config", bench_config_path, "Synthetic config JSON");
    bench->add_option("--t-values", bench_t, "Frame counts")->delimiter(',')->capture_default_str();
    bench->add_option("--warmup", bench_cfg.warmup_samples, "Untimed warm-up samples")->capture_default_str();
    bench->add_option("--samples", bench_cfg.measured_samples, "Timed samples per T")->capture_default_str();
    bench->add_option("--passes", bench_cfg.passes, "Timing passes (best mean kept)")->capture_default_str();
    bench->add_option("--k", bench_cfg.adapter.capacity, "Cache capacity")->capture_default_str();
    bench->add_option("--beta", bench_cfg.adapter.affinity.beta, "Affinity temperature")->capture_default_str();
    bench->add_option("--alpha-s", bench_cfg.adapter.alpha_s, "Balancing coefficient")->capture_default_str();
    bench->add_option("--out", bench_out, "CSV path (default: stdout)");

    std::string synth_config_path;
    std::string synth_out;
    SyntheticConfig synth;
    auto* gen = app.add_subcommand("gen-synth", "Write a seeded synthetic SKC1 stream");
    gen->add_option("--config", synth_config_path, "Synthetic config JSON (flags override)");
    gen->add_option("--classes", synth.classes, "Class count");
    gen->add_option("--n", synth.dims.channels, "Feature channels N");
    gen->add_option("--t", synth.dims.frames, "Frames T");
    gen->add_option("--v", synth.dims.joints, "Joints V");
    gen->add_option("--proto-sigma", synth.proto_sigma, "Prototype scale");
    gen->add_option("--noise-sigma", synth.noise_sigma, "Per-sample feature noise");
    gen->add_option("--logit-sigma", synth.logit_sigma, "Zero-shot logit noise");
    gen->add_option("--seed", synth.seed, "Seed");
    gen->add_option("--samples-per-class", synth.samples_per_class, "Samples per class");
    gen->add_option("--seen-classes", synth.seen_classes, "Leading classes flagged as seen");
    gen->add_option("--out", synth_out, "Output .skc1 path")->required();

    std::string fetch_classes, fetch_container, fetch_endpoint, fetch_fixtures, fetch_out;
    auto* fetch = app.add_subcommand("fetch-priors", "Query per-class priors and write the prior matrix");
    auto* classes_opt = fetch->add_option("--classes", fetch_classes, "Text file, one class name per line");
    fetch->add_option("--container", fetch_container, "Take class names from an SKC1 container")
        ->excludes(classes_opt);
    fetch->add_option("--endpoint", fetch_endpoint, "Endpoint config JSON");
    fetch->add_option("--fixture-dir", fetch_fixtures, "Offline mode: read <slug>.json responses");
    fetch->add_option("--out", fetch_out, "Prior-matrix JSON path")->required();

    std::string export_report, export_dir;
    auto* exp = app.add_subcommand("export-report", "Regenerate report files from a saved report.json");
    exp->add_option("--report", export_report, "report.json written by `run`")->required();
    exp->add_option("--output-dir", export_dir, "Destination directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            print_summary(run_stream(run_flags.to_config()));
        } else if (sw->parsed()) {
            const auto cfg = sweep_flags.to_config();
            cfg.validate();
            const auto param = parse_sweep_parameter(sweep_param);
            const auto inputs = RunInputs::load(cfg);
            write_or_print(sweep_out, sweep_csv(param, sweep(inputs, cfg, param, sweep_values, sweep_jobs)));
        } else if (bench->parsed()) {
            if (!bench_config_path.empty()) {
                bench_cfg.synthetic = load_synthetic_config(bench_config_path);
            }
            bench_cfg.frame_counts = bench_t;
            write_or_print(bench_out, bench_csv(bench_latency(bench_cfg)));
        } else if (gen->parsed()) {
            SyntheticConfig cfg = synth;
            if (!synth_config_path.empty()) {
                cfg = load_synthetic_config(synth_config_path);
                // Explicit flags win over the file.
                if (gen->count("--classes")) cfg.classes = synth.classes;
                if (gen->count("--n")) cfg.dims.channels = synth.dims.channels;
                if (gen->count("--t")) cfg.dims.frames = synth.dims.frames;
                if (gen->count("--v")) cfg.dims.joints = synth.dims.joints;
                if (gen->count("--proto-sigma")) cfg.proto_sigma = synth.proto_sigma;
                if (gen->count("--noise-sigma")) cfg.noise_sigma = synth.noise_sigma;
                if (gen->count("--logit-sigma")) cfg.logit_sigma = synth.logit_sigma;
                if (gen->count("--seed")) cfg.seed = synth.seed;
                if (gen->count("--samples-per-class")) cfg.samples_per_class = synth.samples_per_class;
                if (gen->count("--seen-classes")) cfg.seen_classes = synth.seen_classes;
            }
            const auto container = generate_synthetic(cfg);
            write_container(synth_out, container);
            std::printf("wrote %zu samples (%zu classes, N=%u T=%u V=%u) to %s\n",
                        container.samples.size(), container.class_count(), cfg.dims.channels,
                        cfg.dims.frames, cfg.dims.joints, synth_out.c_str());
        } else if (fetch->parsed()) {
            std::vector<std::string> names;
            if (!fetch_container.empty()) {
                names = read_container(fetch_container).class_names;
            } else if (!fetch_classes.empty()) {
                names = read_lines(fetch_classes);
            } else {
                throw ValidationError("fetch-priors needs --classes or --container");
            }
            EndpointConfig endpoint;
            if (!fetch_endpoint.empty()) {
                std::ifstream in(fetch_endpoint);
                if (!in) throw IoError("cannot open '" + fetch_endpoint + "'");
                std::stringstream buf;
                buf << in.rdbuf();
                endpoint = EndpointConfig::from_json(buf.str());
            }
            if (!fetch_fixtures.empty()) endpoint.fixture_dir = fetch_fixtures;
            const auto matrix = fetch_priors(names, endpoint);
            save_priors(fetch_out, matrix);
            std::printf("wrote %zu prior rows to %s\n", matrix.classes(), fetch_out.c_str());
        } else if (exp->parsed()) {
            std::ifstream in(export_report);
            if (!in) throw IoError("cannot open '" + export_report + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            emit_reports(RunReport::from_json(buf.str()), export_dir);
            std::printf("wrote report files to %s\n", export_dir.c_str());
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
