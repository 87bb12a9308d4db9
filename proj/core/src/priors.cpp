#include "skcache/priors.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "byte_io.hpp"
#include "skcache/errors.hpp"

namespace skcache {

namespace {

constexpr double kSumTolerance = 1e-3;
constexpr double kRowTolerance = 1e-9;

std::string count_word(std::size_t n) {
    static const char* const kWords[] = {"zero", "one", "two",   "three", "four", "five",
                                         "six",  "seven", "eight", "nine", "ten"};
    return n < std::size(kWords) ? kWords[n] : std::to_string(n);
}

template <typename Label, typename Proj>
std::string join(const std::vector<Label>& labels, Proj proj) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ", ";
        out += proj(labels[i]);
    }
    return out;
}

std::vector<double> read_distribution(const nlohmann::json& j, const char* key,
                                      std::size_t expected) {
    if (!j.contains(key)) throw ValidationError(std::string("missing key \"") + key + "\"");
    const auto& arr = j.at(key);
    if (!arr.is_array()) throw ValidationError(std::string("\"") + key + "\" is not a list");
    if (arr.size() != expected) {
        throw ValidationError(std::string("\"") + key + "\" has " + std::to_string(arr.size()) +
                              " values, expected " + std::to_string(expected));
    }
    std::vector<double> values;
    double total = 0.0;
    for (const auto& v : arr) {
        if (!v.is_number()) throw ValidationError(std::string("\"") + key + "\" holds a non-number");
        const double x = v.get<double>();
        if (!std::isfinite(x) || x < 0.0) {
            throw ValidationError(std::string("\"") + key + "\" holds a negative weight");
        }
        values.push_back(x);
        total += x;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
        throw ValidationError(std::string("\"") + key + "\" sums to " + std::to_string(total) +
                              ", not 1");
    }
    for (double& x : values) x /= total;
    return values;
}

void check_row(const std::vector<double>& row, std::size_t expected, std::size_t index) {
    const std::string where = "prior row " + std::to_string(index);
    if (row.size() != expected) {
        throw ValidationError(where + " has " + std::to_string(row.size()) + " weights, expected " +
                              std::to_string(expected));
    }
    double total = 0.0;
    for (double w : row) {
        if (!std::isfinite(w) || w < 0.0) throw ValidationError(where + " has a negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > kRowTolerance) {
        throw ValidationError(where + " is not l1-normalized (sum " + std::to_string(total) + ")");
    }
}

}  // namespace

std::vector<PromptLabel> default_spatial_labels() {
    return {{"Head", "w_head"}, {"Torso", "w_torso"}, {"Arms", "w_arms"}, {"Legs", "w_legs"}};
}

std::vector<PromptLabel> default_temporal_labels() {
    return {{"Beginning", "w_begin"}, {"Middle", "w_mid"}, {"End", "w_end"}};
}

std::string build_prompt(const std::string& action, const std::vector<PromptLabel>& spatial,
                         const std::vector<PromptLabel>& temporal) {
    if (action.empty()) throw ValidationError("prompt: empty action name");
    if (spatial.empty() || temporal.empty()) throw ValidationError("prompt: empty label list");
    const auto name = [](const PromptLabel& l) { return l.name; };
    const auto key = [](const PromptLabel& l) { return l.key; };

    std::ostringstream p;
    p << "You are an expert in human–action understanding.\n"
      << "Given the action class " << action
      << ", answer the following three questions without adding commentary.\n\n"
      << "1. Spatial importance.\n"
      << "   The human body is divided into " << count_word(spatial.size()) << " regions:\n"
      << "   [" << join(spatial, name) << "].\n"
      << "   Provide a list of " << count_word(spatial.size())
      << " non-negative numbers that sum to 1, corresponding to the relative importance of "
         "each region for recognising "
      << action << ".\n"
      << "   Format:\n"
      << "   \"spatial\": [" << join(spatial, key) << "]\n"
      << "2. Temporal importance.\n"
      << "   The action sequence is divided into " << count_word(temporal.size()) << " phases:\n"
      << "   [" << join(temporal, name) << "].\n"
      << "   Provide a list of " << count_word(temporal.size())
      << " non-negative numbers that sum to 1, indicating the relative importance of each "
         "phase.\n"
      << "   Format:\n"
      << "   \"temporal\": [" << join(temporal, key) << "]\n"
      << "3. Global vs local preference.\n"
      << "   Provide a single number γ ∈ [0,1] indicating how much the action should be "
         "recognised holistically (γ ≈ 1) versus by local parts/phases (γ ≈ 0).\n"
      << "   Format:\n"
      << "   \"gamma\": γ\n\n"
      << "Return one compact JSON object with keys \"spatial\", \"temporal\", and \"gamma\".\n"
      << "Do not include any other keys, text, or explanations.\n";
    return p.str();
}

RawPrior parse_response(const std::string& text, std::size_t spatial_count,
                        std::size_t temporal_count) {
    // Models sometimes wrap the object in prose or a code fence.
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw ValidationError("response contains no JSON object");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.substr(open, close - open + 1));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("response is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("response is not a JSON object");

    RawPrior raw;
    raw.spatial = read_distribution(j, "spatial", spatial_count);
    raw.temporal = read_distribution(j, "temporal", temporal_count);
    if (!j.contains("gamma")) throw ValidationError("missing key \"gamma\"");
    if (!j.at("gamma").is_number()) throw ValidationError("\"gamma\" is not a number");
    raw.gamma = j.at("gamma").get<double>();
    if (!(raw.gamma >= 0.0 && raw.gamma <= 1.0)) {
        throw ValidationError("\"gamma\" = " + std::to_string(raw.gamma) + " outside [0, 1]");
    }
    return raw;
}

std::string serialize_raw_prior(const RawPrior& raw) {
    nlohmann::ordered_json j;
    j["spatial"] = raw.spatial;
    j["temporal"] = raw.temporal;
    j["gamma"] = raw.gamma;
    return j.dump();
}

std::vector<double> raw_weight_vector(const RawPrior& raw) {
    std::vector<double> w;
    w.reserve(1 + raw.spatial.size() + raw.temporal.size());
    w.push_back(raw.gamma);
    for (double x : raw.spatial) w.push_back((1.0 - raw.gamma) * x);
    for (double x : raw.temporal) w.push_back((1.0 - raw.gamma) * x);
    return w;
}

std::vector<double> assemble_weights(const RawPrior& raw) {
    auto w = raw_weight_vector(raw);
    double l1 = 0.0;
    for (double x : w) l1 += std::abs(x);
    for (double& x : w) x /= l1;
    return w;
}

std::vector<double> uniform_weights(std::size_t descriptor_count) {
    return std::vector<double>(descriptor_count, 1.0 / static_cast<double>(descriptor_count));
}

PriorMatrix::PriorMatrix(std::vector<std::string> class_names, std::size_t spatial,
                         std::size_t temporal, std::vector<std::vector<double>> weights)
    : names_(std::move(class_names)), spatial_(spatial), temporal_(temporal), rows_(std::move(weights)) {
    if (names_.empty()) throw ValidationError("prior matrix is empty");
    if (spatial_ == 0 || temporal_ == 0) throw ValidationError("prior matrix needs P, Z >= 1");
    if (rows_.size() != names_.size()) {
        throw ValidationError("prior matrix has " + std::to_string(rows_.size()) + " rows for " +
                              std::to_string(names_.size()) + " classes");
    }
    if (std::set<std::string>(names_.begin(), names_.end()).size() != names_.size()) {
        throw ValidationError("prior matrix class names are not unique");
    }
    for (std::size_t i = 0; i < rows_.size(); ++i) check_row(rows_[i], descriptor_count(), i);
}

std::string PriorMatrix::to_json() const {
    nlohmann::ordered_json j;
    j["class_names"] = names_;
    j["P"] = spatial_;
    j["Z"] = temporal_;
    j["weights"] = rows_;
    return j.dump(2);
}

PriorMatrix PriorMatrix::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        return PriorMatrix(j.at("class_names").get<std::vector<std::string>>(),
                           j.at("P").get<std::size_t>(), j.at("Z").get<std::size_t>(),
                           j.at("weights").get<std::vector<std::vector<double>>>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("prior matrix: ") + e.what());
    }
}

PriorMatrix PriorMatrix::uniform(std::vector<std::string> class_names, std::size_t spatial,
                                 std::size_t temporal) {
    std::vector<std::vector<double>> rows(class_names.size(),
                                          uniform_weights(1 + spatial + temporal));
    return PriorMatrix(std::move(class_names), spatial, temporal, std::move(rows));
}

PriorMatrix PriorMatrix::random(std::vector<std::string> class_names, std::size_t spatial,
                                std::size_t temporal, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> rows;
    rows.reserve(class_names.size());
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        std::vector<double> row(1 + spatial + temporal);
        double total = 0.0;
        for (double& w : row) {
            w = unit(rng);
            total += w;
        }
        for (double& w : row) w /= total;
        rows.push_back(std::move(row));
    }
    return PriorMatrix(std::move(class_names), spatial, temporal, std::move(rows));
}

void save_priors(const std::filesystem::path& path, const PriorMatrix& matrix) {
    const std::string text = matrix.to_json() + "\n";
    detail::write_file_bytes(path.string(),
                             {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

PriorMatrix load_priors(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path.string());
    return PriorMatrix::from_json(std::string(bytes.begin(), bytes.end()));
}

}  // namespace skcache
