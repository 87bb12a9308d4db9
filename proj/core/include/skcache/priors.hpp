#pragma once

// LLM-derived, class-specific descriptor weights.
//
// One prompt per action class asks for spatial importances (P values
// summing to 1), temporal importances (Z values summing to 1) and a
// global-vs-local preference gamma in [0, 1]. The weight row is
//   w~ = [gamma, (1-gamma) w_spa, (1-gamma) w_tmp],   w = w~ / |w~|_1
// and |w~|_1 = 2 - gamma whenever both lists sum to 1.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skcache/errors.hpp"

namespace skcache {

struct RawPrior {
    std::vector<double> spatial;
    std::vector<double> temporal;
    double gamma = 0.0;
};

struct PromptLabel {
    std::string name;  // shown in the region/phase list, e.g. "Head"
    std::string key;   // placeholder in the format line, e.g. "w_head"
};

/// [Head, Torso, Arms, Legs] / [Beginning, Middle, End].
std::vector<PromptLabel> default_spatial_labels();
std::vector<PromptLabel> default_temporal_labels();

/// Renders the per-class prompt. Throws ValidationError on an empty action
/// name or empty label lists.
std::string build_prompt(const std::string& action, const std::vector<PromptLabel>& spatial,
                         const std::vector<PromptLabel>& temporal);

/// Pulls the first JSON object out of `text` and validates it. Sums within
/// 1e-3 of 1 are renormalized; anything further off is rejected. Extra keys
/// are ignored.
RawPrior parse_response(const std::string& text, std::size_t spatial_count,
                        std::size_t temporal_count);

/// Compact JSON of the three keys (inverse of parse_response).
std::string serialize_raw_prior(const RawPrior& raw);

/// w~ (unnormalized) and its l1-normalized form.
std::vector<double> raw_weight_vector(const RawPrior& raw);
std::vector<double> assemble_weights(const RawPrior& raw);

/// [1/D, ..., 1/D] with D = P + Z + 1.
std::vector<double> uniform_weights(std::size_t descriptor_count);

class PriorMatrix {
public:
    PriorMatrix() = default;
    PriorMatrix(std::vector<std::string> class_names, std::size_t spatial, std::size_t temporal,
                std::vector<std::vector<double>> weights);

    std::size_t classes() const noexcept { return rows_.size(); }
    std::size_t spatial() const noexcept { return spatial_; }
    std::size_t temporal() const noexcept { return temporal_; }
    std::size_t descriptor_count() const noexcept { return 1 + spatial_ + temporal_; }
    const std::vector<std::string>& class_names() const noexcept { return names_; }
    const std::vector<double>& row(std::size_t cls) const { return rows_.at(cls); }

    /// {"class_names": [...], "P": 4, "Z": 3, "weights": [[...], ...]}
    std::string to_json() const;
    static PriorMatrix from_json(const std::string& text);

    static PriorMatrix uniform(std::vector<std::string> class_names, std::size_t spatial,
                               std::size_t temporal);
    /// Non-negative rows drawn once per class from `seed`, l1-normalized.
    static PriorMatrix random(std::vector<std::string> class_names, std::size_t spatial,
                              std::size_t temporal, std::uint64_t seed);

private:
    std::vector<std::string> names_;
    std::size_t spatial_ = 0;
    std::size_t temporal_ = 0;
    std::vector<std::vector<double>> rows_;
};

void save_priors(const std::filesystem::path& path, const PriorMatrix& matrix);
PriorMatrix load_priors(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Chat-completion client

struct EndpointConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4-turbo";
    std::string api_key_env = "OPENAI_API_KEY";
    double temperature = 0.0;
    int timeout_seconds = 60;
    int max_retries = 3;
    std::chrono::milliseconds backoff{500};
    /// When set, responses are read from <fixture_dir>/<slug>.json instead
    /// of the network; see fixture_name().
    std::optional<std::filesystem::path> fixture_dir;

    static EndpointConfig from_json(const std::string& text);
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Minimal POST transport so the client can be exercised without a network.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    /// Throws on connection-level failure.
    virtual HttpResponse post(const std::string& path, const std::string& body,
                              const std::map<std::string, std::string>& headers) = 0;
};

/// cpp-httplib backed transport for `base_url`.
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   int timeout_seconds);

class ChatClient {
public:
    ChatClient(EndpointConfig config, std::unique_ptr<HttpTransport> transport);

    /// Request body for a single-turn prompt.
    std::string request_body(const std::string& prompt) const;

    /// Sends `prompt`, retrying transport failures, 429 and 5xx with
    /// doubling backoff. Returns the assistant message content.
    std::string complete(const std::string& prompt);

    /// Number of HTTP attempts made so far (for tests and logging).
    int attempts() const noexcept { return attempts_; }

private:
    EndpointConfig config_;
    std::unique_ptr<HttpTransport> transport_;
    std::string api_key_;
    int attempts_ = 0;
};

/// Lower-case slug of a class name used for fixture files ("Cross arms" -> "cross_arms").
std::string fixture_name(const std::string& class_name);

/// Per-class failure collected by fetch_priors before it aborts.
class PriorFetchError : public Error {
public:
    explicit PriorFetchError(std::vector<std::pair<std::string, std::string>> failures);
    const std::vector<std::pair<std::string, std::string>>& failures() const noexcept {
        return failures_;
    }

private:
    std::vector<std::pair<std::string, std::string>> failures_;
};

/// Queries one prompt per class (or reads fixtures) and assembles the prior
/// matrix. All classes are attempted; any failures are reported together.
/// `transport` overrides the network transport in live mode.
PriorMatrix fetch_priors(const std::vector<std::string>& class_names, const EndpointConfig& config,
                         const std::vector<PromptLabel>& spatial = default_spatial_labels(),
                         const std::vector<PromptLabel>& temporal = default_temporal_labels(),
                         std::unique_ptr<HttpTransport> transport = nullptr);

}  // namespace skcache
