#include <cctype>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "byte_io.hpp"
#include "skcache/errors.hpp"
#include "skcache/priors.hpp"

namespace skcache {

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttplibTransport(const std::string& base_url, int timeout_seconds) : client_(base_url) {
        client_.set_connection_timeout(timeout_seconds, 0);
        client_.set_read_timeout(timeout_seconds, 0);
        client_.set_write_timeout(timeout_seconds, 0);
    }

    HttpResponse post(const std::string& path, const std::string& body,
                      const std::map<std::string, std::string>& headers) override {
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client_.Post(path, h, body, "application/json");
        if (!res) {
            throw IoError("HTTP request failed: " + httplib::to_string(res.error()));
        }
        return {res->status, res->body};
    }

private:
    httplib::Client client_;
};

bool is_transient(int status) { return status == 429 || status >= 500; }

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   int timeout_seconds) {
    return std::make_unique<HttplibTransport>(base_url, timeout_seconds);
}

EndpointConfig EndpointConfig::from_json(const std::string& text) {
    EndpointConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.base_url = j.value("base_url", c.base_url);
        c.path = j.value("path", c.path);
        c.model = j.value("model", c.model);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.temperature = j.value("temperature", c.temperature);
        c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
        c.max_retries = j.value("max_retries", c.max_retries);
        c.backoff = std::chrono::milliseconds(j.value("backoff_ms", c.backoff.count()));
        if (j.contains("fixture_dir")) {
            c.fixture_dir = std::filesystem::path(j.at("fixture_dir").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("endpoint config: ") + e.what());
    }
    if (c.max_retries < 0 || c.timeout_seconds <= 0) {
        throw ValidationError("endpoint config: max_retries >= 0 and timeout_seconds > 0 required");
    }
    return c;
}

ChatClient::ChatClient(EndpointConfig config, std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (!transport_) transport_ = make_http_transport(config_.base_url, config_.timeout_seconds);
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }
}

std::string ChatClient::request_body(const std::string& prompt) const {
    nlohmann::ordered_json j;
    j["model"] = config_.model;
    j["temperature"] = config_.temperature;
    j["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
    return j.dump();
}

std::string ChatClient::complete(const std::string& prompt) {
    const std::string body = request_body(prompt);
    std::map<std::string, std::string> headers;
    if (!api_key_.empty()) headers["Authorization"] = "Bearer " + api_key_;

    std::string last_error;
    auto delay = config_.backoff;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0 && delay.count() > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        ++attempts_;
        HttpResponse res;
        try {
            res = transport_->post(config_.path, body, headers);
        } catch (const std::exception& e) {
            last_error = e.what();
            continue;
        }
        if (is_transient(res.status)) {
            last_error = "HTTP " + std::to_string(res.status);
            continue;
        }
        if (res.status != 200) {
            throw IoError("chat completion returned HTTP " + std::to_string(res.status) + ": " +
                          res.body.substr(0, 200));
        }
        try {
            const auto j = nlohmann::json::parse(res.body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw IoError(std::string("malformed chat completion response: ") + e.what());
        }
    }
    throw IoError("chat completion failed after " + std::to_string(config_.max_retries + 1) +
                  " attempts: " + last_error);
}

std::string fixture_name(const std::string& class_name) {
    std::string slug;
    for (unsigned char ch : class_name) {
        if (std::isalnum(ch)) {
            slug += static_cast<char>(std::tolower(ch));
        } else if (!slug.empty() && slug.back() != '_') {
            slug += '_';
        }
    }
    while (!slug.empty() && slug.back() == '_') slug.pop_back();
    return slug;
}

namespace {

std::string describe(const std::vector<std::pair<std::string, std::string>>& failures) {
    std::string msg = "prior fetch failed for " + std::to_string(failures.size()) + " class(es):";
    for (const auto& [cls, why] : failures) msg += "\n  " + cls + ": " + why;
    return msg;
}

}  // namespace

PriorFetchError::PriorFetchError(std::vector<std::pair<std::string, std::string>> failures)
    : Error(describe(failures)), failures_(std::move(failures)) {}

PriorMatrix fetch_priors(const std::vector<std::string>& class_names, const EndpointConfig& config,
                         const std::vector<PromptLabel>& spatial,
                         const std::vector<PromptLabel>& temporal,
                         std::unique_ptr<HttpTransport> transport) {
    if (class_names.empty()) throw ValidationError("fetch_priors: no classes");
    std::unique_ptr<ChatClient> client;
    if (!config.fixture_dir) client = std::make_unique<ChatClient>(config, std::move(transport));

    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> failures;
    for (const auto& name : class_names) {
        try {
            std::string text;
            if (config.fixture_dir) {
                const auto path = *config.fixture_dir / (fixture_name(name) + ".json");
                const auto bytes = detail::read_file_bytes(path.string());
                text.assign(bytes.begin(), bytes.end());
            } else {
                text = client->complete(build_prompt(name, spatial, temporal));
            }
            rows.push_back(assemble_weights(parse_response(text, spatial.size(), temporal.size())));
        } catch (const Error& e) {
            failures.emplace_back(name, e.what());
        }
    }
    if (!failures.empty()) throw PriorFetchError(std::move(failures));
    return PriorMatrix(class_names, spatial.size(), temporal.size(), std::move(rows));
}

}  // namespace skcache
