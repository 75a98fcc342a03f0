// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lumina/llm_gateway.hpp"

namespace lumina {

namespace {

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

struct Url {
    std::string origin;  ///< scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an absolute http(s) URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

OpenAiConfig OpenAiConfig::from_env() {
    OpenAiConfig c;
    c.endpoint = env_or_empty("LUMINA_LLM_ENDPOINT");
    c.api_key = env_or_empty("LUMINA_LLM_API_KEY");
    c.model = env_or_empty("LUMINA_LLM_MODEL");
    if (c.endpoint.empty()) throw ConfigError("LUMINA_LLM_ENDPOINT is not set");
    if (c.model.empty()) throw ConfigError("LUMINA_LLM_MODEL is not set");
    return c;
}

OpenAiBackend::OpenAiBackend(OpenAiConfig config) : config_(std::move(config)) { split_url(config_.endpoint); }

std::string OpenAiBackend::complete(const ChatRequest& req) {
    const Url url = split_url(config_.endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

    nlohmann::json messages = nlohmann::json::array();
    if (!req.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    for (const auto& m : req.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    const nlohmann::json body{{"model", req.model_name.empty() ? config_.model : req.model_name},
                              {"messages", messages},
                              {"temperature", req.temperature},
                              {"max_tokens", req.max_tokens}};

    auto res = client.Post(url.path, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
        throw LlmError(timed_out ? LlmErrorKind::Timeout : LlmErrorKind::Transport,
                       "request failed: " + httplib::to_string(err));
    }
    const int status = res->status;
    if (status == 401 || status == 403) throw LlmError(LlmErrorKind::AuthFailure, "HTTP " + std::to_string(status));
    if (status == 429) throw LlmError(LlmErrorKind::RateLimited, "HTTP 429");
    if (status == 408 || status == 504) throw LlmError(LlmErrorKind::Timeout, "HTTP " + std::to_string(status));
    if (status >= 500) throw LlmError(LlmErrorKind::ServerError, "HTTP " + std::to_string(status));
    if (status != 200) throw LlmError(LlmErrorKind::MalformedResponse, "HTTP " + std::to_string(status));

    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(LlmErrorKind::MalformedResponse, std::string("unexpected response body: ") + e.what());
    }
}

}  // namespace lumina
