// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lumina/design_space.hpp"
#include "lumina/directive.hpp"
#include "lumina/errors.hpp"

namespace lumina {

struct ChatMessage {
    std::string role;  ///< "user" or "assistant"
    std::string content;
};

struct ChatRequest {
    std::string system_prompt;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string model_name;

    /// Throws ConfigError on an empty message list or temperature outside [0, 2].
    void validate() const;
};

enum class LlmErrorKind { Timeout, AuthFailure, RateLimited, ServerError, MalformedResponse, Transport };
std::string_view llm_error_name(LlmErrorKind k);

class LlmError : public Error {
public:
    LlmError(LlmErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
    LlmErrorKind kind() const noexcept { return kind_; }
    /// Worth another attempt after backing off.
    bool transient() const noexcept;

private:
    LlmErrorKind kind_;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    /// Assistant text, or throws LlmError.
    virtual std::string complete(const ChatRequest& req) = 0;
    virtual std::string name() const = 0;
};

/// Offline backend: replays a script of replies and failures, then falls
/// back to an optional responder.
class MockBackend : public ChatBackend {
public:
    using Responder = std::function<std::string(const ChatRequest&)>;

    MockBackend() = default;
    explicit MockBackend(Responder responder) : responder_(std::move(responder)) {}

    void push_reply(std::string reply);
    void push_error(LlmErrorKind kind);

    std::string complete(const ChatRequest& req) override;
    std::string name() const override { return "mock"; }

    const std::vector<ChatRequest>& requests() const { return requests_; }

private:
    struct Step {
        std::optional<std::string> reply;
        LlmErrorKind error = LlmErrorKind::ServerError;
    };
    std::deque<Step> script_;
    Responder responder_;
    std::vector<ChatRequest> requests_;
};

struct OpenAiConfig {
    std::string endpoint;  ///< full chat-completions URL
    std::string api_key;
    std::string model;
    std::chrono::seconds timeout{60};

    /// LUMINA_LLM_ENDPOINT, LUMINA_LLM_API_KEY, LUMINA_LLM_MODEL. Throws
    /// ConfigError when the endpoint or model is missing.
    static OpenAiConfig from_env();
};

/// OpenAI-compatible chat-completions client (HTTP or HTTPS).
class OpenAiBackend : public ChatBackend {
public:
    explicit OpenAiBackend(OpenAiConfig config);
    std::string complete(const ChatRequest& req) override;
    std::string name() const override { return "openai:" + config_.model; }

    const OpenAiConfig& config() const { return config_; }

private:
    OpenAiConfig config_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds base_delay{500};
    double multiplier = 2.0;
    /// Defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Retries transient backend failures with exponential backoff and appends a
/// redacted request/response log.
class ChatGateway {
public:
    explicit ChatGateway(ChatBackend& backend, RetryPolicy policy = {});

    std::string complete(const ChatRequest& req);

    /// Log file (JSONL: prompt, reply or error, latency); credentials are redacted.
    void set_log(std::filesystem::path path, std::vector<std::string> secrets = {});

    /// "attempt 1 failed: rate_limited; retrying in 500 ms" lines of the last call.
    const std::vector<std::string>& retry_log() const { return retry_log_; }
    int last_attempts() const { return last_attempts_; }
    ChatBackend& backend() { return backend_; }

private:
    void log_exchange(const ChatRequest& req, const std::string& outcome, bool ok, double latency_s);

    ChatBackend& backend_;
    RetryPolicy policy_;
    std::optional<std::filesystem::path> log_path_;
    std::vector<std::string> secrets_;
    std::vector<std::string> retry_log_;
    int last_attempts_ = 0;
    std::mutex log_mutex_;
};

/// Replaces every occurrence of each non-empty secret with "[REDACTED]".
std::string redact(std::string text, const std::vector<std::string>& secrets);

/// Canonical JSON text of a directive.
std::string serialize_directive(const StrategyDirective& d);

/// Extracts the directive object from LLM text (inside a ```json fence or
/// bare) and checks names against the parameters and resources. Throws
/// ParseError with the offending character position.
StrategyDirective parse_directive(std::string_view text);

}  // namespace lumina
