// SPDX-License-Identifier: Apache-2.0
#include "lumina/llm_gateway.hpp"

#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace lumina {

void ChatRequest::validate() const {
    if (messages.empty()) throw ConfigError("chat request has no messages");
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("temperature must lie in [0, 2]");
    if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

std::string_view llm_error_name(LlmErrorKind k) {
    switch (k) {
        case LlmErrorKind::Timeout: return "timeout";
        case LlmErrorKind::AuthFailure: return "auth_failure";
        case LlmErrorKind::RateLimited: return "rate_limited";
        case LlmErrorKind::ServerError: return "server_error";
        case LlmErrorKind::MalformedResponse: return "malformed_response";
        case LlmErrorKind::Transport: return "transport";
    }
    return "transport";
}

bool LlmError::transient() const noexcept {
    switch (kind_) {
        case LlmErrorKind::Timeout:
        case LlmErrorKind::RateLimited:
        case LlmErrorKind::ServerError:
        case LlmErrorKind::Transport: return true;
        default: return false;
    }
}

void MockBackend::push_reply(std::string reply) { script_.push_back({std::move(reply), {}}); }

void MockBackend::push_error(LlmErrorKind kind) { script_.push_back({std::nullopt, kind}); }

std::string MockBackend::complete(const ChatRequest& req) {
    requests_.push_back(req);
    if (!script_.empty()) {
        Step step = std::move(script_.front());
        script_.pop_front();
        if (step.reply) return *step.reply;
        throw LlmError(step.error, "scripted " + std::string(llm_error_name(step.error)));
    }
    if (responder_) return responder_(req);
    throw LlmError(LlmErrorKind::MalformedResponse, "mock backend has no scripted reply left");
}

ChatGateway::ChatGateway(ChatBackend& backend, RetryPolicy policy) : backend_(backend), policy_(std::move(policy)) {
    if (!policy_.sleep) policy_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

void ChatGateway::set_log(std::filesystem::path path, std::vector<std::string> secrets) {
    log_path_ = std::move(path);
    secrets_ = std::move(secrets);
}

std::string ChatGateway::complete(const ChatRequest& req) {
    req.validate();
    retry_log_.clear();
    auto delay = policy_.base_delay;
    for (int attempt = 1;; ++attempt) {
        last_attempts_ = attempt;
        const auto start = std::chrono::steady_clock::now();
        const auto elapsed = [&] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        };
        try {
            std::string reply = backend_.complete(req);
            log_exchange(req, reply, true, elapsed());
            return reply;
        } catch (const LlmError& e) {
            log_exchange(req, e.what(), false, elapsed());
            if (!e.transient() || attempt > policy_.max_retries) throw;
            retry_log_.push_back("attempt " + std::to_string(attempt) + " failed: " +
                                 std::string(llm_error_name(e.kind())) + "; retrying in " +
                                 std::to_string(delay.count()) + " ms");
            policy_.sleep(delay);
            delay = std::chrono::milliseconds(static_cast<long long>(delay.count() * policy_.multiplier));
        }
    }
}

void ChatGateway::log_exchange(const ChatRequest& req, const std::string& outcome, bool ok, double latency_s) {
    if (!log_path_) return;
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : req.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    nlohmann::json rec{{"model", req.model_name},
                       {"system", req.system_prompt},
                       {"messages", messages},
                       {ok ? "reply" : "error", outcome},
                       {"latency_s", latency_s}};
    std::lock_guard lock(log_mutex_);
    std::ofstream out(*log_path_, std::ios::app);
    out << redact(rec.dump(), secrets_) << '\n';
}

std::string redact(std::string text, const std::vector<std::string>& secrets) {
    for (const auto& s : secrets) {
        if (s.empty()) continue;
        for (auto pos = text.find(s); pos != std::string::npos; pos = text.find(s, pos + 10))
            text.replace(pos, s.size(), "[REDACTED]");
    }
    return text;
}

std::string serialize_directive(const StrategyDirective& d) { return to_json(d).dump(); }

namespace {

// Span [begin, end) of the first balanced JSON object at or after `from`.
std::optional<std::pair<std::size_t, std::size_t>> object_span(std::string_view text, std::size_t from) {
    const std::size_t begin = text.find('{', from);
    if (begin == std::string_view::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = begin; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return std::make_pair(begin, i + 1);
    }
    return std::nullopt;
}

int read_steps(const nlohmann::json& j, std::size_t pos) {
    if (j.is_number_integer()) return j.get<int>();
    if (j.is_string()) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(j.get<std::string>(), &used);
            if (used == j.get<std::string>().size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw ParseError(pos, "steps must be an integer");
}

}  // namespace

StrategyDirective parse_directive(std::string_view text) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) throw ParseError(0, "empty reply");

    std::size_t from = 0;
    if (auto fence = text.find("```"); fence != std::string_view::npos) from = fence;
    auto span = object_span(text, from);
    if (!span && from != 0) span = object_span(text, 0);
    if (!span) {
        const auto brace = text.find('{');
        throw ParseError(brace == std::string_view::npos ? 0 : brace, "no complete JSON object in reply");
    }
    const auto [begin, end] = *span;
    const std::string_view body = text.substr(begin, end - begin);

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(begin + (e.byte > 0 ? e.byte - 1 : 0), "invalid JSON");
    }
    const auto where = [&](const std::string& token) {
        const auto p = body.find(token);
        return begin + (p == std::string_view::npos ? 0 : p);
    };
    const auto param_of = [&](const nlohmann::json& move) {
        if (!move.is_object() || !move.contains("parameter") || !move["parameter"].is_string())
            throw ParseError(where("parameter"), "move lacks a parameter name");
        const std::string name = move["parameter"].get<std::string>();
        const auto p = param_from_name(name);
        if (!p) throw ParseError(where("\"" + name + "\""), "unknown parameter \"" + name + "\"");
        if (!move.contains("steps")) throw ParseError(where("\"" + name + "\""), "move lacks steps");
        return StepChange{*p, read_steps(move["steps"], where("steps"))};
    };

    StrategyDirective d;
    if (!j.contains("target_bottleneck") || !j["target_bottleneck"].is_string())
        throw ParseError(begin, "missing target_bottleneck");
    const std::string resource = j["target_bottleneck"].get<std::string>();
    const auto r = resource_from_name(resource);
    if (!r) throw ParseError(where("\"" + resource + "\""), "unknown resource \"" + resource + "\"");
    d.target_bottleneck = *r;

    if (!j.contains("boosts") || !j["boosts"].is_array() || j["boosts"].empty())
        throw ParseError(where("boosts"), "boosts must be a non-empty list");
    for (const auto& b : j["boosts"]) d.boosts.push_back(param_of(b));
    if (j.contains("tradeoff") && !j["tradeoff"].is_null()) d.tradeoff = param_of(j["tradeoff"]);
    if (j.contains("rationale") && j["rationale"].is_string()) d.rationale = j["rationale"].get<std::string>();

    try {
        d.validate();
    } catch (const InvalidDirective& e) {
        throw ParseError(begin, e.what());
    }
    return d;
}

}  // namespace lumina
