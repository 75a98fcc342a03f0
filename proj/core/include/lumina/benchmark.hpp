// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumina/directive.hpp"
#include "lumina/errors.hpp"
#include "lumina/llm_gateway.hpp"
#include "lumina/perf_model.hpp"
#include "lumina/rng.hpp"

namespace lumina {

enum class Task { Bottleneck, Prediction, Tuning };
inline constexpr std::array<Task, 3> kAllTasks{Task::Bottleneck, Task::Prediction, Task::Tuning};
std::string_view task_name(Task t);
std::optional<Task> task_from_name(std::string_view name);

/// What the question's latency refers to: a whole layer phase or one operator.
struct AppTarget {
    enum class Kind { LayerPrefill, LayerDecode, Matmul, Layernorm };
    Kind kind = Kind::LayerPrefill;
    std::int64_t m = 0;  ///< matmul M, layernorm rows
    std::int64_t k = 0;  ///< matmul K, layernorm width
    std::int64_t n = 0;  ///< matmul N

    std::string describe() const;
};

nlohmann::json to_json(const AppTarget& t);
AppTarget app_target_from_json(const nlohmann::json& j);

/// Report and latency (seconds) of `target` on design d.
PhaseReport target_report(const Evaluator& ev, const DesignPoint& d, const AppTarget& target);

struct BenchmarkQuestion {
    Task task = Task::Bottleneck;
    std::string prompt;
    std::array<std::string, 4> options;
    int answer_index = 0;
    nlohmann::json provenance;  ///< generator seed and the evaluations behind the key
    nlohmann::json context;     ///< structured facts for scripted agents and re-verification
};

struct SuiteCounts {
    std::size_t bottleneck = 308;
    std::size_t prediction = 127;
    std::size_t tuning = 30;

    std::size_t total() const { return bottleneck + prediction + tuning; }
    std::size_t of(Task t) const;
};

struct BenchmarkSuite {
    std::uint64_t seed = 0;
    SuiteCounts counts;
    std::vector<BenchmarkQuestion> questions;
};

/// x rounded to `digits` significant digits.
double round_sig(double x, int digits = 3);
/// Distractor values: key times 0.7, 1.2 and 1.5, each rounded to 3 significant digits.
std::array<double, 3> distractor_values(double key);
/// Shortest fixed-point text of a 3-significant-digit value ("1240", "55.8", "0.297").
std::string format_sig(double x);

/// A bottleneck question for a fixed design, target and four single-parameter
/// moves. Throws DegenerateDraw when fewer than two moves change the latency
/// or no single move is strictly best.
BenchmarkQuestion make_bottleneck_question(const Evaluator& ev, const DesignPoint& d, const AppTarget& target,
                                           const std::array<StepChange, 4>& moves, Rng& rng);

BenchmarkQuestion gen_bottleneck(Rng& rng, const Evaluator& ev);
BenchmarkQuestion gen_prediction(Rng& rng, const Evaluator& ev, std::size_t k_examples = 6);
BenchmarkQuestion gen_tuning(Rng& rng, const Evaluator& ev);

/// Question i of each task draws from its own sub-stream of `seed`;
/// degenerate draws are retried with the next attempt index.
BenchmarkSuite generate_suite(const Evaluator& ev, const SuiteCounts& counts, std::uint64_t seed);

/// Index of the option that re-evaluation shows to be correct.
int oracle_choice(const BenchmarkQuestion& q, const Evaluator& ev);

/// Re-derives the key from the question context; false (with a reason) when
/// the keyed option is not uniquely correct or the options are malformed.
bool verify_question(const BenchmarkQuestion& q, const Evaluator& ev, std::string* why = nullptr);

nlohmann::json to_json(const BenchmarkQuestion& q);
BenchmarkQuestion question_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BenchmarkSuite& s);
BenchmarkSuite suite_from_json(const nlohmann::json& j);

class AgentFailure : public Error {
public:
    using Error::Error;
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual std::string name() const = 0;
    /// Option index in [0, 4). `enhanced` selects the corrective rules;
    /// `system_prompt` already contains them when set. Throws AgentFailure.
    virtual int answer(const BenchmarkQuestion& q, const std::string& system_prompt, bool enhanced) = 0;
};

class OracleAgent : public Agent {
public:
    explicit OracleAgent(const Evaluator& ev) : ev_(ev) {}
    std::string name() const override { return "oracle"; }
    int answer(const BenchmarkQuestion& q, const std::string&, bool) override { return oracle_choice(q, ev_); }

private:
    const Evaluator& ev_;
};

class RandomAgent : public Agent {
public:
    explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
    std::string name() const override { return "random"; }
    int answer(const BenchmarkQuestion&, const std::string&, bool) override {
        return static_cast<int>(rng_.index(4));
    }

private:
    Rng rng_;
};

/// Scripted heuristics over the question context. With rules on it targets
/// the dominant stall, extrapolates from the sensitivity reference and trims
/// area where it hurts least; with rules off it prefers more hardware and
/// sums exemplar values from zero.
class RuleAgent : public Agent {
public:
    std::string name() const override { return "rule"; }
    int answer(const BenchmarkQuestion& q, const std::string& system_prompt, bool enhanced) override;
};

/// Sends the question to a chat model and reads "Answer: X".
class LlmAgent : public Agent {
public:
    LlmAgent(ChatGateway& gateway, std::string model_name) : gateway_(gateway), model_(std::move(model_name)) {}
    std::string name() const override { return "llm:" + model_; }
    int answer(const BenchmarkQuestion& q, const std::string& system_prompt, bool enhanced) override;

private:
    ChatGateway& gateway_;
    std::string model_;
};

/// First standalone A-D after "Answer:" (or anywhere, as a last resort);
/// throws AgentFailure when none is present.
int parse_choice(std::string_view reply);

struct ScoreReport {
    std::string agent;
    bool enhanced = false;
    std::array<std::size_t, 3> correct{};
    std::array<std::size_t, 3> total{};
    std::vector<int> chosen;  ///< -1 on agent failure
    std::vector<std::string> failures;

    double accuracy(Task t) const;
};

ScoreReport score(const BenchmarkSuite& suite, Agent& agent, bool enhanced);

nlohmann::json to_json(const ScoreReport& r);
/// index,task,answer,chosen,correct
std::string score_csv(const BenchmarkSuite& suite, const ScoreReport& r);

}  // namespace lumina
