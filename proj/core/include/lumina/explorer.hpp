// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumina/influence.hpp"
#include "lumina/llm_gateway.hpp"
#include "lumina/optimizers.hpp"
#include "lumina/pareto.hpp"
#include "lumina/perf_model.hpp"
#include "lumina/strategy.hpp"

namespace lumina {

struct LoopConfig {
    int aggressiveness = 2;
    int max_aggressiveness = 3;
    double refine_alpha = 0.5;
    double improve_threshold = 0.01;
    double arbitration_margin = 0.10;
    bool quane_area_only = false;
};

nlohmann::json to_json(const LoopConfig& c);
LoopConfig loop_config_from_json(const nlohmann::json& j);

/// Where qualitative maps and directives come from.
class StrategyBackend {
public:
    virtual ~StrategyBackend() = default;
    virtual std::string name() const = 0;
    /// `note` receives a message when the backend degraded to the static map.
    virtual InfluenceMap qualitative(const ModelStructure& structure, std::string& note);
    /// `fallback` is set when the rule engine had to stand in.
    virtual StrategyDirective propose(const SeContext& ctx, bool& fallback, std::string& note) = 0;
};

class RuleBackend : public StrategyBackend {
public:
    std::string name() const override { return "rule"; }
    StrategyDirective propose(const SeContext& ctx, bool& fallback, std::string& note) override;
};

/// Asks a chat model; an unusable reply is re-prompted once with the error,
/// then the rule engine decides.
class LlmBackend : public StrategyBackend {
public:
    LlmBackend(ChatGateway& gateway, std::string model_name, bool enhanced_rules = true, double temperature = 0.0);
    std::string name() const override { return "llm"; }
    InfluenceMap qualitative(const ModelStructure& structure, std::string& note) override;
    StrategyDirective propose(const SeContext& ctx, bool& fallback, std::string& note) override;

private:
    ChatGateway& gateway_;
    std::string model_;
    bool enhanced_;
    double temperature_;
};

struct LoopResult {
    std::vector<TrajectorySample> trajectory;
    ParetoArchive archive;
    InfluenceMap ahk;
    SensitivityTable sensitivity;
    std::vector<double> phv_curve;  ///< archive PHV after each sample
};

using SampleSink = std::function<void(const TrajectorySample&)>;

/// Initial evaluation, qualitative map, sensitivity probes, then directive
/// rounds until `budget` samples exist. Every evaluation, sensitivity probes
/// included, is one sample. A failed directive sends the next round back to
/// the last design that did not fail.
LoopResult run_loop(const Evaluator& evaluator, const DesignPoint& initial, std::size_t budget, std::uint64_t seed,
                    StrategyBackend& backend, const LoopConfig& config = {}, const SampleSink& sink = {});

struct OptimizerResult {
    std::vector<TrajectorySample> trajectory;
    ParetoArchive archive;
    std::vector<double> phv_curve;
};

/// Propose/evaluate/observe one design at a time until the budget is spent or
/// the optimizer runs dry.
OptimizerResult run_optimizer(const Evaluator& evaluator, Optimizer& optimizer, std::size_t budget,
                              const SampleSink& sink = {});

}  // namespace lumina
