// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lumina/design_space.hpp"
#include "lumina/explorer.hpp"
#include "lumina/optimizers.hpp"
#include "lumina/perf_model.hpp"
#include "lumina/workload.hpp"

namespace lumina {

struct LlmSettings {
    std::string model;  ///< overrides LUMINA_LLM_MODEL when set
    double temperature = 0.0;
    int max_tokens = 1024;
    bool enhanced_rules = true;
    int max_retries = 3;
    int base_delay_ms = 500;
};

/// Everything a run needs besides method, seed and budget.
struct RunConfig {
    SpaceSpec space = SpaceSpec::standard();
    WorkloadConfig workload;
    CalibrationConstants constants = CalibrationConstants::defaults();
    OptimizerConfig optimizer;
    LoopConfig lumina;
    LlmSettings llm;
    std::optional<DesignPoint> initial;  ///< defaults to the reference design
    std::filesystem::path output_dir = "runs";

    DesignPoint initial_design() const { return initial ? *initial : space.reference(); }
    Evaluator evaluator() const { return Evaluator(space, workload, constants); }
};

nlohmann::json to_json(const RunConfig& c);
/// Missing sections keep their defaults. Throws ConfigError on bad values.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace lumina
