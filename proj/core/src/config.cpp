// SPDX-License-Identifier: Apache-2.0
#include "lumina/config.hpp"

#include <fstream>

#include "lumina/errors.hpp"

namespace lumina {

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j{{"space", to_json(c.space)},
                     {"workload", to_json(c.workload)},
                     {"calibration", to_json(c.constants)},
                     {"optimizer", to_json(c.optimizer)},
                     {"lumina", to_json(c.lumina)},
                     {"llm",
                      {{"model", c.llm.model},
                       {"temperature", c.llm.temperature},
                       {"max_tokens", c.llm.max_tokens},
                       {"enhanced_rules", c.llm.enhanced_rules},
                       {"max_retries", c.llm.max_retries},
                       {"base_delay_ms", c.llm.base_delay_ms}}},
                     {"output_dir", c.output_dir.string()}};
    j["initial_design"] = c.initial ? to_json(*c.initial) : nlohmann::json(nullptr);
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    RunConfig c;
    try {
        if (j.contains("space")) c.space = space_from_json(j["space"]);
        if (j.contains("workload")) c.workload = workload_from_json(j["workload"]);
        c.constants = j.contains("calibration") ? constants_from_json(j["calibration"], c.space.reference())
                                                : CalibrationConstants::calibrated(c.space.reference());
        if (j.contains("optimizer")) c.optimizer = optimizer_config_from_json(j["optimizer"]);
        if (j.contains("lumina")) c.lumina = loop_config_from_json(j["lumina"]);
        if (j.contains("llm")) {
            const auto& l = j["llm"];
            c.llm.model = l.value("model", c.llm.model);
            c.llm.temperature = l.value("temperature", c.llm.temperature);
            c.llm.max_tokens = l.value("max_tokens", c.llm.max_tokens);
            c.llm.enhanced_rules = l.value("enhanced_rules", c.llm.enhanced_rules);
            c.llm.max_retries = l.value("max_retries", c.llm.max_retries);
            c.llm.base_delay_ms = l.value("base_delay_ms", c.llm.base_delay_ms);
            if (c.llm.temperature < 0.0 || c.llm.temperature > 2.0) throw ConfigError("llm.temperature must lie in [0, 2]");
            if (c.llm.max_retries < 0) throw ConfigError("llm.max_retries must be non-negative");
        }
        if (j.contains("initial_design") && !j["initial_design"].is_null()) {
            c.initial = design_from_json(j["initial_design"]);
            if (!c.space.is_valid(*c.initial)) throw ConfigError("initial_design is outside the design space");
        }
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

}  // namespace lumina
