// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumina/design_space.hpp"
#include "lumina/perf_model.hpp"

namespace lumina {

struct StepChange {
    Param param{};
    int steps = 0;

    bool operator==(const StepChange&) const = default;
};

/// A bottleneck-mitigation move: raise the boosts, optionally give back area
/// through one tradeoff.
struct StrategyDirective {
    Resource target_bottleneck = Resource::MemoryBw;
    std::vector<StepChange> boosts;
    std::optional<StepChange> tradeoff;
    std::string rationale;

    int aggressiveness() const { return static_cast<int>(boosts.size()) + (tradeoff ? 1 : 0); }

    /// "memory_bw|core_count-|mem_channels+"; step sizes are left out.
    std::string fingerprint() const;

    /// Throws InvalidDirective: empty boosts, non-positive boost steps,
    /// non-negative tradeoff steps, or a repeated parameter.
    void validate() const;

    bool operator==(const StrategyDirective&) const = default;
};

nlohmann::json to_json(const StrategyDirective& d);

}  // namespace lumina
