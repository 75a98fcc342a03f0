// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumina/design_space.hpp"
#include "lumina/directive.hpp"
#include "lumina/influence.hpp"
#include "lumina/perf_model.hpp"

namespace lumina {

enum class Outcome { Improved, Neutral, Failed };
std::string_view outcome_name(Outcome o);

enum class SampleKind { Initial, Sensitivity, Directive, Restart, Optimizer };
std::string_view sample_kind_name(SampleKind k);

struct TrajectorySample {
    std::size_t step = 0;
    SampleKind kind = SampleKind::Initial;
    Evaluation eval;
    std::optional<StrategyDirective> directive;
    std::optional<Metric> target;
    std::optional<Outcome> outcome;
    bool dominates_reference = false;
    bool better_than_reference = false;  ///< strictly better in every objective
    bool clamped = false;
    bool fallback = false;  ///< LLM output unusable; the rule backend proposed instead
    std::string note;
};

struct FailurePattern {
    Resource bottleneck{};
    std::string fingerprint;

    auto operator<=>(const FailurePattern&) const = default;
};

/// Append-only record of the run plus the failure blocklist.
class TrajectoryMemory {
public:
    void add(TrajectorySample s);
    const std::vector<TrajectorySample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }

    bool visited(const DesignPoint& d) const { return designs_.count(d) != 0; }

    void add_failure(const FailurePattern& f) { failures_.insert(f); }
    bool blocked(const std::string& fingerprint) const;
    const std::set<FailurePattern>& failures() const { return failures_; }

    /// Index of the first sample pair not yet consumed by refinement.
    std::size_t refined_upto = 1;

private:
    std::vector<TrajectorySample> samples_;
    std::set<DesignPoint> designs_;
    std::set<FailurePattern> failures_;
};

/// Latency objective for an improvement round: alternate by round unless one
/// normalized latency exceeds the other by the margin.
Metric choose_target(const PpaMetrics& m, std::size_t round, double margin = 0.10);

/// improved: dominates prev or improves the target by >= threshold (relative);
/// failed: target got worse; neutral otherwise.
Outcome classify(const Evaluation& prev, const Evaluation& next, Metric target, double threshold = 0.01);

struct SeContext {
    const SpaceSpec& space;
    const CalibrationConstants& consts;
    const Evaluation& current;
    Metric target;
    const InfluenceMap& ahk;
    const TrajectoryMemory& tm;
    int aggressiveness = 2;  ///< boosts + tradeoff; 2 = one boost and one tradeoff
};

/// Parameters ordered by how much a +1 step relieves `resource` (measured
/// capability gain first, then measured target gain).
std::vector<Param> rank_boosts(const SeContext& ctx, Resource resource);
/// Parameters ordered least-critical first for a -1 tradeoff step.
std::vector<Param> rank_tradeoffs(const SeContext& ctx, const std::vector<Param>& exclude);

/// Rule strategy engine. Throws Exhausted when every candidate is blocked by
/// the failure patterns or lands on a visited design.
StrategyDirective se_propose(const SeContext& ctx);

struct Applied {
    DesignPoint design;
    bool clamped = false;
    std::vector<Param> clamped_params;
};

/// Boosts then tradeoff via step_neighbor; out-of-range moves are clamped to
/// the list boundary. Throws InvalidDirective when nothing moves.
Applied ee_apply(const DesignPoint& d, const StrategyDirective& directive, const SpaceSpec& space);

/// Consumes new consecutive pairs: pairs differing in at most two parameters
/// update magnitudes by exponential smoothing; failed directive samples are
/// added to the failure patterns.
void refine(TrajectoryMemory& tm, InfluenceMap& ahk, const SpaceSpec& space, double alpha = 0.5);

nlohmann::json to_json(const TrajectorySample& s);

}  // namespace lumina
