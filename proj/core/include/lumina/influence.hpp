// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumina/design_space.hpp"
#include "lumina/perf_model.hpp"

namespace lumina {

enum class Metric { Ttft, Tpot, Area, PeakTensor, PeakVector, MemBw, NetBw };
inline constexpr std::size_t kMetricCount = 7;
inline constexpr std::array<Metric, kMetricCount> kAllMetrics{
    Metric::Ttft, Metric::Tpot, Metric::Area, Metric::PeakTensor, Metric::PeakVector, Metric::MemBw, Metric::NetBw};

constexpr std::size_t index_of(Metric m) { return static_cast<std::size_t>(m); }
std::string_view metric_name(Metric m);
std::optional<Metric> metric_from_name(std::string_view name);

/// Raw value of m (seconds, mm^2, FLOP/s or B/s).
double metric_value(const Evaluation& e, Metric m);
/// Capability metric that throttles resource r.
Metric capability_metric(Resource r);
Phase phase_of(Metric latency_metric);

enum class InfluenceSource { Structural, Measured, Refined };
std::string_view source_name(InfluenceSource s);

/// One (parameter, metric) cell of the influence map. A structural zero
/// (hard_zero) means the metric does not depend on the parameter at all.
struct Influence {
    int sign = 0;             ///< -1, 0, +1 for a +1 step
    double magnitude = 0.0;   ///< metric change per +1 lattice step, raw units
    InfluenceSource source = InfluenceSource::Structural;
    bool hard_zero = false;
    bool measured = false;    ///< magnitude carries data (sensitivity or refinement)
};

/// Architectural heuristic knowledge: parameter -> metric influence plus the
/// structural parameter -> resource relief relation.
class InfluenceMap {
public:
    Influence& at(Param p, Metric m) { return cells_[index_of(p)][index_of(m)]; }
    const Influence& at(Param p, Metric m) const { return cells_[index_of(p)][index_of(m)]; }

    /// Whether raising p relieves a stall on r (more of r, or less traffic to it).
    bool relieves(Param p, Resource r) const { return relief_[index_of(p)][index_of(r)]; }
    void set_relieves(Param p, Resource r, bool v) { relief_[index_of(p)][index_of(r)] = v; }

    std::vector<Param> relievers(Resource r) const;

    /// Sets a data-driven magnitude; structural zeros are left untouched.
    void set_magnitude(Param p, Metric m, double magnitude, InfluenceSource source);

private:
    std::array<std::array<Influence, kMetricCount>, kParamCount> cells_{};
    std::array<std::array<bool, kResourceCount>, kParamCount> relief_{};
};

nlohmann::json to_json(const InfluenceMap& ahk);
/// Flat CSV: parameter,metric,sign,magnitude,source,hard_zero
std::string influence_csv(const InfluenceMap& ahk);

/// Closed-form dependency description of the analytic model. This is what the
/// static qualitative backend reads, and the text an LLM backend is shown.
struct ModelStructure {
    struct Dependency {
        Metric metric;
        Param param;
        int sign;
    };
    std::vector<Dependency> dependencies;  ///< every (metric, param) not listed is a structural zero
    std::vector<std::pair<Param, Resource>> relief;
    std::string text;
};

ModelStructure perf_model_structure(const CalibrationConstants& c);

/// Static qualitative backend: signs and hard zeros from the model structure;
/// magnitudes unset.
InfluenceMap quale_build(const ModelStructure& structure);

/// Parses an LLM-produced influence map ({"entries":[{"parameter","metric","sign"}]})
/// and checks it against the structure. Throws LlmMapInvalid when the map gives
/// a nonzero sign to a structural zero or is unreadable.
InfluenceMap quale_from_llm_reply(std::string_view reply, const ModelStructure& structure);

struct SensitivityProbe {
    Param param{};
    int direction = 0;
    DesignPoint design;
    Evaluation eval;
};

/// The perturbation set around the sensitivity reference and its results.
struct SensitivityTable {
    DesignPoint reference;
    Evaluation reference_eval;
    std::vector<SensitivityProbe> probes;
    bool area_only = false;
};

/// Evaluates (and records) a probe design; nullopt once the budget is spent.
using ProbeFn = std::function<std::optional<Evaluation>(const DesignPoint&)>;

/// Perturbs every parameter with a nonzero sign by -1 and +1 step around the
/// reference and records per-step magnitudes (central differences, one-sided
/// at list boundaries). In area-only mode no performance probe is run: area
/// and capability metrics are computed in closed form.
SensitivityTable quane_sensitivity(InfluenceMap& ahk, const SpaceSpec& space, const Evaluation& reference,
                                   const ProbeFn& probe, const CalibrationConstants& c, bool area_only = false);

nlohmann::json to_json(const SensitivityTable& t);

}  // namespace lumina
