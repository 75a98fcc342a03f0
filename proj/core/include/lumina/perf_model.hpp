// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumina/design_space.hpp"
#include "lumina/pareto.hpp"
#include "lumina/workload.hpp"

namespace lumina {

enum class Resource { TensorCompute, VectorCompute, MemoryBw, Interconnect };
inline constexpr std::size_t kResourceCount = 4;
inline constexpr std::array<Resource, kResourceCount> kAllResources{
    Resource::TensorCompute, Resource::VectorCompute, Resource::MemoryBw, Resource::Interconnect};

constexpr std::size_t index_of(Resource r) { return static_cast<std::size_t>(r); }
std::string_view resource_name(Resource r);
std::optional<Resource> resource_from_name(std::string_view name);

/// Fractions of the reference die assigned to each block when solving the
/// per-unit area constants. The in-core fractions split the core share.
struct AreaShares {
    double die_mm2 = 826.0;
    double cores = 0.60;
    double global_buffer = 0.10;
    double memory_phy = 0.20;
    double link_phy = 0.10;
    double core_base = 0.50;
    double core_pe = 0.10;
    double core_lanes = 0.15;
    double core_sram = 0.25;
};

struct CalibrationConstants {
    double clock_hz = 1.41e9;
    double bw_per_channel = 408e9;  ///< bytes/s
    double bw_per_link = 50e9;      ///< bytes/s
    int ring_gpus = 8;

    // Area per unit, mm^2.
    double a_core_base = 0.0;
    double a_pe = 0.0;
    double a_lane = 0.0;
    double a_sram = 0.0;  ///< per KB
    double a_gb = 0.0;    ///< per MB
    double a_mem = 0.0;   ///< per channel
    double a_link = 0.0;  ///< per link

    /// Solves the area constants so that `reference` has exactly shares.die_mm2.
    static CalibrationConstants calibrated(const DesignPoint& reference, const AreaShares& shares = {});
    /// calibrated(A100 analogue).
    static CalibrationConstants defaults();
};

nlohmann::json to_json(const CalibrationConstants& c);
/// Reads explicit constants, or {"area_shares": {...}} to re-solve them against `reference`.
CalibrationConstants constants_from_json(const nlohmann::json& j, const DesignPoint& reference);

struct HardwareDerived {
    double peak_tensor_flops = 0.0;
    double peak_vector_flops = 0.0;
    double mem_bw = 0.0;
    double net_bw = 0.0;
    double clock_hz = 0.0;
    double sram_bytes_per_core = 0.0;
    double gb_bytes = 0.0;
    int systolic_dim = 1;
};

HardwareDerived derive_hw(const DesignPoint& d, const CalibrationConstants& c);

/// Fraction of systolic-array cells doing useful work after padding M and N
/// up to multiples of the array edge.
double tensor_utilization(const GemmDims& dims, int systolic_dim);

/// Edge of the square operand tiles that fit three-at-a-time in per-core SRAM.
double tile_edge(double sram_bytes_per_core, int elem_bytes);

/// DRAM bytes moved by op on hardware hw.
///
/// Weights and cache always stream from DRAM; each activation tensor does so
/// only when it exceeds the global buffer. Matmuls whose weight-side operand
/// does not fit per-core SRAM pay at least the tiled re-read bound
/// eb * count * (M*N + 2*M*K*N / T).
double dram_bytes(const OperatorSpec& op, const HardwareDerived& hw, int elem_bytes);

struct OperatorTiming {
    std::string name;
    UnitClass unit_class = UnitClass::Vector;
    Resource binding = Resource::MemoryBw;
    double bound_time = 0.0;
    std::array<double, kResourceCount> resource_time{};
    double utilization = 1.0;  ///< tensor ops only
    double dram_bytes = 0.0;
    double ring_bytes = 0.0;
};

struct PhaseReport {
    Phase phase = Phase::Prefill;
    double time = 0.0;
    std::array<double, kResourceCount> stall_share{};
    Resource dominant = Resource::MemoryBw;
    std::vector<OperatorTiming> ops;

    double share(Resource r) const { return stall_share[index_of(r)]; }
};

struct BottleneckReport {
    PhaseReport prefill;
    PhaseReport decode;

    const PhaseReport& phase(Phase p) const { return p == Phase::Prefill ? prefill : decode; }
};

/// Roofline over a sequential chain: each op takes the max of its applicable
/// resource times and the phase time is their sum.
PhaseReport evaluate_phase(const HardwareDerived& hw, const PhaseGraph& graph, int ring_gpus);

double area(const DesignPoint& d, const CalibrationConstants& c);

struct PpaMetrics {
    double ttft_s = 0.0;
    double tpot_s = 0.0;
    double area_mm2 = 0.0;
    double ttft_n = 1.0;
    double tpot_n = 1.0;
    double area_n = 1.0;

    ObjectiveVector objectives() const { return {{ttft_n, tpot_n, area_n}}; }
};

struct Evaluation {
    DesignPoint design;
    PpaMetrics metrics;
    BottleneckReport report;
    HardwareDerived hw;

    ObjectiveVector objectives() const { return metrics.objectives(); }
};

/// Raw evaluation; normalized fields are left relative to `reference` when given.
Evaluation evaluate(const DesignPoint& d, const PhaseGraph& prefill, const PhaseGraph& decode,
                    const CalibrationConstants& c, const PpaMetrics* reference = nullptr);

/// Evaluates designs against a fixed workload, normalized to the space's reference design.
class Evaluator {
public:
    Evaluator(SpaceSpec space, WorkloadConfig workload, CalibrationConstants constants);
    /// Default space, GPT-3 workload, default calibration.
    static Evaluator standard();

    Evaluation evaluate(const DesignPoint& d) const;
    PhaseReport evaluate_graph(const DesignPoint& d, const PhaseGraph& graph) const;

    const SpaceSpec& space() const { return space_; }
    const WorkloadConfig& workload() const { return workload_; }
    const CalibrationConstants& constants() const { return constants_; }
    const PhaseGraph& prefill() const { return prefill_; }
    const PhaseGraph& decode() const { return decode_; }
    const PpaMetrics& reference_metrics() const { return reference_; }

    std::size_t evaluations() const { return count_.load(); }

    Evaluator(const Evaluator& other);
    Evaluator& operator=(const Evaluator&) = delete;

private:
    SpaceSpec space_;
    WorkloadConfig workload_;
    CalibrationConstants constants_;
    PhaseGraph prefill_;
    PhaseGraph decode_;
    PpaMetrics reference_;
    mutable std::atomic<std::size_t> count_{0};
};

/// Closed-form description of the performance and area model, as shown to
/// language models (the "simulator source" analogue).
std::string model_structure_text(const CalibrationConstants& c);
std::string area_model_text(const CalibrationConstants& c);

nlohmann::json to_json(const PhaseReport& r, bool with_ops = false);
nlohmann::json to_json(const BottleneckReport& r, bool with_ops = false);
nlohmann::json to_json(const PpaMetrics& m);

}  // namespace lumina
