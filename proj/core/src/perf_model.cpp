// SPDX-License-Identifier: Apache-2.0
#include "lumina/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lumina/errors.hpp"

namespace lumina {

namespace {

constexpr std::array<std::string_view, kResourceCount> kResourceNames{
    "tensor_compute", "vector_compute", "memory_bw", "interconnect"};

}  // namespace

std::string_view resource_name(Resource r) { return kResourceNames[index_of(r)]; }

std::optional<Resource> resource_from_name(std::string_view name) {
    for (Resource r : kAllResources) {
        if (kResourceNames[index_of(r)] == name) return r;
    }
    return std::nullopt;
}

CalibrationConstants CalibrationConstants::calibrated(const DesignPoint& ref, const AreaShares& s) {
    const double in_core = s.core_base + s.core_pe + s.core_lanes + s.core_sram;
    const double blocks = s.cores + s.global_buffer + s.memory_phy + s.link_phy;
    if (std::abs(in_core - 1.0) > 1e-9 || std::abs(blocks - 1.0) > 1e-9)
        throw ConfigError("area shares must each sum to 1");

    const double core_area = s.die_mm2 * s.cores / ref.core_count();
    const double sd = ref.systolic_dim();
    CalibrationConstants c;
    c.a_core_base = core_area * s.core_base;
    c.a_pe = core_area * s.core_pe / (ref.sublane_count() * sd * sd);
    c.a_lane = core_area * s.core_lanes / (ref.sublane_count() * ref.vector_width());
    c.a_sram = core_area * s.core_sram / ref.sram_kb();
    c.a_gb = s.die_mm2 * s.global_buffer / ref.global_buffer_mb();
    c.a_mem = s.die_mm2 * s.memory_phy / ref.mem_channels();
    c.a_link = s.die_mm2 * s.link_phy / ref.link_count();
    return c;
}

CalibrationConstants CalibrationConstants::defaults() { return calibrated(SpaceSpec::a100_reference()); }

nlohmann::json to_json(const CalibrationConstants& c) {
    return {
        {"clock_hz", c.clock_hz},       {"bw_per_channel", c.bw_per_channel}, {"bw_per_link", c.bw_per_link},
        {"ring_gpus", c.ring_gpus},     {"a_core_base", c.a_core_base},       {"a_pe", c.a_pe},
        {"a_lane", c.a_lane},           {"a_sram", c.a_sram},                 {"a_gb", c.a_gb},
        {"a_mem", c.a_mem},             {"a_link", c.a_link},
    };
}

CalibrationConstants constants_from_json(const nlohmann::json& j, const DesignPoint& reference) {
    AreaShares shares;
    if (auto it = j.find("area_shares"); it != j.end()) {
        shares.die_mm2 = it->value("die_mm2", shares.die_mm2);
        shares.cores = it->value("cores", shares.cores);
        shares.global_buffer = it->value("global_buffer", shares.global_buffer);
        shares.memory_phy = it->value("memory_phy", shares.memory_phy);
        shares.link_phy = it->value("link_phy", shares.link_phy);
        shares.core_base = it->value("core_base", shares.core_base);
        shares.core_pe = it->value("core_pe", shares.core_pe);
        shares.core_lanes = it->value("core_lanes", shares.core_lanes);
        shares.core_sram = it->value("core_sram", shares.core_sram);
    }
    CalibrationConstants c = CalibrationConstants::calibrated(reference, shares);
    c.clock_hz = j.value("clock_hz", c.clock_hz);
    c.bw_per_channel = j.value("bw_per_channel", c.bw_per_channel);
    c.bw_per_link = j.value("bw_per_link", c.bw_per_link);
    c.ring_gpus = j.value("ring_gpus", c.ring_gpus);
    c.a_core_base = j.value("a_core_base", c.a_core_base);
    c.a_pe = j.value("a_pe", c.a_pe);
    c.a_lane = j.value("a_lane", c.a_lane);
    c.a_sram = j.value("a_sram", c.a_sram);
    c.a_gb = j.value("a_gb", c.a_gb);
    c.a_mem = j.value("a_mem", c.a_mem);
    c.a_link = j.value("a_link", c.a_link);
    if (c.clock_hz <= 0 || c.bw_per_channel <= 0 || c.bw_per_link <= 0 || c.ring_gpus < 1)
        throw ConfigError("calibration rates must be positive");
    return c;
}

HardwareDerived derive_hw(const DesignPoint& d, const CalibrationConstants& c) {
    HardwareDerived hw;
    const double lanes = static_cast<double>(d.core_count()) * d.sublane_count();
    const double sd = d.systolic_dim();
    hw.clock_hz = c.clock_hz;
    hw.peak_tensor_flops = lanes * sd * sd * 2.0 * c.clock_hz;
    hw.peak_vector_flops = lanes * d.vector_width() * 2.0 * c.clock_hz;
    hw.mem_bw = d.mem_channels() * c.bw_per_channel;
    hw.net_bw = d.link_count() * c.bw_per_link;
    hw.sram_bytes_per_core = d.sram_kb() * 1024.0;
    hw.gb_bytes = d.global_buffer_mb() * 1024.0 * 1024.0;
    hw.systolic_dim = d.systolic_dim();
    return hw;
}

double tensor_utilization(const GemmDims& dims, int systolic_dim) {
    const auto pad = [&](std::int64_t x) {
        const std::int64_t tiles = (x + systolic_dim - 1) / systolic_dim;
        return static_cast<double>(x) / static_cast<double>(tiles * systolic_dim);
    };
    return pad(dims.m) * pad(dims.n);
}

double tile_edge(double sram_bytes_per_core, int elem_bytes) {
    return std::floor(std::sqrt(sram_bytes_per_core / elem_bytes / 3.0));
}

double dram_bytes(const OperatorSpec& op, const HardwareDerived& hw, int elem_bytes) {
    if (op.unit_class == UnitClass::Comm) return 0.0;
    double bytes = op.weight_bytes + op.cache_bytes;
    if (op.act_in_bytes > hw.gb_bytes) bytes += op.act_in_bytes;
    if (op.act_out_bytes > hw.gb_bytes) bytes += op.act_out_bytes;
    if (op.unit_class == UnitClass::Tensor && op.gemm) {
        const auto& g = *op.gemm;
        const double m = static_cast<double>(g.m);
        const double k = static_cast<double>(g.k);
        const double n = static_cast<double>(g.n);
        if (k * n * elem_bytes > hw.sram_bytes_per_core) {
            const double t = std::max(1.0, tile_edge(hw.sram_bytes_per_core, elem_bytes));
            const double tiled = elem_bytes * static_cast<double>(g.count) * (m * n + 2.0 * m * k * n / t);
            bytes = std::max(bytes, tiled);
        }
    }
    return bytes;
}

PhaseReport evaluate_phase(const HardwareDerived& hw, const PhaseGraph& graph, int ring_gpus) {
    PhaseReport report;
    report.phase = graph.phase;
    report.ops.reserve(graph.operators.size());
    const double ring_factor = 2.0 * (ring_gpus - 1) / ring_gpus;

    for (const auto& op : graph.operators) {
        OperatorTiming t;
        t.name = op.name;
        t.unit_class = op.unit_class;
        auto& rt = t.resource_time;
        switch (op.unit_class) {
            case UnitClass::Tensor: {
                t.utilization = op.gemm ? tensor_utilization(*op.gemm, hw.systolic_dim) : 1.0;
                rt[index_of(Resource::TensorCompute)] = op.flops / (hw.peak_tensor_flops * t.utilization);
                t.dram_bytes = dram_bytes(op, hw, graph.elem_bytes);
                rt[index_of(Resource::MemoryBw)] = t.dram_bytes / hw.mem_bw;
                break;
            }
            case UnitClass::Vector:
                rt[index_of(Resource::VectorCompute)] = op.flops / hw.peak_vector_flops;
                t.dram_bytes = dram_bytes(op, hw, graph.elem_bytes);
                rt[index_of(Resource::MemoryBw)] = t.dram_bytes / hw.mem_bw;
                break;
            case UnitClass::Comm:
                t.ring_bytes = ring_factor * op.comm_bytes;
                rt[index_of(Resource::Interconnect)] = t.ring_bytes / hw.net_bw;
                break;
        }
        t.binding = Resource::TensorCompute;
        for (Resource r : kAllResources) {
            if (rt[index_of(r)] > rt[index_of(t.binding)]) t.binding = r;
        }
        t.bound_time = rt[index_of(t.binding)];
        report.time += t.bound_time;
        report.stall_share[index_of(t.binding)] += t.bound_time;
        report.ops.push_back(std::move(t));
    }
    if (report.time > 0.0) {
        for (auto& s : report.stall_share) s /= report.time;
    }
    report.dominant = Resource::TensorCompute;
    for (Resource r : kAllResources) {
        if (report.share(r) > report.share(report.dominant)) report.dominant = r;
    }
    return report;
}

double area(const DesignPoint& d, const CalibrationConstants& c) {
    const double sd = d.systolic_dim();
    const double per_core = c.a_core_base + d.sublane_count() * (c.a_pe * sd * sd + c.a_lane * d.vector_width()) +
                            c.a_sram * d.sram_kb();
    return d.core_count() * per_core + c.a_gb * d.global_buffer_mb() + c.a_mem * d.mem_channels() +
           c.a_link * d.link_count();
}

Evaluation evaluate(const DesignPoint& d, const PhaseGraph& prefill, const PhaseGraph& decode,
                    const CalibrationConstants& c, const PpaMetrics* reference) {
    Evaluation e;
    e.design = d;
    e.hw = derive_hw(d, c);
    e.report.prefill = evaluate_phase(e.hw, prefill, c.ring_gpus);
    e.report.decode = evaluate_phase(e.hw, decode, c.ring_gpus);
    e.metrics.ttft_s = e.report.prefill.time;
    e.metrics.tpot_s = e.report.decode.time;
    e.metrics.area_mm2 = area(d, c);
    if (reference) {
        e.metrics.ttft_n = e.metrics.ttft_s / reference->ttft_s;
        e.metrics.tpot_n = e.metrics.tpot_s / reference->tpot_s;
        e.metrics.area_n = e.metrics.area_mm2 / reference->area_mm2;
    }
    return e;
}

Evaluator::Evaluator(SpaceSpec space, WorkloadConfig workload, CalibrationConstants constants)
    : space_(std::move(space)),
      workload_(workload),
      constants_(constants),
      prefill_(build_prefill(workload.model, workload.batch, workload.seq_len)),
      decode_(build_decode(workload.model, workload.batch, workload.decode_kv_len)) {
    constants_.ring_gpus = workload.gpus;
    reference_ = lumina::evaluate(space_.reference(), prefill_, decode_, constants_).metrics;
}

Evaluator::Evaluator(const Evaluator& other)
    : space_(other.space_),
      workload_(other.workload_),
      constants_(other.constants_),
      prefill_(other.prefill_),
      decode_(other.decode_),
      reference_(other.reference_) {}

Evaluator Evaluator::standard() {
    return Evaluator(SpaceSpec::standard(), WorkloadConfig{}, CalibrationConstants::defaults());
}

Evaluation Evaluator::evaluate(const DesignPoint& d) const {
    count_.fetch_add(1, std::memory_order_relaxed);
    return lumina::evaluate(d, prefill_, decode_, constants_, &reference_);
}

PhaseReport Evaluator::evaluate_graph(const DesignPoint& d, const PhaseGraph& graph) const {
    return evaluate_phase(derive_hw(d, constants_), graph, constants_.ring_gpus);
}

std::string area_model_text(const CalibrationConstants& c) {
    std::ostringstream os;
    os.precision(6);
    os << "area_mm2 = core_count * (a_core_base + sublane_count * (a_pe * systolic_dim^2 + a_lane * vector_width)"
          " + a_sram * sram_kb) + a_gb * global_buffer_mb + a_mem * mem_channels + a_link * link_count\n"
       << "a_core_base = " << c.a_core_base << ", a_pe = " << c.a_pe << ", a_lane = " << c.a_lane
       << ", a_sram = " << c.a_sram << ", a_gb = " << c.a_gb << ", a_mem = " << c.a_mem
       << ", a_link = " << c.a_link << "\n";
    return os.str();
}

std::string model_structure_text(const CalibrationConstants& c) {
    std::ostringstream os;
    os.precision(6);
    os << "peak_tensor_flops = core_count * sublane_count * systolic_dim^2 * 2 * clock_hz\n"
       << "peak_vector_flops = core_count * sublane_count * vector_width * 2 * clock_hz\n"
       << "mem_bw = mem_channels * " << c.bw_per_channel << " B/s\n"
       << "net_bw = link_count * " << c.bw_per_link << " B/s\n"
       << "clock_hz = " << c.clock_hz << "\n"
       << "tensor op time = max(flops / (peak_tensor_flops * utilization), dram_bytes / mem_bw)\n"
       << "utilization = (M / (ceil(M/systolic_dim)*systolic_dim)) * (N / (ceil(N/systolic_dim)*systolic_dim))\n"
       << "vector op time = max(flops / peak_vector_flops, dram_bytes / mem_bw)\n"
       << "allreduce time = 2*(G-1)/G * payload / net_bw\n"
       << "dram_bytes: weights and KV cache always; activations only if larger than global_buffer_mb;\n"
       << "  matmuls whose K*N operand exceeds sram_kb pay the tiled bound with tile edge sqrt(sram/elem/3)\n"
       << "TTFT = sum of prefill op times; TPOT = sum of decode op times\n"
       << area_model_text(c);
    return os.str();
}

nlohmann::json to_json(const PhaseReport& r, bool with_ops) {
    nlohmann::json shares = nlohmann::json::object();
    for (Resource res : kAllResources) shares[std::string(resource_name(res))] = r.share(res);
    nlohmann::json j{{"time_s", r.time}, {"stall_share", shares}, {"dominant", resource_name(r.dominant)}};
    if (with_ops) {
        nlohmann::json ops = nlohmann::json::array();
        for (const auto& op : r.ops) {
            ops.push_back({{"name", op.name},
                           {"binding", resource_name(op.binding)},
                           {"bound_time_s", op.bound_time},
                           {"utilization", op.utilization},
                           {"dram_bytes", op.dram_bytes}});
        }
        j["operators"] = ops;
    }
    return j;
}

nlohmann::json to_json(const BottleneckReport& r, bool with_ops) {
    return {{"prefill", to_json(r.prefill, with_ops)}, {"decode", to_json(r.decode, with_ops)}};
}

nlohmann::json to_json(const PpaMetrics& m) {
    return {{"ttft_s", m.ttft_s}, {"tpot_s", m.tpot_s}, {"area_mm2", m.area_mm2},
            {"ttft_n", m.ttft_n}, {"tpot_n", m.tpot_n}, {"area_n", m.area_n}};
}

}  // namespace lumina
