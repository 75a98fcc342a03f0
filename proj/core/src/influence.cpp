// SPDX-License-Identifier: Apache-2.0
#include "lumina/influence.hpp"

#include <cmath>
#include <sstream>

#include "lumina/errors.hpp"

namespace lumina {

namespace {

constexpr std::array<std::string_view, kMetricCount> kMetricNames{
    "ttft", "tpot", "area", "peak_tensor", "peak_vector", "mem_bw", "net_bw"};

double capability_value(const HardwareDerived& hw, Metric m) {
    switch (m) {
        case Metric::PeakTensor: return hw.peak_tensor_flops;
        case Metric::PeakVector: return hw.peak_vector_flops;
        case Metric::MemBw: return hw.mem_bw;
        case Metric::NetBw: return hw.net_bw;
        default: return 0.0;
    }
}

bool is_latency(Metric m) { return m == Metric::Ttft || m == Metric::Tpot; }

}  // namespace

std::string_view metric_name(Metric m) { return kMetricNames[index_of(m)]; }

std::optional<Metric> metric_from_name(std::string_view name) {
    for (Metric m : kAllMetrics)
        if (metric_name(m) == name) return m;
    return std::nullopt;
}

double metric_value(const Evaluation& e, Metric m) {
    switch (m) {
        case Metric::Ttft: return e.metrics.ttft_s;
        case Metric::Tpot: return e.metrics.tpot_s;
        case Metric::Area: return e.metrics.area_mm2;
        default: return capability_value(e.hw, m);
    }
}

Metric capability_metric(Resource r) {
    switch (r) {
        case Resource::TensorCompute: return Metric::PeakTensor;
        case Resource::VectorCompute: return Metric::PeakVector;
        case Resource::MemoryBw: return Metric::MemBw;
        case Resource::Interconnect: return Metric::NetBw;
    }
    return Metric::MemBw;
}

Phase phase_of(Metric latency_metric) { return latency_metric == Metric::Tpot ? Phase::Decode : Phase::Prefill; }

std::string_view source_name(InfluenceSource s) {
    switch (s) {
        case InfluenceSource::Structural: return "structural";
        case InfluenceSource::Measured: return "measured";
        case InfluenceSource::Refined: return "refined";
    }
    return "structural";
}

std::vector<Param> InfluenceMap::relievers(Resource r) const {
    std::vector<Param> out;
    for (Param p : kAllParams)
        if (relieves(p, r)) out.push_back(p);
    return out;
}

void InfluenceMap::set_magnitude(Param p, Metric m, double magnitude, InfluenceSource source) {
    Influence& cell = at(p, m);
    if (cell.hard_zero) return;
    cell.magnitude = magnitude;
    cell.source = source;
    cell.measured = true;
}

nlohmann::json to_json(const InfluenceMap& ahk) {
    nlohmann::json j = nlohmann::json::object();
    for (Param p : kAllParams) {
        nlohmann::json row = nlohmann::json::object();
        for (Metric m : kAllMetrics) {
            const Influence& c = ahk.at(p, m);
            row[std::string(metric_name(m))] = {{"sign", c.sign},
                                                {"magnitude", c.magnitude},
                                                {"source", source_name(c.source)},
                                                {"hard_zero", c.hard_zero}};
        }
        nlohmann::json relief = nlohmann::json::array();
        for (Resource r : kAllResources)
            if (ahk.relieves(p, r)) relief.push_back(resource_name(r));
        row["relieves"] = relief;
        j[std::string(param_name(p))] = row;
    }
    return j;
}

std::string influence_csv(const InfluenceMap& ahk) {
    std::ostringstream os;
    os.precision(10);
    os << "parameter,metric,sign,magnitude,source,hard_zero\n";
    for (Param p : kAllParams)
        for (Metric m : kAllMetrics) {
            const Influence& c = ahk.at(p, m);
            os << param_name(p) << ',' << metric_name(m) << ',' << c.sign << ',' << c.magnitude << ','
               << source_name(c.source) << ',' << (c.hard_zero ? 1 : 0) << '\n';
        }
    return os.str();
}

ModelStructure perf_model_structure(const CalibrationConstants& c) {
    ModelStructure s;
    const auto add = [&](Metric m, std::initializer_list<Param> ps, int sign) {
        for (Param p : ps) s.dependencies.push_back({m, p, sign});
    };
    using P = Param;
    add(Metric::PeakTensor, {P::CoreCount, P::SublaneCount, P::SystolicDim}, +1);
    add(Metric::PeakVector, {P::CoreCount, P::SublaneCount, P::VectorWidth}, +1);
    add(Metric::MemBw, {P::MemChannels}, +1);
    add(Metric::NetBw, {P::LinkCount}, +1);
    for (Param p : kAllParams) {
        s.dependencies.push_back({Metric::Area, p, +1});
        s.dependencies.push_back({Metric::Ttft, p, -1});
        s.dependencies.push_back({Metric::Tpot, p, -1});
    }
    s.relief = {{P::CoreCount, Resource::TensorCompute},   {P::SublaneCount, Resource::TensorCompute},
                {P::SystolicDim, Resource::TensorCompute}, {P::CoreCount, Resource::VectorCompute},
                {P::SublaneCount, Resource::VectorCompute}, {P::VectorWidth, Resource::VectorCompute},
                {P::MemChannels, Resource::MemoryBw},      {P::SramKb, Resource::MemoryBw},
                {P::GlobalBufferMb, Resource::MemoryBw},   {P::LinkCount, Resource::Interconnect}};
    s.text = model_structure_text(c);
    return s;
}

InfluenceMap quale_build(const ModelStructure& structure) {
    InfluenceMap ahk;
    for (Param p : kAllParams)
        for (Metric m : kAllMetrics) {
            Influence& cell = ahk.at(p, m);
            cell = Influence{};
            cell.hard_zero = true;
        }
    for (const auto& dep : structure.dependencies) {
        Influence& cell = ahk.at(dep.param, dep.metric);
        cell.sign = dep.sign;
        cell.hard_zero = false;
    }
    for (const auto& [p, r] : structure.relief) ahk.set_relieves(p, r, true);
    return ahk;
}

InfluenceMap quale_from_llm_reply(std::string_view reply, const ModelStructure& structure) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
        throw LlmMapInvalid("influence map reply holds no JSON object");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(reply.substr(open, close - open + 1));
    } catch (const nlohmann::json::exception& e) {
        throw LlmMapInvalid(std::string("influence map reply is not valid JSON: ") + e.what());
    }
    if (!j.contains("entries") || !j["entries"].is_array()) throw LlmMapInvalid("influence map lacks an entries list");

    InfluenceMap ahk = quale_build(structure);
    for (Param p : kAllParams)
        for (Metric m : kAllMetrics) ahk.at(p, m).sign = 0;
    for (const auto& e : j["entries"]) {
        if (!e.is_object() || !e.contains("parameter") || !e.contains("metric") || !e.contains("sign"))
            throw LlmMapInvalid("influence map entry lacks parameter, metric or sign");
        const auto p = param_from_name(e["parameter"].get<std::string>());
        const auto m = metric_from_name(e["metric"].get<std::string>());
        if (!p || !m) throw LlmMapInvalid("influence map names an unknown parameter or metric");
        int sign = 0;
        if (e["sign"].is_number_integer()) {
            sign = e["sign"].get<int>();
        } else if (e["sign"].is_string()) {
            const auto s = e["sign"].get<std::string>();
            sign = s == "+" ? 1 : s == "-" ? -1 : 0;
        }
        if (sign < -1 || sign > 1) throw LlmMapInvalid("influence sign out of range");
        Influence& cell = ahk.at(*p, *m);
        if (cell.hard_zero && sign != 0)
            throw LlmMapInvalid(std::string(param_name(*p)) + " has no structural path to " +
                                std::string(metric_name(*m)));
        cell.sign = sign;
    }
    return ahk;
}

SensitivityTable quane_sensitivity(InfluenceMap& ahk, const SpaceSpec& space, const Evaluation& reference,
                                   const ProbeFn& probe, const CalibrationConstants& c, bool area_only) {
    SensitivityTable table;
    table.reference = reference.design;
    table.reference_eval = reference;
    table.area_only = area_only;

    for (Param p : kAllParams) {
        bool any = false;
        for (Metric m : kAllMetrics) any = any || ahk.at(p, m).sign != 0;
        if (!any) continue;

        std::optional<Evaluation> lo;
        std::optional<Evaluation> hi;
        for (int dir : {-1, +1}) {
            if (!space.can_step(reference.design, p, dir)) continue;
            const DesignPoint d = space.step_neighbor(reference.design, p, dir);
            std::optional<Evaluation> e;
            if (area_only) {
                Evaluation partial;
                partial.design = d;
                partial.hw = derive_hw(d, c);
                partial.metrics = reference.metrics;
                partial.metrics.area_mm2 = area(d, c);
                partial.metrics.area_n = partial.metrics.area_mm2 / (reference.metrics.area_mm2 / reference.metrics.area_n);
                e = partial;
            } else {
                e = probe(d);
                if (!e) break;
            }
            table.probes.push_back({p, dir, d, *e});
            (dir < 0 ? lo : hi) = std::move(e);
        }

        const Evaluation& left = lo ? *lo : reference;
        const Evaluation& right = hi ? *hi : reference;
        const int span = (lo ? 1 : 0) + (hi ? 1 : 0);
        if (span == 0) continue;
        for (Metric m : kAllMetrics) {
            if (ahk.at(p, m).hard_zero || ahk.at(p, m).sign == 0) continue;
            if (area_only && is_latency(m)) continue;
            const double per_step = (metric_value(right, m) - metric_value(left, m)) / span;
            ahk.set_magnitude(p, m, per_step, InfluenceSource::Measured);
        }
    }
    return table;
}

nlohmann::json to_json(const SensitivityTable& t) {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& pr : t.probes) {
        nlohmann::json metrics = nlohmann::json::object();
        for (Metric m : kAllMetrics) metrics[std::string(metric_name(m))] = metric_value(pr.eval, m);
        probes.push_back({{"parameter", param_name(pr.param)},
                          {"direction", pr.direction},
                          {"design", to_json(pr.design)},
                          {"metrics", metrics}});
    }
    nlohmann::json ref = nlohmann::json::object();
    for (Metric m : kAllMetrics) ref[std::string(metric_name(m))] = metric_value(t.reference_eval, m);
    return {{"reference", to_json(t.reference)}, {"reference_metrics", ref}, {"area_only", t.area_only},
            {"probes", probes}};
}

}  // namespace lumina
