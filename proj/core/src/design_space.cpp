// SPDX-License-Identifier: Apache-2.0
#include "lumina/design_space.hpp"

#include <algorithm>
#include <sstream>

#include "lumina/errors.hpp"

namespace lumina {

namespace {

constexpr std::array<std::string_view, kParamCount> kNames{
    "link_count", "core_count", "sublane_count", "systolic_dim",
    "vector_width", "sram_kb", "global_buffer_mb", "mem_channels",
};

// Count of lattice values strictly below v.
std::size_t lower_count(const std::vector<int>& values, int v) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), v) - values.begin());
}

}  // namespace

std::string_view param_name(Param p) { return kNames[index_of(p)]; }

std::optional<Param> param_from_name(std::string_view name) {
    for (Param p : kAllParams) {
        if (kNames[index_of(p)] == name) return p;
    }
    return std::nullopt;
}

std::string DesignPoint::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < kParamCount; ++i) {
        if (i) os << ", ";
        os << values[i];
    }
    os << ')';
    return os.str();
}

std::vector<Param> changed_params(const DesignPoint& a, const DesignPoint& b) {
    std::vector<Param> out;
    for (Param p : kAllParams) {
        if (a[p] != b[p]) out.push_back(p);
    }
    return out;
}

SpaceSpec::SpaceSpec(std::array<ParameterSpec, kParamCount> parameters, DesignPoint reference)
    : parameters_(std::move(parameters)), reference_(reference) {
    for (Param p : kAllParams) {
        auto& spec = parameters_[index_of(p)];
        if (spec.param != p) throw ConfigError("parameter slot order mismatch for " + std::string(param_name(p)));
        if (spec.allowed_values.empty())
            throw ConfigError("parameter " + std::string(param_name(p)) + " has no allowed values");
        for (std::size_t i = 1; i < spec.allowed_values.size(); ++i) {
            if (spec.allowed_values[i] <= spec.allowed_values[i - 1])
                throw ConfigError("allowed values of " + std::string(param_name(p)) + " must be strictly increasing");
        }
        if (reference_[p] <= 0)
            throw ConfigError("reference value of " + std::string(param_name(p)) + " must be positive");
    }
}

SpaceSpec SpaceSpec::standard() {
    std::array<ParameterSpec, kParamCount> params{{
        {Param::LinkCount, {6, 12, 18, 24}},
        {Param::CoreCount, {1, 2, 4, 8, 16, 32, 64, 96, 108, 128, 132, 136, 140, 256}},
        {Param::SublaneCount, {1, 2, 4, 8}},
        {Param::SystolicDim, {4, 8, 16, 32, 64, 128}},
        {Param::VectorWidth, {4, 8, 16, 32, 64, 128}},
        {Param::SramKb, {32, 64, 128, 192, 256, 512, 1024}},
        {Param::GlobalBufferMb, {32, 64, 128, 256, 320, 512, 1024}},
        {Param::MemChannels, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}},
    }};
    return SpaceSpec(std::move(params), a100_reference());
}

DesignPoint SpaceSpec::a100_reference() { return DesignPoint{{12, 108, 4, 16, 32, 128, 40, 5}}; }

std::uint64_t SpaceSpec::cardinality() const {
    std::uint64_t n = 1;
    for (const auto& p : parameters_) n *= p.allowed_values.size();
    return n;
}

std::vector<Violation> SpaceSpec::validate(const DesignPoint& d) const {
    std::vector<Violation> out;
    for (Param p : kAllParams) {
        if (!position(p, d[p]) && d[p] != reference_[p]) out.push_back({p, d[p]});
    }
    return out;
}

std::optional<std::size_t> SpaceSpec::position(Param p, int value) const {
    const auto& v = values(p);
    auto it = std::lower_bound(v.begin(), v.end(), value);
    if (it == v.end() || *it != value) return std::nullopt;
    return static_cast<std::size_t>(it - v.begin());
}

double SpaceSpec::lattice_position(Param p, int value) const {
    if (auto exact = position(p, value)) return static_cast<double>(*exact);
    return static_cast<double>(lower_count(values(p), value)) - 0.5;
}

namespace {

// Target list position of a move, or -1/size when it leaves the list.
long target_position(const std::vector<int>& values, int current, std::optional<std::size_t> pos, int delta) {
    if (pos) return static_cast<long>(*pos) + delta;
    // Off-lattice: +1 is the first value above, -1 the last value below.
    const long below = static_cast<long>(lower_count(values, current));
    return delta > 0 ? below + delta - 1 : below + delta;
}

}  // namespace

bool SpaceSpec::can_step(const DesignPoint& d, Param p, int delta_steps) const {
    if (delta_steps == 0) return true;
    const auto& v = values(p);
    const long t = target_position(v, d[p], position(p, d[p]), delta_steps);
    return t >= 0 && t < static_cast<long>(v.size());
}

DesignPoint SpaceSpec::step_neighbor(const DesignPoint& d, Param p, int delta_steps) const {
    if (delta_steps == 0) return d;
    const auto& v = values(p);
    const long t = target_position(v, d[p], position(p, d[p]), delta_steps);
    if (t < 0 || t >= static_cast<long>(v.size())) {
        throw OutOfRange(std::string(param_name(p)) + "=" + std::to_string(d[p]) + " cannot move " +
                         std::to_string(delta_steps) + " step(s)");
    }
    DesignPoint out = d;
    out[p] = v[static_cast<std::size_t>(t)];
    return out;
}

DesignPoint SpaceSpec::random_design(Rng& rng) const {
    DesignPoint d;
    for (Param p : kAllParams) {
        const auto& v = values(p);
        d[p] = v[rng.index(v.size())];
    }
    return d;
}

DesignPoint SpaceSpec::random_design(std::uint64_t seed) const {
    Rng rng(seed);
    return random_design(rng);
}

DesignPoint SpaceSpec::decode(std::uint64_t index) const {
    if (index >= cardinality()) throw OutOfRange("lattice index " + std::to_string(index) + " is out of range");
    DesignPoint d;
    for (std::size_t i = kParamCount; i-- > 0;) {
        const auto& v = parameters_[i].allowed_values;
        d.values[i] = v[index % v.size()];
        index /= v.size();
    }
    return d;
}

std::uint64_t SpaceSpec::encode(const DesignPoint& d) const {
    std::uint64_t index = 0;
    for (Param p : kAllParams) {
        auto pos = position(p, d[p]);
        if (!pos) throw OutOfRange(std::string(param_name(p)) + " value is not on the lattice");
        index = index * values(p).size() + *pos;
    }
    return index;
}

std::array<double, kParamCount> SpaceSpec::scaled(const DesignPoint& d) const {
    std::array<double, kParamCount> out{};
    for (Param p : kAllParams) {
        const auto& v = values(p);
        const double pos = lattice_position(p, d[p]);
        out[index_of(p)] = v.size() > 1 ? std::clamp(pos / static_cast<double>(v.size() - 1), 0.0, 1.0) : 0.0;
    }
    return out;
}

nlohmann::json to_json(const DesignPoint& d) {
    nlohmann::json j = nlohmann::json::object();
    for (Param p : kAllParams) j[std::string(param_name(p))] = d[p];
    return j;
}

DesignPoint design_from_json(const nlohmann::json& j) {
    if (j.is_array()) {
        if (j.size() != kParamCount) throw ConfigError("design tuple must have 8 entries");
        DesignPoint d;
        for (std::size_t i = 0; i < kParamCount; ++i) d.values[i] = j[i].get<int>();
        return d;
    }
    if (!j.is_object()) throw ConfigError("design must be an object or an 8-tuple");
    DesignPoint d;
    for (Param p : kAllParams) {
        auto it = j.find(std::string(param_name(p)));
        if (it == j.end()) throw ConfigError("design is missing " + std::string(param_name(p)));
        d[p] = it->get<int>();
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!param_from_name(it.key())) throw ConfigError("unknown design parameter " + it.key());
    }
    return d;
}

nlohmann::json to_json(const SpaceSpec& spec) {
    nlohmann::json params = nlohmann::json::object();
    for (Param p : kAllParams) params[std::string(param_name(p))] = spec.values(p);
    return {{"parameters", params}, {"reference_design", to_json(spec.reference())}};
}

SpaceSpec space_from_json(const nlohmann::json& j) {
    const SpaceSpec defaults = SpaceSpec::standard();
    std::array<ParameterSpec, kParamCount> params;
    for (Param p : kAllParams) params[index_of(p)] = defaults.parameter(p);
    if (auto it = j.find("parameters"); it != j.end()) {
        for (auto kv = it->begin(); kv != it->end(); ++kv) {
            auto p = param_from_name(kv.key());
            if (!p) throw ConfigError("unknown parameter " + kv.key());
            params[index_of(*p)].allowed_values = kv->get<std::vector<int>>();
        }
    }
    DesignPoint ref = defaults.reference();
    if (auto it = j.find("reference_design"); it != j.end()) ref = design_from_json(*it);
    return SpaceSpec(std::move(params), ref);
}

}  // namespace lumina
