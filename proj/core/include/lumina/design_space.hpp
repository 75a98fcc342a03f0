// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumina/rng.hpp"

namespace lumina {

/// The eight knobs of one GPU in the 8-GPU node. Order is the serialization
/// order of design tuples: (links, cores, sublanes, systolic, vector, sram, gb, channels).
enum class Param : std::uint8_t {
    LinkCount,
    CoreCount,
    SublaneCount,
    SystolicDim,
    VectorWidth,
    SramKb,
    GlobalBufferMb,
    MemChannels,
};

inline constexpr std::size_t kParamCount = 8;

inline constexpr std::array<Param, kParamCount> kAllParams{
    Param::LinkCount,   Param::CoreCount, Param::SublaneCount,   Param::SystolicDim,
    Param::VectorWidth, Param::SramKb,    Param::GlobalBufferMb, Param::MemChannels,
};

constexpr std::size_t index_of(Param p) { return static_cast<std::size_t>(p); }

std::string_view param_name(Param p);
std::optional<Param> param_from_name(std::string_view name);

/// One architecture configuration. The systolic array is square, so a single
/// edge length describes it.
struct DesignPoint {
    std::array<int, kParamCount> values{};

    int operator[](Param p) const { return values[index_of(p)]; }
    int& operator[](Param p) { return values[index_of(p)]; }

    int link_count() const { return (*this)[Param::LinkCount]; }
    int core_count() const { return (*this)[Param::CoreCount]; }
    int sublane_count() const { return (*this)[Param::SublaneCount]; }
    int systolic_dim() const { return (*this)[Param::SystolicDim]; }
    int vector_width() const { return (*this)[Param::VectorWidth]; }
    int sram_kb() const { return (*this)[Param::SramKb]; }
    int global_buffer_mb() const { return (*this)[Param::GlobalBufferMb]; }
    int mem_channels() const { return (*this)[Param::MemChannels]; }

    auto operator<=>(const DesignPoint&) const = default;

    /// "(12, 108, 4, 16, 32, 128, 40, 5)"
    std::string to_string() const;

    static DesignPoint from_tuple(const std::array<int, kParamCount>& v) { return DesignPoint{v}; }
};

/// Parameters whose values differ between a and b.
std::vector<Param> changed_params(const DesignPoint& a, const DesignPoint& b);

struct ParameterSpec {
    Param param{};
    std::vector<int> allowed_values;  ///< strictly increasing, non-empty
};

struct Violation {
    Param param{};
    int value = 0;
};

/// The discrete design lattice plus the reference (A100 analogue) design.
///
/// Reference values that are absent from a parameter's list (A100's 40 MB
/// global buffer) pass validation but are never enumerated or proposed.
class SpaceSpec {
public:
    SpaceSpec(std::array<ParameterSpec, kParamCount> parameters, DesignPoint reference);

    /// Default space of an 8-GPU node around the A100 reference.
    static SpaceSpec standard();
    static DesignPoint a100_reference();

    const ParameterSpec& parameter(Param p) const { return parameters_[index_of(p)]; }
    const std::vector<int>& values(Param p) const { return parameter(p).allowed_values; }
    const DesignPoint& reference() const { return reference_; }

    /// Number of lattice points; reference-extension values are excluded.
    std::uint64_t cardinality() const;

    std::vector<Violation> validate(const DesignPoint& d) const;
    bool is_valid(const DesignPoint& d) const { return validate(d).empty(); }

    /// Position of value in the allowed list, if it is a lattice value.
    std::optional<std::size_t> position(Param p, int value) const;
    /// Position along the value list; an off-lattice value sits halfway
    /// between its neighbours.
    double lattice_position(Param p, int value) const;

    /// Moves p by delta_steps positions along its ordered value list. An
    /// off-lattice reference value sits between its lattice neighbours.
    /// Throws OutOfRange when the move leaves the list.
    DesignPoint step_neighbor(const DesignPoint& d, Param p, int delta_steps) const;
    bool can_step(const DesignPoint& d, Param p, int delta_steps) const;

    DesignPoint random_design(Rng& rng) const;
    DesignPoint random_design(std::uint64_t seed) const;

    /// Mixed-radix enumeration; index 0 is the all-minimum design and the last
    /// parameter (memory channels) varies fastest.
    DesignPoint decode(std::uint64_t index) const;
    std::uint64_t encode(const DesignPoint& d) const;

    /// Lattice indices of d scaled to [0, 1] per parameter (for surrogates).
    std::array<double, kParamCount> scaled(const DesignPoint& d) const;

private:
    std::array<ParameterSpec, kParamCount> parameters_;
    DesignPoint reference_;
};

nlohmann::json to_json(const DesignPoint& d);
DesignPoint design_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SpaceSpec& spec);
/// Schema: {"parameters": {name: [values...]}, "reference_design": {name: value}}.
/// Missing parameters fall back to the default space.
SpaceSpec space_from_json(const nlohmann::json& j);

}  // namespace lumina
