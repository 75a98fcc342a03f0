// SPDX-License-Identifier: Apache-2.0
#include <map>

#include <gtest/gtest.h>

#include "lumina/design_space.hpp"
#include "lumina/errors.hpp"
#include "lumina/rng.hpp"

using namespace lumina;

namespace {

SpaceSpec restricted(Param only, std::vector<int> values) {
    SpaceSpec base = SpaceSpec::standard();
    std::array<ParameterSpec, kParamCount> params;
    for (Param p : kAllParams) params[index_of(p)] = {p, base.values(p)};
    params[index_of(only)].allowed_values = std::move(values);
    return SpaceSpec(params, base.reference());
}

SpaceSpec singleton() {
    std::array<ParameterSpec, kParamCount> params;
    const DesignPoint ref = DesignPoint::from_tuple({12, 108, 4, 16, 32, 128, 64, 5});
    for (Param p : kAllParams) params[index_of(p)] = {p, {ref[p]}};
    return SpaceSpec(params, ref);
}

}  // namespace

TEST(DesignSpace, CardinalityIsProductOfRowCounts) {
    EXPECT_EQ(SpaceSpec::standard().cardinality(), 4ull * 14 * 4 * 6 * 6 * 7 * 7 * 12);
    EXPECT_EQ(SpaceSpec::standard().cardinality(), 4741632ull);
    EXPECT_EQ(singleton().cardinality(), 1ull);
    EXPECT_EQ(restricted(Param::MemChannels, {1, 2, 3, 4, 5, 6}).cardinality(), 2370816ull);
}

TEST(DesignSpace, ReferencePassesValidation) {
    const SpaceSpec s = SpaceSpec::standard();
    EXPECT_EQ(s.reference(), DesignPoint::from_tuple({12, 108, 4, 16, 32, 128, 40, 5}));
    EXPECT_TRUE(s.is_valid(s.reference()));
}

TEST(DesignSpace, ViolationsNameTheParameter) {
    const SpaceSpec s = SpaceSpec::standard();
    auto v = s.validate(DesignPoint::from_tuple({12, 108, 4, 16, 32, 128, 40, 0}));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].param, Param::MemChannels);
    v = s.validate(DesignPoint::from_tuple({13, 108, 4, 16, 32, 128, 40, 5}));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].param, Param::LinkCount);
    // 40 MB is accepted only as the reference value.
    EXPECT_FALSE(s.is_valid(DesignPoint::from_tuple({12, 96, 4, 16, 32, 128, 41, 5})));
}

TEST(DesignSpace, StepNeighbor) {
    const SpaceSpec s = SpaceSpec::standard();
    const DesignPoint ref = s.reference();
    EXPECT_EQ(s.step_neighbor(ref, Param::CoreCount, 1).core_count(), 128);
    EXPECT_EQ(s.step_neighbor(ref, Param::CoreCount, 0), ref);
    DesignPoint top = ref;
    top[Param::LinkCount] = 24;
    EXPECT_THROW(s.step_neighbor(top, Param::LinkCount, 1), OutOfRange);
    EXPECT_FALSE(s.can_step(top, Param::LinkCount, 1));
    // Off-lattice 40 MB sits between 32 and 64.
    EXPECT_EQ(s.step_neighbor(ref, Param::GlobalBufferMb, 1).global_buffer_mb(), 64);
    EXPECT_EQ(s.step_neighbor(ref, Param::GlobalBufferMb, -1).global_buffer_mb(), 32);
    EXPECT_DOUBLE_EQ(s.lattice_position(Param::GlobalBufferMb, 40), 0.5);
    EXPECT_DOUBLE_EQ(s.lattice_position(Param::CoreCount, 108), 8.0);
}

TEST(DesignSpace, StepRoundTripProperty) {
    const SpaceSpec s = SpaceSpec::standard();
    Rng rng(17);
    for (int i = 0; i < 2000; ++i) {
        const DesignPoint d = s.random_design(rng);
        const Param p = kAllParams[rng.index(kParamCount)];
        if (!s.can_step(d, p, 1)) continue;
        const DesignPoint up = s.step_neighbor(d, p, 1);
        EXPECT_TRUE(s.is_valid(up));
        EXPECT_EQ(s.step_neighbor(up, p, -1), d);
        EXPECT_EQ(changed_params(d, up), std::vector<Param>{p});
    }
}

TEST(DesignSpace, EncodeDecodeRoundTrip) {
    const SpaceSpec s = SpaceSpec::standard();
    const DesignPoint first = s.decode(0);
    for (Param p : kAllParams) EXPECT_EQ(first[p], s.values(p).front());
    EXPECT_EQ(s.decode(1).mem_channels(), s.values(Param::MemChannels)[1]);
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t idx = rng.next() % s.cardinality();
        EXPECT_EQ(s.encode(s.decode(idx)), idx);
    }
    EXPECT_THROW(s.decode(s.cardinality()), OutOfRange);
}

TEST(DesignSpace, RandomDesignIsDeterministicAndUniform) {
    const SpaceSpec s = SpaceSpec::standard();
    EXPECT_EQ(s.random_design(42), s.random_design(42));
    Rng rng(99);
    std::map<int, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const DesignPoint d = s.random_design(rng);
        ASSERT_TRUE(s.is_valid(d));
        ++counts[d.link_count()];
    }
    ASSERT_EQ(counts.size(), 4u);
    for (auto [value, n] : counts) EXPECT_NEAR(n / double(draws), 0.25, 0.02) << value;
    EXPECT_EQ(singleton().random_design(5), singleton().reference());
}

TEST(DesignSpace, ScaledCoordinatesSpanUnitInterval) {
    const SpaceSpec s = SpaceSpec::standard();
    const auto lo = s.scaled(s.decode(0));
    const auto hi = s.scaled(s.decode(s.cardinality() - 1));
    for (std::size_t i = 0; i < kParamCount; ++i) {
        EXPECT_DOUBLE_EQ(lo[i], 0.0);
        EXPECT_DOUBLE_EQ(hi[i], 1.0);
    }
}

TEST(DesignSpace, JsonRoundTrip) {
    const SpaceSpec s = SpaceSpec::standard();
    const DesignPoint d = s.random_design(8);
    EXPECT_EQ(design_from_json(to_json(d)), d);
    const SpaceSpec back = space_from_json(to_json(s));
    EXPECT_EQ(back.cardinality(), s.cardinality());
    EXPECT_EQ(back.reference(), s.reference());
    for (Param p : kAllParams) {
        EXPECT_EQ(param_from_name(param_name(p)), p);
        EXPECT_EQ(back.values(p), s.values(p));
    }
    EXPECT_FALSE(param_from_name("l2_cache").has_value());
}

TEST(DesignSpace, RejectsMalformedSpec) {
    EXPECT_THROW(restricted(Param::CoreCount, {}), ConfigError);
    EXPECT_THROW(restricted(Param::CoreCount, {4, 2}), ConfigError);
}
