// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "lumina/errors.hpp"
#include "lumina/influence.hpp"
#include "lumina/strategy.hpp"

using namespace lumina;

namespace {

const Evaluator& standard() {
    static const Evaluator ev = Evaluator::standard();
    return ev;
}

// A narrow layer: allreduce traffic grows with the hidden size, compute with its square.
const Evaluator& narrow() {
    static const Evaluator ev = [] {
        WorkloadConfig w;
        w.model.d_model = 2048;
        w.model.n_head = 16;
        w.model.d_ffn = 8192;
        return Evaluator(SpaceSpec::standard(), w, CalibrationConstants::defaults());
    }();
    return ev;
}

InfluenceMap static_map() { return quale_build(perf_model_structure(standard().constants())); }

struct Measured {
    InfluenceMap ahk = static_map();
    SensitivityTable table;
    std::size_t probes = 0;

    explicit Measured(const DesignPoint& at, bool area_only = false, const Evaluator& ev = standard()) {
        table = quane_sensitivity(
            ahk, ev.space(), ev.evaluate(at),
            [&](const DesignPoint& d) {
                ++probes;
                return std::optional<Evaluation>(ev.evaluate(d));
            },
            ev.constants(), area_only);
    }
};

TrajectorySample sample_of(const DesignPoint& d, const Evaluator& ev = standard()) {
    TrajectorySample s;
    s.kind = SampleKind::Directive;
    s.eval = ev.evaluate(d);
    return s;
}

DesignPoint with(DesignPoint d, Param p, int v) {
    d[p] = v;
    return d;
}

}  // namespace

TEST(Qualitative, StructuralZerosAndSigns) {
    const InfluenceMap m = static_map();
    EXPECT_TRUE(m.at(Param::SystolicDim, Metric::PeakVector).hard_zero);
    EXPECT_EQ(m.at(Param::SystolicDim, Metric::PeakVector).sign, 0);
    EXPECT_TRUE(m.at(Param::VectorWidth, Metric::PeakTensor).hard_zero);
    EXPECT_TRUE(m.at(Param::LinkCount, Metric::MemBw).hard_zero);
    EXPECT_TRUE(m.at(Param::MemChannels, Metric::NetBw).hard_zero);
    EXPECT_TRUE(m.at(Param::SramKb, Metric::PeakTensor).hard_zero);
    EXPECT_EQ(m.at(Param::MemChannels, Metric::Area).sign, +1);
    EXPECT_LE(m.at(Param::LinkCount, Metric::Tpot).sign, 0);
    for (Param p : {Param::CoreCount, Param::SublaneCount, Param::SystolicDim})
        EXPECT_EQ(m.at(p, Metric::PeakTensor).sign, +1);
    for (Param p : {Param::CoreCount, Param::SublaneCount, Param::VectorWidth})
        EXPECT_EQ(m.at(p, Metric::PeakVector).sign, +1);
    for (Param p : kAllParams) {
        EXPECT_EQ(m.at(p, Metric::Area).sign, +1);
        EXPECT_FALSE(m.at(p, Metric::Ttft).hard_zero);
    }
    EXPECT_TRUE(m.relieves(Param::LinkCount, Resource::Interconnect));
    EXPECT_TRUE(m.relieves(Param::MemChannels, Resource::MemoryBw));
    EXPECT_FALSE(m.relieves(Param::SystolicDim, Resource::VectorCompute));
}

TEST(Qualitative, LinkCountReallyDoesNotSlowDecode) {
    const DesignPoint ref = standard().space().reference();
    EXPECT_LE(standard().evaluate(with(ref, Param::LinkCount, 18)).metrics.tpot_s,
              standard().evaluate(ref).metrics.tpot_s);
}

TEST(Qualitative, HardZerosAreImmuneToMagnitudes) {
    InfluenceMap m = static_map();
    m.set_magnitude(Param::SystolicDim, Metric::PeakVector, 5.0, InfluenceSource::Refined);
    EXPECT_EQ(m.at(Param::SystolicDim, Metric::PeakVector).magnitude, 0.0);
}

TEST(Qualitative, LlmMapIsCheckedAgainstStructure) {
    const ModelStructure s = perf_model_structure(standard().constants());
    const std::string ok =
        R"({"entries":[{"parameter":"link_count","metric":"net_bw","sign":1},)"
        R"({"parameter":"mem_channels","metric":"tpot","sign":-1}]})";
    const InfluenceMap m = quale_from_llm_reply(ok, s);
    EXPECT_EQ(m.at(Param::LinkCount, Metric::NetBw).sign, 1);
    EXPECT_TRUE(m.at(Param::SystolicDim, Metric::PeakVector).hard_zero);
    const std::string bad = R"({"entries":[{"parameter":"systolic_dim","metric":"peak_vector","sign":1}]})";
    EXPECT_THROW(quale_from_llm_reply(bad, s), LlmMapInvalid);
    EXPECT_THROW(quale_from_llm_reply("no json here", s), LlmMapInvalid);
}

TEST(Quantitative, ProbesAndMagnitudes) {
    const Measured m(standard().space().reference());
    EXPECT_EQ(m.probes, 16u);
    EXPECT_EQ(m.table.probes.size(), 16u);
    const auto& c = standard().constants();
    EXPECT_NEAR(m.ahk.at(Param::LinkCount, Metric::Area).magnitude, 6 * c.a_link, 1e-9);
    EXPECT_EQ(m.ahk.at(Param::SystolicDim, Metric::PeakVector).magnitude, 0.0);
    EXPECT_LT(m.ahk.at(Param::MemChannels, Metric::Tpot).magnitude, 0.0);
    EXPECT_TRUE(m.ahk.at(Param::MemChannels, Metric::Tpot).measured);
    EXPECT_NEAR(m.ahk.at(Param::MemChannels, Metric::MemBw).magnitude, c.bw_per_channel, 1e-3);
}

TEST(Quantitative, OneSidedAtListBoundary) {
    const DesignPoint top = with(standard().space().reference(), Param::LinkCount, 24);
    const Measured m(top);
    EXPECT_NEAR(m.ahk.at(Param::LinkCount, Metric::Area).magnitude, 6 * standard().constants().a_link, 1e-9);
    EXPECT_EQ(m.probes, 15u);
}

TEST(Quantitative, AreaOnlyRunsNoEvaluations) {
    const Measured m(standard().space().reference(), true);
    EXPECT_EQ(m.probes, 0u);
    EXPECT_NEAR(m.ahk.at(Param::LinkCount, Metric::Area).magnitude, 6 * standard().constants().a_link, 1e-9);
    EXPECT_FALSE(m.ahk.at(Param::MemChannels, Metric::Tpot).measured);
}

TEST(Directive, FingerprintAndValidation) {
    StrategyDirective d;
    d.target_bottleneck = Resource::MemoryBw;
    d.boosts = {{Param::MemChannels, 1}};
    d.tradeoff = StepChange{Param::CoreCount, -1};
    EXPECT_EQ(d.fingerprint(), "memory_bw|core_count-|mem_channels+");
    EXPECT_EQ(d.aggressiveness(), 2);
    EXPECT_NO_THROW(d.validate());

    StrategyDirective empty;
    EXPECT_THROW(empty.validate(), InvalidDirective);
    StrategyDirective repeated = d;
    repeated.tradeoff = StepChange{Param::MemChannels, -1};
    EXPECT_THROW(repeated.validate(), InvalidDirective);
    StrategyDirective positive_trade = d;
    positive_trade.tradeoff = StepChange{Param::CoreCount, 1};
    EXPECT_THROW(positive_trade.validate(), InvalidDirective);
}

TEST(Strategy, ChooseTargetArbitration) {
    PpaMetrics m;
    EXPECT_EQ(choose_target(m, 0), Metric::Ttft);
    EXPECT_EQ(choose_target(m, 1), Metric::Tpot);
    m.tpot_n = 1.2;
    EXPECT_EQ(choose_target(m, 0), Metric::Tpot);
    m.ttft_n = 1.5;
    EXPECT_EQ(choose_target(m, 1), Metric::Ttft);
}

TEST(Strategy, Classify) {
    const DesignPoint ref = standard().space().reference();
    const Evaluation base = standard().evaluate(ref);
    const Evaluation more_mem = standard().evaluate(with(ref, Param::MemChannels, 6));
    const Evaluation less_mem = standard().evaluate(with(ref, Param::MemChannels, 4));
    EXPECT_EQ(classify(base, more_mem, Metric::Tpot), Outcome::Improved);
    EXPECT_EQ(classify(base, less_mem, Metric::Tpot), Outcome::Failed);
    EXPECT_EQ(classify(base, base, Metric::Tpot), Outcome::Neutral);
}

TEST(Strategy, ApplyDirective) {
    const SpaceSpec& s = standard().space();
    StrategyDirective d;
    d.target_bottleneck = Resource::Interconnect;
    d.boosts = {{Param::LinkCount, 1}};
    d.tradeoff = StepChange{Param::CoreCount, -1};
    const Applied a = ee_apply(s.reference(), d, s);
    EXPECT_EQ(a.design.link_count(), 18);
    EXPECT_EQ(a.design.core_count(), 96);
    EXPECT_FALSE(a.clamped);

    d.tradeoff.reset();
    const Applied b = ee_apply(s.reference(), d, s);
    EXPECT_EQ(changed_params(s.reference(), b.design), std::vector<Param>{Param::LinkCount});

    const DesignPoint top = with(s.reference(), Param::LinkCount, 24);
    d.tradeoff = StepChange{Param::CoreCount, -1};
    const Applied c = ee_apply(top, d, s);
    EXPECT_TRUE(c.clamped);
    EXPECT_EQ(c.clamped_params, std::vector<Param>{Param::LinkCount});
    EXPECT_EQ(c.design.link_count(), 24);

    d.tradeoff.reset();
    EXPECT_THROW(ee_apply(top, d, s), InvalidDirective);
}

TEST(Strategy, InterconnectBoundDesignRaisesLinks) {
    // Plenty of compute and memory, few links: prefill waits on the allreduces.
    const DesignPoint d = DesignPoint::from_tuple({6, 256, 8, 32, 32, 256, 64, 12});
    const Evaluation e = narrow().evaluate(d);
    ASSERT_EQ(e.report.prefill.dominant, Resource::Interconnect);
    const Measured m(d, false, narrow());
    TrajectoryMemory tm;
    tm.add(sample_of(d, narrow()));
    const SeContext ctx{narrow().space(), narrow().constants(), e, Metric::Ttft, m.ahk, tm};
    const StrategyDirective dir = se_propose(ctx);
    EXPECT_EQ(dir.target_bottleneck, Resource::Interconnect);
    ASSERT_EQ(dir.boosts.size(), 1u);
    EXPECT_EQ(dir.boosts[0], (StepChange{Param::LinkCount, 1}));
    ASSERT_TRUE(dir.tradeoff.has_value());
    EXPECT_EQ(dir.tradeoff->steps, -1);
    EXPECT_NE(dir.tradeoff->param, Param::LinkCount);
    EXPECT_FALSE(dir.rationale.empty());
}

TEST(Strategy, MemoryBoundBoostsChannelsFirst) {
    const DesignPoint d = with(with(standard().space().reference(), Param::LinkCount, 24), Param::MemChannels, 2);
    const Evaluation e = standard().evaluate(d);
    ASSERT_EQ(e.report.decode.dominant, Resource::MemoryBw);
    const Measured m(d);
    TrajectoryMemory tm;
    tm.add(sample_of(d));
    const SeContext ctx{standard().space(), standard().constants(), e, Metric::Tpot, m.ahk, tm};
    const auto boosts = rank_boosts(ctx, Resource::MemoryBw);
    ASSERT_FALSE(boosts.empty());
    EXPECT_EQ(boosts[0], Param::MemChannels);
    EXPECT_EQ(se_propose(ctx).boosts[0].param, Param::MemChannels);
}

TEST(Strategy, TradeoffsNeverIncludeBoostsOrBoundaries) {
    const DesignPoint d = standard().space().decode(0);
    const Measured m(d);
    TrajectoryMemory tm;
    const Evaluation e = standard().evaluate(d);
    const SeContext ctx{standard().space(), standard().constants(), e, Metric::Ttft, m.ahk, tm};
    // Every parameter sits at its minimum: nothing can be traded away.
    EXPECT_TRUE(rank_tradeoffs(ctx, {}).empty());
}

TEST(Strategy, FailurePatternSelectsNextBest) {
    const DesignPoint d = with(standard().space().reference(), Param::MemChannels, 2);
    const Evaluation e = standard().evaluate(d);
    const Measured m(d);
    TrajectoryMemory tm;
    tm.add(sample_of(d));
    const SeContext ctx{standard().space(), standard().constants(), e, Metric::Tpot, m.ahk, tm};
    const StrategyDirective first = se_propose(ctx);
    tm.add_failure({first.target_bottleneck, first.fingerprint()});
    const StrategyDirective second = se_propose(ctx);
    EXPECT_NE(second.fingerprint(), first.fingerprint());
}

TEST(Strategy, ExhaustedWhenNothingCanGrow) {
    const SpaceSpec& s = standard().space();
    const DesignPoint top = s.decode(s.cardinality() - 1);
    const Evaluation e = standard().evaluate(top);
    const InfluenceMap ahk = static_map();
    TrajectoryMemory tm;
    tm.add(sample_of(top));
    const SeContext ctx{s, standard().constants(), e, Metric::Ttft, ahk, tm};
    EXPECT_THROW(se_propose(ctx), Exhausted);
}

TEST(Refine, SingleParameterSmoothing) {
    const SpaceSpec& s = standard().space();
    const DesignPoint a = with(s.reference(), Param::MemChannels, 4);
    const DesignPoint b = with(s.reference(), Param::MemChannels, 6);
    InfluenceMap ahk = static_map();
    ahk.set_magnitude(Param::MemChannels, Metric::Tpot, -1e-5, InfluenceSource::Measured);
    TrajectoryMemory tm;
    tm.add(sample_of(a));
    tm.add(sample_of(b));
    refine(tm, ahk, s, 0.5);
    const double observed = (tm.samples()[1].eval.metrics.tpot_s - tm.samples()[0].eval.metrics.tpot_s) / 2.0;
    EXPECT_NEAR(ahk.at(Param::MemChannels, Metric::Tpot).magnitude, 0.5 * observed + 0.5 * -1e-5, 1e-18);
    EXPECT_EQ(ahk.at(Param::MemChannels, Metric::Tpot).source, InfluenceSource::Refined);
    EXPECT_EQ(tm.refined_upto, 2u);
}

TEST(Refine, FirstMeasurementIsTakenDirectly) {
    const SpaceSpec& s = standard().space();
    InfluenceMap ahk = static_map();
    TrajectoryMemory tm;
    tm.add(sample_of(s.reference()));
    tm.add(sample_of(with(s.reference(), Param::CoreCount, 128)));
    refine(tm, ahk, s);
    const double area_delta = tm.samples()[1].eval.metrics.area_mm2 - tm.samples()[0].eval.metrics.area_mm2;
    EXPECT_NEAR(ahk.at(Param::CoreCount, Metric::Area).magnitude, area_delta, 1e-9);
}

TEST(Refine, TwoParameterAttribution) {
    const SpaceSpec& s = standard().space();
    InfluenceMap ahk = static_map();
    const double link_area = 6 * standard().constants().a_link;
    ahk.set_magnitude(Param::LinkCount, Metric::Area, link_area, InfluenceSource::Measured);
    TrajectoryMemory tm;
    tm.add(sample_of(s.reference()));
    tm.add(sample_of(with(with(s.reference(), Param::CoreCount, 128), Param::LinkCount, 18)));
    refine(tm, ahk, s);
    const double delta = tm.samples()[1].eval.metrics.area_mm2 - tm.samples()[0].eval.metrics.area_mm2;
    EXPECT_NEAR(ahk.at(Param::CoreCount, Metric::Area).magnitude, delta - link_area, 1e-9);
}

TEST(Refine, SkipsUnattributablePairsAndRecordsFailures) {
    const SpaceSpec& s = standard().space();
    InfluenceMap ahk = static_map();
    const InfluenceMap before = ahk;
    TrajectoryMemory tm;
    tm.add(sample_of(s.reference()));
    TrajectorySample three = sample_of(DesignPoint::from_tuple({18, 128, 8, 16, 32, 128, 40, 5}));
    StrategyDirective d;
    d.target_bottleneck = Resource::TensorCompute;
    d.boosts = {{Param::CoreCount, 1}};
    three.directive = d;
    three.outcome = Outcome::Failed;
    tm.add(three);
    refine(tm, ahk, s);
    for (Param p : kAllParams)
        for (Metric m : kAllMetrics) EXPECT_EQ(ahk.at(p, m).magnitude, before.at(p, m).magnitude);
    EXPECT_TRUE(tm.blocked(d.fingerprint()));
}
