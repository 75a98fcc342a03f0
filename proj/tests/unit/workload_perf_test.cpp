// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "lumina/errors.hpp"
#include "lumina/perf_model.hpp"
#include "lumina/rng.hpp"
#include "lumina/workload.hpp"

using namespace lumina;

namespace {

// Spreadsheet-style recomputation of one layer, written from the cost formulas
// alone. Shares nothing with the library beyond the design tuple.
struct Sheet {
    double b = 8, s = 2048, kv = 3072;
    double d = 12288, heads = 96, dh = 128, ffn = 49152, tp = 8, eb = 2, gpus = 8;
    double clock = 1.41e9, bw_channel = 408e9, bw_link = 50e9;

    struct Hw {
        double tensor, vector, mem, net, sram, gb;
        int sd;
    };

    Hw hw(const DesignPoint& x) const {
        const double lanes = double(x.core_count()) * x.sublane_count();
        return {lanes * x.systolic_dim() * x.systolic_dim() * 2 * clock,
                lanes * x.vector_width() * 2 * clock,
                x.mem_channels() * bw_channel,
                x.link_count() * bw_link,
                x.sram_kb() * 1024.0,
                x.global_buffer_mb() * 1048576.0,
                x.systolic_dim()};
    }

    static double pad(double x, int sd) { return x / (std::ceil(x / sd) * sd); }

    double acts(double in, double out, const Hw& h) const {
        return (in > h.gb ? in : 0.0) + (out > h.gb ? out : 0.0);
    }

    double gemm(const Hw& h, double m, double k, double n, double count, double weights, double cache,
                double in, double out) const {
        const double flops = 2 * m * k * n * count;
        double bytes = weights + cache + acts(in, out, h);
        if (k * n * eb > h.sram) {
            const double t = std::max(1.0, std::floor(std::sqrt(h.sram / eb / 3)));
            bytes = std::max(bytes, eb * count * (m * n + 2 * m * k * n / t));
        }
        return std::max(flops / (h.tensor * pad(m, h.sd) * pad(n, h.sd)), bytes / h.mem);
    }

    double proj(const Hw& h, double m, double k, double n) const {
        return gemm(h, m, k, n, 1, k * n * eb, 0, m * k * eb, m * n * eb);
    }

    double vec(const Hw& h, double flops, double in, double out) const {
        return std::max(flops / h.vector, acts(in, out, h) / h.mem);
    }

    double ring(const Hw& h, double payload) const { return 2 * (gpus - 1) / gpus * payload / h.net; }

    double layer(const DesignPoint& x, double q, double l, bool cached) const {
        const Hw h = hw(x);
        const double tok = b * q;
        const double bh = b * heads / tp;
        const double kvb = bh * l * dh * eb;
        double t = proj(h, tok, d, 3 * d / tp);
        t += gemm(h, q, dh, l, bh, 0, cached ? kvb : 0, bh * q * dh * eb + (cached ? 0 : kvb), bh * q * l * eb);
        t += vec(h, 5 * bh * q * l, bh * q * l * eb, bh * q * l * eb);
        t += gemm(h, q, l, dh, bh, 0, cached ? kvb : 0, bh * q * l * eb + (cached ? 0 : kvb), bh * q * dh * eb);
        t += proj(h, tok, d / tp, d);
        t += ring(h, tok * d * eb);
        t += vec(h, 5 * tok * d, tok * d * eb, tok * d * eb);
        t += proj(h, tok, d, ffn / tp);
        t += proj(h, tok, ffn / tp, d);
        t += ring(h, tok * d * eb);
        t += vec(h, 5 * tok * d, tok * d * eb, tok * d * eb);
        return t;
    }

    double ttft(const DesignPoint& x) const { return layer(x, s, s, false); }
    double tpot(const DesignPoint& x) const { return layer(x, 1, kv, true); }
};

const Evaluator& standard() {
    static const Evaluator ev = Evaluator::standard();
    return ev;
}

const OperatorSpec& op_named(const PhaseGraph& g, const std::string& name) {
    auto it = std::find_if(g.operators.begin(), g.operators.end(), [&](const auto& o) { return o.name == name; });
    if (it == g.operators.end()) throw std::runtime_error("no operator " + name);
    return *it;
}

DesignPoint with(DesignPoint d, Param p, int v) {
    d[p] = v;
    return d;
}

}  // namespace

TEST(Workload, OperatorChainAndCounts) {
    const ModelConfig gpt3;
    const PhaseGraph pre = build_prefill(gpt3, 8, 2048);
    ASSERT_EQ(pre.operators.size(), 11u);
    EXPECT_NEAR(op_named(pre, "qkv_proj").flops, 3.0 * 2 * 8 * 2048 * 12288.0 * 12288.0 / 8, 1.0);
    EXPECT_NEAR(op_named(pre, "qkv_proj").flops, 1.855e12, 1e9);
    EXPECT_DOUBLE_EQ(op_named(pre, "allreduce_attn").comm_bytes, 402653184.0);

    const PhaseGraph dec = build_decode(gpt3, 8, 3072);
    EXPECT_DOUBLE_EQ(op_named(dec, "attn_context").flops, 2.0 * 8 * 96 * 3072 * 128 / 8);
    EXPECT_NEAR(op_named(dec, "attn_context").flops, 7.55e7, 1e5);
    EXPECT_DOUBLE_EQ(op_named(dec, "attn_scores").cache_bytes, 8.0 * 96 * 3072 * 128 * 2 / 8);

    ModelConfig tiny;
    tiny.tp_degree = 1;
    EXPECT_DOUBLE_EQ(op_named(build_prefill(tiny, 1, 1), "attn_scores").flops, 24576.0);
    EXPECT_DOUBLE_EQ(op_named(build_decode(tiny, 1, 1), "attn_scores").flops,
                     op_named(build_prefill(tiny, 1, 1), "attn_scores").flops);
}

TEST(Workload, OperatorInvariants) {
    const PhaseGraph g = build_prefill(ModelConfig{}, 8, 2048);
    for (const auto& op : g.operators) {
        EXPECT_GE(op.flops, 0.0);
        EXPECT_EQ(op.comm_bytes > 0.0, op.unit_class == UnitClass::Comm) << op.name;
        EXPECT_EQ(op.gemm.has_value(), op.unit_class == UnitClass::Tensor) << op.name;
    }
}

TEST(Workload, DoublingBatchIsLinear) {
    const ModelConfig cfg;
    for (bool decode : {false, true}) {
        const PhaseGraph a = decode ? build_decode(cfg, 4, 3072) : build_prefill(cfg, 4, 1024);
        const PhaseGraph b = decode ? build_decode(cfg, 8, 3072) : build_prefill(cfg, 8, 1024);
        for (std::size_t i = 0; i < a.operators.size(); ++i) {
            EXPECT_DOUBLE_EQ(b.operators[i].flops, 2 * a.operators[i].flops);
            EXPECT_DOUBLE_EQ(b.operators[i].io_bytes, 2 * a.operators[i].io_bytes);
            EXPECT_DOUBLE_EQ(b.operators[i].comm_bytes, 2 * a.operators[i].comm_bytes);
        }
    }
}

TEST(Workload, TensorParallelismConservesWeights) {
    ModelConfig one;
    one.tp_degree = 1;
    double total_one = 0, total_split = 0;
    for (const auto& op : build_prefill(one, 2, 64).operators) total_one += op.weight_bytes;
    for (const auto& op : build_prefill(ModelConfig{}, 2, 64).operators) total_split += op.weight_bytes;
    EXPECT_DOUBLE_EQ(8 * total_split, total_one);
}

TEST(Workload, RejectsInconsistentModels) {
    ModelConfig bad;
    bad.d_head = 100;
    EXPECT_THROW(build_prefill(bad, 1, 1), ConfigError);
    ModelConfig odd;
    odd.tp_degree = 7;
    EXPECT_THROW(build_prefill(odd, 1, 1), ConfigError);
}

TEST(PerfModel, CalibrationAnchor) {
    const HardwareDerived hw = derive_hw(SpaceSpec::a100_reference(), CalibrationConstants::defaults());
    EXPECT_NEAR(hw.peak_tensor_flops, 108.0 * 4 * 256 * 2 * 1.41e9, 1.0);
    EXPECT_NEAR(hw.peak_tensor_flops, 3.118e14, 3.118e14 * 0.005);
    EXPECT_NEAR(hw.mem_bw, 2.04e12, 1e6);

    const auto ref = standard().evaluate(SpaceSpec::a100_reference()).metrics;
    EXPECT_EQ(ref.ttft_n, 1.0);
    EXPECT_EQ(ref.tpot_n, 1.0);
    EXPECT_EQ(ref.area_n, 1.0);
    EXPECT_NEAR(ref.area_mm2, 826.0, 1e-9);
}

TEST(PerfModel, SmallestLatticePointPeaks) {
    const auto c = CalibrationConstants::defaults();
    const HardwareDerived hw = derive_hw(DesignPoint::from_tuple({6, 1, 1, 4, 4, 32, 32, 1}), c);
    EXPECT_DOUBLE_EQ(hw.peak_tensor_flops, 32 * c.clock_hz);
    EXPECT_DOUBLE_EQ(hw.peak_vector_flops, 8 * c.clock_hz);
}

TEST(PerfModel, UtilizationPadding) {
    EXPECT_DOUBLE_EQ(tensor_utilization({8, 12288, 12288, 1}, 128), 0.0625);
    EXPECT_DOUBLE_EQ(tensor_utilization({256, 64, 384, 1}, 128), 1.0);
    EXPECT_DOUBLE_EQ(tensor_utilization({8, 64, 8, 1}, 8), 1.0);
}

TEST(PerfModel, MatchesSpreadsheetOracle) {
    const Sheet sheet;
    const Evaluator& ev = standard();
    Rng rng(2024);
    std::vector<DesignPoint> designs{ev.space().reference()};
    for (int i = 0; i < 200; ++i) designs.push_back(ev.space().random_design(rng));
    for (const auto& d : designs) {
        const Evaluation e = ev.evaluate(d);
        EXPECT_NEAR(e.metrics.ttft_s, sheet.ttft(d), 1e-12 * sheet.ttft(d)) << d.to_string();
        EXPECT_NEAR(e.metrics.tpot_s, sheet.tpot(d), 1e-12 * sheet.tpot(d)) << d.to_string();
    }
}

TEST(PerfModel, StallSharesAreADistribution) {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const Evaluation e = standard().evaluate(standard().space().random_design(rng));
        for (Phase ph : {Phase::Prefill, Phase::Decode}) {
            const PhaseReport& r = e.report.phase(ph);
            double sum = 0.0, time = 0.0;
            for (Resource res : kAllResources) {
                sum += r.share(res);
                EXPECT_LE(r.share(res), r.share(r.dominant));
            }
            for (const auto& op : r.ops) {
                time += op.bound_time;
                EXPECT_EQ(op.bound_time, *std::max_element(op.resource_time.begin(), op.resource_time.end()));
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
            EXPECT_NEAR(time, r.time, 1e-15);
        }
    }
}

TEST(PerfModel, OneChannelDecodeIsMemoryBound) {
    const DesignPoint d = with(SpaceSpec::a100_reference(), Param::MemChannels, 1);
    const Evaluation e = standard().evaluate(d);
    EXPECT_GT(e.metrics.tpot_n, 1.0);
    EXPECT_EQ(e.report.decode.dominant, Resource::MemoryBw);
}

TEST(PerfModel, DoublingLinksHalvesCommTime) {
    const Evaluator& ev = standard();
    const Evaluation a = ev.evaluate(ev.space().reference());
    const Evaluation b = ev.evaluate(with(ev.space().reference(), Param::LinkCount, 24));
    for (std::size_t i = 0; i < a.report.prefill.ops.size(); ++i) {
        if (a.report.prefill.ops[i].unit_class != UnitClass::Comm) continue;
        EXPECT_DOUBLE_EQ(b.report.prefill.ops[i].bound_time, a.report.prefill.ops[i].bound_time / 2);
    }
}

TEST(PerfModel, AreaIsLinearAndMonotone) {
    const auto c = CalibrationConstants::defaults();
    const SpaceSpec s = SpaceSpec::standard();
    const DesignPoint ref = s.reference();
    EXPECT_NEAR(area(with(ref, Param::LinkCount, 24), c) - area(ref, c), 12 * c.a_link, 1e-9);
    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
        const DesignPoint d = s.random_design(rng);
        for (Param p : kAllParams) {
            if (!s.can_step(d, p, 1)) continue;
            EXPECT_GT(area(s.step_neighbor(d, p, 1), c), area(d, c));
        }
    }
}

TEST(PerfModel, MoreBandwidthNeverSlows) {
    const SpaceSpec s = SpaceSpec::standard();
    Rng rng(12);
    for (int i = 0; i < 300; ++i) {
        const DesignPoint d = s.random_design(rng);
        for (Param p : {Param::MemChannels, Param::LinkCount}) {
            if (!s.can_step(d, p, 1)) continue;
            const auto a = standard().evaluate(d).metrics;
            const auto b = standard().evaluate(s.step_neighbor(d, p, 1)).metrics;
            EXPECT_LE(b.ttft_s, a.ttft_s);
            EXPECT_LE(b.tpot_s, a.tpot_s);
        }
    }
}

TEST(PerfModel, KnownGoodDesignsBeatReference) {
    const Evaluator& ev = standard();
    const auto a = ev.evaluate(DesignPoint::from_tuple({24, 64, 4, 32, 16, 128, 40, 6})).metrics;
    const auto b = ev.evaluate(DesignPoint::from_tuple({18, 96, 4, 32, 16, 128, 40, 6})).metrics;
    EXPECT_LT(a.area_n, 1.0);
    EXPECT_LT(a.ttft_n, 1.0);
    EXPECT_LT(a.tpot_n, 1.0);
    EXPECT_LT(b.ttft_n, 1.0);
}

TEST(PerfModel, CalibrationRejectsBadShares) {
    AreaShares bad;
    bad.cores = 0.9;
    EXPECT_THROW(CalibrationConstants::calibrated(SpaceSpec::a100_reference(), bad), ConfigError);
}
