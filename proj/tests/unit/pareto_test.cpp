// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "lumina/pareto.hpp"
#include "lumina/rng.hpp"

using namespace lumina;

namespace {

ObjectiveVector ov(double a, double b, double c) { return {{a, b, c}}; }

double inclusion_exclusion(const std::vector<ObjectiveVector>& pts, const ObjectiveVector& ref) {
    const std::size_t n = pts.size();
    double total = 0.0;
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
        ObjectiveVector corner = ov(-1e300, -1e300, -1e300);
        int bits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(mask >> i & 1)) continue;
            ++bits;
            for (int k = 0; k < 3; ++k) corner[k] = std::max(corner[k], pts[i][k]);
        }
        double vol = 1.0;
        for (int k = 0; k < 3; ++k) vol *= std::max(0.0, ref[k] - corner[k]);
        total += (bits % 2 ? 1.0 : -1.0) * vol;
    }
    return total;
}

double monte_carlo(const std::vector<ObjectiveVector>& pts, std::size_t draws, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        const ObjectiveVector u = ov(rng.uniform(), rng.uniform(), rng.uniform());
        for (const auto& p : pts) {
            if (p[0] <= u[0] && p[1] <= u[1] && p[2] <= u[2]) {
                ++hit;
                break;
            }
        }
    }
    return double(hit) / double(draws);
}

std::vector<ObjectiveVector> brute_front(const std::vector<ObjectiveVector>& pts) {
    std::vector<ObjectiveVector> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
            if (j == i) continue;
            const bool le = pts[j][0] <= pts[i][0] && pts[j][1] <= pts[i][1] && pts[j][2] <= pts[i][2];
            dominated = le && pts[j] != pts[i];
        }
        if (!dominated && std::find(out.begin(), out.end(), pts[i]) == out.end()) out.push_back(pts[i]);
    }
    return out;
}

std::vector<ObjectiveVector> random_points(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<ObjectiveVector> pts(n);
    for (auto& p : pts) p = ov(scale * rng.uniform(), scale * rng.uniform(), scale * rng.uniform());
    return pts;
}

DesignPoint tag(std::size_t i) {
    DesignPoint d;
    d.values[0] = static_cast<int>(i);
    return d;
}

}  // namespace

TEST(Dominance, Examples) {
    EXPECT_TRUE(dominates(ov(0.5, 0.5, 0.5), ov(1, 1, 1)));
    EXPECT_FALSE(dominates(ov(1, 1, 1), ov(1, 1, 1)));
    EXPECT_TRUE(dominates(ov(0.717, 0.947, 0.772), ov(1, 1, 1)));
    EXPECT_TRUE(dominates(ov(1, 0.9, 1), ov(1, 1, 1)));
    EXPECT_FALSE(strictly_better(ov(1, 0.9, 1), ov(1, 1, 1)));
    EXPECT_TRUE(strictly_better(ov(0.9, 0.9, 0.9), ov(1, 1, 1)));
}

TEST(Archive, Examples) {
    ParetoArchive a;
    EXPECT_TRUE(a.insert(tag(0), ov(1, 1, 1)));
    EXPECT_FALSE(a.insert(tag(1), ov(2, 2, 2)));
    EXPECT_EQ(a.size(), 1u);

    ParetoArchive b;
    b.insert(tag(0), ov(0.5, 1.5, 1.0));
    b.insert(tag(1), ov(1.5, 0.5, 1.0));
    EXPECT_EQ(b.size(), 2u);
    b.insert(tag(2), ov(0.4, 0.4, 0.4));
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b.entries()[0].objectives, ov(0.4, 0.4, 0.4));
    EXPECT_FALSE(b.insert(tag(2), ov(0.3, 0.3, 0.3)));
}

TEST(Archive, MatchesBruteForceFilter) {
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        // Coarse grid values force ties and duplicates.
        std::vector<ObjectiveVector> pts(1000);
        for (auto& p : pts) p = ov(rng.index(12) / 12.0, rng.index(12) / 12.0, rng.index(12) / 12.0);
        ParetoArchive archive;
        for (std::size_t i = 0; i < pts.size(); ++i) archive.insert(tag(i), pts[i]);
        auto got = archive.objectives();
        auto want = brute_front(pts);
        const auto lt = [](const ObjectiveVector& x, const ObjectiveVector& y) { return x.v < y.v; };
        std::sort(got.begin(), got.end(), lt);
        std::sort(want.begin(), want.end(), lt);
        got.erase(std::unique(got.begin(), got.end()), got.end());
        EXPECT_EQ(got, want);
    }
}

TEST(Hypervolume, Examples) {
    const std::vector<ObjectiveVector> one{ov(0.5, 0.5, 0.5)};
    EXPECT_DOUBLE_EQ(hypervolume(one, ObjectiveVector::unit()), 0.125);
    const std::vector<ObjectiveVector> twice{ov(0.5, 0.5, 0.5), ov(0.5, 0.5, 0.5)};
    EXPECT_DOUBLE_EQ(hypervolume(twice, ObjectiveVector::unit()), 0.125);
    const std::vector<ObjectiveVector> outside{ov(1.2, 0.1, 0.1), ov(1.0, 0.5, 0.5)};
    EXPECT_DOUBLE_EQ(hypervolume(outside, ObjectiveVector::unit()), 0.0);
    EXPECT_DOUBLE_EQ(hypervolume({}, ObjectiveVector::unit()), 0.0);
}

TEST(Hypervolume, MatchesInclusionExclusion) {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto pts = random_points(rng, 1 + rng.index(8), 1.2);
        EXPECT_NEAR(hypervolume(pts, ObjectiveVector::unit()), inclusion_exclusion(pts, ObjectiveVector::unit()),
                    1e-12);
    }
}

TEST(Hypervolume, MatchesMonteCarlo) {
    Rng rng(11);
    const auto pts = random_points(rng, 10);
    EXPECT_NEAR(hypervolume(pts, ObjectiveVector::unit()), monte_carlo(pts, 1000000, 5), 0.01);
}

TEST(Hypervolume, InvariantUnderOrderAndDominatedPoints) {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        auto pts = random_points(rng, 20);
        const double hv = hypervolume(pts, ObjectiveVector::unit());
        std::reverse(pts.begin(), pts.end());
        EXPECT_NEAR(hypervolume(pts, ObjectiveVector::unit()), hv, 1e-12);
        const ObjectiveVector& p = pts.front();
        pts.push_back(ov(p[0] + 1e-3, p[1], p[2] + 1e-3));
        EXPECT_NEAR(hypervolume(pts, ObjectiveVector::unit()), hv, 1e-12);
        EXPECT_NEAR(hypervolume(brute_front(pts), ObjectiveVector::unit()), hypervolume(pts, ObjectiveVector::unit()),
                    1e-12);
    }
}

TEST(SampleEfficiency, Examples) {
    std::vector<ObjectiveVector> s(1000, ov(1.1, 0.9, 0.9));
    std::fill(s.begin(), s.begin() + 421, ov(0.9, 0.9, 0.9));
    EXPECT_DOUBLE_EQ(sample_efficiency(s, ObjectiveVector::unit()), 0.421);
    std::vector<ObjectiveVector> same(10, ObjectiveVector::unit());
    EXPECT_DOUBLE_EQ(sample_efficiency(same, ObjectiveVector::unit()), 0.0);
    EXPECT_DOUBLE_EQ(sample_efficiency({}, ObjectiveVector::unit()), 0.0);
}

TEST(NonDominatedSort, MatchesPeelingOracle) {
    Rng rng(17);
    const auto pts = random_points(rng, 60);
    const auto ranks = non_dominated_ranks(pts);
    std::vector<int> want(pts.size(), -1);
    for (int level = 0;; ++level) {
        std::vector<std::size_t> layer;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (want[i] >= 0) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (want[j] < 0 && dominates(pts[j], pts[i])) dominated = true;
            if (!dominated) layer.push_back(i);
        }
        if (layer.empty()) break;
        for (auto i : layer) want[i] = level;
    }
    EXPECT_EQ(ranks, want);
}

TEST(NonDominatedSort, CrowdingBoundariesAreInfinite) {
    const std::vector<ObjectiveVector> pts{ov(0, 1, 0.5), ov(0.5, 0.5, 0.5), ov(1, 0, 0.5)};
    const std::vector<std::size_t> front{0, 1, 2};
    const auto cd = crowding_distance(pts, front);
    EXPECT_TRUE(std::isinf(cd[0]));
    EXPECT_TRUE(std::isinf(cd[2]));
    EXPECT_NEAR(cd[1], 2.0, 1e-12);
}
