// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <map>

#include <gtest/gtest.h>

#include "lumina/errors.hpp"
#include "lumina/optimizers.hpp"
#include "lumina/perf_model.hpp"

using namespace lumina;

namespace {

const Evaluator& standard() {
    static const Evaluator ev = Evaluator::standard();
    return ev;
}

std::vector<DesignPoint> drive(Optimizer& opt, std::size_t n) {
    std::vector<DesignPoint> seen;
    for (std::size_t i = 0; i < n; ++i) {
        const DesignPoint d = opt.propose(1).at(0);
        seen.push_back(d);
        opt.observe(d, standard().evaluate(d).objectives());
    }
    return seen;
}

// Upper 1% points of the chi-square distribution, by degrees of freedom.
double chi2_critical_1pct(std::size_t df) {
    static const std::map<std::size_t, double> table{{3, 11.345}, {5, 15.086}, {6, 16.812},
                                                      {11, 24.725}, {13, 27.688}};
    return table.at(df);
}

}  // namespace

TEST(Optimizers, MethodNames) {
    EXPECT_EQ(method_from_name("gs"), Method::Grid);
    EXPECT_EQ(method_from_name("rw"), Method::RandomWalk);
    EXPECT_EQ(method_from_name("ga"), Method::Genetic);
    EXPECT_EQ(method_from_name("aco"), Method::AntColony);
    EXPECT_EQ(method_from_name("bo"), Method::Bayesian);
    for (Method m : {Method::Grid, Method::RandomWalk, Method::Genetic, Method::AntColony, Method::Bayesian})
        EXPECT_EQ(method_from_name(method_name(m)), m);
    EXPECT_FALSE(method_from_name("annealing").has_value());
}

TEST(Optimizers, ConfigJsonRoundTrip) {
    OptimizerConfig c;
    c.ga_population = 30;
    c.bo_candidates = 64;
    const OptimizerConfig back = optimizer_config_from_json(to_json(c));
    EXPECT_EQ(back.ga_population, 30u);
    EXPECT_EQ(back.bo_candidates, 64u);
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Optimizers, ProposalsAreValidAndSeedDeterministic) {
    for (Method m : {Method::Grid, Method::RandomWalk, Method::Genetic, Method::AntColony, Method::Bayesian}) {
        auto a = make_optimizer(m, standard().space(), 4);
        auto b = make_optimizer(m, standard().space(), 4);
        const auto da = drive(*a, 60);
        const auto db = drive(*b, 60);
        EXPECT_EQ(da, db) << method_name(m);
        for (const auto& d : da) {
            EXPECT_TRUE(standard().space().is_valid(d)) << method_name(m);
            EXPECT_TRUE(standard().space().position(Param::GlobalBufferMb, d.global_buffer_mb()).has_value());
        }
    }
}

TEST(GridSearch, EvenStrideFromTheMinimumDesign) {
    OptimizerConfig c;
    c.grid_points = 1000;
    GridSearch grid(standard().space(), 1, c);
    const std::uint64_t stride = standard().space().cardinality() / 1000;
    EXPECT_EQ(grid.stride(), stride);
    const auto designs = grid.propose(1000);
    ASSERT_EQ(designs.size(), 1000u);
    for (Param p : kAllParams) EXPECT_EQ(designs[0][p], standard().space().values(p).front());
    for (std::size_t i = 0; i < designs.size(); ++i) EXPECT_EQ(standard().space().encode(designs[i]), i * stride);
    EXPECT_THROW(grid.propose(1), BudgetExhausted);
}

TEST(GridSearch, IgnoresObjectives) {
    GridSearch a(standard().space(), 1, {});
    GridSearch b(standard().space(), 1, {});
    for (int i = 0; i < 20; ++i) {
        const DesignPoint da = a.propose(1)[0];
        const DesignPoint db = b.propose(1)[0];
        ASSERT_EQ(da, db);
        a.observe(da, ObjectiveVector::unit());
        b.observe(db, {{0.1 * i, 5.0, 0.3}});
    }
}

TEST(RandomWalk, SingleStepMovesBetweenRestarts) {
    OptimizerConfig c;
    c.rw_restart_probability = 0.0;
    RandomWalk rw(standard().space(), 9, c);
    DesignPoint prev = rw.propose(1)[0];
    for (int i = 0; i < 500; ++i) {
        const DesignPoint next = rw.propose(1)[0];
        const auto changed = changed_params(prev, next);
        ASSERT_EQ(changed.size(), 1u);
        const Param p = changed[0];
        const auto a = *standard().space().position(p, prev[p]);
        const auto b = *standard().space().position(p, next[p]);
        EXPECT_EQ(std::abs(long(a) - long(b)), 1);
        prev = next;
    }
}

TEST(Genetic, PopulationIsBounded) {
    Genetic ga(standard().space(), 3, {});
    drive(ga, 120);
    EXPECT_LE(ga.population().size(), 20u);
    EXPECT_GE(ga.population().size(), 1u);
}

TEST(AntColony, UniformPheromoneSamplesUniformly) {
    AntColony aco(standard().space(), 21, {});
    const std::size_t draws = 10000;
    std::array<std::vector<std::size_t>, kParamCount> counts;
    for (Param p : kAllParams) counts[index_of(p)].assign(standard().space().values(p).size(), 0);
    for (const auto& d : aco.propose(draws))
        for (Param p : kAllParams) ++counts[index_of(p)][*standard().space().position(p, d[p])];
    for (Param p : kAllParams) {
        const auto& row = counts[index_of(p)];
        const double expected = double(draws) / row.size();
        double chi2 = 0.0;
        for (auto n : row) chi2 += (n - expected) * (n - expected) / expected;
        EXPECT_LT(chi2, chi2_critical_1pct(row.size() - 1)) << param_name(p);
    }
}

TEST(AntColony, DepositRaisesObservedCells) {
    AntColony aco(standard().space(), 1, {});
    const DesignPoint d = standard().space().decode(12345);
    aco.observe(d, {{0.5, 0.5, 0.5}});
    aco.observe(d, {{0.5, 0.5, 0.5}});
    for (Param p : kAllParams) {
        const auto pos = *standard().space().position(p, d[p]);
        for (std::size_t i = 0; i < standard().space().values(p).size(); ++i) {
            // (1 * 0.9 + 1) * 0.9 + 1 for the observed value, 1 * 0.9^2 elsewhere.
            EXPECT_NEAR(aco.pheromone(p, i), i == pos ? 2.71 : 0.81, 1e-12);
        }
    }
}

TEST(AntColony, DominatedPointsDepositLess) {
    AntColony aco(standard().space(), 1, {});
    const DesignPoint good = standard().space().decode(0);
    const DesignPoint bad = standard().space().decode(standard().space().cardinality() - 1);
    aco.observe(good, {{0.5, 0.5, 0.5}});
    aco.observe(bad, {{0.9, 0.9, 0.9}});
    const auto lo = *standard().space().position(Param::LinkCount, good.link_count());
    const auto hi = *standard().space().position(Param::LinkCount, bad.link_count());
    EXPECT_NEAR(aco.pheromone(Param::LinkCount, lo), 1.9 * 0.9, 1e-12);
    EXPECT_NEAR(aco.pheromone(Param::LinkCount, hi), 0.81 + 0.5, 1e-12);
}

TEST(Bayesian, ExpectedImprovementClosedForm) {
    EXPECT_DOUBLE_EQ(expected_improvement(1.0, 0.5, 0.0, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(expected_improvement(1.0, 1.5, 0.0, 0.0), 0.0);
    // best == mean: EI = sigma * phi(0).
    EXPECT_NEAR(expected_improvement(1.0, 1.0, 0.2, 0.0), 0.2 / std::sqrt(2 * M_PI), 1e-15);
    EXPECT_DOUBLE_EQ(chebyshev({{1.0, 2.0, 3.0}}, {0.5, 0.3, 0.2}), 0.6);
}

TEST(Bayesian, ProposalMaximizesRescoredAcquisition) {
    Bayesian bo(standard().space(), 13, {});
    drive(bo, 10);
    const DesignPoint chosen = bo.propose(1)[0];
    const auto& cands = bo.last_candidates();
    ASSERT_EQ(cands.size(), 512u);
    const auto w = bo.last_weights();
    EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);

    std::vector<std::array<double, kParamCount>> xs;
    std::vector<double> ys;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : bo.history()) {
        xs.push_back(standard().space().scaled(h.design));
        double y = 0.0;
        for (int i = 0; i < 3; ++i) y = std::max(y, w[i] * h.objectives[i]);
        ys.push_back(y);
        best = std::min(best, y);
    }
    double best_ei = -1.0;
    DesignPoint argmax;
    for (const auto& c : cands) {
        const auto x = standard().space().scaled(c.design);
        std::vector<std::pair<double, std::size_t>> dist;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < kParamCount; ++j) s += (x[j] - xs[i][j]) * (x[j] - xs[i][j]);
            dist.emplace_back(std::sqrt(s), i);
        }
        std::sort(dist.begin(), dist.end());
        double wsum = 0.0, mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            wsum += 1.0 / (dist[i].first + 1e-9);
            mean += ys[dist[i].second] / (dist[i].first + 1e-9);
        }
        mean /= wsum;
        for (std::size_t i = 0; i < 5; ++i)
            var += (ys[dist[i].second] - mean) * (ys[dist[i].second] - mean) / (dist[i].first + 1e-9);
        const double sigma = std::sqrt(var / wsum);
        double ei = best - mean;
        if (sigma > 0) {
            const double z = (best - mean) / sigma;
            ei = (best - mean) * 0.5 * std::erfc(-z / std::sqrt(2.0)) + sigma * std::exp(-z * z / 2) / std::sqrt(2 * M_PI);
        } else {
            ei = std::max(ei, 0.0);
        }
        EXPECT_NEAR(c.mean, mean, 1e-9 * std::abs(mean));
        EXPECT_NEAR(c.ei, ei, 1e-9);
        if (ei > best_ei) {
            best_ei = ei;
            argmax = c.design;
        }
    }
    EXPECT_EQ(chosen, argmax);
}
