// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumina/design_space.hpp"
#include "lumina/pareto.hpp"
#include "lumina/rng.hpp"

namespace lumina {

enum class Method { Grid, RandomWalk, Genetic, AntColony, Bayesian };

std::string_view method_name(Method m);
/// Accepts the long names and the short forms gs, rw, ga, aco, bo.
std::optional<Method> method_from_name(std::string_view name);

struct OptimizerConfig {
    std::size_t grid_points = 1000;  ///< sweep length; the stride is cardinality / grid_points
    double rw_restart_probability = 0.05;
    std::size_t ga_population = 20;
    double ga_crossover = 0.9;
    double ga_mutation = 0.1;
    double aco_evaporation = 0.1;
    double aco_initial_pheromone = 1.0;
    std::size_t bo_neighbors = 5;
    std::size_t bo_candidates = 512;
    std::size_t bo_initial = 10;
    double bo_xi = 0.0;
};

nlohmann::json to_json(const OptimizerConfig& c);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);

struct Observation {
    DesignPoint design;
    ObjectiveVector objectives;
};

/// Propose/observe explorer. Proposals are deterministic given the seed and
/// the sequence of observations, and always lie on the lattice.
class Optimizer {
public:
    Optimizer(const SpaceSpec& space, std::uint64_t seed, OptimizerConfig config);
    virtual ~Optimizer() = default;

    virtual Method method() const = 0;
    virtual std::vector<DesignPoint> propose(std::size_t batch_size) = 0;
    void observe(const DesignPoint& design, const ObjectiveVector& objectives);

    const std::vector<Observation>& history() const { return history_; }
    const OptimizerConfig& config() const { return config_; }

protected:
    virtual void on_observe(const Observation&) {}

    const SpaceSpec& space_;
    Rng rng_;
    OptimizerConfig config_;
    std::vector<Observation> history_;
};

/// Evenly strided sweep over the mixed-radix enumeration, starting at index 0.
class GridSearch : public Optimizer {
public:
    GridSearch(const SpaceSpec& space, std::uint64_t seed, OptimizerConfig config);
    Method method() const override { return Method::Grid; }
    /// Throws BudgetExhausted once the sweep is complete.
    std::vector<DesignPoint> propose(std::size_t batch_size) override;

    std::uint64_t stride() const { return stride_; }

private:
    std::uint64_t stride_ = 1;
    std::uint64_t next_ = 0;
    std::uint64_t emitted_ = 0;
};

/// One-step moves on one random parameter; occasional uniform restarts.
class RandomWalk : public Optimizer {
public:
    using Optimizer::Optimizer;
    Method method() const override { return Method::RandomWalk; }
    std::vector<DesignPoint> propose(std::size_t batch_size) override;

private:
    std::optional<DesignPoint> current_;
};

/// NSGA-II: binary tournament on (rank, crowding), uniform crossover,
/// one-step mutation, elitist survival over parents plus offspring.
class Genetic : public Optimizer {
public:
    using Optimizer::Optimizer;
    Method method() const override { return Method::Genetic; }
    std::vector<DesignPoint> propose(std::size_t batch_size) override;

    const std::vector<Observation>& population() const { return population_; }

protected:
    void on_observe(const Observation& o) override { offspring_.push_back(o); }

private:
    void survive();
    DesignPoint breed_one();

    std::vector<Observation> population_;
    std::vector<Observation> offspring_;
    std::vector<int> rank_;
    std::vector<double> crowding_;
    std::deque<DesignPoint> queue_;
};

/// Per-(parameter, value) pheromone; each parameter sampled in proportion to
/// its pheromone row. Every observation evaporates the table and deposits
/// 1/rank on the observed cells, where rank is the point's dominance depth
/// among the history at the time it arrives.
class AntColony : public Optimizer {
public:
    AntColony(const SpaceSpec& space, std::uint64_t seed, OptimizerConfig config);
    Method method() const override { return Method::AntColony; }
    std::vector<DesignPoint> propose(std::size_t batch_size) override;

    double pheromone(Param p, std::size_t value_index) const { return tau_[index_of(p)][value_index]; }

protected:
    void on_observe(const Observation& o) override;

private:
    std::array<std::vector<double>, kParamCount> tau_;
    std::vector<int> ranks_;
};

/// kNN surrogate + expected improvement on a random-weight Chebyshev scalarization.
class Bayesian : public Optimizer {
public:
    using Optimizer::Optimizer;
    Method method() const override { return Method::Bayesian; }
    std::vector<DesignPoint> propose(std::size_t batch_size) override;

    struct Candidate {
        DesignPoint design;
        double mean = 0.0;
        double sigma = 0.0;
        double ei = 0.0;
    };
    /// Candidates and weights behind the most recent model-based proposal.
    const std::vector<Candidate>& last_candidates() const { return candidates_; }
    const std::array<double, 3>& last_weights() const { return weights_; }

private:
    std::vector<Candidate> candidates_;
    std::array<double, 3> weights_{};
    std::size_t proposed_ = 0;
};

/// max_i w_i * obj_i
double chebyshev(const ObjectiveVector& obj, const std::array<double, 3>& weights);
double expected_improvement(double best, double mean, double sigma, double xi);

std::unique_ptr<Optimizer> make_optimizer(Method m, const SpaceSpec& space, std::uint64_t seed,
                                          const OptimizerConfig& config = {});

}  // namespace lumina
