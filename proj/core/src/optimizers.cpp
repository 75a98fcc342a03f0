// SPDX-License-Identifier: Apache-2.0
#include "lumina/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lumina/errors.hpp"

namespace lumina {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Grid: return "grid";
        case Method::RandomWalk: return "random_walk";
        case Method::Genetic: return "genetic";
        case Method::AntColony: return "ant_colony";
        case Method::Bayesian: return "bayesian";
    }
    return "grid";
}

std::optional<Method> method_from_name(std::string_view name) {
    if (name == "grid" || name == "gs") return Method::Grid;
    if (name == "random_walk" || name == "rw") return Method::RandomWalk;
    if (name == "genetic" || name == "ga") return Method::Genetic;
    if (name == "ant_colony" || name == "aco") return Method::AntColony;
    if (name == "bayesian" || name == "bo") return Method::Bayesian;
    return std::nullopt;
}

nlohmann::json to_json(const OptimizerConfig& c) {
    return {{"grid_points", c.grid_points},
            {"rw_restart_probability", c.rw_restart_probability},
            {"ga_population", c.ga_population},
            {"ga_crossover", c.ga_crossover},
            {"ga_mutation", c.ga_mutation},
            {"aco_evaporation", c.aco_evaporation},
            {"aco_initial_pheromone", c.aco_initial_pheromone},
            {"bo_neighbors", c.bo_neighbors},
            {"bo_candidates", c.bo_candidates},
            {"bo_initial", c.bo_initial},
            {"bo_xi", c.bo_xi}};
}

OptimizerConfig optimizer_config_from_json(const nlohmann::json& j) {
    OptimizerConfig c;
    const auto read = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("grid_points", c.grid_points);
    read("rw_restart_probability", c.rw_restart_probability);
    read("ga_population", c.ga_population);
    read("ga_crossover", c.ga_crossover);
    read("ga_mutation", c.ga_mutation);
    read("aco_evaporation", c.aco_evaporation);
    read("aco_initial_pheromone", c.aco_initial_pheromone);
    read("bo_neighbors", c.bo_neighbors);
    read("bo_candidates", c.bo_candidates);
    read("bo_initial", c.bo_initial);
    read("bo_xi", c.bo_xi);
    if (c.ga_population < 2) throw ConfigError("ga_population must be at least 2");
    if (c.bo_neighbors == 0 || c.bo_candidates == 0) throw ConfigError("bo_neighbors and bo_candidates must be positive");
    if (c.aco_evaporation <= 0.0 || c.aco_evaporation >= 1.0) throw ConfigError("aco_evaporation must lie in (0, 1)");
    return c;
}

Optimizer::Optimizer(const SpaceSpec& space, std::uint64_t seed, OptimizerConfig config)
    : space_(space), rng_(seed), config_(config) {}

void Optimizer::observe(const DesignPoint& design, const ObjectiveVector& objectives) {
    history_.push_back({design, objectives});
    on_observe(history_.back());
}

// ---- grid -------------------------------------------------------------------

GridSearch::GridSearch(const SpaceSpec& space, std::uint64_t seed, OptimizerConfig config)
    : Optimizer(space, seed, config) {
    const std::uint64_t n = space.cardinality();
    const std::uint64_t points = std::max<std::uint64_t>(1, config.grid_points);
    stride_ = std::max<std::uint64_t>(1, n / points);
}

std::vector<DesignPoint> GridSearch::propose(std::size_t batch_size) {
    std::vector<DesignPoint> out;
    const std::uint64_t n = space_.cardinality();
    for (std::size_t i = 0; i < batch_size; ++i) {
        if (next_ >= n || emitted_ >= std::max<std::uint64_t>(1, config_.grid_points)) break;
        out.push_back(space_.decode(next_));
        next_ += stride_;
        ++emitted_;
    }
    if (out.empty()) throw BudgetExhausted("grid sweep complete after " + std::to_string(emitted_) + " points");
    return out;
}

// ---- random walk ------------------------------------------------------------

std::vector<DesignPoint> RandomWalk::propose(std::size_t batch_size) {
    std::vector<DesignPoint> out;
    for (std::size_t i = 0; i < batch_size; ++i) {
        if (!current_ || rng_.bernoulli(config_.rw_restart_probability)) {
            current_ = space_.random_design(rng_);
        } else {
            std::vector<std::pair<Param, int>> moves;
            for (Param p : kAllParams)
                for (int dir : {-1, +1})
                    if (space_.can_step(*current_, p, dir)) moves.emplace_back(p, dir);
            const auto [p, dir] = moves[rng_.index(moves.size())];
            current_ = space_.step_neighbor(*current_, p, dir);
        }
        out.push_back(*current_);
    }
    return out;
}

// ---- genetic ----------------------------------------------------------------

std::vector<DesignPoint> Genetic::propose(std::size_t batch_size) {
    std::vector<DesignPoint> out;
    while (out.size() < batch_size) {
        if (queue_.empty()) {
            if (population_.empty() && offspring_.empty()) {
                for (std::size_t i = 0; i < config_.ga_population; ++i) queue_.push_back(space_.random_design(rng_));
            } else {
                survive();
                for (std::size_t i = 0; i < config_.ga_population; ++i) queue_.push_back(breed_one());
            }
        }
        out.push_back(queue_.front());
        queue_.pop_front();
    }
    return out;
}

void Genetic::survive() {
    std::vector<Observation> pool = population_;
    pool.insert(pool.end(), offspring_.begin(), offspring_.end());
    offspring_.clear();

    std::vector<ObjectiveVector> objs;
    for (const auto& o : pool) objs.push_back(o.objectives);
    const std::vector<int> ranks = non_dominated_ranks(objs);
    std::vector<double> crowd(pool.size(), 0.0);
    const int max_rank = ranks.empty() ? -1 : *std::max_element(ranks.begin(), ranks.end());
    for (int r = 0; r <= max_rank; ++r) {
        std::vector<std::size_t> front;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (ranks[i] == r) front.push_back(i);
        const auto cd = crowding_distance(objs, front);
        for (std::size_t k = 0; k < front.size(); ++k) crowd[front[k]] = cd[k];
    }

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ranks[a] != ranks[b]) return ranks[a] < ranks[b];
        return crowd[a] > crowd[b];
    });
    order.resize(std::min(order.size(), config_.ga_population));

    population_.clear();
    rank_.clear();
    crowding_.clear();
    for (std::size_t i : order) {
        population_.push_back(pool[i]);
        rank_.push_back(ranks[i]);
        crowding_.push_back(crowd[i]);
    }
}

DesignPoint Genetic::breed_one() {
    const auto tournament = [&]() -> const DesignPoint& {
        const std::size_t a = rng_.index(population_.size());
        const std::size_t b = rng_.index(population_.size());
        if (rank_[a] != rank_[b]) return population_[rank_[a] < rank_[b] ? a : b].design;
        return population_[crowding_[a] >= crowding_[b] ? a : b].design;
    };
    const DesignPoint& mom = tournament();
    const DesignPoint& dad = tournament();
    DesignPoint child = mom;
    if (rng_.bernoulli(config_.ga_crossover))
        for (Param p : kAllParams)
            if (rng_.bernoulli(0.5)) child[p] = dad[p];
    for (Param p : kAllParams) {
        if (!rng_.bernoulli(config_.ga_mutation)) continue;
        const int dir = rng_.bernoulli(0.5) ? 1 : -1;
        if (space_.can_step(child, p, dir)) child = space_.step_neighbor(child, p, dir);
        else if (space_.can_step(child, p, -dir)) child = space_.step_neighbor(child, p, -dir);
    }
    // Parents may carry an off-lattice reference value; snap it to a lattice neighbour.
    for (Param p : kAllParams)
        if (!space_.position(p, child[p])) child = space_.step_neighbor(child, p, space_.can_step(child, p, 1) ? 1 : -1);
    return child;
}

// ---- ant colony -------------------------------------------------------------

AntColony::AntColony(const SpaceSpec& space, std::uint64_t seed, OptimizerConfig config)
    : Optimizer(space, seed, config) {
    for (Param p : kAllParams) tau_[index_of(p)].assign(space.values(p).size(), config.aco_initial_pheromone);
}

std::vector<DesignPoint> AntColony::propose(std::size_t batch_size) {
    std::vector<DesignPoint> out;
    for (std::size_t i = 0; i < batch_size; ++i) {
        DesignPoint d;
        for (Param p : kAllParams) d[p] = space_.values(p)[rng_.weighted(tau_[index_of(p)])];
        out.push_back(d);
    }
    return out;
}

void AntColony::on_observe(const Observation& o) {
    int rank = 1;
    for (std::size_t i = 0; i + 1 < history_.size(); ++i)
        if (dominates(history_[i].objectives, o.objectives)) rank = std::max(rank, ranks_[i] + 1);
    ranks_.push_back(rank);

    const double keep = 1.0 - config_.aco_evaporation;
    for (auto& row : tau_)
        for (double& t : row) t *= keep;
    for (Param p : kAllParams)
        if (auto pos = space_.position(p, o.design[p])) tau_[index_of(p)][*pos] += 1.0 / rank;
}

// ---- bayesian ---------------------------------------------------------------

double chebyshev(const ObjectiveVector& obj, const std::array<double, 3>& weights) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s = std::max(s, weights[i] * obj[i]);
    return s;
}

double expected_improvement(double best, double mean, double sigma, double xi) {
    const double improvement = best - mean - xi;
    if (sigma <= 0.0) return std::max(improvement, 0.0);
    const double z = improvement / sigma;
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    return improvement * cdf + sigma * pdf;
}

std::vector<DesignPoint> Bayesian::propose(std::size_t batch_size) {
    std::vector<DesignPoint> out;
    for (std::size_t b = 0; b < batch_size; ++b, ++proposed_) {
        if (history_.empty() || history_.size() < config_.bo_initial || proposed_ < config_.bo_initial) {
            out.push_back(space_.random_design(rng_));
            continue;
        }
        double total = 0.0;
        for (double& w : weights_) {
            w = rng_.uniform() + 1e-12;
            total += w;
        }
        for (double& w : weights_) w /= total;

        std::vector<std::array<double, kParamCount>> xs;
        std::vector<double> ys;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& h : history_) {
            xs.push_back(space_.scaled(h.design));
            ys.push_back(chebyshev(h.objectives, weights_));
            best = std::min(best, ys.back());
        }

        candidates_.clear();
        const std::size_t k = std::min(config_.bo_neighbors, xs.size());
        std::vector<std::pair<double, std::size_t>> dist(xs.size());
        for (std::size_t c = 0; c < config_.bo_candidates; ++c) {
            Candidate cand;
            cand.design = space_.random_design(rng_);
            const auto x = space_.scaled(cand.design);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < kParamCount; ++j) d2 += (x[j] - xs[i][j]) * (x[j] - xs[i][j]);
                dist[i] = {std::sqrt(d2), i};
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
            double wsum = 0.0;
            double mean = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double w = 1.0 / (dist[i].first + 1e-9);
                wsum += w;
                mean += w * ys[dist[i].second];
            }
            mean /= wsum;
            double var = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double w = 1.0 / (dist[i].first + 1e-9);
                var += w * (ys[dist[i].second] - mean) * (ys[dist[i].second] - mean);
            }
            cand.mean = mean;
            cand.sigma = std::sqrt(var / wsum);
            cand.ei = expected_improvement(best, cand.mean, cand.sigma, config_.bo_xi);
            candidates_.push_back(cand);
        }
        std::size_t arg = 0;
        for (std::size_t c = 1; c < candidates_.size(); ++c)
            if (candidates_[c].ei > candidates_[arg].ei) arg = c;
        out.push_back(candidates_[arg].design);
    }
    return out;
}

std::unique_ptr<Optimizer> make_optimizer(Method m, const SpaceSpec& space, std::uint64_t seed,
                                          const OptimizerConfig& config) {
    switch (m) {
        case Method::Grid: return std::make_unique<GridSearch>(space, seed, config);
        case Method::RandomWalk: return std::make_unique<RandomWalk>(space, seed, config);
        case Method::Genetic: return std::make_unique<Genetic>(space, seed, config);
        case Method::AntColony: return std::make_unique<AntColony>(space, seed, config);
        case Method::Bayesian: return std::make_unique<Bayesian>(space, seed, config);
    }
    throw ConfigError("unknown optimizer");
}

}  // namespace lumina
