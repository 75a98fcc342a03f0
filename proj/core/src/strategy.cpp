// SPDX-License-Identifier: Apache-2.0
#include "lumina/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "lumina/errors.hpp"
#include "lumina/pareto.hpp"

namespace lumina {

std::string StrategyDirective::fingerprint() const {
    std::vector<std::string> moves;
    for (const auto& b : boosts) moves.push_back(std::string(param_name(b.param)) + (b.steps > 0 ? "+" : "-"));
    if (tradeoff) moves.push_back(std::string(param_name(tradeoff->param)) + (tradeoff->steps > 0 ? "+" : "-"));
    std::sort(moves.begin(), moves.end());
    std::string out(resource_name(target_bottleneck));
    for (const auto& m : moves) out += "|" + m;
    return out;
}

void StrategyDirective::validate() const {
    if (boosts.empty()) throw InvalidDirective("directive has no boost");
    std::vector<Param> seen;
    for (const auto& b : boosts) {
        if (b.steps <= 0) throw InvalidDirective("boost steps must be positive");
        seen.push_back(b.param);
    }
    if (tradeoff) {
        if (tradeoff->steps >= 0) throw InvalidDirective("tradeoff steps must be negative");
        seen.push_back(tradeoff->param);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw InvalidDirective("directive names a parameter twice");
}

nlohmann::json to_json(const StrategyDirective& d) {
    nlohmann::json boosts = nlohmann::json::array();
    for (const auto& b : d.boosts) boosts.push_back({{"parameter", param_name(b.param)}, {"steps", b.steps}});
    nlohmann::json tradeoff = nullptr;
    if (d.tradeoff) tradeoff = {{"parameter", param_name(d.tradeoff->param)}, {"steps", d.tradeoff->steps}};
    return {{"target_bottleneck", resource_name(d.target_bottleneck)},
            {"boosts", boosts},
            {"tradeoff", tradeoff},
            {"rationale", d.rationale}};
}

std::string_view outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Improved: return "improved";
        case Outcome::Neutral: return "neutral";
        case Outcome::Failed: return "failed";
    }
    return "neutral";
}

std::string_view sample_kind_name(SampleKind k) {
    switch (k) {
        case SampleKind::Initial: return "initial";
        case SampleKind::Sensitivity: return "sensitivity";
        case SampleKind::Directive: return "directive";
        case SampleKind::Restart: return "restart";
        case SampleKind::Optimizer: return "optimizer";
    }
    return "initial";
}

void TrajectoryMemory::add(TrajectorySample s) {
    designs_.insert(s.eval.design);
    samples_.push_back(std::move(s));
}

bool TrajectoryMemory::blocked(const std::string& fingerprint) const {
    return std::any_of(failures_.begin(), failures_.end(),
                       [&](const FailurePattern& f) { return f.fingerprint == fingerprint; });
}

Metric choose_target(const PpaMetrics& m, std::size_t round, double margin) {
    if (m.ttft_n >= m.tpot_n * (1.0 + margin)) return Metric::Ttft;
    if (m.tpot_n >= m.ttft_n * (1.0 + margin)) return Metric::Tpot;
    return round % 2 == 0 ? Metric::Ttft : Metric::Tpot;
}

Outcome classify(const Evaluation& prev, const Evaluation& next, Metric target, double threshold) {
    const double before = metric_value(prev, target);
    const double after = metric_value(next, target);
    if (dominates(next.objectives(), prev.objectives()) || after <= before * (1.0 - threshold))
        return Outcome::Improved;
    if (after > before) return Outcome::Failed;
    return Outcome::Neutral;
}

namespace {

double capability_loss(const SeContext& ctx, Param p) {
    const HardwareDerived now = derive_hw(ctx.current.design, ctx.consts);
    const HardwareDerived after = derive_hw(ctx.space.step_neighbor(ctx.current.design, p, -1), ctx.consts);
    double loss = 0.0;
    const auto rel = [&](double a, double b) {
        if (a > 0.0) loss = std::max(loss, (a - b) / a);
    };
    rel(now.peak_tensor_flops, after.peak_tensor_flops);
    rel(now.peak_vector_flops, after.peak_vector_flops);
    rel(now.mem_bw, after.mem_bw);
    rel(now.net_bw, after.net_bw);
    return loss;
}

// Largest stall share, in the target phase, among resources p relieves.
double criticality(const SeContext& ctx, Param p) {
    const PhaseReport& report = ctx.current.report.phase(phase_of(ctx.target));
    double c = 0.0;
    for (Resource r : kAllResources)
        if (ctx.ahk.relieves(p, r)) c = std::max(c, report.share(r));
    return c;
}

// Relative per-step impact on a latency metric, bucketed so that negligible
// differences do not decide the order.
long impact_bucket(const SeContext& ctx, Param p, Metric m) {
    const double base = metric_value(ctx.current, m);
    const double rel = base > 0.0 ? std::abs(ctx.ahk.at(p, m).magnitude) / base : 0.0;
    return static_cast<long>(std::floor(rel / 0.005));
}

Metric other_latency(Metric m) { return m == Metric::Ttft ? Metric::Tpot : Metric::Ttft; }

}  // namespace

std::vector<Param> rank_boosts(const SeContext& ctx, Resource resource) {
    const Metric cap = capability_metric(resource);
    std::vector<std::tuple<double, double, std::size_t>> keyed;
    for (Param p : ctx.ahk.relievers(resource)) {
        if (!ctx.space.can_step(ctx.current.design, p, +1)) continue;
        const double cap_gain = ctx.ahk.at(p, cap).magnitude;
        const double target_gain = -ctx.ahk.at(p, ctx.target).magnitude;
        keyed.emplace_back(-cap_gain, -target_gain, index_of(p));
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<Param> out;
    for (const auto& k : keyed) out.push_back(kAllParams[std::get<2>(k)]);
    return out;
}

std::vector<Param> rank_tradeoffs(const SeContext& ctx, const std::vector<Param>& exclude) {
    std::vector<std::tuple<long, long, double, double, double, std::size_t>> keyed;
    for (Param p : kAllParams) {
        if (std::find(exclude.begin(), exclude.end(), p) != exclude.end()) continue;
        const double area_mag = ctx.ahk.at(p, Metric::Area).magnitude;
        if (!(area_mag > 0.0)) continue;
        if (!ctx.space.can_step(ctx.current.design, p, -1)) continue;
        keyed.emplace_back(impact_bucket(ctx, p, ctx.target), impact_bucket(ctx, p, other_latency(ctx.target)),
                           criticality(ctx, p), capability_loss(ctx, p), -area_mag, index_of(p));
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<Param> out;
    for (const auto& k : keyed) out.push_back(kAllParams[std::get<5>(k)]);
    return out;
}

namespace {

bool admissible(const SeContext& ctx, const StrategyDirective& d) {
    if (ctx.tm.blocked(d.fingerprint())) return false;
    try {
        const Applied a = ee_apply(ctx.current.design, d, ctx.space);
        return !a.clamped && !ctx.tm.visited(a.design) && ctx.space.is_valid(a.design);
    } catch (const InvalidDirective&) {
        return false;
    }
}

std::string rationale_for(const SeContext& ctx, Resource r, const StrategyDirective& d) {
    const PhaseReport& report = ctx.current.report.phase(phase_of(ctx.target));
    std::string s = std::string(metric_name(ctx.target)) + " is bound by " + std::string(resource_name(r)) + " (" +
                    std::to_string(static_cast<int>(std::lround(report.share(r) * 100.0))) + "% of phase time); raise";
    for (const auto& b : d.boosts) s += " " + std::string(param_name(b.param));
    if (d.tradeoff) s += ", give back area from " + std::string(param_name(d.tradeoff->param));
    return s;
}

}  // namespace

StrategyDirective se_propose(const SeContext& ctx) {
    const PhaseReport& report = ctx.current.report.phase(phase_of(ctx.target));
    const Resource resource = report.dominant;
    const std::vector<Param> boosts = rank_boosts(ctx, resource);
    const bool with_tradeoff = ctx.aggressiveness >= 2;
    const std::size_t boost_count = ctx.aggressiveness >= 3 ? 2 : 1;

    std::vector<std::vector<Param>> boost_sets;
    if (boost_count == 1) {
        for (Param b : boosts) boost_sets.push_back({b});
    } else {
        for (std::size_t i = 0; i < boosts.size(); ++i)
            for (std::size_t j = i + 1; j < boosts.size(); ++j) boost_sets.push_back({boosts[i], boosts[j]});
    }

    for (const auto& set : boost_sets) {
        StrategyDirective d;
        d.target_bottleneck = resource;
        for (Param b : set) d.boosts.push_back({b, +1});
        std::vector<std::optional<Param>> trades;
        if (with_tradeoff)
            for (Param t : rank_tradeoffs(ctx, set)) trades.emplace_back(t);
        trades.emplace_back(std::nullopt);
        for (const auto& t : trades) {
            d.tradeoff.reset();
            if (t) d.tradeoff = StepChange{*t, -1};
            if (!admissible(ctx, d)) continue;
            d.rationale = rationale_for(ctx, resource, d);
            return d;
        }
    }
    throw Exhausted("every directive on " + std::string(resource_name(resource)) + " is blocked");
}

Applied ee_apply(const DesignPoint& d, const StrategyDirective& directive, const SpaceSpec& space) {
    directive.validate();
    Applied out{d, false, {}};
    const auto move = [&](const StepChange& c) {
        int steps = c.steps;
        while (steps != 0 && !space.can_step(out.design, c.param, steps)) steps += steps > 0 ? -1 : 1;
        if (steps != c.steps) {
            out.clamped = true;
            out.clamped_params.push_back(c.param);
        }
        out.design = space.step_neighbor(out.design, c.param, steps);
    };
    for (const auto& b : directive.boosts) move(b);
    if (directive.tradeoff) move(*directive.tradeoff);
    if (out.design == d) throw InvalidDirective("no move of the directive applies to " + d.to_string());
    return out;
}

void refine(TrajectoryMemory& tm, InfluenceMap& ahk, const SpaceSpec& space, double alpha) {
    const auto& samples = tm.samples();
    for (std::size_t i = std::max<std::size_t>(tm.refined_upto, 1); i < samples.size(); ++i) {
        const TrajectorySample& prev = samples[i - 1];
        const TrajectorySample& next = samples[i];
        if (next.outcome == Outcome::Failed && next.directive)
            tm.add_failure({next.directive->target_bottleneck, next.directive->fingerprint()});

        const std::vector<Param> changed = changed_params(prev.eval.design, next.eval.design);
        if (changed.empty() || changed.size() > 2) continue;
        std::array<double, 2> steps{};
        for (std::size_t k = 0; k < changed.size(); ++k)
            steps[k] = space.lattice_position(changed[k], next.eval.design[changed[k]]) -
                       space.lattice_position(changed[k], prev.eval.design[changed[k]]);

        for (Metric m : kAllMetrics) {
            const double delta = metric_value(next.eval, m) - metric_value(prev.eval, m);
            std::array<double, 2> estimate{};
            for (std::size_t k = 0; k < changed.size(); ++k) {
                double own = delta;
                if (changed.size() == 2) {
                    const Param other = changed[1 - k];
                    own -= ahk.at(other, m).magnitude * steps[1 - k];
                }
                estimate[k] = own / steps[k];
            }
            for (std::size_t k = 0; k < changed.size(); ++k) {
                const Influence& cell = ahk.at(changed[k], m);
                if (cell.hard_zero) continue;
                const double updated =
                    cell.measured ? alpha * estimate[k] + (1.0 - alpha) * cell.magnitude : estimate[k];
                ahk.set_magnitude(changed[k], m, updated, InfluenceSource::Refined);
            }
        }
    }
    tm.refined_upto = samples.size();
}

nlohmann::json to_json(const TrajectorySample& s) {
    const auto& m = s.eval.metrics;
    nlohmann::json j;
    j["step"] = s.step;
    j["kind"] = sample_kind_name(s.kind);
    j["design"] = to_json(s.eval.design);
    j["metrics"] = to_json(m);
    j["stall_shares"] = {{"prefill", to_json(s.eval.report.prefill)["stall_share"]},
                         {"decode", to_json(s.eval.report.decode)["stall_share"]}};
    j["dominant"] = {{"prefill", resource_name(s.eval.report.prefill.dominant)},
                     {"decode", resource_name(s.eval.report.decode.dominant)}};
    j["directive"] = s.directive ? to_json(*s.directive) : nlohmann::json(nullptr);
    j["target"] = s.target ? nlohmann::json(metric_name(*s.target)) : nlohmann::json(nullptr);
    j["outcome"] = s.outcome ? nlohmann::json(outcome_name(*s.outcome)) : nlohmann::json(nullptr);
    j["dominates_reference"] = s.dominates_reference;
    j["better_than_reference"] = s.better_than_reference;
    j["clamped"] = s.clamped;
    j["fallback"] = s.fallback;
    if (!s.note.empty()) j["note"] = s.note;
    return j;
}

}  // namespace lumina
