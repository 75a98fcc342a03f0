// SPDX-License-Identifier: Apache-2.0
#include "lumina/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "lumina/influence.hpp"
#include "lumina/prompts.hpp"

namespace lumina {

namespace {

constexpr double kTieTolerance = 1e-9;
constexpr std::array<const char*, 4> kLetters{"A", "B", "C", "D"};

}  // namespace

std::string_view task_name(Task t) {
    switch (t) {
        case Task::Bottleneck: return "bottleneck";
        case Task::Prediction: return "prediction";
        case Task::Tuning: return "tuning";
    }
    return "bottleneck";
}

std::optional<Task> task_from_name(std::string_view name) {
    for (Task t : kAllTasks)
        if (task_name(t) == name) return t;
    return std::nullopt;
}

std::size_t SuiteCounts::of(Task t) const {
    switch (t) {
        case Task::Bottleneck: return bottleneck;
        case Task::Prediction: return prediction;
        case Task::Tuning: return tuning;
    }
    return 0;
}

// ---- targets ----------------------------------------------------------------

namespace {

std::string_view kind_name(AppTarget::Kind k) {
    switch (k) {
        case AppTarget::Kind::LayerPrefill: return "layer_prefill";
        case AppTarget::Kind::LayerDecode: return "layer_decode";
        case AppTarget::Kind::Matmul: return "matmul";
        case AppTarget::Kind::Layernorm: return "layernorm";
    }
    return "layer_prefill";
}

AppTarget draw_target(Rng& rng) {
    static constexpr std::array<std::int64_t, 6> kM{1, 8, 64, 512, 2048, 16384};
    static constexpr std::array<std::int64_t, 4> kKN{1024, 4096, 12288, 49152};
    static constexpr std::array<std::int64_t, 3> kRows{8, 2048, 16384};
    static constexpr std::array<std::int64_t, 2> kWidth{4096, 12288};
    const std::array<double, 4> weights{0.35, 0.35, 0.2, 0.1};
    AppTarget t;
    t.kind = static_cast<AppTarget::Kind>(rng.weighted(weights));
    if (t.kind == AppTarget::Kind::Matmul) {
        t.m = kM[rng.index(kM.size())];
        t.k = kKN[rng.index(kKN.size())];
        t.n = kKN[rng.index(kKN.size())];
    } else if (t.kind == AppTarget::Kind::Layernorm) {
        t.m = kRows[rng.index(kRows.size())];
        t.k = kWidth[rng.index(kWidth.size())];
    }
    return t;
}

}  // namespace

std::string AppTarget::describe() const {
    switch (kind) {
        case Kind::LayerPrefill: return "one GPT-3 layer, prefill (time to first token)";
        case Kind::LayerDecode: return "one GPT-3 layer, decode (time per output token)";
        case Kind::Matmul:
            return "a single FP16 matmul with M=" + std::to_string(m) + ", K=" + std::to_string(k) +
                   ", N=" + std::to_string(n);
        case Kind::Layernorm:
            return "a single FP16 layernorm over " + std::to_string(m) + " rows of width " + std::to_string(k);
    }
    return {};
}

nlohmann::json to_json(const AppTarget& t) {
    return {{"kind", kind_name(t.kind)}, {"m", t.m}, {"k", t.k}, {"n", t.n}};
}

AppTarget app_target_from_json(const nlohmann::json& j) {
    AppTarget t;
    const std::string kind = j.at("kind").get<std::string>();
    bool found = false;
    for (auto k : {AppTarget::Kind::LayerPrefill, AppTarget::Kind::LayerDecode, AppTarget::Kind::Matmul,
                   AppTarget::Kind::Layernorm})
        if (kind_name(k) == kind) {
            t.kind = k;
            found = true;
        }
    if (!found) throw ConfigError("unknown application target " + kind);
    t.m = j.value("m", std::int64_t{0});
    t.k = j.value("k", std::int64_t{0});
    t.n = j.value("n", std::int64_t{0});
    return t;
}

PhaseReport target_report(const Evaluator& ev, const DesignPoint& d, const AppTarget& target) {
    const int eb = ev.workload().model.elem_bytes;
    switch (target.kind) {
        case AppTarget::Kind::LayerPrefill: return ev.evaluate_graph(d, ev.prefill());
        case AppTarget::Kind::LayerDecode: return ev.evaluate_graph(d, ev.decode());
        case AppTarget::Kind::Matmul: return ev.evaluate_graph(d, single_matmul(target.m, target.k, target.n, eb));
        case AppTarget::Kind::Layernorm: return ev.evaluate_graph(d, single_layernorm(target.m, target.k, eb));
    }
    return {};
}

// ---- numbers ----------------------------------------------------------------

double round_sig(double x, int digits) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    const double exponent = std::floor(std::log10(std::abs(x))) - (digits - 1);
    const double scale = std::pow(10.0, exponent);
    double r = std::round(x / scale) * scale;
    // Re-derive from text so that 1240 and 1240.0000000002 compare equal.
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, r);
    r = std::strtod(buf, nullptr);
    return r;
}

std::array<double, 3> distractor_values(double key) {
    return {round_sig(key * 0.7), round_sig(key * 1.2), round_sig(key * 1.5)};
}

std::string format_sig(double x) {
    const double r = round_sig(x);
    const double mag = std::abs(r);
    int decimals = 0;
    if (mag > 0.0 && mag < 100.0) decimals = 2 - static_cast<int>(std::floor(std::log10(mag)));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", std::max(decimals, 0), r);
    return buf;
}

// ---- helpers ----------------------------------------------------------------

namespace {

void shuffle_options(Rng& rng, std::array<std::size_t, 4>& perm) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 3; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
}

std::string design_line(const DesignPoint& d) {
    std::string s;
    for (Param p : kAllParams) {
        if (!s.empty()) s += ", ";
        s += std::string(param_name(p)) + "=" + std::to_string(d[p]);
    }
    return s;
}

std::string shares_line(const PhaseReport& r) {
    std::ostringstream os;
    os.precision(3);
    bool first = true;
    for (Resource res : kAllResources) {
        if (!first) os << ", ";
        first = false;
        os << resource_name(res) << ' ' << r.share(res) * 100.0 << '%';
    }
    return os.str();
}

nlohmann::json shares_json(const PhaseReport& r) { return to_json(r)["stall_share"]; }

std::string compose(const std::string& body) { return bench_system_prompt() + "\n" + body; }

std::string move_text(const DesignPoint& d, const StepChange& m, const SpaceSpec& space) {
    const DesignPoint to = space.step_neighbor(d, m.param, m.steps);
    return std::string(m.steps > 0 ? "increase " : "decrease ") + std::string(param_name(m.param)) + " from " +
           std::to_string(d[m.param]) + " to " + std::to_string(to[m.param]);
}

StepChange move_from_json(const nlohmann::json& j) {
    const auto p = param_from_name(j.at("parameter").get<std::string>());
    if (!p) throw ConfigError("unknown parameter in question context");
    return {*p, j.at("steps").get<int>()};
}

enum class PredMetric { Area, Ttft, Tpot };

std::string_view pred_name(PredMetric m) {
    switch (m) {
        case PredMetric::Area: return "area";
        case PredMetric::Ttft: return "ttft";
        case PredMetric::Tpot: return "tpot";
    }
    return "area";
}

std::string_view pred_unit(PredMetric m) {
    switch (m) {
        case PredMetric::Area: return "mm^2";
        case PredMetric::Ttft: return "ms";
        case PredMetric::Tpot: return "us";
    }
    return "";
}

PredMetric pred_from_name(const std::string& s) {
    if (s == "ttft") return PredMetric::Ttft;
    if (s == "tpot") return PredMetric::Tpot;
    return PredMetric::Area;
}

// Metric in the unit shown to the agent.
double display_value(const Evaluator& ev, const DesignPoint& d, PredMetric m) {
    if (m == PredMetric::Area) return area(d, ev.constants());
    const Evaluation e = ev.evaluate(d);
    return m == PredMetric::Ttft ? e.metrics.ttft_s * 1e3 : e.metrics.tpot_s * 1e6;
}

double tuning_objective(const Evaluation& e, const std::string& objective) {
    return objective == "tpot" ? e.metrics.tpot_n : e.metrics.ttft_n;
}

std::vector<double> bottleneck_times(const BenchmarkQuestion& q, const Evaluator& ev) {
    const DesignPoint d = design_from_json(q.context.at("design"));
    const AppTarget target = app_target_from_json(q.context.at("target"));
    std::vector<double> out;
    for (const auto& mj : q.context.at("options")) {
        const StepChange m = move_from_json(mj);
        out.push_back(target_report(ev, ev.space().step_neighbor(d, m.param, m.steps), target).time);
    }
    return out;
}

}  // namespace

// ---- bottleneck ---------------------------------------------------------------

BenchmarkQuestion make_bottleneck_question(const Evaluator& ev, const DesignPoint& d, const AppTarget& target,
                                           const std::array<StepChange, 4>& moves, Rng& rng) {
    const SpaceSpec& space = ev.space();
    const PhaseReport base = target_report(ev, d, target);
    std::array<double, 4> times{};
    int changed = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        times[i] = target_report(ev, space.step_neighbor(d, moves[i].param, moves[i].steps), target).time;
        if (std::abs(times[i] - base.time) > kTieTolerance * base.time) ++changed;
    }
    if (changed < 2) throw DegenerateDraw("fewer than two options change the latency");
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    const std::size_t best = order[0];
    if (!(times[best] < base.time * (1.0 - kTieTolerance)))
        throw DegenerateDraw("no option reduces the latency");
    if (!(times[order[1]] - times[best] > kTieTolerance * base.time))
        throw DegenerateDraw("two options tie for the best latency");

    std::array<std::size_t, 4> perm{};
    shuffle_options(rng, perm);

    BenchmarkQuestion q;
    q.task = Task::Bottleneck;
    nlohmann::json opts = nlohmann::json::array();
    nlohmann::json evidence = nlohmann::json::array();
    for (std::size_t slot = 0; slot < 4; ++slot) {
        const StepChange& m = moves[perm[slot]];
        q.options[slot] = move_text(d, m, space);
        opts.push_back({{"parameter", param_name(m.param)},
                        {"steps", m.steps},
                        {"to", space.step_neighbor(d, m.param, m.steps)[m.param]}});
        evidence.push_back({{"option", kLetters[slot]}, {"latency_s", times[perm[slot]]}});
        if (perm[slot] == best) q.answer_index = static_cast<int>(slot);
    }
    std::ostringstream body;
    body << "Application target: " << target.describe() << ". Objective: minimize its latency.\n"
         << "Current design: " << design_line(d) << "\n"
         << "Performance counters (share of time bound by each resource): " << shares_line(base) << "\n"
         << "Which single adjustment reduces the latency the most?\n";
    for (std::size_t slot = 0; slot < 4; ++slot) body << kLetters[slot] << ". " << q.options[slot] << "\n";
    q.prompt = compose(body.str());
    q.context = {{"design", to_json(d)},
                 {"target", to_json(target)},
                 {"stall_share", shares_json(base)},
                 {"dominant", resource_name(base.dominant)},
                 {"base_latency_s", base.time},
                 {"options", opts}};
    q.provenance = {{"evaluations", evidence}, {"base_latency_s", base.time}};
    return q;
}

BenchmarkQuestion gen_bottleneck(Rng& rng, const Evaluator& ev) {
    const SpaceSpec& space = ev.space();
    for (int attempt = 0; attempt < 64; ++attempt) {
        const DesignPoint d = space.random_design(rng);
        const AppTarget target = draw_target(rng);
        std::vector<Param> params(kAllParams.begin(), kAllParams.end());
        for (std::size_t i = params.size() - 1; i > 0; --i) std::swap(params[i], params[rng.index(i + 1)]);
        std::vector<StepChange> moves;
        for (Param p : params) {
            std::vector<int> dirs;
            for (int dir : {-1, +1})
                if (space.can_step(d, p, dir)) dirs.push_back(dir);
            if (dirs.empty()) continue;
            moves.push_back({p, dirs[rng.index(dirs.size())]});
            if (moves.size() == 4) break;
        }
        if (moves.size() < 4) continue;
        try {
            return make_bottleneck_question(ev, d, target, {moves[0], moves[1], moves[2], moves[3]}, rng);
        } catch (const DegenerateDraw&) {
        }
    }
    throw DegenerateDraw("no usable bottleneck question after 64 draws");
}

// ---- prediction -------------------------------------------------------------

BenchmarkQuestion gen_prediction(Rng& rng, const Evaluator& ev, std::size_t k_examples) {
    if (k_examples < 2) throw ConfigError("prediction questions need at least two exemplars");
    const SpaceSpec& space = ev.space();
    static constexpr std::array<PredMetric, 3> kMetrics{PredMetric::Area, PredMetric::Ttft, PredMetric::Tpot};
    const std::array<double, 3> weights{0.5, 0.25, 0.25};
    const PredMetric metric = kMetrics[rng.weighted(weights)];

    const DesignPoint base = space.random_design(rng);
    std::vector<Param> params(kAllParams.begin(), kAllParams.end());
    for (std::size_t i = params.size() - 1; i > 0; --i) std::swap(params[i], params[rng.index(i + 1)]);
    std::vector<StepChange> perturb;
    for (Param p : params) {
        if (perturb.size() + 1 >= k_examples) break;
        std::vector<int> dirs;
        for (int dir : {-1, +1})
            if (space.can_step(base, p, dir)) dirs.push_back(dir);
        if (!dirs.empty()) perturb.push_back({p, dirs[rng.index(dirs.size())]});
    }
    if (perturb.empty()) throw DegenerateDraw("no perturbation available");

    std::size_t changes = 1;
    if (perturb.size() >= 2 && !rng.bernoulli(0.1)) changes = perturb.size() >= 3 ? 2 + rng.index(2) : 2;
    std::vector<std::size_t> picks(perturb.size());
    std::iota(picks.begin(), picks.end(), 0);
    for (std::size_t i = picks.size() - 1; i > 0; --i) std::swap(picks[i], picks[rng.index(i + 1)]);
    picks.resize(changes);
    std::sort(picks.begin(), picks.end());
    DesignPoint heldout = base;
    for (std::size_t i : picks) heldout = space.step_neighbor(heldout, perturb[i].param, perturb[i].steps);

    nlohmann::json exemplars = nlohmann::json::array();
    std::ostringstream body;
    body.precision(6);
    const auto unit = std::string(pred_unit(metric));
    body << "Application target: one GPT-3 layer (batch 8, 8-way tensor parallel).\n"
         << "Known " << pred_name(metric) << " values (" << unit << "):\n";
    const double base_value = display_value(ev, base, metric);
    exemplars.push_back({{"design", to_json(base)}, {"value", base_value}});
    body << "  " << design_line(base) << " -> " << base_value << "\n";
    for (const auto& m : perturb) {
        const DesignPoint d = space.step_neighbor(base, m.param, m.steps);
        const double v = display_value(ev, d, metric);
        exemplars.push_back({{"design", to_json(d)}, {"value", v}});
        body << "  " << design_line(d) << " -> " << v << "\n";
    }
    const double exact = display_value(ev, heldout, metric);
    const double key = round_sig(exact);
    const auto distract = distractor_values(key);
    std::array<double, 4> values{key, distract[0], distract[1], distract[2]};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
            if (values[i] == values[j]) throw DegenerateDraw("distractor collides with the key");

    std::array<std::size_t, 4> perm{};
    shuffle_options(rng, perm);
    BenchmarkQuestion q;
    q.task = Task::Prediction;
    nlohmann::json option_values = nlohmann::json::array();
    for (std::size_t slot = 0; slot < 4; ++slot) {
        q.options[slot] = format_sig(values[perm[slot]]) + " " + unit;
        option_values.push_back(values[perm[slot]]);
        if (perm[slot] == 0) q.answer_index = static_cast<int>(slot);
    }
    body << "Model description:\n" << area_model_text(ev.constants());
    if (metric != PredMetric::Area) body << model_structure_text(ev.constants());
    body << "What is the " << pred_name(metric) << " of " << design_line(heldout) << "?\n";
    for (std::size_t slot = 0; slot < 4; ++slot) body << kLetters[slot] << ". " << q.options[slot] << "\n";
    q.prompt = compose(body.str());
    q.context = {{"metric", pred_name(metric)},
                 {"unit", unit},
                 {"base", to_json(base)},
                 {"exemplars", exemplars},
                 {"heldout", to_json(heldout)},
                 {"option_values", option_values}};
    q.provenance = {{"heldout_value", exact}, {"key", key}, {"multipliers", {0.7, 1.2, 1.5}}};
    return q;
}

// ---- tuning -----------------------------------------------------------------

BenchmarkQuestion gen_tuning(Rng& rng, const Evaluator& ev) {
    const SpaceSpec& space = ev.space();
    const std::string objective = rng.bernoulli(0.5) ? "ttft" : "tpot";
    const DesignPoint initial = space.random_design(rng);
    const Evaluation init = ev.evaluate(initial);
    const double bound = round_sig(init.metrics.area_n * (0.95 + 0.2 * rng.uniform()));

    for (int attempt = 0; attempt < 64; ++attempt) {
        std::array<DesignPoint, 4> designs{};
        std::array<nlohmann::json, 4> moves{};
        std::set<DesignPoint> seen;
        bool ok = true;
        const std::size_t keep_slot = rng.bernoulli(0.3) ? rng.index(4) : 4;
        for (std::size_t slot = 0; slot < 4 && ok; ++slot) {
            DesignPoint d = initial;
            nlohmann::json mv = nlohmann::json::array();
            if (slot != keep_slot) {
                std::vector<Param> params(kAllParams.begin(), kAllParams.end());
                for (std::size_t i = params.size() - 1; i > 0; --i) std::swap(params[i], params[rng.index(i + 1)]);
                const std::size_t count = 1 + rng.index(3);
                for (std::size_t i = 0; i < params.size() && mv.size() < count; ++i) {
                    static constexpr std::array<int, 4> kSteps{-2, -1, 1, 2};
                    const int steps = kSteps[rng.index(4)];
                    if (!space.can_step(d, params[i], steps)) continue;
                    d = space.step_neighbor(d, params[i], steps);
                    mv.push_back({{"parameter", param_name(params[i])}, {"steps", steps}});
                }
            }
            ok = seen.insert(d).second;
            designs[slot] = d;
            moves[slot] = mv;
        }
        if (!ok) continue;

        std::array<Evaluation, 4> evals;
        int feasible = 0;
        std::size_t best = 4;
        for (std::size_t i = 0; i < 4; ++i) {
            evals[i] = ev.evaluate(designs[i]);
            if (evals[i].metrics.area_n > bound) continue;
            ++feasible;
            if (best == 4 || tuning_objective(evals[i], objective) < tuning_objective(evals[best], objective)) best = i;
        }
        if (feasible == 0 || feasible == 4) continue;
        bool tie = false;
        for (std::size_t i = 0; i < 4; ++i) {
            if (i == best || evals[i].metrics.area_n > bound) continue;
            const double gap = tuning_objective(evals[i], objective) - tuning_objective(evals[best], objective);
            if (gap <= kTieTolerance * tuning_objective(evals[best], objective)) tie = true;
        }
        if (tie) continue;

        std::array<std::size_t, 4> perm{};
        shuffle_options(rng, perm);
        BenchmarkQuestion q;
        q.task = Task::Tuning;
        nlohmann::json option_designs = nlohmann::json::array();
        nlohmann::json option_moves = nlohmann::json::array();
        nlohmann::json evidence = nlohmann::json::array();
        std::set<std::pair<std::string, int>> probes;
        for (std::size_t slot = 0; slot < 4; ++slot) {
            const std::size_t i = perm[slot];
            q.options[slot] = designs[i].to_string() + (designs[i] == initial ? " (keep initial design)" : "");
            option_designs.push_back(to_json(designs[i]));
            option_moves.push_back(moves[i]);
            evidence.push_back({{"option", kLetters[slot]},
                                {"area_n", evals[i].metrics.area_n},
                                {objective + "_n", tuning_objective(evals[i], objective)}});
            if (i == best) q.answer_index = static_cast<int>(slot);
            for (const auto& m : moves[i]) probes.insert({m["parameter"].get<std::string>(), m["steps"].get<int>() > 0 ? 1 : -1});
        }

        nlohmann::json trajectory = nlohmann::json::array();
        std::ostringstream body;
        body.precision(4);
        body << "Application target: one GPT-3 layer (batch 8, 8-way tensor parallel). Objective: minimize "
             << objective << " subject to normalized area <= " << bound << ".\n"
             << "Initial design: " << design_line(initial) << " (ttft " << init.metrics.ttft_n << ", tpot "
             << init.metrics.tpot_n << ", area " << init.metrics.area_n << ")\n"
             << "Performance counters for " << (objective == "ttft" ? "prefill" : "decode") << ": "
             << shares_line(init.report.phase(objective == "ttft" ? Phase::Prefill : Phase::Decode)) << "\n"
             << "Explored so far:\n";
        for (const auto& [name, dir] : probes) {
            const Param p = *param_from_name(name);
            const DesignPoint d = space.step_neighbor(initial, p, dir);
            const Evaluation e = ev.evaluate(d);
            trajectory.push_back({{"parameter", name},
                                  {"steps", dir},
                                  {"design", to_json(d)},
                                  {"ttft_n", e.metrics.ttft_n},
                                  {"tpot_n", e.metrics.tpot_n},
                                  {"area_n", e.metrics.area_n}});
            body << "  " << d.to_string() << " ttft " << e.metrics.ttft_n << ", tpot " << e.metrics.tpot_n
                 << ", area " << e.metrics.area_n << "\n";
        }
        body << "Area model:\n" << area_model_text(ev.constants())
             << "Which option best meets the objective while respecting the constraint?\n";
        for (std::size_t slot = 0; slot < 4; ++slot) body << kLetters[slot] << ". " << q.options[slot] << "\n";
        q.prompt = compose(body.str());
        q.context = {{"objective", objective},
                     {"bound", bound},
                     {"initial", to_json(initial)},
                     {"initial_metrics", to_json(init.metrics)},
                     {"stall_share", shares_json(init.report.phase(objective == "ttft" ? Phase::Prefill : Phase::Decode))},
                     {"trajectory", trajectory},
                     {"options", option_designs},
                     {"option_moves", option_moves},
                     {"constants", to_json(ev.constants())},
                     {"reference_area_mm2", ev.reference_metrics().area_mm2}};
        q.provenance = {{"evaluations", evidence}};
        return q;
    }
    throw DegenerateDraw("no usable tuning question after 64 draws");
}

// ---- suite ------------------------------------------------------------------

BenchmarkSuite generate_suite(const Evaluator& ev, const SuiteCounts& counts, std::uint64_t seed) {
    BenchmarkSuite suite;
    suite.seed = seed;
    suite.counts = counts;
    for (Task t : kAllTasks) {
        const std::string stream = "benchmark/" + std::string(task_name(t));
        for (std::size_t i = 0; i < counts.of(t); ++i) {
            bool done = false;
            for (std::uint64_t attempt = 0; attempt < 16 && !done; ++attempt) {
                const std::uint64_t qseed = derive_seed(derive_seed(seed, stream, i), "attempt", attempt);
                Rng rng(qseed);
                try {
                    BenchmarkQuestion q = t == Task::Bottleneck   ? gen_bottleneck(rng, ev)
                                          : t == Task::Prediction ? gen_prediction(rng, ev)
                                                                  : gen_tuning(rng, ev);
                    q.provenance["seed"] = qseed;
                    suite.questions.push_back(std::move(q));
                    done = true;
                } catch (const DegenerateDraw&) {
                }
            }
            if (!done) throw DegenerateDraw("question " + std::to_string(i) + " of " + stream + " kept degenerating");
        }
    }
    return suite;
}

// ---- oracle -----------------------------------------------------------------

int oracle_choice(const BenchmarkQuestion& q, const Evaluator& ev) {
    const auto argmin = [](const std::vector<double>& v) {
        return static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
    };
    switch (q.task) {
        case Task::Bottleneck: return argmin(bottleneck_times(q, ev));
        case Task::Prediction: {
            const PredMetric m = pred_from_name(q.context.at("metric").get<std::string>());
            const double key = round_sig(display_value(ev, design_from_json(q.context.at("heldout")), m));
            std::vector<double> err;
            for (const auto& v : q.context.at("option_values")) err.push_back(std::abs(v.get<double>() - key));
            return argmin(err);
        }
        case Task::Tuning: {
            const double bound = q.context.at("bound").get<double>();
            const std::string objective = q.context.at("objective").get<std::string>();
            std::vector<double> score;
            for (const auto& dj : q.context.at("options")) {
                const Evaluation e = ev.evaluate(design_from_json(dj));
                score.push_back(e.metrics.area_n <= bound ? tuning_objective(e, objective)
                                                          : std::numeric_limits<double>::infinity());
            }
            return argmin(score);
        }
    }
    return 0;
}

bool verify_question(const BenchmarkQuestion& q, const Evaluator& ev, std::string* why) {
    const auto fail = [&](const std::string& reason) {
        if (why) *why = reason;
        return false;
    };
    if (q.answer_index < 0 || q.answer_index > 3) return fail("answer index out of range");
    const std::set<std::string> distinct(q.options.begin(), q.options.end());
    if (distinct.size() != 4) return fail("options are not distinct");
    const auto key = static_cast<std::size_t>(q.answer_index);
    try {
        switch (q.task) {
            case Task::Bottleneck: {
                const std::vector<double> t = bottleneck_times(q, ev);
                const double base = q.context.at("base_latency_s").get<double>();
                int changed = 0;
                for (double x : t) changed += std::abs(x - base) > kTieTolerance * base ? 1 : 0;
                if (changed < 2) return fail("fewer than two options change the latency");
                if (!(t[key] < base)) return fail("keyed option does not reduce the latency");
                for (std::size_t i = 0; i < 4; ++i)
                    if (i != key && !(t[i] - t[key] > kTieTolerance * base)) return fail("keyed option is not uniquely best");
                break;
            }
            case Task::Prediction: {
                const PredMetric m = pred_from_name(q.context.at("metric").get<std::string>());
                const double k = round_sig(display_value(ev, design_from_json(q.context.at("heldout")), m));
                std::vector<double> vals;
                for (const auto& v : q.context.at("option_values")) vals.push_back(v.get<double>());
                if (vals.size() != 4 || vals[key] != k) return fail("keyed value differs from re-evaluation");
                std::vector<double> others;
                for (std::size_t i = 0; i < 4; ++i)
                    if (i != key) others.push_back(vals[i]);
                auto expect = distractor_values(k);
                std::sort(others.begin(), others.end());
                std::sort(expect.begin(), expect.end());
                if (!std::equal(others.begin(), others.end(), expect.begin())) return fail("distractors do not follow the multipliers");
                if (std::set<double>(vals.begin(), vals.end()).size() != 4) return fail("option values collide");
                break;
            }
            case Task::Tuning: {
                const double bound = q.context.at("bound").get<double>();
                const std::string objective = q.context.at("objective").get<std::string>();
                std::vector<Evaluation> e;
                for (const auto& dj : q.context.at("options")) e.push_back(ev.evaluate(design_from_json(dj)));
                bool infeasible = false;
                for (const auto& x : e) infeasible = infeasible || x.metrics.area_n > bound;
                if (!infeasible) return fail("no option violates the area bound");
                if (e[key].metrics.area_n > bound) return fail("keyed option violates the area bound");
                const double best = tuning_objective(e[key], objective);
                for (std::size_t i = 0; i < 4; ++i) {
                    if (i == key || e[i].metrics.area_n > bound) continue;
                    if (!(tuning_objective(e[i], objective) - best > kTieTolerance * best))
                        return fail("keyed option is not the unique best feasible design");
                }
                break;
            }
        }
    } catch (const std::exception& ex) {
        return fail(std::string("malformed context: ") + ex.what());
    }
    if (oracle_choice(q, ev) != q.answer_index) return fail("oracle picks a different option");
    return true;
}

// ---- serialization ----------------------------------------------------------

nlohmann::json to_json(const BenchmarkQuestion& q) {
    return {{"task", task_name(q.task)},       {"prompt", q.prompt},         {"options", q.options},
            {"answer_index", q.answer_index}, {"provenance", q.provenance}, {"context", q.context}};
}

BenchmarkQuestion question_from_json(const nlohmann::json& j) {
    BenchmarkQuestion q;
    const auto t = task_from_name(j.at("task").get<std::string>());
    if (!t) throw ConfigError("unknown task " + j.at("task").get<std::string>());
    q.task = *t;
    q.prompt = j.at("prompt").get<std::string>();
    q.options = j.at("options").get<std::array<std::string, 4>>();
    q.answer_index = j.at("answer_index").get<int>();
    q.provenance = j.value("provenance", nlohmann::json::object());
    q.context = j.value("context", nlohmann::json::object());
    return q;
}

nlohmann::json to_json(const BenchmarkSuite& s) {
    nlohmann::json qs = nlohmann::json::array();
    for (const auto& q : s.questions) qs.push_back(to_json(q));
    return {{"seed", s.seed},
            {"counts", {{"bottleneck", s.counts.bottleneck}, {"prediction", s.counts.prediction}, {"tuning", s.counts.tuning}}},
            {"questions", qs}};
}

BenchmarkSuite suite_from_json(const nlohmann::json& j) {
    BenchmarkSuite s;
    s.seed = j.value("seed", std::uint64_t{0});
    const auto& c = j.at("counts");
    s.counts = {c.at("bottleneck").get<std::size_t>(), c.at("prediction").get<std::size_t>(),
                c.at("tuning").get<std::size_t>()};
    for (const auto& q : j.at("questions")) s.questions.push_back(question_from_json(q));
    return s;
}

// ---- agents -----------------------------------------------------------------

namespace {

double cap_of(const HardwareDerived& hw, Resource r) {
    switch (r) {
        case Resource::TensorCompute: return hw.peak_tensor_flops;
        case Resource::VectorCompute: return hw.peak_vector_flops;
        case Resource::MemoryBw: return hw.mem_bw;
        case Resource::Interconnect: return hw.net_bw;
    }
    return 0.0;
}

const InfluenceMap& relief_map() {
    static const InfluenceMap map = quale_build(perf_model_structure(CalibrationConstants::defaults()));
    return map;
}

int rule_bottleneck(const BenchmarkQuestion& q, bool enhanced) {
    const CalibrationConstants consts = CalibrationConstants::defaults();
    const DesignPoint d = design_from_json(q.context.at("design"));
    const HardwareDerived now = derive_hw(d, consts);
    int pick = -1;
    double best = -std::numeric_limits<double>::infinity();
    const auto dominant = resource_from_name(q.context.at("dominant").get<std::string>());
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& option = q.context.at("options")[i];
        const StepChange m = move_from_json(option);
        if (m.steps <= 0) continue;
        DesignPoint to = d;
        to[m.param] = option.at("to").get<int>();
        double merit;
        if (enhanced) {
            if (!dominant || !relief_map().relieves(m.param, *dominant)) continue;
            const double c0 = cap_of(now, *dominant);
            merit = c0 > 0.0 ? cap_of(derive_hw(to, consts), *dominant) / c0 : 1.0;
        } else {
            merit = static_cast<double>(to[m.param]) / d[m.param];
        }
        if (merit > best) {
            best = merit;
            pick = static_cast<int>(i);
        }
    }
    return pick < 0 ? 0 : pick;
}

int rule_prediction(const BenchmarkQuestion& q, bool enhanced) {
    const DesignPoint base = design_from_json(q.context.at("base"));
    const DesignPoint heldout = design_from_json(q.context.at("heldout"));
    const auto& ex = q.context.at("exemplars");
    const double base_value = ex.at(0).at("value").get<double>();
    double estimate = enhanced ? base_value : 0.0;
    for (const auto& e : ex) {
        const DesignPoint d = design_from_json(e.at("design"));
        const auto changed = changed_params(base, d);
        if (changed.size() != 1 || heldout[changed[0]] != d[changed[0]]) continue;
        const double v = e.at("value").get<double>();
        estimate += enhanced ? v - base_value : v;
    }
    if (!enhanced && estimate == 0.0) estimate = base_value;
    int pick = 0;
    double err = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 4; ++i) {
        const double v = q.context.at("option_values")[i].get<double>();
        const double e = std::abs(std::log(v / estimate));
        if (e < err) {
            err = e;
            pick = static_cast<int>(i);
        }
    }
    return pick;
}

int rule_tuning(const BenchmarkQuestion& q, bool enhanced) {
    const auto& ctx = q.context;
    if (!enhanced) {
        int pick = 0;
        int most = std::numeric_limits<int>::min();
        for (std::size_t i = 0; i < 4; ++i) {
            int total = 0;
            for (const auto& m : ctx.at("option_moves")[i]) total += m.at("steps").get<int>();
            if (total > most) {
                most = total;
                pick = static_cast<int>(i);
            }
        }
        return pick;
    }
    const CalibrationConstants consts = constants_from_json(ctx.at("constants"), SpaceSpec::a100_reference());
    const double ref_area = ctx.at("reference_area_mm2").get<double>();
    const double bound = ctx.at("bound").get<double>();
    const std::string objective = ctx.at("objective").get<std::string>();
    const double init_obj = ctx.at("initial_metrics").at(objective + "_n").get<double>();
    int pick = -1;
    double best = std::numeric_limits<double>::infinity();
    int fallback = 0;
    double smallest_area = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 4; ++i) {
        const double a = area(design_from_json(ctx.at("options")[i]), consts) / ref_area;
        if (a < smallest_area) {
            smallest_area = a;
            fallback = static_cast<int>(i);
        }
        if (a > bound) continue;
        double estimate = init_obj;
        for (const auto& m : ctx.at("option_moves")[i]) {
            const int steps = m.at("steps").get<int>();
            for (const auto& t : ctx.at("trajectory"))
                if (t.at("parameter") == m.at("parameter") && (t.at("steps").get<int>() > 0) == (steps > 0))
                    estimate += std::abs(steps) * (t.at(objective + "_n").get<double>() - init_obj);
        }
        if (estimate < best) {
            best = estimate;
            pick = static_cast<int>(i);
        }
    }
    return pick < 0 ? fallback : pick;
}

}  // namespace

int RuleAgent::answer(const BenchmarkQuestion& q, const std::string&, bool enhanced) {
    try {
        switch (q.task) {
            case Task::Bottleneck: return rule_bottleneck(q, enhanced);
            case Task::Prediction: return rule_prediction(q, enhanced);
            case Task::Tuning: return rule_tuning(q, enhanced);
        }
    } catch (const std::exception& e) {
        throw AgentFailure(std::string("rule agent cannot read the question: ") + e.what());
    }
    return 0;
}

int parse_choice(std::string_view reply) {
    const auto is_choice = [&](std::size_t i) {
        if (i >= reply.size() || reply[i] < 'A' || reply[i] > 'D') return false;
        const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(reply[i - 1]));
        const bool right = i + 1 >= reply.size() || !std::isalnum(static_cast<unsigned char>(reply[i + 1]));
        return left && right;
    };
    if (auto pos = reply.rfind("Answer:"); pos != std::string_view::npos)
        for (std::size_t i = pos + 7; i < reply.size(); ++i)
            if (is_choice(i)) return reply[i] - 'A';
    for (std::size_t i = 0; i < reply.size(); ++i)
        if (is_choice(i)) return reply[i] - 'A';
    throw AgentFailure("no option letter in reply");
}

int LlmAgent::answer(const BenchmarkQuestion& q, const std::string& system_prompt, bool) {
    ChatRequest req;
    req.system_prompt = system_prompt;
    std::string body = q.prompt;
    const std::string base = bench_system_prompt() + "\n";
    if (body.rfind(base, 0) == 0) body.erase(0, base.size());
    req.messages.push_back({"user", body});
    req.model_name = model_;
    try {
        return parse_choice(gateway_.complete(req));
    } catch (const LlmError& e) {
        throw AgentFailure(e.what());
    }
}

double ScoreReport::accuracy(Task t) const {
    const auto i = static_cast<std::size_t>(t);
    return total[i] == 0 ? 0.0 : static_cast<double>(correct[i]) / static_cast<double>(total[i]);
}

ScoreReport score(const BenchmarkSuite& suite, Agent& agent, bool enhanced) {
    ScoreReport r;
    r.agent = agent.name();
    r.enhanced = enhanced;
    const std::string system = enhanced ? enhanced_rules_text() + "\n" + bench_system_prompt() : bench_system_prompt();
    for (const auto& q : suite.questions) {
        const auto t = static_cast<std::size_t>(q.task);
        ++r.total[t];
        int chosen = -1;
        try {
            chosen = agent.answer(q, system, enhanced);
            if (chosen < 0 || chosen > 3) throw AgentFailure("option index out of range");
        } catch (const Error& e) {
            chosen = -1;
            r.failures.push_back(e.what());
        }
        r.chosen.push_back(chosen);
        if (chosen == q.answer_index) ++r.correct[t];
    }
    return r;
}

nlohmann::json to_json(const ScoreReport& r) {
    nlohmann::json acc = nlohmann::json::object();
    for (Task t : kAllTasks) {
        const auto i = static_cast<std::size_t>(t);
        acc[std::string(task_name(t))] = {{"correct", r.correct[i]}, {"total", r.total[i]}, {"accuracy", r.accuracy(t)}};
    }
    return {{"agent", r.agent}, {"rules", r.enhanced ? "enhanced" : "original"}, {"accuracy", acc},
            {"failures", r.failures.size()}};
}

std::string score_csv(const BenchmarkSuite& suite, const ScoreReport& r) {
    std::ostringstream os;
    os << "index,task,answer,chosen,correct\n";
    for (std::size_t i = 0; i < suite.questions.size() && i < r.chosen.size(); ++i) {
        const auto& q = suite.questions[i];
        os << i << ',' << task_name(q.task) << ',' << q.answer_index << ',' << r.chosen[i] << ','
           << (r.chosen[i] == q.answer_index ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace lumina
