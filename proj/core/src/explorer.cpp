// SPDX-License-Identifier: Apache-2.0
#include "lumina/explorer.hpp"

#include "lumina/errors.hpp"
#include "lumina/prompts.hpp"

namespace lumina {

nlohmann::json to_json(const LoopConfig& c) {
    return {{"aggressiveness", c.aggressiveness},
            {"max_aggressiveness", c.max_aggressiveness},
            {"refine_alpha", c.refine_alpha},
            {"improve_threshold", c.improve_threshold},
            {"arbitration_margin", c.arbitration_margin},
            {"quane_area_only", c.quane_area_only}};
}

LoopConfig loop_config_from_json(const nlohmann::json& j) {
    LoopConfig c;
    const auto read = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("aggressiveness", c.aggressiveness);
    read("max_aggressiveness", c.max_aggressiveness);
    read("refine_alpha", c.refine_alpha);
    read("improve_threshold", c.improve_threshold);
    read("arbitration_margin", c.arbitration_margin);
    read("quane_area_only", c.quane_area_only);
    if (c.aggressiveness < 1 || c.max_aggressiveness < c.aggressiveness)
        throw ConfigError("aggressiveness must be >= 1 and <= max_aggressiveness");
    if (!(c.refine_alpha > 0.0 && c.refine_alpha <= 1.0)) throw ConfigError("refine_alpha must lie in (0, 1]");
    return c;
}

InfluenceMap StrategyBackend::qualitative(const ModelStructure& structure, std::string&) {
    return quale_build(structure);
}

StrategyDirective RuleBackend::propose(const SeContext& ctx, bool& fallback, std::string&) {
    fallback = false;
    return se_propose(ctx);
}

LlmBackend::LlmBackend(ChatGateway& gateway, std::string model_name, bool enhanced_rules, double temperature)
    : gateway_(gateway), model_(std::move(model_name)), enhanced_(enhanced_rules), temperature_(temperature) {}

InfluenceMap LlmBackend::qualitative(const ModelStructure& structure, std::string& note) {
    ChatRequest req;
    req.system_prompt = quale_system_prompt();
    req.messages.push_back({"user", quale_user_prompt(structure)});
    req.temperature = temperature_;
    req.max_tokens = 4096;
    req.model_name = model_;
    try {
        return quale_from_llm_reply(gateway_.complete(req), structure);
    } catch (const Error& e) {
        note = std::string("qualitative map from the static backend: ") + e.what();
        return quale_build(structure);
    }
}

StrategyDirective LlmBackend::propose(const SeContext& ctx, bool& fallback, std::string& note) {
    ChatRequest req;
    req.system_prompt = se_system_prompt(enhanced_);
    req.temperature = temperature_;
    req.model_name = model_;
    std::string feedback;
    for (int attempt = 0; attempt < 2; ++attempt) {
        req.messages = {{"user", se_user_prompt(ctx, feedback)}};
        try {
            StrategyDirective d = parse_directive(gateway_.complete(req));
            if (ctx.tm.blocked(d.fingerprint())) throw InvalidDirective("directive matches a failed pattern");
            const Applied a = ee_apply(ctx.current.design, d, ctx.space);
            if (ctx.tm.visited(a.design)) throw InvalidDirective("directive revisits " + a.design.to_string());
            fallback = false;
            return d;
        } catch (const LlmError& e) {
            note = std::string("llm unavailable: ") + e.what();
            break;
        } catch (const Error& e) {
            feedback = e.what();
            note = std::string("llm reply rejected: ") + e.what();
        }
    }
    fallback = true;
    return se_propose(ctx);
}

namespace {

class Recorder {
public:
    explicit Recorder(const SampleSink& sink) : sink_(sink) {}

    const TrajectorySample& record(TrajectorySample s) {
        s.step = tm.size();
        const ObjectiveVector obj = s.eval.objectives();
        s.dominates_reference = dominates(obj, archive.reference());
        s.better_than_reference = strictly_better(obj, archive.reference());
        archive.insert(s.eval.design, obj);
        phv.push_back(archive.hypervolume());
        if (sink_) sink_(s);
        tm.add(std::move(s));
        return tm.samples().back();
    }

    TrajectoryMemory tm;
    ParetoArchive archive;
    std::vector<double> phv;

private:
    const SampleSink& sink_;
};

}  // namespace

LoopResult run_loop(const Evaluator& evaluator, const DesignPoint& initial, std::size_t budget, std::uint64_t seed,
                    StrategyBackend& backend, const LoopConfig& config, const SampleSink& sink) {
    if (budget == 0) throw ConfigError("budget must be at least 1");
    const SpaceSpec& space = evaluator.space();
    if (!space.is_valid(initial)) throw ConfigError("initial design " + initial.to_string() + " is not in the space");
    Rng restart_rng(derive_seed(seed, "restart"));
    Recorder rec(sink);

    TrajectorySample first;
    first.kind = SampleKind::Initial;
    first.eval = evaluator.evaluate(initial);
    rec.record(first);

    LoopResult result{{}, ParetoArchive{}, {}, {}, {}};
    const ModelStructure structure = perf_model_structure(evaluator.constants());
    std::string note;
    result.ahk = backend.qualitative(structure, note);

    if (rec.tm.size() < budget) {
        const ProbeFn probe = [&](const DesignPoint& d) -> std::optional<Evaluation> {
            if (rec.tm.size() >= budget) return std::nullopt;
            TrajectorySample s;
            s.kind = SampleKind::Sensitivity;
            s.eval = evaluator.evaluate(d);
            if (!note.empty()) s.note = std::exchange(note, {});
            return rec.record(std::move(s)).eval;
        };
        result.sensitivity = quane_sensitivity(result.ahk, space, rec.tm.samples().front().eval, probe,
                                               evaluator.constants(), config.quane_area_only);
        rec.tm.refined_upto = rec.tm.size();
    }

    Evaluation incumbent = rec.tm.samples().front().eval;
    std::size_t round = 0;
    while (rec.tm.size() < budget) {
        refine(rec.tm, result.ahk, space, config.refine_alpha);
        const Metric target = choose_target(incumbent.metrics, round++, config.arbitration_margin);

        std::optional<StrategyDirective> directive;
        bool fallback = false;
        std::string why;
        for (int aggr = config.aggressiveness; aggr <= config.max_aggressiveness && !directive; ++aggr) {
            SeContext ctx{space, evaluator.constants(), incumbent, target, result.ahk, rec.tm, aggr};
            try {
                directive = backend.propose(ctx, fallback, why);
            } catch (const Exhausted& e) {
                why = e.what();
            }
        }

        if (!directive) {
            DesignPoint fresh = space.random_design(restart_rng);
            for (int tries = 0; tries < 1000 && rec.tm.visited(fresh); ++tries) fresh = space.random_design(restart_rng);
            TrajectorySample s;
            s.kind = SampleKind::Restart;
            s.eval = evaluator.evaluate(fresh);
            s.target = target;
            s.note = "restart: " + why;
            incumbent = rec.record(std::move(s)).eval;
            continue;
        }

        const Applied applied = ee_apply(incumbent.design, *directive, space);
        TrajectorySample s;
        s.kind = SampleKind::Directive;
        s.eval = evaluator.evaluate(applied.design);
        s.directive = directive;
        s.target = target;
        s.outcome = classify(incumbent, s.eval, target, config.improve_threshold);
        s.clamped = applied.clamped;
        s.fallback = fallback;
        s.note = why;
        const TrajectorySample& kept = rec.record(std::move(s));
        if (*kept.outcome != Outcome::Failed) incumbent = kept.eval;
    }
    refine(rec.tm, result.ahk, space, config.refine_alpha);

    result.trajectory = rec.tm.samples();
    result.archive = rec.archive;
    result.phv_curve = rec.phv;
    return result;
}

OptimizerResult run_optimizer(const Evaluator& evaluator, Optimizer& optimizer, std::size_t budget,
                              const SampleSink& sink) {
    Recorder rec(sink);
    while (rec.tm.size() < budget) {
        std::vector<DesignPoint> batch;
        try {
            batch = optimizer.propose(1);
        } catch (const BudgetExhausted&) {
            break;
        }
        for (const DesignPoint& d : batch) {
            TrajectorySample s;
            s.kind = rec.tm.size() == 0 ? SampleKind::Initial : SampleKind::Optimizer;
            s.eval = evaluator.evaluate(d);
            optimizer.observe(d, s.eval.objectives());
            rec.record(std::move(s));
        }
    }
    return {rec.tm.samples(), rec.archive, rec.phv};
}

}  // namespace lumina
