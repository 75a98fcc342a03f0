// SPDX-License-Identifier: Apache-2.0
// lumina: design-space exploration runs, reports, sensitivity tables and the
// multiple-choice benchmark.
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lumina/benchmark.hpp"
#include "lumina/config.hpp"
#include "lumina/errors.hpp"
#include "lumina/explorer.hpp"
#include "lumina/influence.hpp"
#include "lumina/run_store.hpp"

namespace fs = std::filesystem;
using namespace lumina;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    try {
        if (auto dots = text.find(".."); dots != std::string::npos) {
            const auto lo = std::stoull(text.substr(0, dots));
            const auto hi = std::stoull(text.substr(dots + 2));
            if (hi < lo) throw ConfigError("empty seed range " + text);
            for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
        } else {
            std::stringstream ss(text);
            for (std::string item; std::getline(ss, item, ',');) seeds.push_back(std::stoull(item));
        }
    } catch (const std::logic_error&) {
        throw ConfigError("cannot read seeds from \"" + text + "\"");
    }
    if (seeds.empty()) throw ConfigError("no seed given");
    return seeds;
}

SuiteCounts parse_counts(const std::string& text) {
    std::vector<std::size_t> v;
    std::stringstream ss(text);
    try {
        for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stoul(item));
    } catch (const std::logic_error&) {
        throw ConfigError("cannot read counts from \"" + text + "\"");
    }
    if (v.size() != 3) throw ConfigError("--counts expects bottleneck,prediction,tuning");
    return {v[0], v[1], v[2]};
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    write_file(out, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM-guided GPU design-space exploration"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);

    const auto config = [&] { return config_path.empty() ? RunConfig{} : load_run_config(config_path); };

    // explore
    auto* explore = app.add_subcommand("explore", "Run one exploration per seed");
    std::string method;
    std::string backend = "rule";
    std::size_t budget = 1000;
    std::string seeds = "1";
    std::string out_root;
    explore->add_option("--method", method, "lumina, grid|gs, random_walk|rw, genetic|ga, ant_colony|aco, bayesian|bo")
        ->required();
    explore->add_option("--backend", backend, "Strategy backend for lumina: rule or llm");
    explore->add_option("--budget", budget, "Evaluated samples per run");
    explore->add_option("--seed", seeds, "Seed, list (1,2,3) or range (1..5)");
    explore->add_option("--out", out_root, "Root directory for run directories");

    // report
    auto* report = app.add_subcommand("report", "Summarize stored runs");
    std::vector<std::string> report_inputs;
    std::string report_out = "report";
    report->add_option("runs", report_inputs, "Run directories or directories of runs")->required();
    report->add_option("--out", report_out, "Output directory");

    // sensitivity
    auto* sensitivity = app.add_subcommand("sensitivity", "Dump the influence map around the initial design");
    std::string sens_out;
    std::string sens_csv;
    sensitivity->add_option("--out", sens_out, "JSON output file (default stdout)");
    sensitivity->add_option("--csv", sens_csv, "Also write the influence table as CSV");

    // bench
    auto* bench = app.add_subcommand("bench", "Multiple-choice benchmark");
    bench->require_subcommand(1);
    auto* gen = bench->add_subcommand("gen", "Generate a question suite");
    std::string counts = "308,127,30";
    std::uint64_t bench_seed = 1;
    std::string suite_out = "suite.json";
    gen->add_option("--counts", counts, "bottleneck,prediction,tuning");
    gen->add_option("--seed", bench_seed, "Suite seed");
    gen->add_option("--out", suite_out, "Suite file");

    auto* eval = bench->add_subcommand("eval", "Score an agent on a suite");
    std::string suite_in = "suite.json";
    std::string agent_name = "oracle";
    std::string rules = "original";
    std::uint64_t agent_seed = 1;
    std::string eval_out;
    eval->add_option("--suite", suite_in, "Suite file")->check(CLI::ExistingFile);
    eval->add_option("--agent", agent_name, "oracle, random, rule or llm");
    eval->add_option("--rules", rules, "original, enhanced or both");
    eval->add_option("--seed", agent_seed, "Seed of the random agent");
    eval->add_option("--out", eval_out, "Directory for scores.json and per-question CSV");

    // replay
    auto* replay = app.add_subcommand("replay", "Re-run a stored run and compare trajectories");
    std::string replay_dir;
    std::string scratch = "replays";
    replay->add_option("--run", replay_dir, "Run directory")->required();
    replay->add_option("--scratch", scratch, "Where the replayed run is written");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*explore) {
            const RunConfig cfg = config();
            for (std::uint64_t seed : parse_seeds(seeds)) {
                ExploreArgs args;
                args.method = method;
                args.backend = backend;
                args.budget = budget;
                args.seed = seed;
                args.config = cfg;
                args.out_root = out_root;
                std::cout << run_explore(args).string() << '\n';
            }
        } else if (*report) {
            std::vector<fs::path> inputs(report_inputs.begin(), report_inputs.end());
            const Report r = build_report(inputs);
            write_report(r, report_out);
            for (const auto& m : r.methods)
                std::cout << m.method << ": runs " << m.runs << ", PHV " << m.mean_phv << " +- " << m.std_phv
                          << ", sample efficiency " << m.mean_sample_efficiency << ", superior " << m.mean_superior
                          << '\n';
        } else if (*sensitivity) {
            const RunConfig cfg = config();
            const Evaluator ev = cfg.evaluator();
            InfluenceMap ahk = quale_build(perf_model_structure(cfg.constants));
            const Evaluation ref = ev.evaluate(cfg.initial_design());
            const SensitivityTable table = quane_sensitivity(
                ahk, cfg.space, ref, [&](const DesignPoint& d) { return std::optional<Evaluation>(ev.evaluate(d)); },
                cfg.constants, cfg.lumina.quane_area_only);
            emit(sens_out, nlohmann::json{{"influence", to_json(ahk)}, {"sensitivity", to_json(table)}}.dump(2) + "\n");
            if (!sens_csv.empty()) emit(sens_csv, influence_csv(ahk));
        } else if (*gen) {
            const RunConfig cfg = config();
            const BenchmarkSuite suite = generate_suite(cfg.evaluator(), parse_counts(counts), bench_seed);
            emit(suite_out, to_json(suite).dump(2) + "\n");
            std::cout << suite.questions.size() << " questions -> " << suite_out << '\n';
        } else if (*eval) {
            const RunConfig cfg = config();
            const Evaluator ev = cfg.evaluator();
            const BenchmarkSuite suite = suite_from_json(nlohmann::json::parse(read_file(suite_in)));
            std::unique_ptr<Agent> agent;
            std::unique_ptr<OpenAiBackend> chat;
            std::unique_ptr<ChatGateway> gateway;
            if (agent_name == "oracle") {
                agent = std::make_unique<OracleAgent>(ev);
            } else if (agent_name == "random") {
                agent = std::make_unique<RandomAgent>(agent_seed);
            } else if (agent_name == "rule") {
                agent = std::make_unique<RuleAgent>();
            } else if (agent_name == "llm") {
                OpenAiConfig oc = OpenAiConfig::from_env();
                if (!cfg.llm.model.empty()) oc.model = cfg.llm.model;
                chat = std::make_unique<OpenAiBackend>(oc);
                RetryPolicy policy;
                policy.max_retries = cfg.llm.max_retries;
                policy.base_delay = std::chrono::milliseconds(cfg.llm.base_delay_ms);
                gateway = std::make_unique<ChatGateway>(*chat, policy);
                agent = std::make_unique<LlmAgent>(*gateway, oc.model);
            } else {
                throw ConfigError("unknown agent \"" + agent_name + "\"");
            }
            std::vector<bool> modes;
            if (rules == "original" || rules == "both") modes.push_back(false);
            if (rules == "enhanced" || rules == "both") modes.push_back(true);
            if (modes.empty()) throw ConfigError("--rules must be original, enhanced or both");
            nlohmann::json all = nlohmann::json::array();
            for (bool enhanced : modes) {
                const ScoreReport r = score(suite, *agent, enhanced);
                all.push_back(to_json(r));
                std::cout << r.agent << " (" << (enhanced ? "enhanced" : "original") << "):";
                for (Task t : kAllTasks) std::cout << ' ' << task_name(t) << ' ' << r.accuracy(t);
                std::cout << '\n';
                if (!eval_out.empty()) {
                    fs::create_directories(eval_out);
                    write_file(fs::path(eval_out) / (std::string("answers_") + (enhanced ? "enhanced" : "original") + ".csv"),
                               score_csv(suite, r));
                }
            }
            if (!eval_out.empty()) write_file(fs::path(eval_out) / "scores.json", all.dump(2) + "\n");
        } else if (*replay) {
            const ReplayResult r = replay_run(replay_dir, scratch);
            if (r.identical) {
                std::cout << "identical: " << r.replay_dir.string() << '\n';
            } else {
                std::cout << "trajectories differ from line " << r.first_difference << ": " << r.replay_dir.string()
                          << '\n';
                return 1;
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const MissingRun& e) {
        std::cerr << "missing run: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
