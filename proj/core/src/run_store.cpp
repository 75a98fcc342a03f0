// SPDX-License-Identifier: Apache-2.0
#include "lumina/run_store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include "lumina/errors.hpp"
#include "lumina/explorer.hpp"
#include "lumina/prompts.hpp"

namespace lumina {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingRun("cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << content;
}

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

void write_status(const RunFiles& f, const std::string& state, std::size_t samples) {
    write_file(f.status(), nlohmann::json{{"state", state}, {"resumable", state != "complete"}, {"samples", samples}}
                               .dump(2) + "\n");
}

std::string phv_csv(const std::vector<double>& curve, const std::vector<bool>& superior) {
    std::ostringstream os;
    os.precision(12);
    os << "sample,phv,superior_count\n";
    std::size_t count = 0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        count += superior[i] ? 1 : 0;
        os << i + 1 << ',' << curve[i] << ',' << count << '\n';
    }
    return os.str();
}

nlohmann::json archive_json(const ParetoArchive& a) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : a.entries())
        entries.push_back({{"design", to_json(e.design)}, {"objectives", e.objectives.v}});
    return {{"reference", a.reference().v}, {"phv", a.hypervolume()}, {"entries", entries}};
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string canonical_method(const std::string& method) {
    if (method == "lumina") return "lumina";
    if (auto m = method_from_name(method)) return std::string(method_name(*m));
    throw ConfigError("unknown method \"" + method + "\" (expected lumina, grid, random_walk, genetic, ant_colony, bayesian)");
}

std::filesystem::path run_explore(const ExploreArgs& args) {
    const std::string method = canonical_method(args.method);
    if (args.budget == 0) throw ConfigError("budget must be at least 1");
    if (method == "lumina" && args.backend != "rule" && args.backend != "llm")
        throw ConfigError("unknown backend \"" + args.backend + "\" (expected rule or llm)");

    const RunConfig& cfg = args.config;
    const std::filesystem::path root = args.out_root.empty() ? cfg.output_dir : args.out_root;
    const std::string stamp = args.timestamp.empty() ? utc_timestamp() : args.timestamp;
    RunFiles files{root / (method + "_" + std::to_string(args.seed) + "_" + stamp)};
    if (std::filesystem::exists(files.dir)) throw ConfigError("run directory " + files.dir.string() + " already exists");

    // Chat plumbing for the llm backend.
    std::unique_ptr<ChatBackend> owned;
    ChatBackend* chat = args.chat;
    std::string model_name;
    std::vector<std::string> secrets;
    const bool use_llm = method == "lumina" && args.backend == "llm";
    if (use_llm && !chat) {
        OpenAiConfig oc = OpenAiConfig::from_env();
        if (!cfg.llm.model.empty()) oc.model = cfg.llm.model;
        secrets.push_back(oc.api_key);
        model_name = oc.model;
        owned = std::make_unique<OpenAiBackend>(oc);
        chat = owned.get();
    } else if (use_llm) {
        model_name = cfg.llm.model.empty() ? chat->name() : cfg.llm.model;
    }

    const nlohmann::json config_json = to_json(cfg);
    nlohmann::json manifest{
        {"format_version", kRunFormatVersion},
        {"method", method},
        {"seed", args.seed},
        {"budget", args.budget},
        {"backend", method == "lumina" ? args.backend : "none"},
        {"model_name", use_llm ? nlohmann::json(model_name) : nlohmann::json(nullptr)},
        {"prompt_version", use_llm ? nlohmann::json(kPromptVersion) : nlohmann::json(nullptr)},
        {"reference_design", to_json(cfg.space.reference())},
        {"phv_reference", {1.0, 1.0, 1.0}},
        {"constants_hash", hex64(fnv1a64(to_json(cfg.constants).dump()))},
        {"started_at", stamp},
        {"seed_streams",
         {{"optimizer", derive_seed(args.seed, "optimizer")}, {"lumina", derive_seed(args.seed, "lumina")}}},
        {"conventions",
         {{"sensitivity_samples_count_against_budget", true},
          {"sample_efficiency_denominator", "every evaluation"},
          {"directive_base", "last sample whose outcome was not failed"}}},
        {"config", config_json}};
    std::filesystem::create_directories(files.dir);
    write_file(files.manifest(), manifest.dump(2) + "\n");
    write_status(files, "running", 0);

    std::ofstream traj(files.trajectory(), std::ios::binary);
    std::vector<bool> superior;
    std::size_t written = 0;
    const SampleSink sink = [&](const TrajectorySample& s) {
        traj << to_json(s).dump() << '\n';
        traj.flush();
        superior.push_back(s.better_than_reference);
        ++written;
    };

    const Evaluator ev = cfg.evaluator();
    ParetoArchive archive;
    std::vector<double> curve;
    if (method == "lumina") {
        std::unique_ptr<StrategyBackend> backend;
        std::unique_ptr<ChatGateway> gateway;
        if (use_llm) {
            RetryPolicy policy;
            policy.max_retries = cfg.llm.max_retries;
            policy.base_delay = std::chrono::milliseconds(cfg.llm.base_delay_ms);
            gateway = std::make_unique<ChatGateway>(*chat, policy);
            gateway->set_log(files.llm_log(), secrets);
            backend = std::make_unique<LlmBackend>(*gateway, model_name, cfg.llm.enhanced_rules, cfg.llm.temperature);
        } else {
            backend = std::make_unique<RuleBackend>();
        }
        LoopResult r = run_loop(ev, cfg.initial_design(), args.budget, derive_seed(args.seed, "lumina"), *backend,
                                cfg.lumina, sink);
        archive = r.archive;
        curve = r.phv_curve;
        write_file(files.influence(), to_json(r.ahk).dump(2) + "\n");
        write_file(files.sensitivity(), to_json(r.sensitivity).dump(2) + "\n");
    } else {
        OptimizerConfig oc = cfg.optimizer;
        oc.grid_points = args.budget;
        auto opt = make_optimizer(*method_from_name(method), cfg.space, derive_seed(args.seed, "optimizer"), oc);
        OptimizerResult r = run_optimizer(ev, *opt, args.budget, sink);
        archive = r.archive;
        curve = r.phv_curve;
    }
    traj.close();
    write_file(files.archive(), archive_json(archive).dump(2) + "\n");
    write_file(files.phv_curve(), phv_csv(curve, superior));
    write_status(files, "complete", written);
    return files.dir;
}

RunSummary load_run(const std::filesystem::path& dir) {
    RunFiles f{dir};
    if (!std::filesystem::exists(f.manifest())) throw MissingRun("no manifest in " + dir.string());
    const auto manifest = nlohmann::json::parse(read_file(f.manifest()));
    RunSummary s;
    s.dir = dir;
    s.method = manifest.at("method").get<std::string>();
    s.seed = manifest.at("seed").get<std::uint64_t>();
    s.budget = manifest.at("budget").get<std::size_t>();
    const auto ref_v = manifest.value("phv_reference", std::vector<double>{1.0, 1.0, 1.0});
    const ObjectiveVector ref{{ref_v.at(0), ref_v.at(1), ref_v.at(2)}};

    ParetoArchive archive(ref);
    std::vector<ObjectiveVector> objs;
    std::istringstream lines(read_file(f.trajectory()));
    for (std::string line; std::getline(lines, line);) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        const auto& m = j.at("metrics");
        const ObjectiveVector o{{m.at("ttft_n").get<double>(), m.at("tpot_n").get<double>(), m.at("area_n").get<double>()}};
        objs.push_back(o);
        archive.insert(design_from_json(j.at("design")), o);
        s.phv_curve.push_back(archive.hypervolume());
        if (strictly_better(o, ref)) ++s.superior;
    }
    s.samples = objs.size();
    s.final_phv = archive.hypervolume();
    s.sample_efficiency = objs.empty() ? 0.0 : sample_efficiency(objs, ref);
    s.pareto = archive.entries();
    return s;
}

Report build_report(const std::vector<std::filesystem::path>& inputs) {
    std::vector<std::filesystem::path> dirs;
    const auto complete = [](const std::filesystem::path& d) {
        const RunFiles f{d};
        if (!std::filesystem::exists(f.manifest()) || !std::filesystem::exists(f.status())) return false;
        return nlohmann::json::parse(read_file(f.status())).value("state", "") == "complete";
    };
    for (const auto& in : inputs) {
        if (!std::filesystem::is_directory(in)) throw MissingRun(in.string() + " is not a directory");
        if (std::filesystem::exists(in / "manifest.json")) {
            if (complete(in)) dirs.push_back(in);
            continue;
        }
        std::vector<std::filesystem::path> children;
        for (const auto& entry : std::filesystem::directory_iterator(in))
            if (entry.is_directory() && complete(entry.path())) children.push_back(entry.path());
        std::sort(children.begin(), children.end());
        dirs.insert(dirs.end(), children.begin(), children.end());
    }
    if (dirs.empty()) throw MissingRun("no completed run found");

    Report report;
    std::map<std::string, std::vector<const RunSummary*>> by_method;
    for (const auto& d : dirs) report.runs.push_back(load_run(d));
    for (const auto& r : report.runs) by_method[r.method].push_back(&r);
    for (const auto& [method, runs] : by_method) {
        std::vector<double> phv, se, sup;
        for (const auto* r : runs) {
            phv.push_back(r->final_phv);
            se.push_back(r->sample_efficiency);
            sup.push_back(static_cast<double>(r->superior));
        }
        report.methods.push_back({method, runs.size(), mean_of(phv), std_of(phv), mean_of(se), std_of(se), mean_of(sup)});
    }
    std::stable_sort(report.methods.begin(), report.methods.end(),
                     [](const MethodSummary& a, const MethodSummary& b) { return a.mean_phv > b.mean_phv; });
    return report;
}

nlohmann::json to_json(const Report& r) {
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : r.methods)
        methods.push_back({{"method", m.method},
                           {"runs", m.runs},
                           {"mean_phv", m.mean_phv},
                           {"std_phv", m.std_phv},
                           {"mean_sample_efficiency", m.mean_sample_efficiency},
                           {"std_sample_efficiency", m.std_sample_efficiency},
                           {"mean_superior", m.mean_superior}});
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& s : r.runs)
        runs.push_back({{"dir", s.dir.string()},
                        {"method", s.method},
                        {"seed", s.seed},
                        {"samples", s.samples},
                        {"superior", s.superior},
                        {"final_phv", s.final_phv},
                        {"sample_efficiency", s.sample_efficiency},
                        {"pareto_size", s.pareto.size()}});
    return {{"methods", methods}, {"runs", runs}};
}

void write_report(const Report& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "report.json", to_json(report).dump(2) + "\n");

    std::ostringstream methods;
    methods.precision(10);
    methods << "method,runs,mean_phv,std_phv,mean_sample_efficiency,std_sample_efficiency,mean_superior\n";
    for (const auto& m : report.methods)
        methods << m.method << ',' << m.runs << ',' << m.mean_phv << ',' << m.std_phv << ',' << m.mean_sample_efficiency
                << ',' << m.std_sample_efficiency << ',' << m.mean_superior << '\n';
    write_file(out_dir / "methods.csv", methods.str());

    std::ostringstream curves;
    curves.precision(10);
    curves << "method,seed,sample,phv\n";
    for (const auto& r : report.runs)
        for (std::size_t i = 0; i < r.phv_curve.size(); ++i)
            curves << r.method << ',' << r.seed << ',' << i + 1 << ',' << r.phv_curve[i] << '\n';
    write_file(out_dir / "phv_curves.csv", curves.str());

    // Designs beating the reference in every objective, best TTFT first.
    std::ostringstream pareto;
    pareto.precision(6);
    pareto << "method,seed";
    for (Param p : kAllParams) pareto << ',' << param_name(p);
    pareto << ",ttft_n,tpot_n,area_n,beats_reference\n";
    for (const auto& r : report.runs) {
        std::vector<ArchiveEntry> entries = r.pareto;
        std::sort(entries.begin(), entries.end(),
                  [](const ArchiveEntry& a, const ArchiveEntry& b) { return a.objectives[0] < b.objectives[0]; });
        for (const auto& e : entries) {
            pareto << r.method << ',' << r.seed;
            for (Param p : kAllParams) pareto << ',' << e.design[p];
            pareto << ',' << e.objectives[0] << ',' << e.objectives[1] << ',' << e.objectives[2] << ','
                   << (strictly_better(e.objectives, ObjectiveVector::unit()) ? 1 : 0) << '\n';
        }
    }
    write_file(out_dir / "pareto.csv", pareto.str());
}

ReplayResult replay_run(const std::filesystem::path& run_dir, const std::filesystem::path& scratch_root) {
    const RunFiles f{run_dir};
    if (!std::filesystem::exists(f.manifest())) throw MissingRun("no manifest in " + run_dir.string());
    const auto manifest = nlohmann::json::parse(read_file(f.manifest()));
    if (manifest.value("backend", "") == "llm") throw ConfigError("runs driven by a language model cannot be replayed");

    ExploreArgs args;
    args.method = manifest.at("method").get<std::string>();
    args.backend = manifest.value("backend", "rule") == "none" ? "rule" : manifest.value("backend", "rule");
    args.budget = manifest.at("budget").get<std::size_t>();
    args.seed = manifest.at("seed").get<std::uint64_t>();
    args.config = run_config_from_json(manifest.at("config"));
    args.out_root = scratch_root;
    args.timestamp = "replay-" + manifest.value("started_at", std::string("run"));
    // A previous replay of the same run is replaced.
    const auto previous =
        scratch_root / (canonical_method(args.method) + "_" + std::to_string(args.seed) + "_" + args.timestamp);
    if (std::filesystem::exists(RunFiles{previous}.manifest())) std::filesystem::remove_all(previous);

    ReplayResult result;
    result.replay_dir = run_explore(args);
    const std::string original = read_file(f.trajectory());
    const std::string again = read_file(RunFiles{result.replay_dir}.trajectory());
    result.identical = original == again;
    if (!result.identical) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min(original.size(), again.size()) && original[i] == again[i]; ++i)
            line += original[i] == '\n' ? 1 : 0;
        result.first_difference = line;
    }
    return result;
}

}  // namespace lumina
