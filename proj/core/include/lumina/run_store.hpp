// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumina/config.hpp"
#include "lumina/llm_gateway.hpp"
#include "lumina/pareto.hpp"

namespace lumina {

inline constexpr int kRunFormatVersion = 1;

struct ExploreArgs {
    std::string method;           ///< "lumina" or an optimizer name
    std::string backend = "rule"; ///< lumina only: rule | llm
    std::size_t budget = 1000;
    std::uint64_t seed = 1;
    RunConfig config;
    std::filesystem::path out_root;  ///< defaults to config.output_dir
    std::string timestamp;           ///< defaults to the current UTC time
    ChatBackend* chat = nullptr;     ///< injected chat backend; otherwise built from the environment
};

struct RunFiles {
    std::filesystem::path dir;
    std::filesystem::path manifest() const { return dir / "manifest.json"; }
    std::filesystem::path trajectory() const { return dir / "trajectory.jsonl"; }
    std::filesystem::path archive() const { return dir / "archive.json"; }
    std::filesystem::path phv_curve() const { return dir / "phv_curve.csv"; }
    std::filesystem::path status() const { return dir / "status.json"; }
    std::filesystem::path influence() const { return dir / "influence.json"; }
    std::filesystem::path sensitivity() const { return dir / "sensitivity.json"; }
    std::filesystem::path llm_log() const { return dir / "llm_log.jsonl"; }
};

/// Runs one exploration into <out_root>/<method>_<seed>_<timestamp>. Throws
/// ConfigError on an unknown method or backend, or when the directory exists.
/// The status file reads "running" (resumable) until the run completes.
std::filesystem::path run_explore(const ExploreArgs& args);

std::string canonical_method(const std::string& method);

struct RunSummary {
    std::filesystem::path dir;
    std::string method;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    std::size_t samples = 0;
    std::size_t superior = 0;  ///< samples strictly better than the reference
    double final_phv = 0.0;
    double sample_efficiency = 0.0;
    std::vector<double> phv_curve;
    std::vector<ArchiveEntry> pareto;
};

struct MethodSummary {
    std::string method;
    std::size_t runs = 0;
    double mean_phv = 0.0;
    double std_phv = 0.0;
    double mean_sample_efficiency = 0.0;
    double std_sample_efficiency = 0.0;
    double mean_superior = 0.0;
};

struct Report {
    std::vector<RunSummary> runs;
    std::vector<MethodSummary> methods;  ///< descending mean PHV
};

/// Recomputes archive, PHV and sample efficiency from a run's stored trajectory.
RunSummary load_run(const std::filesystem::path& dir);

/// Each input is a run directory or a directory of runs. Only completed runs
/// count. Throws MissingRun when none is found.
Report build_report(const std::vector<std::filesystem::path>& inputs);

/// report.json, methods.csv, phv_curves.csv, pareto.csv
void write_report(const Report& report, const std::filesystem::path& out_dir);
nlohmann::json to_json(const Report& r);

struct ReplayResult {
    bool identical = false;
    std::filesystem::path replay_dir;
    std::size_t first_difference = 0;  ///< line number, when not identical
};

/// Re-executes a stored run from its manifest into scratch_root and compares
/// trajectories byte for byte. LLM-backed runs cannot be replayed (ConfigError).
ReplayResult replay_run(const std::filesystem::path& run_dir, const std::filesystem::path& scratch_root);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

}  // namespace lumina
