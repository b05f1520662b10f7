#pragma once

// Command-line front end: manifest and configuration handling, seeded run
// orchestration, front metrics and diagnostic exports. The only part of the
// library that writes files.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evimacs/benchmarks.hpp"
#include "evimacs/macs.hpp"
#include "evimacs/problem.hpp"
#include "json.hpp"

namespace evimacs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Valid ids for --problem.
const std::vector<std::string>& problem_ids();

struct RunManifest {
    std::string problem;
    std::string config_path;  // optional JSON configuration
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::size_t repeats = 1;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> agents;
    std::optional<std::size_t> nf;
    std::optional<std::string> space;
    std::optional<std::string> mode;
    std::optional<double> nu;
    // "section.key=value" assignments applied on top of the config file.
    std::vector<std::string> overrides;
};

// Configuration document after flags and overrides are folded in. Throws
// ConfigError on unknown keys or values of the wrong type.
nlohmann::json resolve_config(const RunManifest& manifest);

struct ProblemSetup {
    std::string id;
    ProblemDefinition problem;
    macs::EngineConfig engine;
    // Set for problems with a known true front.
    std::optional<benchmarks::BenchmarkId> benchmark;
    benchmarks::DebConstants deb;
};

ProblemSetup build_setup(const std::string& problem_id, const nlohmann::json& config,
                         const std::string& config_dir = ".");

std::string version_string();
// FNV-1a of the resolved configuration and problem id, as 16 hex digits.
std::string manifest_hash(const std::string& problem_id, const nlohmann::json& config);

struct RunRecord {
    std::uint64_t seed = 0;
    std::size_t evaluations = 0;
    std::size_t generations = 0;
    std::size_t archive_size = 0;
    std::size_t feasible = 0;
    std::optional<double> distance;
    double wall_seconds = 0.0;
    bool partial = false;
};

struct RunOutputs {
    std::string archive_csv;
    std::string archive_json;
    std::string generations_csv;
    std::string partition_json;
    RunRecord record;
};

// One seeded run with all of its artifacts rendered to strings.
RunOutputs execute_run(const ProblemSetup& setup, std::uint64_t seed, const std::string& hash);

// Objective columns of a front CSV: objective_* columns when present,
// otherwise every column. Lines starting with '#' are skipped.
std::vector<std::vector<double>> read_front_csv(const std::string& path);
// Numeric rows of a CSV, skipping comments and a non-numeric header.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path);

int cmd_run(const RunManifest& manifest, std::ostream& out, std::ostream& err);
int cmd_metric(const std::string& front_path, const std::string& reference, std::ostream& out, std::ostream& err);
int cmd_diagnose_lowthrust(const std::string& design_csv, const std::string& out_dir, std::size_t steps_per_revolution,
                           const std::string& config_path, std::ostream& out, std::ostream& err);
int cmd_entry_trajectory(const std::string& design_csv, const std::string& out_dir, const std::string& config_path,
                         std::ostream& out, std::ostream& err);

// Full command-line entry point; returns the process exit status.
int main_entry(int argc, char** argv);

}  // namespace evimacs::cli
