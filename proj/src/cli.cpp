#include "evimacs/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "evimacs/aerocapture.hpp"
#include "evimacs/errors.hpp"
#include "evimacs/evidence.hpp"
#include "evimacs/lowthrust.hpp"
#include "evimacs/pareto.hpp"

#ifndef EVIMACS_GIT_DESCRIBE
#define EVIMACS_GIT_DESCRIBE "unknown"
#endif

namespace evimacs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kBaseProblems{"deb", "zdt4", "lowthrust", "aerocapture"};

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

// Typed access with configuration errors instead of json exceptions.
double as_double(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
    return v.get<double>();
}
std::size_t as_size(const json& v, const std::string& key) {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::size_t>(v.get<long long>());
    throw ConfigError("'" + key + "' must be a non-negative integer");
}
bool as_bool(const json& v, const std::string& key) {
    if (!v.is_boolean()) throw ConfigError("'" + key + "' must be true or false");
    return v.get<bool>();
}
std::string as_string(const json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
    return v.get<std::string>();
}
const json& as_object(const json& v, const std::string& key) {
    if (!v.is_object()) throw ConfigError("'" + key + "' must be an object");
    return v;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + " is not valid JSON: " + e.what());
    }
}

decomposition::SelectionMode parse_mode(const std::string& s) {
    if (s == "front") return decomposition::SelectionMode::FrontGuided;
    if (s == "merit") return decomposition::SelectionMode::Merit;
    throw ConfigError("unknown selection mode '" + s + "' (valid: front, merit)");
}

macs::EngineConfig engine_preset(const std::string& base) {
    macs::EngineConfig c;
    if (base == "zdt4") {
        c.population_size = 5;
        c.n_f = 3;
        c.max_evaluations = 20000;
        c.region_fraction = 2.0;
    } else if (base == "deb") {
        c.population_size = 10;
        c.n_f = 5;
        c.max_evaluations = 12000;
    } else if (base == "lowthrust") {
        c.max_evaluations = 5000;
    } else if (base == "aerocapture") {
        c.max_evaluations = 1000;
    }
    return c;
}

void apply_partition(const json& j, decomposition::PartitionConfig& p) {
    for (const auto& [key, v] : as_object(j, "engine.partition").items()) {
        const std::string k = "engine.partition." + key;
        if (key == "max_depth") p.max_depth = as_size(v, k);
        else if (key == "no_improve_threshold") p.no_improve_threshold = as_size(v, k);
        else if (key == "max_split_coordinates") p.max_split_coordinates = as_size(v, k);
        else throw ConfigError("unknown key '" + k + "'");
    }
}

void apply_engine(const json& j, macs::EngineConfig& c) {
    for (const auto& [key, v] : as_object(j, "engine").items()) {
        const std::string k = "engine." + key;
        if (key == "population_size") c.population_size = as_size(v, k);
        else if (key == "n_f") c.n_f = as_size(v, k);
        else if (key == "max_evaluations") c.max_evaluations = as_size(v, k);
        else if (key == "rho_min") c.rho_min = as_double(v, k);
        else if (key == "collision_distance") c.collision_distance = as_double(v, k);
        else if (key == "w0") c.w0 = as_double(v, k);
        else if (key == "w1") c.w1 = as_double(v, k);
        else if (key == "w2") c.w2 = as_double(v, k);
        else if (key == "epsilon_accept") c.epsilon_accept = as_double(v, k);
        else if (key == "scalarized_acceptance") c.scalarized_acceptance = as_bool(v, k);
        else if (key == "region_fraction") c.region_fraction = as_double(v, k);
        else if (key == "nonuniform_exponent") c.nonuniform_exponent = as_double(v, k);
        else if (key == "boundary_fraction") c.boundary_fraction = as_double(v, k);
        else if (key == "mutation_low") c.mutation_low = as_double(v, k);
        else if (key == "mutation_high") c.mutation_high = as_double(v, k);
        else if (key == "archive_capacity") c.archive_capacity = as_size(v, k);
        else if (key == "branch_period") c.branch_period = as_size(v, k);
        else if (key == "selection") c.selection = parse_mode(as_string(v, k));
        else if (key == "nu") c.nu = as_double(v, k);
        else if (key == "cluster_gap") c.cluster_gap = as_double(v, k);
        else if (key == "threads") c.threads = as_size(v, k);
        else if (key == "partition") apply_partition(v, c.partition);
        else throw ConfigError("unknown key '" + k + "'");
    }
}

void apply_sweep(const std::string& key, const json& v, evidence::SweepOptions& s) {
    const std::string k = "problem." + key;
    if (key == "sweep_method") {
        const std::string m = as_string(v, k);
        if (m == "corners") s.extremum.method = evidence::ExtremumMethod::Corners;
        else if (m == "corners_plus_sampling") s.extremum.method = evidence::ExtremumMethod::CornersPlusSampling;
        else if (m == "grid") s.extremum.method = evidence::ExtremumMethod::GridOracle;
        else throw ConfigError("unknown sweep method '" + m + "' (valid: corners, corners_plus_sampling, grid)");
    } else if (key == "samples") {
        s.extremum.samples = as_size(v, k);
    } else if (key == "grid_points") {
        s.extremum.grid_points = as_size(v, k);
    } else if (key == "conservative_pad") {
        s.extremum.conservative_pad = as_double(v, k);
    }
}

bool is_sweep_key(const std::string& key) {
    return key == "sweep_method" || key == "samples" || key == "grid_points" || key == "conservative_pad";
}

std::string resolve_path(const std::string& path, const std::string& dir) {
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(dir) / p).string();
}

// Point-mass stand-in used when the evidence binding is switched off: the
// midpoint of the heaviest focal element of every parameter.
std::vector<evidence::BpaStructure> nominal_uncertainty(const std::vector<evidence::BpaStructure>& dims) {
    std::vector<evidence::BpaStructure> out;
    for (const auto& d : dims) {
        const auto& els = d.elements();
        const auto best = std::max_element(els.begin(), els.end(),
                                           [](const auto& a, const auto& b) { return a.mass < b.mass; });
        const double mid = 0.5 * (best->interval.lo + best->interval.hi);
        out.emplace_back(d.name(), std::vector<evidence::FocalInterval>{{{mid, mid}, 1.0}});
    }
    return out;
}

lowthrust::LowThrustConfig lowthrust_config(const json& config, const std::string& dir) {
    const json problem = config.value("problem", json::object());
    as_object(problem, "problem");
    bool calibrated = true;
    if (problem.contains("calibrated")) calibrated = as_bool(problem["calibrated"], "problem.calibrated");
    auto c = calibrated ? lowthrust::LowThrustConfig::calibrated() : lowthrust::LowThrustConfig{};
    for (const auto& [key, v] : problem.items()) {
        const std::string k = "problem." + key;
        auto& p = c.propulsion;
        if (key == "calibrated") continue;
        if (key == "isp_scale") p.isp_scale = as_double(v, k);
        else if (key == "thrust_scale") p.thrust_scale = as_double(v, k);
        else if (key == "mass_budget") p.mass_budget = as_double(v, k);
        else if (key == "structure_fraction") p.structure_fraction = as_double(v, k);
        else if (key == "array_density") p.array_density = as_double(v, k);
        else if (key == "time_tolerance") p.time_tolerance = as_double(v, k);
        else if (key == "confidence") c.confidence = as_double(v, k);
        else if (key == "maximize_threshold") c.maximize_threshold = as_bool(v, k);
        else if (key == "samples_per_revolution") c.profile.samples_per_revolution = as_size(v, k);
        else if (key == "quadrature_tolerance") c.profile.quadrature_tolerance = as_double(v, k);
        else if (key == "uncertainty_file") c.uncertainty = evidence::load_bpa_file(resolve_path(as_string(v, k), dir));
        else if (is_sweep_key(key)) apply_sweep(key, v, c.sweep);
        else throw ConfigError("unknown key '" + k + "' for lowthrust");
    }
    if (config.contains("evidence") && !as_bool(config["evidence"], "evidence"))
        c.uncertainty = nominal_uncertainty(c.uncertainty);
    return c;
}

aerocapture::AerocaptureConfig aerocapture_config(const json& config, const std::string& dir) {
    const json problem = config.value("problem", json::object());
    as_object(problem, "problem");
    auto c = aerocapture::AerocaptureConfig::defaults();
    double complement = 10.0;
    std::optional<std::string> uncertainty_file;
    for (const auto& [key, v] : problem.items()) {
        const std::string k = "problem." + key;
        if (key == "space") c.space = aerocapture::parse_solution_space(as_string(v, k));
        else if (key == "vehicle_mass") c.vehicle_mass = as_double(v, k);
        else if (key == "isp") c.isp = as_double(v, k);
        else if (key == "heat_flux_limit") c.heat_flux_limit = as_double(v, k);
        else if (key == "g_load_limit") c.g_load_limit = as_double(v, k);
        else if (key == "confidence") c.confidence = as_double(v, k);
        else if (key == "entry_heading") c.entry_heading = as_double(v, k);
        else if (key == "entry_latitude") c.entry_latitude = as_double(v, k);
        else if (key == "margin_on_heading") c.margin_on_heading = as_bool(v, k);
        else if (key == "interface_altitude") c.entry.interface_altitude = as_double(v, k);
        else if (key == "max_time") c.entry.max_time = as_double(v, k);
        else if (key == "relative_tolerance") c.entry.tolerances.relative = as_double(v, k);
        else if (key == "absolute_tolerance") c.entry.tolerances.absolute = as_double(v, k);
        else if (key == "fit_a") c.nominal.fit_a = as_double(v, k);
        else if (key == "fit_b") c.nominal.fit_b = as_double(v, k);
        else if (key == "mach") c.nominal.mach = as_double(v, k);
        else if (key == "complement_factor") complement = as_double(v, k);
        else if (key == "uncertainty_file") uncertainty_file = resolve_path(as_string(v, k), dir);
        else if (key == "target") {
            for (const auto& [tk, tv] : as_object(v, k).items()) {
                const std::string kk = k + "." + tk;
                if (tk == "periapsis_altitude") c.target.periapsis_altitude = as_double(tv, kk);
                else if (tk == "apoapsis_altitude") c.target.apoapsis_altitude = as_double(tv, kk);
                else if (tk == "inclination") c.target.inclination = as_double(tv, kk);
                else throw ConfigError("unknown key '" + kk + "'");
            }
        } else if (is_sweep_key(key)) {
            apply_sweep(key, v, c.sweep);
        } else {
            throw ConfigError("unknown key '" + k + "' for aerocapture");
        }
    }
    c.uncertainty = uncertainty_file ? evidence::load_bpa_file(*uncertainty_file)
                                     : aerocapture::default_entry_uncertainty(complement);
    if (config.contains("evidence") && !as_bool(config["evidence"], "evidence"))
        c.uncertainty = nominal_uncertainty(c.uncertainty);
    return c;
}

void apply_bounds(const json& j, std::vector<Interval>& bounds) {
    as_object(j, "bounds");
    for (const auto& [key, v] : j.items())
        if (key != "lower" && key != "upper") throw ConfigError("unknown key 'bounds." + key + "'");
    for (const char* side : {"lower", "upper"}) {
        if (!j.contains(side)) continue;
        const json& arr = j[side];
        if (!arr.is_array() || arr.size() != bounds.size())
            throw ConfigError(std::string("bounds.") + side + " needs " + std::to_string(bounds.size()) + " numbers");
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            const double x = as_double(arr[i], std::string("bounds.") + side);
            (std::string(side) == "lower" ? bounds[i].lo : bounds[i].hi) = x;
        }
    }
    for (std::size_t i = 0; i < bounds.size(); ++i)
        if (!(bounds[i].lo <= bounds[i].hi)) throw ConfigError("bounds for variable " + std::to_string(i) + " are reversed");
}

benchmarks::DebConstants deb_constants(const json& j) {
    benchmarks::DebConstants d;
    for (const auto& [key, v] : as_object(j, "problem.deb").items()) {
        const std::string k = "problem.deb." + key;
        if (key == "a") d.a = as_double(v, k);
        else if (key == "b") d.b = as_double(v, k);
        else if (key == "c") d.c = as_double(v, k);
        else if (key == "d") d.d = as_double(v, k);
        else if (key == "e") d.e = as_double(v, k);
        else if (key == "theta") d.theta = as_double(v, k);
        else throw ConfigError("unknown key '" + k + "'");
    }
    return d;
}

json parse_override_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return text;  // bare words are strings
    }
}

std::string header_comment(std::uint64_t seed, const std::string& hash) {
    return "# seed=" + std::to_string(seed) + " version=" + version_string() + " manifest=" + hash + "\n";
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
    if (!out) throw ConfigError("cannot write " + path.string());
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto a = cell.find_first_not_of(" \t\r");
        const auto b = cell.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line);
        double dummy;
        if (first && !parse_number(cells.front(), dummy)) {
            t.header = std::move(cells);
        } else {
            t.rows.push_back(std::move(cells));
        }
        first = false;
    }
    return t;
}

std::vector<std::vector<double>> numeric_columns(const Table& t, const std::vector<std::size_t>& cols,
                                                 const std::string& path) {
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::vector<double> row;
        for (std::size_t c : cols) {
            double v;
            if (c >= t.rows[r].size() || !parse_number(t.rows[r][c], v))
                throw ConfigError(path + ": row " + std::to_string(r + 1) + " has a missing or non-numeric value");
            row.push_back(v);
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<std::size_t> prefixed_columns(const Table& t, const std::string& prefix) {
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i].rfind(prefix, 0) == 0) cols.push_back(i);
    return cols;
}

// First design row of a CSV; decision_* columns are used when present.
std::vector<double> read_design(const std::string& path, std::size_t n) {
    const Table t = read_table(path);
    if (t.rows.empty()) throw ConfigError(path + " has no design row");
    auto cols = prefixed_columns(t, "decision_");
    if (cols.empty())
        for (std::size_t i = 0; i < n; ++i) cols.push_back(i);
    if (cols.size() != n)
        throw ConfigError(path + ": expected " + std::to_string(n) + " design values, found " + std::to_string(cols.size()));
    Table first = t;
    first.rows.resize(1);
    return numeric_columns(first, cols, path).front();
}

// Names the first bound a design violates; empty when inside.
std::string bound_violation(std::span<const double> x, const std::vector<Interval>& bounds,
                            const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        if (!std::isfinite(x[i]) || x[i] < bounds[i].lo || x[i] > bounds[i].hi) {
            std::ostringstream os;
            os << names[i] << " = " << x[i] << " outside [" << bounds[i].lo << ", " << bounds[i].hi << "]";
            return os.str();
        }
    }
    return {};
}

std::string config_dir_of(const std::string& path) {
    if (path.empty()) return ".";
    const auto parent = fs::path(path).parent_path();
    return parent.empty() ? "." : parent.string();
}

json load_optional_config(const std::string& path) {
    if (path.empty()) return json::object();
    json j = read_json_file(path);
    if (!j.is_object()) throw ConfigError(path + " must hold a JSON object");
    return j;
}

const std::vector<std::string> kLowThrustNames{"revolutions",    "departure_mjd2000", "duration_days",
                                               "specific_power", "area_m2",           "exponent_p",
                                               "exponent_fg",    "exponent_hk",       "mass_threshold"};
const std::vector<std::string> kAerocaptureNames{"speed_kms",   "entry_angle_deg", "bank_rad",   "lift_fraction",
                                                 "half_cone_deg", "area_m2",       "nose_ratio", "propellant_threshold",
                                                 "angle_margin", "speed_margin"};

std::size_t thread_cap(std::size_t repeats) {
    const char* env = std::getenv("MACS_THREADS");
    if (!env || !*env) return 1;
    double v;
    if (!parse_number(env, v) || v < 1 || v != std::floor(v)) throw ConfigError("MACS_THREADS must be a positive integer");
    return std::min<std::size_t>(static_cast<std::size_t>(v), std::max<std::size_t>(repeats, 1));
}

}  // namespace

const std::vector<std::string>& problem_ids() {
    static const std::vector<std::string> ids{"deb", "zdt4", "lowthrust", "aerocapture", "custom"};
    return ids;
}

std::string version_string() { return std::string("v") + EVIMACS_VERSION + "-" + EVIMACS_GIT_DESCRIBE; }

std::string manifest_hash(const std::string& problem_id, const json& config) {
    const std::string text = problem_id + "\n" + config.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json resolve_config(const RunManifest& m) {
    const auto& ids = problem_ids();
    if (std::find(ids.begin(), ids.end(), m.problem) == ids.end())
        throw ConfigError("unknown problem '" + m.problem + "' (valid: " + join(ids) + ")");
    json config = load_optional_config(m.config_path);
    auto set = [&](const std::string& section, const std::string& key, json value) {
        if (!config.contains(section)) config[section] = json::object();
        as_object(config[section], section);
        config[section][key] = std::move(value);
    };
    if (m.budget) set("engine", "max_evaluations", *m.budget);
    if (m.agents) set("engine", "population_size", *m.agents);
    if (m.nf) set("engine", "n_f", *m.nf);
    if (m.mode) set("engine", "selection", *m.mode);
    if (m.nu) set("engine", "nu", *m.nu);
    if (m.space) set("problem", "space", *m.space);
    for (const auto& o : m.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' must look like key=value");
        const std::string path = o.substr(0, eq);
        json* node = &config;
        std::size_t start = 0;
        while (true) {
            const auto dot = path.find('.', start);
            const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw ConfigError("override '" + o + "' has an empty key");
            if (dot == std::string::npos) {
                (*node)[part] = parse_override_value(o.substr(eq + 1));
                break;
            }
            if (!node->contains(part)) (*node)[part] = json::object();
            node = &(*node)[part];
            as_object(*node, part);
            start = dot + 1;
        }
    }
    return config;
}

ProblemSetup build_setup(const std::string& problem_id, const json& config, const std::string& config_dir) {
    as_object(config, "configuration");
    for (const auto& [key, v] : config.items())
        if (key != "engine" && key != "problem" && key != "bounds" && key != "evidence" && key != "base")
            throw ConfigError("unknown top-level key '" + key + "'");
    std::string base = problem_id;
    if (problem_id == "custom") {
        if (!config.contains("base"))
            throw ConfigError("custom problems need a 'base' key (one of: " + join(kBaseProblems) + ")");
        base = as_string(config["base"], "base");
        if (std::find(kBaseProblems.begin(), kBaseProblems.end(), base) == kBaseProblems.end())
            throw ConfigError("unknown base problem '" + base + "' (valid: " + join(kBaseProblems) + ")");
    } else if (config.contains("base")) {
        throw ConfigError("'base' is only valid with --problem custom");
    } else if (std::find(kBaseProblems.begin(), kBaseProblems.end(), base) == kBaseProblems.end()) {
        throw ConfigError("unknown problem '" + problem_id + "' (valid: " + join(problem_ids()) + ")");
    }

    ProblemSetup s;
    s.id = problem_id;
    s.engine = engine_preset(base);
    if (config.contains("engine")) apply_engine(config["engine"], s.engine);

    const json problem = config.value("problem", json::object());
    if (base == "zdt4" || base == "deb") {
        const auto id = benchmarks::parse_benchmark(base);
        std::size_t n = 10;
        for (const auto& [key, v] : as_object(problem, "problem").items()) {
            if (key == "n") n = as_size(v, "problem.n");
            else if (key == "deb" && base == "deb") s.deb = deb_constants(v);
            else throw ConfigError("unknown key 'problem." + key + "' for " + base);
        }
        auto spec = benchmarks::BenchmarkSpec::defaults(id, n);
        spec.deb = s.deb;
        if (config.contains("bounds")) apply_bounds(config["bounds"], spec.bounds);
        s.problem = benchmarks::make_problem(spec);
        // Overridden bounds change the reachable front; no reference then.
        if (!config.contains("bounds") && problem_id != "custom") s.benchmark = id;
    } else if (base == "lowthrust") {
        s.problem = lowthrust::robust_lowthrust_problem(lowthrust_config(config, config_dir));
    } else {
        s.problem = aerocapture::robust_aerocapture_problem(aerocapture_config(config, config_dir));
    }
    if (base != "zdt4" && base != "deb" && config.contains("bounds")) apply_bounds(config["bounds"], s.problem.bounds);
    if (problem_id == "custom") s.problem.name = "custom-" + s.problem.name;
    s.problem.validate();
    s.engine.validate();
    return s;
}

RunOutputs execute_run(const ProblemSetup& setup, std::uint64_t seed, const std::string& hash) {
    macs::EngineConfig c = setup.engine;
    c.seed = seed;
    RunOutputs out;
    std::ostringstream gen;
    gen << header_comment(seed, hash) << "generation,evaluations,archive_size,feasible_agents,nondominated_agents,subdomains\n";
    const auto t0 = std::chrono::steady_clock::now();
    macs::Engine engine(setup.problem, c);
    const auto result = engine.run([&](const macs::GenerationInfo& g) {
        gen << g.generation << ',' << g.evaluations << ',' << g.archive_size << ',' << g.feasible_agents << ','
            << g.nondominated_agents << ',' << g.subdomains << '\n';
    });
    out.record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const pareto::ExportMetadata meta{seed, version_string(), hash, result.stats.evaluations};
    out.archive_csv = pareto::to_csv(result.archive, meta);
    out.archive_json = pareto::to_json(result.archive, meta);
    out.generations_csv = gen.str();
    json part;
    part["seed"] = seed;
    part["version"] = meta.version;
    part["manifest_hash"] = hash;
    part["partition"] = json::parse(result.partition.to_json());
    out.partition_json = part.dump(2);

    auto& r = out.record;
    r.seed = seed;
    r.evaluations = result.stats.evaluations;
    r.generations = result.stats.generations;
    r.archive_size = result.archive.size();
    r.partial = result.stats.partial;
    for (const auto& e : result.archive.entries()) r.feasible += e.violation <= 0.0 ? 1 : 0;
    if (setup.benchmark) {
        const auto ref = *setup.benchmark == benchmarks::BenchmarkId::Deb
                             ? benchmarks::deb_constrained_front(500, setup.deb)
                             : benchmarks::reference_front(*setup.benchmark, 500);
        r.distance = pareto::distance_metric(pareto::objectives_of(result.archive.entries()), ref);
    }
    return out;
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
    const Table t = read_table(path);
    std::size_t width = t.header.size();
    if (width == 0 && !t.rows.empty()) width = t.rows.front().size();
    std::vector<std::size_t> cols(width);
    for (std::size_t i = 0; i < width; ++i) cols[i] = i;
    return numeric_columns(t, cols, path);
}

std::vector<std::vector<double>> read_front_csv(const std::string& path) {
    const Table t = read_table(path);
    auto cols = prefixed_columns(t, "objective_");
    if (cols.empty()) {
        const std::size_t width = !t.header.empty() ? t.header.size() : (t.rows.empty() ? 0 : t.rows.front().size());
        for (std::size_t i = 0; i < width; ++i) cols.push_back(i);
    }
    auto rows = numeric_columns(t, cols, path);
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (t.rows[r].size() != (t.header.empty() ? rows[r].size() : t.header.size()))
            throw ConfigError(path + ": row " + std::to_string(r + 1) + " has the wrong number of columns");
    return rows;
}

int cmd_run(const RunManifest& m, std::ostream& out, std::ostream& err) {
    ProblemSetup setup;
    json config;
    std::string hash;
    std::size_t workers = 1;
    try {
        if (m.repeats == 0) throw ConfigError("--repeats must be at least 1");
        config = resolve_config(m);
        setup = build_setup(m.problem, config, config_dir_of(m.config_path));
        hash = manifest_hash(m.problem, config);
        workers = thread_cap(m.repeats);
        fs::create_directories(m.out_dir);
        const fs::path probe = fs::path(m.out_dir) / ".write_test";
        write_file(probe, "");
        fs::remove(probe);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "configuration error: output directory: " << e.what() << '\n';
        return kExitConfig;
    }

    std::vector<RunOutputs> results(m.repeats);
    std::vector<std::string> failures(m.repeats);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < m.repeats; i = next++) {
            try {
                results[i] = execute_run(setup, m.seed + i, hash);
                const auto& r = results[i].record;
                std::lock_guard lock(log_mutex);
                out << "run " << i << " seed=" << r.seed << " evaluations=" << r.evaluations
                    << " archive=" << r.archive_size << " feasible=" << r.feasible;
                if (r.distance) out << " distance=" << std::setprecision(6) << *r.distance;
                out << " time=" << std::fixed << std::setprecision(2) << r.wall_seconds << "s" << std::defaultfloat
                    << '\n';
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < m.repeats; ++i) {
        if (!failures[i].empty()) {
            err << "run " << i << " (seed " << m.seed + i << ") failed: " << failures[i] << '\n';
            return kExitRuntime;
        }
    }

    try {
        const fs::path dir(m.out_dir);
        json summary;
        summary["problem"] = m.problem;
        summary["seed"] = m.seed;
        summary["version"] = version_string();
        summary["manifest_hash"] = hash;
        summary["repeats"] = m.repeats;
        summary["runs"] = json::array();
        std::ostringstream csv;
        csv << header_comment(m.seed, hash)
            << "run,seed,evaluations,generations,archive_size,feasible,distance,wall_seconds,partial\n";
        std::vector<double> distances;
        double wall = 0.0;
        std::size_t feasible = 0;
        for (std::size_t i = 0; i < m.repeats; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "run_%03zu", i);
            const auto& o = results[i];
            write_file(dir / (std::string(name) + "_archive.csv"), o.archive_csv);
            write_file(dir / (std::string(name) + "_archive.json"), o.archive_json);
            write_file(dir / (std::string(name) + "_generations.csv"), o.generations_csv);
            write_file(dir / (std::string(name) + "_partition.json"), o.partition_json);
            const auto& r = o.record;
            json jr{{"run", i},
                    {"seed", r.seed},
                    {"evaluations", r.evaluations},
                    {"generations", r.generations},
                    {"archive_size", r.archive_size},
                    {"feasible", r.feasible},
                    {"wall_seconds", r.wall_seconds},
                    {"partial", r.partial}};
            if (r.distance) {
                jr["distance"] = *r.distance;
                distances.push_back(*r.distance);
            }
            summary["runs"].push_back(jr);
            csv << i << ',' << r.seed << ',' << r.evaluations << ',' << r.generations << ',' << r.archive_size << ','
                << r.feasible << ',' << (r.distance ? fmt(*r.distance) : "") << ',' << fmt(r.wall_seconds) << ','
                << (r.partial ? 1 : 0) << '\n';
            wall += r.wall_seconds;
            feasible += r.feasible;
        }
        summary["feasible_total"] = feasible;
        summary["wall_seconds_total"] = wall;
        if (!distances.empty()) {
            double mean = 0.0;
            for (double d : distances) mean += d;
            mean /= static_cast<double>(distances.size());
            double var = 0.0;
            for (double d : distances) var += (d - mean) * (d - mean);
            const double sd = distances.size() > 1 ? std::sqrt(var / static_cast<double>(distances.size() - 1)) : 0.0;
            summary["distance"] = {{"mean", mean}, {"std", sd}};
            out << "distance mean=" << std::setprecision(6) << mean << " std=" << sd << '\n';
        }
        json manifest{{"problem", m.problem}, {"seed", m.seed},          {"repeats", m.repeats},
                      {"config", config},     {"manifest_hash", hash}, {"version", version_string()}};
        write_file(dir / "manifest.json", manifest.dump(2));
        write_file(dir / "summary.json", summary.dump(2));
        write_file(dir / "summary.csv", csv.str());
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_metric(const std::string& front_path, const std::string& reference, std::ostream& out, std::ostream& err) {
    try {
        const auto front = read_front_csv(front_path);
        std::vector<std::vector<double>> ref;
        if (reference == "zdt4")
            ref = benchmarks::reference_front(benchmarks::BenchmarkId::Zdt4, 500);
        else if (reference == "deb")
            ref = benchmarks::deb_constrained_front(500);
        else
            ref = read_front_csv(reference);
        if (front.empty()) throw ConfigError(front_path + " has no front points");
        if (ref.empty()) throw ConfigError("reference has no points");
        if (front.front().size() != ref.front().size())
            throw ConfigError("front has " + std::to_string(front.front().size()) + " objective columns, reference has " +
                              std::to_string(ref.front().size()));
        out << std::fixed << std::setprecision(6) << pareto::distance_metric(front, ref) << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_diagnose_lowthrust(const std::string& design_csv, const std::string& out_dir, std::size_t steps,
                           const std::string& config_path, std::ostream& out, std::ostream& err) {
    lowthrust::LowThrustConfig config;
    std::vector<double> x;
    std::vector<Interval> bounds = lowthrust::solution_bounds();
    try {
        const json cfg = load_optional_config(config_path);
        config = lowthrust_config(cfg, config_dir_of(config_path));
        if (cfg.contains("bounds")) apply_bounds(cfg["bounds"], bounds);
        x = read_design(design_csv, bounds.size());
        if (steps == 0) throw ConfigError("--steps must be positive");
        fs::create_directories(out_dir);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    }
    const std::string bad = bound_violation(x, bounds, kLowThrustNames);
    if (!bad.empty()) {
        err << "infeasible design: " << bad << '\n';
        return kExitRuntime;
    }
    try {
        const auto d = lowthrust::design_from(x);
        const auto profile = lowthrust::transfer_profile(d, config.ephemerides, config.profile);
        const auto diag = lowthrust::propagate_against_shape(profile.shape, steps);
        const std::string hash = manifest_hash("diagnose-lowthrust", json{{"design", x}, {"steps", steps}});
        const fs::path dir(out_dir);

        std::ostringstream el;
        el << header_comment(0, hash) << "L";
        for (const char* n : {"p", "f", "g", "h", "k"}) el << ',' << n << "_shaped," << n << "_prop";
        el << '\n';
        for (const auto& r : diag.rows) {
            el << fmt(r.L);
            for (std::size_t i = 0; i < 5; ++i) el << ',' << fmt(r.shaped[i]) << ',' << fmt(r.propagated[i]);
            el << '\n';
        }
        write_file(dir / "diagnose_elements.csv", el.str());

        // Nominal propulsion: midpoints of the heaviest focal elements.
        const auto nominal = nominal_uncertainty(config.uncertainty);
        const double eta_p = nominal[0].elements()[0].interval.lo, flux = nominal[1].elements()[0].interval.lo;
        const double eta_e = nominal[2].elements()[0].interval.lo;
        const auto mt = lowthrust::mass_and_time(profile, d, {eta_p, flux, eta_e}, config.propulsion);
        const double mass = (mt.propellant + mt.array + config.propulsion.structure_fraction) * config.propulsion.mass_budget;
        const double to_si = lowthrust::kAuMeters / (lowthrust::kDaySeconds * lowthrust::kDaySeconds);
        std::ostringstream pr;
        pr << header_comment(0, hash) << "L,p,f,g,h,k,radius_au,accel_ms2,required_thrust_n,max_thrust_n\n";
        for (const auto& s : profile.samples) {
            const auto e = profile.shape.at(s.L);
            pr << fmt(s.L) << ',' << fmt(e.p) << ',' << fmt(e.f) << ',' << fmt(e.g) << ',' << fmt(e.h) << ','
               << fmt(e.k) << ',' << fmt(s.radius) << ',' << fmt(s.magnitude * to_si) << ','
               << fmt(mass * s.magnitude * to_si) << ','
               << fmt(lowthrust::max_thrust(eta_p, d.specific_power, d.area, flux, s.radius, config.propulsion))
               << '\n';
        }
        write_file(dir / "lowthrust_profile.csv", pr.str());

        json summary{{"version", version_string()},
                     {"manifest_hash", hash},
                     {"design", x},
                     {"steps_per_revolution", steps},
                     {"delta_v_ms", profile.delta_v},
                     {"time_of_flight_days", profile.time_of_flight},
                     {"propellant_fraction", mt.propellant},
                     {"thrust_margin_n", mt.thrust_margin},
                     {"notices", profile.shape.notices()}};
        const char* names[5] = {"p", "f", "g", "h", "k"};
        for (std::size_t i = 0; i < 5; ++i) summary["max_deviation"][names[i]] = diag.max_deviation[i];
        write_file(dir / "diagnose_summary.json", summary.dump(2));

        out << "delta_v=" << profile.delta_v << " m/s time_of_flight=" << profile.time_of_flight << " days\n";
        out << "max deviation";
        for (std::size_t i = 0; i < 5; ++i) out << ' ' << names[i] << '=' << diag.max_deviation[i];
        out << '\n';
        for (const auto& n : profile.shape.notices()) out << "notice: " << n << '\n';
        return kExitOk;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_entry_trajectory(const std::string& design_csv, const std::string& out_dir, const std::string& config_path,
                         std::ostream& out, std::ostream& err) {
    aerocapture::AerocaptureConfig config;
    std::vector<double> x;
    std::vector<Interval> bounds;
    try {
        const json cfg = load_optional_config(config_path);
        config = aerocapture_config(cfg, config_dir_of(config_path));
        bounds = aerocapture::solution_bounds(config.space);
        if (cfg.contains("bounds")) apply_bounds(cfg["bounds"], bounds);
        x = read_design(design_csv, bounds.size());
        fs::create_directories(out_dir);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    }
    const std::string bad = bound_violation(x, bounds, kAerocaptureNames);
    if (!bad.empty()) {
        err << "infeasible design: " << bad << '\n';
        return kExitRuntime;
    }
    try {
        std::vector<double> point;
        for (const auto& d : nominal_uncertainty(config.uncertainty)) point.push_back(d.elements()[0].interval.lo);
        const auto c = aerocapture::entry_case(config, x, point);
        auto options = config.entry;
        options.record = true;
        const auto tr = aerocapture::propagate_entry(c.initial, c.model, options);
        const auto budget = aerocapture::corrective_dv_budget(tr.final_state, tr.outcome != aerocapture::Outcome::Exited,
                                                              config.target, config.planet, config.isp);
        const std::string hash = manifest_hash("entry-trajectory", json{{"design", x}});
        const double deg = 180.0 / std::numbers::pi;
        std::ostringstream csv;
        csv << header_comment(0, hash) << "t_s,altitude_km,v_kms,beta_deg,chi_deg,psi_deg,heat_flux_wcm2,g_load\n";
        for (const auto& s : tr.samples)
            csv << fmt(s.t) << ',' << fmt(s.altitude) << ',' << fmt(s.v) << ',' << fmt(s.beta * deg) << ','
                << fmt(s.chi * deg) << ',' << fmt(s.psi * deg) << ',' << fmt(s.heat_flux) << ',' << fmt(s.g_load)
                << '\n';
        const fs::path dir(out_dir);
        write_file(dir / "entry_trajectory.csv", csv.str());
        json summary{{"version", version_string()},
                     {"manifest_hash", hash},
                     {"design", x},
                     {"outcome", aerocapture::to_string(tr.outcome)},
                     {"max_heat_flux", tr.max_heat_flux},
                     {"max_g_load", tr.max_g_load},
                     {"delta_v_kms", budget.total},
                     {"propellant_fraction", budget.propellant_fraction}};
        write_file(dir / "entry_summary.json", summary.dump(2));
        out << "outcome=" << aerocapture::to_string(tr.outcome) << " max_q=" << tr.max_heat_flux
            << " max_ng=" << tr.max_g_load << " dv=" << budget.total << " km/s propellant=" << budget.propellant_fraction
            << '\n';
        return kExitOk;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Evidence-based robust design with multiagent collaborative search"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    RunManifest m;
    auto* run = app.add_subcommand("run", "Seeded optimization runs with archive, log and summary output");
    run->add_option("--problem", m.problem, "Problem id: " + join(problem_ids()))->required();
    run->add_option("--config", m.config_path, "JSON configuration file");
    run->add_option("--seed", m.seed, "Base seed; run i uses seed + i");
    run->add_option("--repeats", m.repeats, "Number of seeded runs");
    run->add_option("--out", m.out_dir, "Output directory");
    std::size_t budget = 0, agents = 0, nf = 0;
    std::string space, mode;
    double nu = 0.0;
    auto* o_budget = run->add_option("--budget", budget, "Evaluation budget per run");
    auto* o_agents = run->add_option("--agents", agents, "Number of agents");
    auto* o_nf = run->add_option("--nf", nf, "Agents performing local perception each generation");
    auto* o_space = run->add_option("--space", space, "Aerocapture solution space: restricted or extended");
    auto* o_mode = run->add_option("--mode", mode, "Subdomain selection: front or merit");
    auto* o_nu = run->add_option("--nu", nu, "Weight of the merit selection");
    run->add_option("--set", m.overrides, "Override a configuration field, e.g. engine.region_fraction=1.5");

    std::string front, reference;
    auto* metric = app.add_subcommand("metric", "Average distance of a reference front to a front");
    metric->add_option("--front", front, "Front CSV (objective_* columns or plain columns)")->required();
    metric->add_option("--reference", reference, "zdt4, deb or a reference CSV")->required();

    std::string design, diag_out = "diagnose", diag_config;
    std::size_t steps = 720;
    auto* diag = app.add_subcommand("diagnose-lowthrust", "Propagate element rates under the shaped control");
    diag->add_option("--design", design, "CSV with one design row")->required();
    diag->add_option("--out", diag_out, "Output directory");
    diag->add_option("--steps", steps, "Integration steps per revolution");
    diag->add_option("--config", diag_config, "JSON configuration file");

    std::string entry_design, entry_out = "entry", entry_config;
    auto* entry = app.add_subcommand("entry-trajectory", "Export the nominal atmospheric pass of an aerocapture design");
    entry->add_option("--design", entry_design, "CSV with one design row")->required();
    entry->add_option("--out", entry_out, "Output directory");
    entry->add_option("--config", entry_config, "JSON configuration file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (run->parsed()) {
        if (o_budget->count()) m.budget = budget;
        if (o_agents->count()) m.agents = agents;
        if (o_nf->count()) m.nf = nf;
        if (o_space->count()) m.space = space;
        if (o_mode->count()) m.mode = mode;
        if (o_nu->count()) m.nu = nu;
        return cmd_run(m, std::cout, std::cerr);
    }
    if (metric->parsed()) return cmd_metric(front, reference, std::cout, std::cerr);
    if (diag->parsed()) return cmd_diagnose_lowthrust(design, diag_out, steps, diag_config, std::cout, std::cerr);
    return cmd_entry_trajectory(entry_design, entry_out, entry_config, std::cout, std::cerr);
}

}  // namespace evimacs::cli
