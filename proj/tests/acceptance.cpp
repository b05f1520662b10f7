// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "evimacs/aerocapture.hpp"
#include "evimacs/benchmarks.hpp"
#include "evimacs/cli.hpp"
#include "evimacs/evidence.hpp"
#include "evimacs/lowthrust.hpp"
#include "evimacs/ode.hpp"
#include "evimacs/pareto.hpp"
#include "evimacs/random.hpp"

using namespace evimacs;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
    std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

cli::ProblemSetup setup_for(const std::string& id, std::size_t budget) {
    nlohmann::json config = nlohmann::json::object();
    config["engine"]["max_evaluations"] = budget;
    return cli::build_setup(id, config);
}

macs::RunResult run(const cli::ProblemSetup& s, std::uint64_t seed) {
    auto c = s.engine;
    c.seed = seed;
    return macs::Engine(s.problem, c).run();
}

// ---------------------------------------------------------------- ZDT4

void zdt4_criteria() {
    const auto reference = benchmarks::reference_front(benchmarks::BenchmarkId::Zdt4, 500);
    const auto full = setup_for("zdt4", 20000), half = setup_for("zdt4", 10000);
    std::vector<double> d20, d10;
    std::size_t reached = 0;
    const auto t0 = Clock::now();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = run(full, seed);
        const auto front = pareto::objectives_of(r.archive.entries());
        d20.push_back(pareto::distance_metric(front, reference));
        const bool hit = std::any_of(front.begin(), front.end(),
                                     [](const auto& f) { return std::fabs(f[0] - 0.9) <= 0.05 && f[1] < 1.2; });
        reached += hit ? 1 : 0;
    }
    const double elapsed = seconds_since(t0);
    const double mean = std::accumulate(d20.begin(), d20.end(), 0.0) / 20.0;
    report("zdt4-regression", mean <= 1e-2 && reached >= 18 && elapsed < 120.0,
           format("mean distance %.3e (<= 1e-2), %zu/20 reach the front region (>= 18), %.1f s (< 120 s)", mean,
                  reached, elapsed));

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = run(half, seed);
        d10.push_back(pareto::distance_metric(pareto::objectives_of(r.archive.entries()), reference));
    }
    std::size_t ordered = 0;
    for (std::size_t i = 0; i < 20; ++i) ordered += d10[i] >= d20[i] ? 1 : 0;
    const double mean10 = std::accumulate(d10.begin(), d10.end(), 0.0) / 20.0;
    report("zdt4-budget-ordering", ordered >= 16,
           format("%zu/20 seeds with d(10000) >= d(20000) (>= 16); means %.3e vs %.3e", ordered, mean10, mean));
}

// ---------------------------------------------------------------- DEB

void deb_criterion() {
    const auto s = setup_for("deb", 12000);
    const auto t0 = Clock::now();
    const auto r = run(s, 1);
    const double elapsed = seconds_since(t0);
    std::size_t feasible = 0;
    double lo = 1e300, hi = -1e300;
    for (const auto& e : r.archive.entries()) {
        // Recomputed from the decision vector, not read back from the archive.
        feasible += benchmarks::deb(e.decision).c >= 0.0 ? 1 : 0;
        lo = std::min(lo, e.objectives[0]);
        hi = std::max(hi, e.objectives[0]);
    }
    const std::size_t n = r.archive.size();
    const bool ok = n > 0 && feasible == n && hi - lo >= 0.6 && elapsed < 30.0 && s.engine.population_size == 10 &&
                    s.engine.n_f == 5;
    report("deb-feasibility", ok,
           format("%zu/%zu entries with C >= 0, f1 span %.3f (>= 0.6), %.2f s (< 30 s)", feasible, n, hi - lo,
                  elapsed));
}

// ---------------------------------------------------------------- evidence

struct OracleResult {
    double bel = 0.0;
    double pl = 0.0;
    double mass = 0.0;
};

// Brute-force belief of {f <= v} from an explicit product of focal
// elements and a dense grid in every box.
OracleResult brute_force(const std::vector<evidence::BpaStructure>& dims,
                         const std::function<double(const std::vector<double>&)>& f, double v, int grid) {
    OracleResult out;
    const std::size_t d = dims.size();
    std::vector<std::size_t> idx(d, 0);
    while (true) {
        double mass = 1.0;
        for (std::size_t k = 0; k < d; ++k) mass *= dims[k].elements()[idx[k]].mass;
        double mn = 1e300, mx = -1e300;
        std::vector<int> g(d, 0);
        std::vector<double> p(d);
        while (true) {
            for (std::size_t k = 0; k < d; ++k) {
                const auto& iv = dims[k].elements()[idx[k]].interval;
                p[k] = g[k] == grid - 1 ? iv.hi : iv.lo + (iv.hi - iv.lo) * g[k] / (grid - 1);
            }
            const double y = f(p);
            mn = std::min(mn, y);
            mx = std::max(mx, y);
            std::size_t k = 0;
            while (k < d && ++g[k] == grid) g[k++] = 0;
            if (k == d) break;
        }
        out.mass += mass;
        if (mx <= v) out.bel += mass;
        if (mn <= v) out.pl += mass;
        std::size_t k = 0;
        while (k < d && ++idx[k] == dims[k].size()) idx[k++] = 0;
        if (k == d) break;
    }
    return out;
}

void evidence_criterion() {
    Rng rng(20240601);
    const auto t0 = Clock::now();
    std::size_t bad_exact = 0, bad_oracle = 0, bad_order = 0, bad_dual = 0, bad_mono = 0, bad_mass = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + rng.index(3);
        std::vector<evidence::BpaStructure> dims;
        for (std::size_t k = 0; k < d; ++k) {
            const std::size_t n = 1 + rng.index(4);
            std::vector<double> w(n);
            for (auto& x : w) x = rng.uniform(0.05, 1.0);
            const double total = std::accumulate(w.begin(), w.end(), 0.0);
            std::vector<evidence::FocalInterval> els;
            double used = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double a = rng.uniform(-3.0, 3.0), b = a + rng.uniform(0.0, 2.0);
                const double m = i + 1 == n ? 1.0 - used : w[i] / total;
                used += m;
                els.push_back({{a, b}, m});
            }
            dims.emplace_back("p" + std::to_string(k), els);
        }
        std::vector<double> coef(d);
        for (auto& c : coef) c = rng.uniform(-2.0, 2.0);
        const double c0 = rng.uniform(-1.0, 1.0);
        auto affine = [&](const auto& p) {
            double s = c0;
            for (std::size_t i = 0; i < d; ++i) s += coef[i] * p[i];
            return s;
        };
        const evidence::UncertainSpace space(dims);
        const evidence::Response f = [&](std::span<const double> p) { return affine(p); };
        evidence::ExtremumOptions corners, grid;
        grid.method = evidence::ExtremumMethod::GridOracle;
        grid.grid_points = 7;
        const double v = rng.uniform(-5.0, 5.0), v2 = v + rng.uniform(0.0, 3.0);
        const evidence::ThresholdEvent leq{0, v, evidence::Direction::Leq};
        const double bel_c = evidence::belief(space, {}, f, leq, corners);
        const double pl_c = evidence::plausibility(space, {}, f, leq, corners);
        const double bel_g = evidence::belief(space, {}, f, leq, grid);
        const double pl_g = evidence::plausibility(space, {}, f, leq, grid);
        bad_exact += (bel_c == bel_g && pl_c == pl_g) ? 0 : 1;
        const auto oracle = brute_force(dims, [&](const std::vector<double>& p) { return affine(p); }, v, 7);
        bad_oracle += (std::fabs(oracle.bel - bel_c) <= 1e-12 && std::fabs(oracle.pl - pl_c) <= 1e-12) ? 0 : 1;
        bad_order += bel_c <= pl_c ? 0 : 1;
        const double pl_not = evidence::plausibility(space, {}, f, {0, v, evidence::Direction::Gt}, corners);
        bad_dual += std::fabs(bel_c + pl_not - 1.0) <= 1e-12 ? 0 : 1;
        const double bel_2 = evidence::belief(space, {}, f, {0, v2, evidence::Direction::Leq}, corners);
        const double pl_2 = evidence::plausibility(space, {}, f, {0, v2, evidence::Direction::Leq}, corners);
        bad_mono += (bel_c <= bel_2 && pl_c <= pl_2) ? 0 : 1;
        double total = 0.0;
        for (const auto& e : evidence::joint_elements(space, {})) total += e.mass;
        bad_mass += std::fabs(total - 1.0) <= 1e-12 && std::fabs(oracle.mass - 1.0) <= 1e-12 ? 0 : 1;
    }
    const double elapsed = seconds_since(t0);
    const std::size_t bad = bad_exact + bad_oracle + bad_order + bad_dual + bad_mono + bad_mass;
    report("evidence-oracle-suite", bad == 0 && elapsed < 10.0,
           format("200 spaces; violations: corners!=grid %zu, vs brute force %zu, Bel>Pl %zu, duality %zu, "
                  "monotonicity %zu, mass %zu; %.2f s (< 10 s)",
                  bad_exact, bad_oracle, bad_order, bad_dual, bad_mono, bad_mass, elapsed));
}

void joint_mass_criterion() {
    double worst = 0.0;
    std::size_t spaces = 0;
    auto check = [&](const evidence::UncertainSpace& space, std::vector<double> margins) {
        double total = 0.0;
        for (const auto& e : evidence::joint_elements(space, margins)) total += e.mass;
        worst = std::max(worst, std::fabs(total - 1.0));
        ++spaces;
    };
    const std::string dir = EVIMACS_DATA_DIR;
    const auto propulsion = evidence::load_bpa_file(dir + "/propulsion_uncertainty.json");
    check(evidence::UncertainSpace(propulsion), {});
    check(evidence::UncertainSpace(lowthrust::default_propulsion_uncertainty()), {});
    auto cfg = aerocapture::AerocaptureConfig::defaults();
    cfg.uncertainty = evidence::load_bpa_file(dir + "/entry_uncertainty.json");
    for (const auto& m : std::vector<std::vector<double>>{{1.0, 1.0}, {0.5, 0.2}, {0.0, 0.0}, {0.37, 0.91}})
        check(aerocapture::entry_space(cfg), m);
    cfg.uncertainty = aerocapture::default_entry_uncertainty();
    check(aerocapture::entry_space(cfg), {1.0, 1.0});
    report("joint-mass-normalization", worst <= 1e-12,
           format("%zu shipped spaces, worst |sum - 1| = %.2e (<= 1e-12)", spaces, worst));
}

// ---------------------------------------------------------------- entry dynamics

void entry_criterion() {
    using namespace aerocapture;
    const auto t0 = Clock::now();
    EntryModel vacuum;
    vacuum.atmosphere.surface_density = 0.0;
    vacuum.coefficients = aero_coefficients(0.5, 0.5, AeroModel{});
    const double mu = vacuum.planet.mu, R = vacuum.planet.radius;

    // Energy over one revolution of a slightly eccentric inclined orbit.
    EntryState orbit;
    orbit.r = R + 300.0;
    orbit.v = 1.05 * std::sqrt(mu / orbit.r);
    orbit.beta = 0.02;
    orbit.chi = 1.2;
    orbit.psi = 0.1;
    const double e0 = 0.5 * orbit.v * orbit.v - mu / orbit.r;
    const double a = -mu / (2 * e0);
    EntryOptions free;
    free.stop_on_exit = false;
    free.record = true;
    free.max_time = 2 * std::numbers::pi * std::sqrt(a * a * a / mu);
    const auto rev = propagate_entry(orbit, vacuum, free);
    double drift = 0.0;
    for (const auto& s : rev.samples) {
        const double r = s.altitude + R;
        drift = std::max(drift, std::fabs((0.5 * s.v * s.v - mu / r) / e0 - 1.0));
    }

    // Step halving of the fixed-step pair on a lifting, banked pass.
    EntryModel lifting;
    lifting.coefficients = aero_coefficients(30 * std::numbers::pi / 180, 0.4, AeroModel{});
    lifting.vehicle.area = 20.0;
    lifting.vehicle.nose_ratio = 0.4;
    lifting.vehicle.lift = 0.6 * lifting.coefficients.max_lift;
    lifting.vehicle.bank = 0.7;
    EntryState entry;
    entry.r = R + 120.0;
    entry.v = 6.0;
    entry.beta = -10 * std::numbers::pi / 180;
    entry.chi = std::numbers::pi / 2;
    auto rhs = [&](double, const std::array<double, 6>& y, std::array<double, 6>& dy) {
        dy = entry_derivatives(lifting, y);
    };
    const auto y0 = pack(entry);
    const auto ref = ode::integrate_fixed<6>(rhs, 0.0, y0, 120.0, 3200);
    auto err = [&](std::size_t n) {
        const auto y = ode::integrate_fixed<6>(rhs, 0.0, y0, 120.0, n);
        double e = 0.0;
        for (std::size_t i = 0; i < 6; ++i) e = std::max(e, std::fabs(y[i] - ref[i]) / std::max(1.0, std::fabs(ref[i])));
        return e;
    };
    const double e1 = err(50), e2 = err(100), e3 = err(200);
    const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
    const bool order_ok = std::fabs(p1 - 5.0) <= 1.0 && std::fabs(p2 - 5.0) <= 1.0;

    // Circular equilibrium: the flight-path-angle rate cancels.
    EntryState circ;
    circ.r = R + 300.0;
    circ.v = std::sqrt(mu / circ.r);
    circ.chi = std::numbers::pi / 2;
    const auto dy = entry_derivatives(vacuum, pack(circ));
    const bool circ_ok = std::fabs(dy[5]) <= 1e-15 && std::fabs(dy[0]) <= 1e-15;

    // Vertical fall against the energy integral.
    EntryState fall;
    fall.r = R + 120.0;
    fall.v = 1.0;
    fall.beta = -std::numbers::pi / 2;
    EntryOptions shortrun;
    shortrun.stop_on_exit = false;
    shortrun.max_time = 60.0;
    const auto tr = propagate_entry(fall, vacuum, shortrun);
    const auto& f = tr.final_state;
    const double closed = std::sqrt(fall.v * fall.v + 2 * mu * (1 / f.r - 1 / fall.r));
    const double fall_err = std::fabs(f.v - closed);
    const double elapsed = seconds_since(t0);
    report("entry-dynamics", drift <= 1e-6 && order_ok && circ_ok && fall_err <= 1e-8 && elapsed < 10.0,
           format("energy drift %.2e (<= 1e-6), observed order %.2f/%.2f (5 +- 20%%), circular rate %.1e, "
                  "vertical fall error %.1e (<= 1e-8), %.2f s (< 10 s)",
                  drift, p1, p2, std::fabs(dy[5]), fall_err, elapsed));
}

// ---------------------------------------------------------------- low thrust

void lowthrust_model_criterion() {
    using namespace lowthrust;
    const auto eph = Ephemerides::earth_mars();
    const auto bounds = solution_bounds();
    Rng rng(77);
    double boundary = 0.0;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x;
        for (const auto& b : bounds) x.push_back(rng.uniform(b.lo, b.hi));
        x[0] = std::round(x[0]);
        const auto d = design_from(x);
        const auto profile = transfer_profile(d, eph, {36, 1e-10});
        const auto dep = eph.departure.at(d.departure), arr = eph.arrival.at(d.departure + d.duration);
        const auto s0 = profile.shape.at(profile.shape.initial_longitude());
        const auto s1 = profile.shape.at(profile.shape.final_longitude());
        for (const auto& [u, w] : {std::pair{s0, dep}, std::pair{s1, arr}}) {
            boundary = std::max({boundary, std::fabs(u.p - w.p), std::fabs(u.f - w.f), std::fabs(u.g - w.g),
                                 std::fabs(u.h - w.h), std::fabs(u.k - w.k)});
        }
    }

    const double accel = 3e-4, tau = 4e7, c = 30000.0, L0 = 0.4, Lf = 9.4;
    const double quad = propellant_fraction([&](double) { return accel; }, [&](double) { return tau / (Lf - L0); },
                                            L0, Lf, c);
    const double quad_err = std::fabs(quad - (1 - std::exp(-accel * tau / c)));

    double kepler = 0.0;
    const Equinoctial ellipse{1.3, 0.12, -0.08, 0.03, 0.05, 0.2};
    for (double exponent : {-0.8, 0.0, 0.4}) {
        Equinoctial end = ellipse;
        end.L = 0.0;
        const Shape s(ellipse, end, 0.2 + 1.3 * 2 * std::numbers::pi, {exponent, exponent, exponent});
        for (int i = 0; i <= 200; ++i)
            kepler = std::max(kepler, control_at(s, 0.2 + 1.3 * 2 * std::numbers::pi * i / 200.0).magnitude);
    }
    report("lowthrust-model", boundary <= 1e-12 && quad_err <= 1e-10 && kepler < 1e-8,
           format("boundary error %.1e (<= 1e-12), quadrature vs closed form %.1e (<= 1e-10), Keplerian |a| %.1e "
                  "(< 1e-8)",
                  boundary, quad_err, kepler));
}

// ---------------------------------------------------------------- substitutes

std::vector<pareto::ArchiveEntry> feasible_entries(const pareto::ParetoArchive& archive) {
    std::vector<pareto::ArchiveEntry> out;
    for (const auto& e : archive.entries())
        if (e.violation <= 0.0) out.push_back(e);
    return out;
}

void substitute_criterion() {
    const auto t0 = Clock::now();
    // (a) low-thrust archive re-verified with a grid sweep.
    const auto lt = setup_for("lowthrust", 5000);
    const auto lt_run = run(lt, 1);
    const auto lt_feasible = feasible_entries(lt_run.archive);
    const auto lt_config = lowthrust::LowThrustConfig::calibrated();
    evidence::SweepOptions grid;
    grid.extremum.method = evidence::ExtremumMethod::GridOracle;
    grid.extremum.grid_points = 5;
    std::size_t lt_ok = 0;
    double lt_worst = 1.0;
    std::vector<std::vector<double>> seen;
    for (const auto& e : lt_feasible) {
        if (std::find(seen.begin(), seen.end(), e.decision) != seen.end()) {
            ++lt_ok;
            continue;
        }
        seen.push_back(e.decision);
        const auto a = lowthrust::analyze(lt_config, e.decision, &grid);
        lt_worst = std::min(lt_worst, a.belief_thrust);
        lt_ok += a.belief_thrust >= 0.99 && a.time_residual <= lt_config.propulsion.time_tolerance ? 1 : 0;
    }
    const bool a_ok = !lt_feasible.empty() && lt_ok == lt_feasible.size();

    // (b) aerocapture limits at every evaluated focal corner.
    const auto ac = setup_for("aerocapture", 250);
    const auto ac_run = run(ac, 1);
    const auto ac_feasible = feasible_entries(ac_run.archive);
    const auto ac_config = aerocapture::AerocaptureConfig::defaults();
    const auto space = aerocapture::entry_space(ac_config);
    // A catch-all element is one whose interval contains every other element
    // of its parameter; reported separately below.
    std::vector<std::vector<bool>> catch_all;
    for (const auto& d : space.dims()) {
        std::vector<bool> flags(d.size(), false);
        for (std::size_t i = 0; d.size() > 1 && i < d.size(); ++i) {
            bool covers = true;
            for (const auto& o : d.elements())
                covers = covers && d.elements()[i].interval.lo < o.interval.lo + 1e-12 &&
                         d.elements()[i].interval.hi > o.interval.hi - 1e-12;
            flags[i] = covers;
        }
        catch_all.push_back(flags);
    }
    std::size_t corners = 0, corner_violations = 0, stated_violations = 0;
    seen.clear();
    for (const auto& e : ac_feasible) {
        if (std::find(seen.begin(), seen.end(), e.decision) != seen.end()) continue;
        seen.push_back(e.decision);
        const std::vector<double> margins{e.decision[aerocapture::slot::angle_margin],
                                          e.decision[aerocapture::slot::speed_margin]};
        space.for_each_joint(margins, [&](std::size_t index, const evidence::JointFocalElement& j) {
            bool in_catch_all = false;
            for (std::size_t k = space.dimension(); k-- > 0;) {
                const std::size_t n = space.dims()[k].size();
                in_catch_all = in_catch_all || catch_all[k][index % n];
                index /= n;
            }
            for (const auto& p : evidence::extremum_points(j.box, ac_config.sweep.extremum)) {
                std::array<double, aerocapture::kResponses> out{};
                aerocapture::entry_responses(ac_config, e.decision, p, out);
                ++corners;
                const bool bad = !(out[1] <= ac_config.heat_flux_limit && out[2] <= ac_config.g_load_limit);
                corner_violations += bad ? 1 : 0;
                stated_violations += bad && !in_catch_all ? 1 : 0;
            }
        });
    }
    const bool b_ok = !ac_feasible.empty() && corner_violations == 0;

    // (c) belief against threshold on the two-objective projection.
    std::vector<pareto::ObjectiveVector> projected;
    for (const auto& e : ac_feasible) projected.push_back({e.objectives[0], e.objectives[2]});
    std::vector<pareto::ObjectiveVector> front;
    for (const auto& p : projected) {
        bool dominated = false;
        for (const auto& q : projected) dominated = dominated || pareto::dominates(q, p);
        if (!dominated) front.push_back(p);
    }
    // Increasing belief means decreasing 1 - Bel.
    std::sort(front.begin(), front.end(), [](const auto& u, const auto& v) { return u[0] > v[0]; });
    std::size_t inversions = 0;
    for (std::size_t i = 0; i < front.size(); ++i)
        for (std::size_t j = i + 1; j < front.size(); ++j)
            if (front[j][0] < front[i][0] && front[j][1] < front[i][1] - 1e-9) ++inversions;
    const bool c_ok = front.size() >= 1 && inversions == 0;

    report("robust-substitutes", a_ok && b_ok && c_ok,
           format("(a) %zu/%zu low-thrust entries grid-verified, min Bel(margin >= 0) %.4f; "
                  "(b) %zu aerocapture entries, %zu/%zu corners over limits (%zu outside catch-all boxes); "
                  "(c) %zu front points, %zu inversions; %.1f s",
                  lt_ok, lt_feasible.size(), lt_worst, seen.size(), corner_violations, corners, stated_violations,
                  front.size(), inversions, seconds_since(t0)));
}

// ---------------------------------------------------------------- determinism

void determinism_criterion() {
    std::vector<std::string> bad;
    for (const auto& [id, budget] : std::vector<std::pair<std::string, std::size_t>>{
             {"zdt4", 4000}, {"deb", 4000}, {"lowthrust", 800}, {"aerocapture", 30}}) {
        const auto s = setup_for(id, budget);
        const std::string hash = cli::manifest_hash(id, {{"engine", {{"max_evaluations", budget}}}});
        const auto a = cli::execute_run(s, 11, hash), b = cli::execute_run(s, 11, hash);
        if (a.archive_csv != b.archive_csv || a.archive_csv.empty()) bad.push_back(id);
    }
    std::string detail = bad.empty() ? "zdt4, deb, lowthrust, aerocapture archives byte-identical" : "differs:";
    for (const auto& b : bad) detail += " " + b;
    report("determinism", bad.empty(), detail);
}

}  // namespace

int main() {
    zdt4_criteria();
    deb_criterion();
    evidence_criterion();
    joint_mass_criterion();
    entry_criterion();
    lowthrust_model_criterion();
    substitute_criterion();
    determinism_criterion();
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
