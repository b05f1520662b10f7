#include "evimacs/aerocapture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "evimacs/errors.hpp"

namespace evimacs::aerocapture {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kHeatCoefficient = 1.89e-8;

}  // namespace

double Atmosphere::density(double altitude_km) const {
    if (!(scale_height > 0.0)) throw DomainError("scale height must be positive");
    return surface_density * std::exp(-altitude_km / scale_height);
}

double stagnation_pressure_coefficient(double gamma, double mach) {
    if (!(gamma > 1.0)) throw DomainError("specific-heat ratio must exceed 1");
    if (!(mach > 1.0)) throw DomainError("stagnation coefficient needs supersonic Mach number");
    const double m2 = mach * mach;
    const double e = 1.0 / (gamma - 1.0);
    return 2.0 / gamma * std::pow((gamma + 1.0) / 2.0, gamma * e) *
               std::pow((gamma + 1.0) / (2.0 * gamma - (gamma - 1.0) / m2), e) -
           2.0 / (gamma * m2);
}

double stagnation_pressure_limit(double gamma) {
    if (!(gamma > 1.0)) throw DomainError("specific-heat ratio must exceed 1");
    const double e = 1.0 / (gamma - 1.0);
    return 2.0 / gamma * std::pow((gamma + 1.0) / 2.0, gamma * e) * std::pow((gamma + 1.0) / (2.0 * gamma), e);
}

double zero_lift_drag(double stagnation_pressure, double half_cone, double nose_ratio) {
    const double s = std::sin(half_cone), c = std::cos(half_cone);
    const double r2 = nose_ratio * nose_ratio;
    return stagnation_pressure * (s * s * (1.0 - r2 * c * c) + 0.5 * r2 * (1.0 - s * s * s * s));
}

double Coefficients::drag(double lift) const {
    const double n = polar_exponent;
    return zero_lift_drag + zero_lift_drag / ((n - 1.0) * std::pow(max_lift, n)) * std::pow(std::fabs(lift), n);
}

Coefficients aero_coefficients(double half_cone, double nose_ratio, const AeroModel& model) {
    const double n = model.polar_exponent;
    if (!(n > 1.0)) throw DomainError("drag polar exponent must exceed 1 (got " + std::to_string(n) + ")");
    if (model.fit_a == 0.0) throw DomainError("critical-lift fit constant a must be nonzero");
    Coefficients c;
    c.polar_exponent = n;
    c.stagnation_pressure = stagnation_pressure_coefficient(model.gamma, model.mach);
    c.zero_lift_drag = zero_lift_drag(c.stagnation_pressure, half_cone, nose_ratio);
    c.max_lift = (n - model.fit_b) * n * c.zero_lift_drag / (model.fit_a * (n - 1.0));
    return c;
}

double Vehicle::base_radius() const { return std::sqrt(area / std::numbers::pi); }
double Vehicle::nose_radius() const { return nose_ratio * base_radius(); }

double heat_flux(double density, double nose_radius, double speed_ms) {
    if (density < 0.0) throw DomainError("negative density");
    if (!(nose_radius > 0.0)) throw DomainError("nose radius must be positive");
    return kHeatCoefficient * std::sqrt(density / nose_radius) * speed_ms * speed_ms * speed_ms;
}

std::array<double, 6> pack(const EntryState& s) { return {s.r, s.theta, s.psi, s.v, s.chi, s.beta}; }
EntryState unpack(const std::array<double, 6>& y) { return {y[0], y[1], y[2], y[3], y[4], y[5]}; }

namespace {

struct Loads {
    double drag = 0.0;  // km/s^2
    double lift = 0.0;  // km/s^2
    double density = 0.0;
};

Loads loads(const EntryModel& m, double r, double v) {
    Loads out;
    out.density = m.atmosphere.density(r - m.planet.radius);
    const double vm = v * 1000.0;
    const double qd = 0.5 * out.density * vm * vm * m.vehicle.area / m.vehicle.mass;
    out.drag = qd * m.coefficients.drag(m.vehicle.lift) / 1000.0;
    out.lift = qd * m.vehicle.lift / 1000.0;
    return out;
}

void derivatives(const EntryModel& m, const std::array<double, 6>& y, std::array<double, 6>& dy) {
    const double r = y[0], psi = y[2], v = y[3], chi = y[4], beta = y[5];
    const Loads a = loads(m, r, v);
    const double g = m.planet.mu / (r * r);
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double sc = std::sin(chi), cc = std::cos(chi);
    dy[0] = v * sb;
    dy[1] = v * cb * sc / (r * std::cos(psi));
    dy[2] = v * cb * cc / r;
    dy[3] = -g * sb - a.drag;
    dy[4] = v * cb * sc * std::tan(psi) / r + (a.lift != 0.0 ? a.lift * std::sin(m.vehicle.bank) / (v * cb) : 0.0);
    dy[5] = -g * cb / v + a.lift * std::cos(m.vehicle.bank) / v + v * cb / r;
}

}  // namespace

std::array<double, 6> entry_derivatives(const EntryModel& model, const std::array<double, 6>& y) {
    std::array<double, 6> dy;
    derivatives(model, y, dy);
    return dy;
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Exited: return "exited";
        case Outcome::Crashed: return "crashed";
        case Outcome::HorizonReached: return "horizon";
    }
    return "?";
}

Trajectory propagate_entry(const EntryState& initial, const EntryModel& model, const EntryOptions& options) {
    if (!(initial.v > 0.0)) throw DomainError("entry speed must be positive");
    if (!(initial.r > model.planet.radius)) throw DomainError("entry radius must lie above the surface");
    const double R = model.planet.radius;
    const double rn = model.vehicle.nose_radius();
    Trajectory out;

    auto rhs = [&](double, const std::array<double, 6>& y, std::array<double, 6>& dy) { derivatives(model, y, dy); };
    auto note = [&](double t, const std::array<double, 6>& y) {
        const Loads a = loads(model, y[0], y[3]);
        const double q = heat_flux(a.density, rn, y[3] * 1000.0);
        const double ng = std::hypot(a.lift, a.drag) * 1000.0 / model.planet.g0;
        out.max_heat_flux = std::max(out.max_heat_flux, q);
        out.max_g_load = std::max(out.max_g_load, ng);
        if (options.record) out.samples.push_back({t, y[0] - R, y[3], y[5], y[4], y[2], q, ng});
    };

    const auto y0 = pack(initial);
    note(0.0, y0);
    const double h_if = options.interface_altitude;
    bool inside = initial.r - R < h_if;
    bool decided = false;
    auto surface = [&](double, const std::array<double, 6>& y) { return y[0] - R; };
    auto interface = [&](double, const std::array<double, 6>& y) { return y[0] - R - h_if; };

    auto observer = [&](double tp, const std::array<double, 6>& yp, double& t, std::array<double, 6>& y) {
        if (y[0] - R <= 0.0) {
            auto [tc, yc] = ode::locate_root(rhs, tp, yp, t, y, surface, 1e-9);
            t = tc;
            y = yc;
            note(t, y);
            out.outcome = Outcome::Crashed;
            decided = true;
            return false;
        }
        if (options.stop_on_exit) {
            const double g = y[0] - R - h_if;
            if (g < 0.0) {
                inside = true;
                // Drag only removes energy and lift does no work, so below the
                // energy needed to coast back to the interface the vehicle
                // cannot leave. Stopping here also avoids the heading
                // singularity of the near-vertical fall that follows.
                // A near-vertical dive is also final: pulling out would take a
                // turn radius of order v^2 / lift acceleration, far beyond the
                // remaining altitude for these vehicles.
                const double mu = model.planet.mu;
                const bool stalled = 0.5 * y[3] * y[3] < mu / y[0] - mu / (R + h_if);
                if (stalled || y[5] < -0.5 * std::numbers::pi + kVerticalDiveMargin) {
                    note(t, y);
                    out.outcome = Outcome::Crashed;
                    decided = true;
                    return false;
                }
            } else if (y[3] * std::sin(y[5]) >= 0.0) {
                if (inside && interface(tp, yp) < 0.0) {
                    auto [te, ye] = ode::locate_root(rhs, tp, yp, t, y, interface, 1e-9);
                    t = te;
                    y = ye;
                }
                note(t, y);
                out.outcome = Outcome::Exited;
                decided = true;
                return false;
            }
        }
        note(t, y);
        return true;
    };

    // Starting at or above the interface and climbing: no atmospheric pass.
    if (options.stop_on_exit && !inside && initial.beta >= 0.0) {
        out.outcome = Outcome::Exited;
        out.final_state = initial;
        return out;
    }

    const auto res = ode::integrate(rhs, 0.0, y0, options.max_time, options.tolerances, observer);
    out.stats = res.stats;
    out.time = res.t;
    out.final_state = unpack(res.y);
    if (!decided) out.outcome = options.stop_on_exit ? Outcome::Crashed : Outcome::HorizonReached;
    return out;
}

OrbitSummary orbit_of(const EntryState& s, const Planet& planet) {
    OrbitSummary o;
    const double mu = planet.mu;
    o.energy = 0.5 * s.v * s.v - mu / s.r;
    const double h = s.r * s.v * std::cos(s.beta);
    const double e = std::sqrt(std::max(0.0, 1.0 + 2.0 * o.energy * h * h / (mu * mu)));
    o.inclination = std::acos(std::clamp(std::cos(s.psi) * std::sin(s.chi), -1.0, 1.0));
    if (o.energy < 0.0) {
        const double a = -mu / (2.0 * o.energy);
        o.periapsis = a * (1.0 - e);
        o.apoapsis = a * (1.0 + e);
    } else {
        o.hyperbolic = true;
        o.periapsis = h * h / (mu * (1.0 + e));
        o.apoapsis = kInf;
    }
    return o;
}

double rocket_propellant_fraction(double dv_kms, double isp_s, double g0) {
    if (!(isp_s > 0.0)) throw DomainError("specific impulse must be positive");
    if (std::isinf(dv_kms)) return 1.0;
    return -std::expm1(-dv_kms * 1000.0 / (isp_s * g0));
}

double plane_change_dv(double v, double angle) { return 2.0 * v * std::sin(0.5 * std::fabs(angle)); }

namespace {

// Speed at radius r on the conic whose apsides are r and r_other.
double apsis_speed(double mu, double r, double r_other) { return std::sqrt(2.0 * mu * r_other / (r * (r + r_other))); }

}  // namespace

ManeuverBudget corrective_dv_budget(const EntryState& exit, bool crashed, const TargetOrbit& target,
                                    const Planet& planet, double isp_s) {
    ManeuverBudget b;
    if (crashed) {
        b.capture = b.periapsis_raise = b.plane_change = b.apoapsis_trim = b.total = kInf;
        b.propellant_fraction = 1.0;
        return b;
    }
    const double mu = planet.mu;
    const double rp_t = planet.radius + target.periapsis_altitude;
    const double ra_t = planet.radius + target.apoapsis_altitude;
    OrbitSummary o = orbit_of(exit, planet);
    double rp = o.periapsis, ra = o.apoapsis;
    if (o.hyperbolic) {
        // Retro burn along the velocity at the exit point so that the new
        // conic has its far apsis at the target apoapsis.
        const double c = exit.r * std::cos(exit.beta) / ra_t;
        const double v_new = std::sqrt(2.0 * mu * (1.0 / exit.r - 1.0 / ra_t) / (1.0 - c * c));
        b.capture = std::fabs(exit.v - v_new);
        EntryState s = exit;
        s.v = v_new;
        const OrbitSummary captured = orbit_of(s, planet);
        rp = captured.periapsis;
        ra = captured.apoapsis;
    }
    b.periapsis_raise = std::fabs(apsis_speed(mu, ra, rp_t) - apsis_speed(mu, ra, rp));
    b.plane_change = plane_change_dv(apsis_speed(mu, ra, rp_t), o.inclination - target.inclination);
    b.apoapsis_trim = std::fabs(apsis_speed(mu, rp_t, ra_t) - apsis_speed(mu, rp_t, ra));
    b.total = b.capture + b.periapsis_raise + b.plane_change + b.apoapsis_trim;
    b.propellant_fraction = rocket_propellant_fraction(b.total, isp_s, planet.g0);
    return b;
}

SolutionSpace parse_solution_space(const std::string& s) {
    if (s == "restricted") return SolutionSpace::Restricted;
    if (s == "extended") return SolutionSpace::Extended;
    throw ConfigError("unknown solution space '" + s + "' (valid: restricted, extended)");
}

std::vector<evidence::BpaStructure> default_entry_uncertainty(double complement_factor) {
    using evidence::BpaStructure;
    return {
        BpaStructure("scale_height", {{{5, 7}, 0.1}, {{7, 12}, 0.4}, {{8, 10}, 0.5}}),
        BpaStructure("surface_density", {{{0.15, 0.2}, 0.2}, {{0.19, 0.21}, 0.8}}),
        BpaStructure("gamma", {{{1.2, 1.25}, 0.1}, {{1.25, 1.3}, 0.9}}),
        BpaStructure("polar_exponent", {{{2.0, 2.15}, 1.0}}),
        BpaStructure::with_complement("speed_offset", {{{-1, 1}, 0.99}}, complement_factor),
        BpaStructure::with_complement("angle_offset", {{{-1, 1}, 0.99}}, complement_factor),
        BpaStructure::with_complement("heading_offset", {{{-1, 1}, 0.99}}, complement_factor),
    };
}

std::vector<Interval> solution_bounds(SolutionSpace space) {
    const double pi = std::numbers::pi;
    const bool ext = space == SolutionSpace::Extended;
    return {
        {ext ? 4.94 : 5.743, 7.03},
        {-12.0, 0.0},
        {-pi / 2, pi / 2},
        {-1.0, 1.0},
        {5.0, ext ? 60.0 : 40.0},
        {pi, 100.0 * pi},
        {0.1, ext ? 0.9 : 0.7},
        {0.0, 1.0},
        {0.0, 1.0},
        {0.0, 1.0},
    };
}

AerocaptureConfig AerocaptureConfig::defaults() {
    AerocaptureConfig c;
    c.sweep.extremum.method = evidence::ExtremumMethod::CornersPlusSampling;
    c.sweep.extremum.samples = 16;
    return c;
}

evidence::UncertainSpace entry_space(const AerocaptureConfig& config) {
    if (config.uncertainty.size() != 7)
        throw ConfigError("entry uncertainty needs 7 parameters, got " + std::to_string(config.uncertainty.size()));
    // Margin slot 0 is the angle margin, slot 1 the speed margin.
    std::map<std::size_t, std::size_t> margins{{4, 1}, {5, 0}};
    if (config.margin_on_heading) margins[6] = 0;
    return evidence::UncertainSpace(config.uncertainty, margins);
}

EntryCase entry_case(const AerocaptureConfig& config, std::span<const double> x, std::span<const double> point) {
    EntryCase c;
    EntryModel& model = c.model;
    model.planet = config.planet;
    model.atmosphere.scale_height = point[0];
    model.atmosphere.surface_density = point[1];
    AeroModel aero = config.nominal;
    const double half_cone = x[slot::half_cone] * kDeg;
    const double nose = x[slot::nose];
    const double commanded = x[slot::lift] * aero_coefficients(half_cone, nose, config.nominal).max_lift;
    aero.gamma = point[2];
    aero.polar_exponent = point[3];
    model.coefficients = aero_coefficients(half_cone, nose, aero);
    model.vehicle.area = x[slot::area];
    model.vehicle.half_cone = half_cone;
    model.vehicle.nose_ratio = nose;
    model.vehicle.mass = config.vehicle_mass;
    model.vehicle.lift = commanded;
    model.vehicle.bank = x[slot::bank];

    EntryState& s = c.initial;
    s.r = config.planet.radius + config.entry.interface_altitude;
    s.psi = config.entry_latitude;
    s.v = x[slot::speed] + point[4];
    s.beta = (x[slot::angle] + point[5]) * kDeg;
    s.chi = config.entry_heading + point[6] * kDeg;
    return c;
}

void entry_responses(const AerocaptureConfig& config, std::span<const double> x, std::span<const double> point,
                     std::span<double> out) {
    const EntryCase c = entry_case(config, x, point);
    if (!(c.initial.v > 0.0)) {
        // An offset that reverses the approach is not a physical entry.
        out[0] = 1.0;
        out[1] = kInf;
        out[2] = kInf;
        return;
    }
    const Trajectory tr = propagate_entry(c.initial, c.model, config.entry);
    const bool crashed = tr.outcome != Outcome::Exited;
    out[0] = corrective_dv_budget(tr.final_state, crashed, config.target, config.planet, config.isp)
                 .propellant_fraction;
    out[1] = tr.max_heat_flux;
    out[2] = tr.max_g_load;
}

Analysis analyze(const AerocaptureConfig& config, std::span<const double> x) {
    const auto space = entry_space(config);
    const double margins[2] = {x[slot::angle_margin], x[slot::speed_margin]};
    Analysis a;
    a.sweep = evidence::sweep(
        space, margins, [&](std::span<const double> p, std::span<double> out) { entry_responses(config, x, p, out); },
        kResponses, config.sweep);
    using evidence::Direction;
    a.belief_propellant = a.sweep.belief({0, x[slot::threshold], Direction::Lt});
    a.belief_heat_flux = a.sweep.belief({1, config.heat_flux_limit, Direction::Leq});
    a.belief_g_load = a.sweep.belief({2, config.g_load_limit, Direction::Leq});
    return a;
}

ProblemDefinition robust_aerocapture_problem(const AerocaptureConfig& config) {
    entry_space(config);
    ProblemDefinition p;
    p.name = config.space == SolutionSpace::Extended ? "aerocapture-extended" : "aerocapture";
    p.bounds = solution_bounds(config.space);
    p.n_integer = 0;
    p.n_objectives = 3;
    p.n_constraints = 2;
    p.evaluate = [config](std::span<const double> x) {
        const Analysis a = analyze(config, x);
        Evaluation e;
        e.objectives = {1.0 - a.belief_propellant, -(x[slot::angle_margin] + x[slot::speed_margin]),
                        x[slot::threshold]};
        e.constraints = {config.confidence - a.belief_heat_flux, config.confidence - a.belief_g_load};
        return e;
    };
    return p;
}

}  // namespace evimacs::aerocapture
