#include "evimacs/lowthrust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "evimacs/errors.hpp"
#include "evimacs/ode.hpp"

namespace evimacs::lowthrust {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDeg = std::numbers::pi / 180.0;
// AU/day^2 to m/s^2 and AU/day to m/s.
constexpr double kAccelToSi = kAuMeters / (kDaySeconds * kDaySeconds);
constexpr double kSpeedToSi = kAuMeters / kDaySeconds;

double wrap(double angle) {
    double a = std::fmod(angle, kTwoPi);
    return a < 0.0 ? a + kTwoPi : a;
}

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

template <class T, class C>
std::array<T, 3> equinoctial_position(T p, T f, T g, T h, T k, C cL, C sL) {
    const T q = 1.0 + f * cL + g * sL;
    const T r = p / q;
    const T s2 = 1.0 + h * h + k * k;
    const T a2 = h * h - k * k;
    const T scale = r / s2;
    return {scale * (cL + a2 * cL + 2.0 * h * k * sL), scale * (sL - a2 * sL + 2.0 * h * k * cL),
            2.0 * scale * (h * sL - k * cL)};
}

}  // namespace

bool is_valid(const Equinoctial& e) {
    return e.p > 0.0 && 1.0 + e.f * std::cos(e.L) + e.g * std::sin(e.L) > 0.0;
}

Vec3 position(const Equinoctial& e) {
    return equinoctial_position<double, double>(e.p, e.f, e.g, e.h, e.k, std::cos(e.L), std::sin(e.L));
}

Vec3 plane_normal(const Equinoctial& e) {
    const double s2 = 1.0 + e.h * e.h + e.k * e.k;
    return {2.0 * e.k / s2, -2.0 * e.h / s2, (1.0 - e.h * e.h - e.k * e.k) / s2};
}

Equinoctial CircularOrbit::at(double mjd2000, double mu) const {
    Equinoctial e;
    e.p = radius;
    const double t = std::tan(0.5 * inclination);
    e.h = t * std::cos(node);
    e.k = t * std::sin(node);
    e.L = wrap(longitude_at_epoch + std::sqrt(mu / (radius * radius * radius)) * mjd2000);
    return e;
}

Ephemerides Ephemerides::earth_mars() {
    Ephemerides e;
    e.departure = {1.0, 0.0, 0.0, 100.46435 * kDeg};
    e.arrival = {1.524, 1.85 * kDeg, 49.558 * kDeg, 355.453 * kDeg};
    return e;
}

Jet2 ElementShape::at(Jet2 s) const {
    const double c = end - start;
    if (linear) return start + s * (c / span);
    const double d = std::expm1(exponent * span);
    const double e = std::exp(exponent * s.v);
    return chain(s, start + c * std::expm1(exponent * s.v) / d, c * exponent * e / d,
                 c * exponent * exponent * e / d);
}

Shape::Shape(const Equinoctial& departure, const Equinoctial& arrival, double final_longitude,
             const std::array<double, 3>& exponents)
    : L0_(departure.L), Lf_(final_longitude) {
    const double span = Lf_ - L0_;
    if (!(span > 0.0)) throw DomainError("final longitude must exceed the initial longitude");
    const std::array<double, 5> a{departure.p, departure.f, departure.g, departure.h, departure.k};
    const std::array<double, 5> b{arrival.p, arrival.f, arrival.g, arrival.h, arrival.k};
    static const char* names[5] = {"p", "f", "g", "h", "k"};
    for (std::size_t i = 0; i < 5; ++i) {
        const std::size_t group = i == 0 ? 0 : (i < 3 ? 1 : 2);
        ElementShape& s = elements_[i];
        s.start = a[i];
        s.end = b[i];
        s.span = span;
        const double limit = kMaxExponentArgument / span;
        s.exponent = std::clamp(exponents[group], -limit, limit);
        if (std::fabs(s.exponent * span) < kLinearThreshold) {
            s.linear = true;
            s.alpha1 = (s.end - s.start) / span;  // slope of the linear limit
            s.alpha0 = s.start;
            notices_.push_back(std::string("shape of ") + names[i] + " is linear (exponent near zero)");
        } else {
            s.alpha1 = (s.end - s.start) / std::expm1(s.exponent * span);
            s.alpha0 = s.start - s.alpha1;
        }
    }
}

std::array<Jet2, 5> Shape::series(Jet2 L) const {
    const Jet2 s = L - L0_;
    return {elements_[0].at(s), elements_[1].at(s), elements_[2].at(s), elements_[3].at(s), elements_[4].at(s)};
}

Equinoctial Shape::at(double L) const {
    const auto e = series(Jet2::constant(L));
    return {e[0].v, e[1].v, e[2].v, e[3].v, e[4].v, L};
}

ControlSample control_at(const Shape& shape, double L, double mu) {
    const Jet2 Lj = Jet2::variable(L);
    const auto e = shape.series(Lj);
    const Jet2 cL = cos(Lj), sL = sin(Lj);
    const Jet2 q = 1.0 + e[1] * cL + e[2] * sL;
    if (!(e[0].v > 0.0) || !(q.v > 0.0))
        throw ModelError("shaped orbit has non-positive radius at L=" + std::to_string(L));
    const auto r = equinoctial_position<Jet2, Jet2>(e[0], e[1], e[2], e[3], e[4], cL, sL);
    // Two-body rate of true longitude along the shaped elements.
    const Jet2 rate = std::sqrt(mu) * pow(e[0], -1.5) * q * q;
    ControlSample out;
    out.L = L;
    out.position = {r[0].v, r[1].v, r[2].v};
    out.radius = norm(out.position);
    const double r3 = out.radius * out.radius * out.radius;
    for (std::size_t i = 0; i < 3; ++i) {
        const double acc = rate.v * rate.v * r[i].dd + rate.v * rate.d * r[i].d;
        out.acceleration[i] = acc + mu * r[i].v / r3;
    }
    out.magnitude = norm(out.acceleration);
    out.dt_dL = 1.0 / rate.v;
    return out;
}

Quadrature integrate(const std::function<double(double)>& f, double a, double b, double tolerance) {
    Quadrature q;
    q.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tolerance, &q.error);
    if (!std::isfinite(q.value)) throw EvaluationError("quadrature produced a non-finite value");
    return q;
}

double propellant_fraction(const std::function<double(double)>& accel, const std::function<double(double)>& dt_dL,
                           double L0, double Lf, double exhaust_speed, double tolerance) {
    if (!(exhaust_speed > 0.0)) throw DomainError("exhaust speed must be positive");
    const auto q = integrate([&](double L) { return accel(L) * dt_dL(L); }, L0, Lf, tolerance);
    return -std::expm1(-q.value / exhaust_speed);
}

double specific_impulse(double engine_efficiency, double specific_power, const PropulsionModel& m) {
    return m.isp_scale * 2.0 * engine_efficiency * specific_power / m.g0;
}

double max_thrust(double power_efficiency, double specific_power, double area, double flux_1au, double r_au,
                  const PropulsionModel& m) {
    return m.thrust_scale * power_efficiency * specific_power * area * flux_1au / (r_au * r_au);
}

double array_fraction(double area, const PropulsionModel& m) { return 1.1 * area * m.array_density / m.mass_budget; }

TransferDesign design_from(std::span<const double> x) {
    if (x.size() != 9) throw DomainError("low-thrust decision vector needs 9 components");
    TransferDesign d;
    d.revolutions = static_cast<int>(std::lround(x[0]));
    d.departure = x[1];
    d.duration = x[2];
    d.specific_power = x[3];
    d.area = x[4];
    d.exponents = {x[5], x[6], x[7]};
    d.mass_threshold = x[8];
    return d;
}

std::vector<double> to_decision(const TransferDesign& d) {
    return {static_cast<double>(d.revolutions), d.departure, d.duration, d.specific_power, d.area,
            d.exponents[0], d.exponents[1], d.exponents[2], d.mass_threshold};
}

std::vector<Interval> solution_bounds() {
    // Pairs are sorted on construction; the source table lists some of them
    // upper bound first.
    const double raw[9][2] = {{2, 1}, {7000, 3650}, {1000, 640}, {35, 16}, {25, 1},
                              {-1, 1}, {-1, 1}, {-1, 1}, {1, 0}};
    std::vector<Interval> b;
    for (const auto& r : raw) b.push_back({std::min(r[0], r[1]), std::max(r[0], r[1])});
    return b;
}

TransferProfile transfer_profile(const TransferDesign& d, const Ephemerides& eph, const ProfileOptions& options,
                                 double mu) {
    if (d.revolutions < 0) throw DomainError("revolution count must be non-negative");
    if (!(d.duration > 0.0)) throw DomainError("transfer duration must be positive");
    const Equinoctial dep = eph.departure.at(d.departure, mu);
    const Equinoctial arr = eph.arrival.at(d.departure + d.duration, mu);
    const double L0 = dep.L;
    const double Lf = L0 + wrap(arr.L - L0) + kTwoPi * d.revolutions;
    TransferProfile out{Shape(dep, arr, Lf, d.exponents), 0.0, 0.0, {}};
    const Shape& shape = out.shape;

    const double tol = options.quadrature_tolerance;
    out.delta_v = integrate(
                      [&](double L) {
                          const auto c = control_at(shape, L, mu);
                          return c.magnitude * c.dt_dL;
                      },
                      L0, Lf, tol)
                      .value *
                  kSpeedToSi;
    out.time_of_flight = integrate([&](double L) { return control_at(shape, L, mu).dt_dL; }, L0, Lf, tol).value;

    const auto n = static_cast<std::size_t>(
        std::ceil((Lf - L0) / kTwoPi * static_cast<double>(std::max<std::size_t>(options.samples_per_revolution, 2))));
    out.samples.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double L = i == n ? Lf : L0 + (Lf - L0) * static_cast<double>(i) / static_cast<double>(n);
        out.samples.push_back(control_at(shape, L, mu));
    }
    return out;
}

MassAndTime mass_and_time(const TransferProfile& profile, const TransferDesign& d, const PropulsionSample& u,
                          const PropulsionModel& m) {
    MassAndTime out;
    const double exhaust = specific_impulse(u.engine_efficiency, d.specific_power, m) * m.g0;
    if (!(exhaust > 0.0)) throw DomainError("exhaust speed must be positive");
    out.propellant = -std::expm1(-profile.delta_v / exhaust);
    out.array = array_fraction(d.area, m);
    out.time_of_flight = profile.time_of_flight;
    out.time_residual = std::fabs(d.duration - profile.time_of_flight);
    const double mass = (out.propellant + out.array + m.structure_fraction) * m.mass_budget;
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& s : profile.samples) {
        const double available = max_thrust(u.power_efficiency, d.specific_power, d.area, u.flux_1au, s.radius, m);
        margin = std::min(margin, available - mass * s.magnitude * kAccelToSi);
    }
    out.thrust_margin = margin;
    return out;
}

std::vector<evidence::BpaStructure> default_propulsion_uncertainty() {
    using evidence::BpaStructure;
    return {
        BpaStructure("power_efficiency", {{{0.77, 0.98}, 1.0}}),
        BpaStructure("flux_1au", {{{251.23, 300.12}, 0.65}, {{258.02, 349.01}, 0.35}}),
        BpaStructure("engine_efficiency", {{{0.6, 0.65}, 0.7}, {{0.65, 0.75}, 0.3}}),
    };
}

LowThrustConfig LowThrustConfig::calibrated() {
    LowThrustConfig c;
    c.propulsion.isp_scale = 1000.0;
    c.propulsion.thrust_scale = 1e-5;
    return c;
}

Analysis analyze(const LowThrustConfig& config, std::span<const double> x,
                 const evidence::SweepOptions* sweep_override) {
    const TransferDesign d = design_from(x);
    Analysis a{transfer_profile(d, config.ephemerides, config.profile), {}, 0.0, 0.0, 0.0};
    const evidence::UncertainSpace space(config.uncertainty);
    if (space.dimension() != 3) throw ConfigError("propulsion uncertainty needs 3 parameters");
    a.sweep = evidence::sweep(
        space, {},
        [&](std::span<const double> p, std::span<double> out) {
            const auto mt = mass_and_time(a.profile, d, {p[0], p[1], p[2]}, config.propulsion);
            out[0] = mt.propellant + mt.array;
            out[1] = mt.thrust_margin;
        },
        kResponses, sweep_override ? *sweep_override : config.sweep);
    using evidence::Direction;
    a.belief_mass = a.sweep.belief({0, d.mass_threshold, Direction::Lt});
    a.belief_thrust = a.sweep.belief({1, 0.0, Direction::Geq});
    a.time_residual = std::fabs(d.duration - a.profile.time_of_flight);
    return a;
}

ProblemDefinition robust_lowthrust_problem(const LowThrustConfig& config) {
    if (config.uncertainty.size() != 3) throw ConfigError("propulsion uncertainty needs 3 parameters");
    ProblemDefinition p;
    p.name = "lowthrust";
    p.bounds = solution_bounds();
    p.n_integer = 1;
    p.n_objectives = 2;
    p.n_constraints = 2;
    p.evaluate = [config](std::span<const double> x) {
        const Analysis a = analyze(config, x);
        const double threshold = x[8];
        Evaluation e;
        e.objectives = {1.0 - a.belief_mass, config.maximize_threshold ? -threshold : threshold};
        e.constraints = {config.confidence - a.belief_thrust, a.time_residual - config.propulsion.time_tolerance};
        return e;
    };
    return p;
}

Diagnostic propagate_against_shape(const Shape& shape, std::size_t steps_per_revolution, double mu) {
    const double L0 = shape.initial_longitude(), Lf = shape.final_longitude();
    const Equinoctial start = shape.at(L0);
    // State: p, f, g, h, k, time; true longitude is the independent variable.
    auto rhs = [&](double L, const std::array<double, 6>& y, std::array<double, 6>& dy) {
        const Equinoctial e{y[0], y[1], y[2], y[3], y[4], L};
        if (!is_valid(e)) throw ModelError("propagated elements became singular at L=" + std::to_string(L));
        const Vec3 a = control_at(shape, L, mu).acceleration;
        const Vec3 r = position(e);
        const double rn = norm(r);
        const Vec3 ur{r[0] / rn, r[1] / rn, r[2] / rn};
        const Vec3 un = plane_normal(e);
        const Vec3 ut = cross(un, ur);
        const double ar = dot(a, ur), at = dot(a, ut), an = dot(a, un);
        const double cL = std::cos(L), sL = std::sin(L);
        const double w = 1.0 + e.f * cL + e.g * sL;
        const double sq = std::sqrt(e.p / mu);
        const double s2 = 1.0 + e.h * e.h + e.k * e.k;
        const double hk = e.h * sL - e.k * cL;
        const double Ldot = std::sqrt(mu * e.p) * (w / e.p) * (w / e.p) + sq * hk * an / w;
        dy[0] = 2.0 * e.p / w * sq * at;
        dy[1] = sq * (ar * sL + ((w + 1.0) * cL + e.f) * at / w - hk * e.g * an / w);
        dy[2] = sq * (-ar * cL + ((w + 1.0) * sL + e.g) * at / w + hk * e.f * an / w);
        dy[3] = sq * s2 * an * cL / (2.0 * w);
        dy[4] = sq * s2 * an * sL / (2.0 * w);
        dy[5] = 1.0;
        for (auto& v : dy) v /= Ldot;
    };
    const auto steps = static_cast<std::size_t>(
        std::ceil((Lf - L0) / kTwoPi * static_cast<double>(std::max<std::size_t>(steps_per_revolution, 4))));
    Diagnostic out;
    std::array<double, 6> y{start.p, start.f, start.g, start.h, start.k, 0.0};
    auto record = [&](double L) {
        const Equinoctial s = shape.at(L);
        DiagnosticRow row{L, {s.p, s.f, s.g, s.h, s.k}, {y[0], y[1], y[2], y[3], y[4]}};
        for (std::size_t i = 0; i < 5; ++i)
            out.max_deviation[i] = std::max(out.max_deviation[i], std::fabs(row.shaped[i] - row.propagated[i]));
        out.rows.push_back(row);
    };
    record(L0);
    for (std::size_t i = 0; i < steps; ++i) {
        const double a = L0 + (Lf - L0) * static_cast<double>(i) / static_cast<double>(steps);
        const double b = i + 1 == steps ? Lf : L0 + (Lf - L0) * static_cast<double>(i + 1) / static_cast<double>(steps);
        y = ode::integrate_fixed(rhs, a, y, b, 1);
        record(b);
    }
    return out;
}

}  // namespace evimacs::lowthrust
