#pragma once

// Shape-based low-thrust transfer: each equinoctial element group follows an
// exponential law in true longitude between the departure and arrival
// states; the thrust acceleration comes from inverting the two-body
// dynamics along the shaped path.
//
// Units: AU, days, radians for the trajectory; SI for thrust, mass and
// specific impulse.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "evimacs/evidence.hpp"
#include "evimacs/jet.hpp"
#include "evimacs/problem.hpp"

namespace evimacs::lowthrust {

inline constexpr double kSunMu = 2.959122082855911e-4;  // AU^3/day^2
inline constexpr double kAuMeters = 1.495978707e11;
inline constexpr double kDaySeconds = 86400.0;
inline constexpr double kStandardGravity = 9.80665;

struct Equinoctial {
    double p = 1.0;
    double f = 0.0;
    double g = 0.0;
    double h = 0.0;
    double k = 0.0;
    double L = 0.0;
};

using Vec3 = std::array<double, 3>;

// p > 0 and positive radius at L.
bool is_valid(const Equinoctial& e);
Vec3 position(const Equinoctial& e);
// Unit normal of the orbital plane.
Vec3 plane_normal(const Equinoctial& e);

// Circular orbit with a fixed node; true longitude grows uniformly.
struct CircularOrbit {
    double radius = 1.0;        // AU
    double inclination = 0.0;   // rad
    double node = 0.0;          // rad
    double longitude_at_epoch = 0.0;  // rad, at MJD2000 = 0
    Equinoctial at(double mjd2000, double mu = kSunMu) const;
};

struct Ephemerides {
    CircularOrbit departure;
    CircularOrbit arrival;
    static Ephemerides earth_mars();
};

// Shape of one element: value(L) = start + (end - start) * expm1(a s) /
// expm1(a span), s = L - L0. Equivalent to alpha0 + alpha1 exp(a s) with
// alpha0 + alpha1 = start and alpha0 + alpha1 exp(a span) = end; falls back
// to linear interpolation when a * span vanishes.
struct ElementShape {
    double start = 0.0;
    double end = 0.0;
    double exponent = 0.0;
    double span = 1.0;
    bool linear = false;
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    Jet2 at(Jet2 s) const;
};

inline constexpr double kMaxExponentArgument = 50.0;
// Below this |a * span| the exponential law is replaced by its linear limit.
inline constexpr double kLinearThreshold = 1e-9;

class Shape {
public:
    // `exponents` drive the groups (p), (f, g), (h, k).
    Shape(const Equinoctial& departure, const Equinoctial& arrival, double final_longitude,
          const std::array<double, 3>& exponents);

    double initial_longitude() const { return L0_; }
    double final_longitude() const { return Lf_; }
    const std::array<ElementShape, 5>& elements() const { return elements_; }
    const std::vector<std::string>& notices() const { return notices_; }

    Equinoctial at(double L) const;
    // Elements as truncated series in L: p, f, g, h, k.
    std::array<Jet2, 5> series(Jet2 L) const;

private:
    double L0_ = 0.0;
    double Lf_ = 0.0;
    std::array<ElementShape, 5> elements_;
    std::vector<std::string> notices_;
};

struct ControlSample {
    double L = 0.0;
    Vec3 position{};      // AU
    Vec3 acceleration{};  // AU/day^2, thrust acceleration
    double magnitude = 0.0;
    double radius = 0.0;
    double dt_dL = 0.0;   // days/rad
};

// Thrust acceleration needed to follow the shape at longitude L.
ControlSample control_at(const Shape& shape, double L, double mu = kSunMu);

// Quadrature (adaptive Gauss-Kronrod) of f over [a, b].
struct Quadrature {
    double value = 0.0;
    double error = 0.0;
};
Quadrature integrate(const std::function<double(double)>& f, double a, double b, double tolerance);

// 1 - exp(-integral of accel * dt/dL over [L0, Lf] / exhaust speed), with
// accel in m/s^2, dt/dL in s/rad and exhaust speed in m/s.
double propellant_fraction(const std::function<double(double)>& accel, const std::function<double(double)>& dt_dL,
                           double L0, double Lf, double exhaust_speed, double tolerance = 1e-12);

struct PropulsionModel {
    // Multiply the specific-impulse and thrust formulas, whose printed
    // units do not match a physical engine; 1 keeps the formulas as stated.
    double isp_scale = 1.0;
    double thrust_scale = 1.0;
    double g0 = kStandardGravity;
    double mass_budget = 1000.0;      // kg, unit of all mass fractions
    double structure_fraction = 0.7;  // remaining spacecraft mass
    double array_density = 1.0;       // kg/m^2
    double time_tolerance = 0.5;      // days
};

double specific_impulse(double engine_efficiency, double specific_power, const PropulsionModel& m);
// Newtons at distance r (AU).
double max_thrust(double power_efficiency, double specific_power, double area, double flux_1au, double r_au,
                  const PropulsionModel& m);
// Solar array mass as a fraction of the mass budget.
double array_fraction(double area, const PropulsionModel& m);

struct TransferDesign {
    int revolutions = 1;
    double departure = 0.0;  // MJD2000
    double duration = 0.0;   // days
    double specific_power = 0.0;
    double area = 0.0;       // m^2
    std::array<double, 3> exponents{};
    double mass_threshold = 0.0;
};

// Decision layout (integer first): revolutions, departure epoch, duration,
// specific power, array area, three shape exponents, mass threshold.
TransferDesign design_from(std::span<const double> x);
std::vector<double> to_decision(const TransferDesign& d);
std::vector<Interval> solution_bounds();

struct ProfileOptions {
    std::size_t samples_per_revolution = 360;
    double quadrature_tolerance = 1e-12;
};

// Uncertainty-free part of an evaluation, shared by all focal points.
struct TransferProfile {
    Shape shape;
    double delta_v = 0.0;          // m/s
    double time_of_flight = 0.0;   // days
    std::vector<ControlSample> samples;
};

TransferProfile transfer_profile(const TransferDesign& d, const Ephemerides& eph, const ProfileOptions& options = {},
                                 double mu = kSunMu);

struct PropulsionSample {
    double power_efficiency = 0.0;
    double flux_1au = 0.0;  // W/m^2
    double engine_efficiency = 0.0;
};

struct MassAndTime {
    double propellant = 0.0;    // fraction of the budget
    double array = 0.0;         // fraction of the budget
    double time_of_flight = 0.0;
    double time_residual = 0.0;  // |duration - time of flight|, days
    double thrust_margin = 0.0;  // N, min over the path of max thrust - m a
};

MassAndTime mass_and_time(const TransferProfile& profile, const TransferDesign& d, const PropulsionSample& u,
                          const PropulsionModel& m);

// Power efficiency, flux at 1 AU, engine efficiency.
std::vector<evidence::BpaStructure> default_propulsion_uncertainty();

struct LowThrustConfig {
    PropulsionModel propulsion;
    Ephemerides ephemerides = Ephemerides::earth_mars();
    ProfileOptions profile;
    double confidence = 0.99;
    // The threshold objective is minimized by default; true maximizes it.
    bool maximize_threshold = false;
    evidence::SweepOptions sweep;
    std::vector<evidence::BpaStructure> uncertainty = default_propulsion_uncertainty();

    // Scale factors giving an ion-engine-like specific impulse and sub-newton
    // thrust levels.
    static LowThrustConfig calibrated();
};

// Responses at one focal point: propellant plus array fraction, thrust margin.
inline constexpr std::size_t kResponses = 2;

struct Analysis {
    TransferProfile profile;
    evidence::EvidenceSweep sweep;
    double belief_mass = 0.0;    // Bel(propellant + array < threshold)
    double belief_thrust = 0.0;  // Bel(thrust margin >= 0)
    double time_residual = 0.0;
};

Analysis analyze(const LowThrustConfig& config, std::span<const double> x,
                 const evidence::SweepOptions* sweep_override = nullptr);

// Objectives: 1 - Bel(mass < threshold), threshold (or -threshold).
// Constraints: confidence - Bel(thrust margin >= 0), time residual - tolerance.
ProblemDefinition robust_lowthrust_problem(const LowThrustConfig& config);

// Forward propagation of the element rates under the shaped control, with
// true longitude as independent variable, against the shaped elements.
struct DiagnosticRow {
    double L = 0.0;
    std::array<double, 5> shaped{};
    std::array<double, 5> propagated{};
};

struct Diagnostic {
    std::vector<DiagnosticRow> rows;
    std::array<double, 5> max_deviation{};
};

Diagnostic propagate_against_shape(const Shape& shape, std::size_t steps_per_revolution = 720, double mu = kSunMu);

}  // namespace evimacs::lowthrust
