#pragma once

// Atmospheric pass of a blunt capsule at Mars: point-mass entry dynamics over
// a spherical planet with an exponential atmosphere, hypersonic Newtonian
// aerodynamics, stagnation heating, the impulsive clean-up budget after the
// pass, and the evidence-based design problem built on top of them.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evimacs/evidence.hpp"
#include "evimacs/ode.hpp"
#include "evimacs/problem.hpp"

namespace evimacs::aerocapture {

struct Planet {
    double mu = 42828.0;      // km^3/s^2
    double radius = 3389.5;   // km
    double g0 = 9.80665;      // m/s^2, used for load factor and rocket equation
};

// Spherical coordinates: r (km), longitude theta, latitude psi, speed v
// (km/s), heading chi measured from north towards east, flight-path angle
// beta (positive above the local horizon).
struct EntryState {
    double r = 0.0;
    double theta = 0.0;
    double psi = 0.0;
    double v = 0.0;
    double chi = 0.0;
    double beta = 0.0;
};

struct Atmosphere {
    double surface_density = 0.2;  // kg/m^3
    double scale_height = 8.0;     // km
    double density(double altitude_km) const;
};

struct AeroModel {
    double gamma = 1.25;
    double polar_exponent = 2.075;
    double mach = 25.0;
    // Empirical constants of the critical-lift fit.
    double fit_a = 1.0;
    double fit_b = 1.0;
};

struct Coefficients {
    double stagnation_pressure = 0.0;
    double zero_lift_drag = 0.0;
    double max_lift = 0.0;
    double polar_exponent = 2.0;
    double drag(double lift) const;
};

double stagnation_pressure_coefficient(double gamma, double mach);
// Limit of the stagnation coefficient for infinite Mach number.
double stagnation_pressure_limit(double gamma);
double zero_lift_drag(double stagnation_pressure, double half_cone, double nose_ratio);
Coefficients aero_coefficients(double half_cone, double nose_ratio, const AeroModel& model);

struct Vehicle {
    double area = 100.0;        // m^2, frontal reference area
    double half_cone = 0.5;     // rad
    double nose_ratio = 0.5;    // nose radius over base radius
    double mass = 1000.0;       // kg
    double lift = 0.0;          // commanded lift coefficient
    double bank = 0.0;          // rad
    double base_radius() const;
    double nose_radius() const;
};

// Stagnation-point heat flux in W/cm^2 (density kg/m^3, nose radius m,
// speed m/s).
double heat_flux(double density, double nose_radius, double speed_ms);

struct EntryModel {
    Planet planet;
    Atmosphere atmosphere;
    Coefficients coefficients;
    Vehicle vehicle;
};

// Time derivative of the six entry states.
std::array<double, 6> entry_derivatives(const EntryModel& model, const std::array<double, 6>& y);
std::array<double, 6> pack(const EntryState& s);
EntryState unpack(const std::array<double, 6>& y);

enum class Outcome { Exited, Crashed, HorizonReached };
const char* to_string(Outcome o);

// rad; also keeps the run clear of the heading singularity at a vertical
// flight path.
inline constexpr double kVerticalDiveMargin = 0.02;

struct EntryOptions {
    double interface_altitude = 120.0;  // km
    double max_time = 4000.0;           // s
    // With false the run only stops on impact or at max_time (used for
    // drag-free checks); with true, reaching max_time inside the atmosphere
    // counts as a crash (the vehicle never left), as does falling below the
    // kinetic energy needed to coast back up to the interface or diving
    // within kVerticalDiveMargin of the vertical.
    bool stop_on_exit = true;
    ode::Tolerances tolerances{1e-9, 1e-9, 0.0, 1e-10, 5.0, 200000};
    bool record = false;
};

struct TrajectoryPoint {
    double t = 0.0;
    double altitude = 0.0;
    double v = 0.0;
    double beta = 0.0;
    double chi = 0.0;
    double psi = 0.0;
    double heat_flux = 0.0;
    double g_load = 0.0;
};

struct Trajectory {
    Outcome outcome = Outcome::HorizonReached;
    EntryState final_state;
    double time = 0.0;
    double max_heat_flux = 0.0;  // W/cm^2
    double max_g_load = 0.0;     // in units of g0
    std::vector<TrajectoryPoint> samples;
    ode::Stats stats;
};

Trajectory propagate_entry(const EntryState& initial, const EntryModel& model, const EntryOptions& options = {});

struct TargetOrbit {
    double periapsis_altitude = 400.0;   // km
    double apoapsis_altitude = 10000.0;  // km
    double inclination = 0.0;            // rad
};

struct OrbitSummary {
    double energy = 0.0;       // km^2/s^2
    double periapsis = 0.0;    // km (radius)
    double apoapsis = 0.0;     // km, infinite when unbound
    double inclination = 0.0;  // rad
    bool hyperbolic = false;
};

OrbitSummary orbit_of(const EntryState& s, const Planet& planet);

struct ManeuverBudget {
    double capture = 0.0;        // at the exit point, only when unbound
    double periapsis_raise = 0.0;
    double plane_change = 0.0;
    double apoapsis_trim = 0.0;
    double total = 0.0;          // km/s
    double propellant_fraction = 0.0;
};

// Impulsive corrections from the post-pass state to the target orbit. A
// crashed pass returns an infinite budget with propellant fraction 1.
ManeuverBudget corrective_dv_budget(const EntryState& exit, bool crashed, const TargetOrbit& target,
                                    const Planet& planet, double isp_s = 350.0);
double rocket_propellant_fraction(double dv_kms, double isp_s, double g0);
// Speed change of a plane rotation by `angle` at speed v.
double plane_change_dv(double v, double angle);

enum class SolutionSpace { Restricted, Extended };
SolutionSpace parse_solution_space(const std::string& s);

// Uncertain parameters in order: scale height (km), surface density
// (kg/m^3), specific-heat ratio, polar exponent, entry speed offset (km/s),
// entry angle offset (deg), heading offset (deg).
std::vector<evidence::BpaStructure> default_entry_uncertainty(double complement_factor = 10.0);

// Decision layout: speed (km/s), entry angle (deg), bank (rad), lift as a
// fraction of the critical lift, half-cone angle (deg), area (m^2), nose
// ratio, propellant threshold, angle margin, speed margin.
namespace slot {
inline constexpr std::size_t speed = 0, angle = 1, bank = 2, lift = 3, half_cone = 4, area = 5, nose = 6,
                             threshold = 7, angle_margin = 8, speed_margin = 9;
}
std::vector<Interval> solution_bounds(SolutionSpace space);

struct AerocaptureConfig {
    SolutionSpace space = SolutionSpace::Restricted;
    Planet planet;
    TargetOrbit target;
    AeroModel nominal;  // fixes the commanded lift from the lift fraction
    double vehicle_mass = 1000.0;
    double isp = 350.0;
    double heat_flux_limit = 50.0;
    double g_load_limit = 5.0;
    double confidence = 0.99;
    double entry_heading = 1.5707963267948966;  // rad, due east
    double entry_latitude = 0.0;
    bool margin_on_heading = false;
    EntryOptions entry;
    evidence::SweepOptions sweep;
    std::vector<evidence::BpaStructure> uncertainty = default_entry_uncertainty();

    static AerocaptureConfig defaults();
};

// Vehicle, environment and interface state of one design at one uncertain
// point (scale height, density, gamma, polar exponent, speed, angle and
// heading offsets).
struct EntryCase {
    EntryModel model;
    EntryState initial;
};
EntryCase entry_case(const AerocaptureConfig& config, std::span<const double> x, std::span<const double> point);

// Responses at one uncertain point: propellant fraction, peak heat flux,
// peak load factor.
inline constexpr std::size_t kResponses = 3;
void entry_responses(const AerocaptureConfig& config, std::span<const double> x, std::span<const double> point,
                     std::span<double> out);

evidence::UncertainSpace entry_space(const AerocaptureConfig& config);

struct Analysis {
    evidence::EvidenceSweep sweep;
    double belief_propellant = 0.0;
    double belief_heat_flux = 0.0;
    double belief_g_load = 0.0;
};
Analysis analyze(const AerocaptureConfig& config, std::span<const double> x);

// Objectives: 1 - Bel(propellant < threshold), -(angle margin + speed
// margin), threshold. Constraints: confidence - Bel(q <= limit) and
// confidence - Bel(n_g <= limit).
ProblemDefinition robust_aerocapture_problem(const AerocaptureConfig& config);

}  // namespace evimacs::aerocapture
