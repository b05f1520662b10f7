#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "evimacs/errors.hpp"
#include "evimacs/lowthrust.hpp"
#include "evimacs/random.hpp"

using namespace evimacs;
using namespace evimacs::lowthrust;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

TransferDesign random_design(Rng& rng) {
    const auto b = solution_bounds();
    std::vector<double> x(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) x[i] = rng.uniform(b[i].lo, b[i].hi);
    x[0] = std::round(x[0]);
    return design_from(x);
}

Equinoctial eccentric_orbit(double L) { return {1.3, 0.12, -0.08, 0.03, 0.05, L}; }

double rel(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

void expect_same_elements(const Equinoctial& a, const Equinoctial& b, double tol) {
    EXPECT_LE(rel(a.p, b.p), tol);
    EXPECT_LE(rel(a.f, b.f), tol);
    EXPECT_LE(rel(a.g, b.g), tol);
    EXPECT_LE(rel(a.h, b.h), tol);
    EXPECT_LE(rel(a.k, b.k), tol);
}

// Second-order central differences of the shaped position in L, combined
// with the two-body rate of L exactly as the analytic control does.
Vec3 fd_control(const Shape& shape, double L, double step) {
    auto rate = [&](double l) {
        const auto e = shape.at(l);
        const double q = 1 + e.f * std::cos(l) + e.g * std::sin(l);
        return std::sqrt(kSunMu / (e.p * e.p * e.p)) * q * q;
    };
    const Vec3 rm = position(shape.at(L - step)), r0 = position(shape.at(L)), rp = position(shape.at(L + step));
    const double w = rate(L), w1 = (rate(L + step) - rate(L - step)) / (2 * step);
    const double rn = std::sqrt(r0[0] * r0[0] + r0[1] * r0[1] + r0[2] * r0[2]);
    Vec3 a;
    for (int i = 0; i < 3; ++i) {
        const double d1 = (rp[i] - rm[i]) / (2 * step), d2 = (rp[i] - 2 * r0[i] + rm[i]) / (step * step);
        a[i] = w * w * d2 + w * w1 * d1 + kSunMu * r0[i] / (rn * rn * rn);
    }
    return a;
}

double distance(const Vec3& a, const Vec3& b) { return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]); }

}  // namespace

TEST(Shape, BoundaryInterpolationIsExact) {
    Rng rng(3);
    const auto eph = Ephemerides::earth_mars();
    for (int i = 0; i < 200; ++i) {
        const auto d = random_design(rng);
        const auto dep = eph.departure.at(d.departure), arr = eph.arrival.at(d.departure + d.duration);
        const double Lf = dep.L + 0.5 + kTwoPi * d.revolutions;
        const Shape shape(eccentric_orbit(dep.L), arr, Lf, d.exponents);
        expect_same_elements(shape.at(dep.L), eccentric_orbit(dep.L), 1e-12);
        expect_same_elements(shape.at(Lf), arr, 1e-12);
    }
}

TEST(Shape, VanishingExponentGivesLinearMean) {
    const Equinoctial a = eccentric_orbit(0.3);
    Equinoctial b{1.6, 0.0, 0.02, -0.01, 0.0, 0.0};
    const double Lf = 0.3 + 7.0;
    const Shape tiny(a, b, Lf, {1e-12, 1e-12, 1e-12});
    ASSERT_FALSE(tiny.notices().empty());
    const auto mid = tiny.at(0.3 + 3.5);
    EXPECT_NEAR(mid.p, 0.5 * (a.p + b.p), 1e-14);
    EXPECT_NEAR(mid.f, 0.5 * (a.f + b.f), 1e-14);
    EXPECT_NEAR(mid.k, 0.5 * (a.k + b.k), 1e-14);
    // The exponential law approaches the mean continuously.
    double previous = 1.0;
    for (double e : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const Shape s(a, b, Lf, {e, e, e});
        EXPECT_TRUE(s.notices().empty());
        const double gap = std::fabs(s.at(0.3 + 3.5).p - 0.5 * (a.p + b.p));
        EXPECT_LT(gap, previous);
        previous = gap;
    }
    EXPECT_LT(previous, 1e-5);
}

TEST(Shape, ExtremeExponentsStayFinite) {
    const Shape s(eccentric_orbit(0.0), Equinoctial{1.5, 0, 0, 0, 0, 0}, 0.01, {1e6, -1e6, 1e6});
    for (double L : {0.0, 0.005, 0.01}) EXPECT_TRUE(std::isfinite(control_at(s, L).magnitude));
    EXPECT_THROW(Shape(eccentric_orbit(1.0), eccentric_orbit(0.0), 1.0, {0, 0, 0}), DomainError);
}

TEST(Control, KeplerianOrbitNeedsNoThrust) {
    for (double exponent : {-0.8, 0.0, 0.4}) {
        const Shape s(eccentric_orbit(0.2), eccentric_orbit(0.0), 0.2 + 1.3 * kTwoPi, {exponent, exponent, exponent});
        for (int i = 0; i <= 100; ++i) {
            const double L = 0.2 + 1.3 * kTwoPi * i / 100.0;
            EXPECT_LT(control_at(s, L).magnitude, 1e-8) << "L " << L;
        }
    }
}

TEST(Control, MatchesFiniteDifferencesWithRichardsonRate) {
    const auto eph = Ephemerides::earth_mars();
    const auto dep = eph.departure.at(1000), arr = eph.arrival.at(1700);
    const Shape s(dep, arr, dep.L + 4.0, {0.6, -0.4, 0.3});
    for (double L : {dep.L + 0.5, dep.L + 2.0, dep.L + 3.5}) {
        const Vec3 exact = control_at(s, L).acceleration;
        const double e1 = distance(fd_control(s, L, 1e-2), exact);
        const double e2 = distance(fd_control(s, L, 5e-3), exact);
        EXPECT_NEAR(e1 / e2, 4.0, 0.5) << "L " << L;
    }
}

TEST(Control, SamplesDoNotDependOnResolution) {
    const auto eph = Ephemerides::earth_mars();
    TransferDesign d{1, 2000, 800, 25, 10, {0.2, 0.1, -0.3}, 0.3};
    const auto coarse = transfer_profile(d, eph, {180, 1e-12});
    const auto fine = transfer_profile(d, eph, {360, 1e-12});
    ASSERT_GT(fine.samples.size(), coarse.samples.size());
    std::size_t matched = 0;
    for (const auto& c : coarse.samples)
        for (const auto& f : fine.samples)
            if (std::fabs(f.L - c.L) < 1e-12) {
                EXPECT_LT(rel(f.magnitude, c.magnitude), 1e-6);
                ++matched;
            }
    EXPECT_GE(matched, 2u);
}

TEST(Quadrature, ConstantAccelerationClosedForm) {
    const double accel = 3e-4, tau = 4e7, c = 30000.0;
    const double L0 = 0.4, Lf = 0.4 + 9.0;
    const double m = propellant_fraction([&](double) { return accel; }, [&](double) { return tau / (Lf - L0); }, L0,
                                         Lf, c);
    EXPECT_NEAR(m, 1 - std::exp(-accel * tau / c), 1e-10);
    EXPECT_EQ(propellant_fraction([](double) { return 0.0; }, [](double) { return 1.0; }, 0, 1, c), 0.0);
}

TEST(Quadrature, SmoothIntegrandAgreesWithAntiderivative) {
    const auto q = integrate([](double x) { return std::exp(std::sin(x)) * std::cos(x); }, 0.0, 5.0, 1e-12);
    EXPECT_NEAR(q.value, std::exp(std::sin(5.0)) - 1.0, 1e-12);
}

TEST(Quadrature, ToleranceRefinementIsStable) {
    const auto eph = Ephemerides::earth_mars();
    TransferDesign d{2, 5000, 900, 25, 10, {0.5, -0.2, 0.7}, 0.3};
    const auto a = transfer_profile(d, eph, {36, 1e-9});
    const auto b = transfer_profile(d, eph, {36, 1e-13});
    EXPECT_LT(rel(a.delta_v, b.delta_v), 1e-8);
    EXPECT_LT(rel(a.time_of_flight, b.time_of_flight), 1e-8);
}

TEST(Propulsion, FormulaAsPrinted) {
    const PropulsionModel m;
    EXPECT_NEAR(specific_impulse(0.65, 30, m), 2 * 0.65 * 30 / 9.80665, 1e-14);
    EXPECT_NEAR(specific_impulse(0.65, 30, m), 3.9769, 1e-4);
    EXPECT_NEAR(max_thrust(0.9, 30, 10, 300, 2.0, m), 0.9 * 30 * 10 * 300 / 4.0, 1e-9);
    EXPECT_NEAR(array_fraction(10, m), 0.011, 1e-15);
}

TEST(Propulsion, PropellantFractionInUnitInterval) {
    Rng rng(5);
    const auto config = LowThrustConfig::calibrated();
    for (int i = 0; i < 40; ++i) {
        const auto d = random_design(rng);
        const auto profile = transfer_profile(d, config.ephemerides, {36, 1e-10});
        for (double eta : {0.6, 0.75}) {
            const auto mt = mass_and_time(profile, d, {0.8, 280, eta}, config.propulsion);
            EXPECT_GE(mt.propellant, 0.0);
            EXPECT_LT(mt.propellant, 1.0);
            EXPECT_NEAR(mt.time_residual, std::fabs(d.duration - profile.time_of_flight), 1e-12);
        }
    }
}

TEST(Propulsion, ResponsesAreMonotone) {
    // Mass falls with engine efficiency; margin grows with power efficiency
    // and flux. This is what makes the corner strategy exact.
    const auto config = LowThrustConfig::calibrated();
    TransferDesign d{1, 3000, 700, 25, 10, {0.1, 0.1, 0.1}, 0.3};
    const auto profile = transfer_profile(d, config.ephemerides);
    const auto lo = mass_and_time(profile, d, {0.77, 251.23, 0.6}, config.propulsion);
    const auto hi = mass_and_time(profile, d, {0.98, 349.01, 0.75}, config.propulsion);
    EXPECT_GT(lo.propellant, hi.propellant);
    EXPECT_LT(lo.thrust_margin, hi.thrust_margin);
}

TEST(LowThrustProblem, BoundsAreSorted) {
    const auto b = solution_bounds();
    ASSERT_EQ(b.size(), 9u);
    for (const auto& i : b) EXPECT_LT(i.lo, i.hi);
    EXPECT_EQ(b[0].lo, 1.0);
    EXPECT_EQ(b[0].hi, 2.0);
    EXPECT_THROW(design_from(std::vector<double>(8, 0.0)), DomainError);
}

TEST(LowThrustProblem, ThresholdExtremes) {
    const auto config = LowThrustConfig::calibrated();
    const auto problem = robust_lowthrust_problem(config);
    EXPECT_EQ(problem.n_integer, 1u);
    std::vector<double> x{1, 3000, 700, 25, 10, 0.1, 0.1, 0.1, 1.0};
    auto e = problem.evaluate(x);
    EXPECT_NEAR(e.objectives[0], 0.0, 1e-12);
    EXPECT_EQ(e.objectives[1], 1.0);
    x[8] = 0.0;
    e = problem.evaluate(x);
    EXPECT_EQ(e.objectives[0], 1.0);
    auto flipped = config;
    flipped.maximize_threshold = true;
    EXPECT_EQ(robust_lowthrust_problem(flipped).evaluate(x).objectives[1], -0.0);
}

TEST(LowThrustProblem, CornersAgreeWithGridOracle) {
    Rng rng(9);
    const auto config = LowThrustConfig::calibrated();
    evidence::SweepOptions grid;
    grid.extremum.method = evidence::ExtremumMethod::GridOracle;
    grid.extremum.grid_points = 5;
    for (int i = 0; i < 10; ++i) {
        auto x = to_decision(random_design(rng));
        const auto a = analyze(config, x);
        const auto b = analyze(config, x, &grid);
        EXPECT_NEAR(a.belief_mass, b.belief_mass, 1e-12);
        EXPECT_NEAR(a.belief_thrust, b.belief_thrust, 1e-12);
    }
}

TEST(LowThrustProblem, JointMassesNormalize) {
    const evidence::UncertainSpace space(default_propulsion_uncertainty());
    double total = 0.0;
    for (const auto& e : evidence::joint_elements(space, {})) total += e.mass;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(space.joint_count(), 4u);
}

TEST(Diagnostic, SharedStartAndRefinement) {
    const auto eph = Ephemerides::earth_mars();
    TransferDesign d{1, 2000, 800, 25, 10, {0.2, 0.2, 0.2}, 0.3};
    const auto profile = transfer_profile(d, eph, {36, 1e-10});
    const auto a = propagate_against_shape(profile.shape, 720);
    const auto b = propagate_against_shape(profile.shape, 1440);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a.rows.front().shaped[i], a.rows.front().propagated[i]);
        EXPECT_LT(std::fabs(a.max_deviation[i] - b.max_deviation[i]), 1e-6);
    }
    EXPECT_DOUBLE_EQ(a.rows.back().L, profile.shape.final_longitude());
}
