#include <gtest/gtest.h>

#include <cmath>

#include "evimacs/errors.hpp"
#include "evimacs/jet.hpp"
#include "evimacs/ode.hpp"
#include "evimacs/random.hpp"

using namespace evimacs;

namespace {

// y'' = -y, y(0) = (1, 0): exact solution (cos t, -sin t).
void oscillator(double, const std::array<double, 2>& y, std::array<double, 2>& dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
}

double fixed_error(std::size_t steps) {
    const auto y = ode::integrate_fixed(oscillator, 0.0, std::array<double, 2>{1.0, 0.0}, 2.0, steps);
    return std::hypot(y[0] - std::cos(2.0), y[1] + std::sin(2.0));
}

}  // namespace

TEST(Ode, FixedStepShowsFifthOrder) {
    for (std::size_t n : {10u, 20u, 40u}) {
        const double order = std::log2(fixed_error(n) / fixed_error(2 * n));
        EXPECT_NEAR(order, 5.0, 1.0) << "steps " << n;
    }
}

TEST(Ode, AdaptiveMeetsTolerance) {
    ode::Tolerances tol;
    tol.relative = 1e-10;
    tol.absolute = 1e-12;
    const auto r = ode::integrate(oscillator, 0.0, std::array<double, 2>{1.0, 0.0}, 10.0, tol);
    EXPECT_DOUBLE_EQ(r.t, 10.0);
    EXPECT_NEAR(r.y[0], std::cos(10.0), 1e-8);
    EXPECT_NEAR(r.y[1], -std::sin(10.0), 1e-8);
    EXPECT_GT(r.stats.accepted, 0u);
}

TEST(Ode, TighterToleranceReducesError) {
    double previous = 1.0;
    for (double rel : {1e-6, 1e-8, 1e-10}) {
        ode::Tolerances tol;
        tol.relative = rel;
        tol.absolute = rel * 1e-3;
        const auto r = ode::integrate(oscillator, 0.0, std::array<double, 2>{1.0, 0.0}, 10.0, tol);
        const double err = std::hypot(r.y[0] - std::cos(10.0), r.y[1] + std::sin(10.0));
        EXPECT_LT(err, previous);
        previous = err;
    }
}

TEST(Ode, ObserverStopsAtRoot) {
    // Locate the first zero of cos t.
    auto f = [](double t, const std::array<double, 2>& y, std::array<double, 2>& dy) { oscillator(t, y, dy); };
    const auto r = ode::integrate(f, 0.0, std::array<double, 2>{1.0, 0.0}, 10.0, ode::Tolerances{},
                                  [&](double tp, const std::array<double, 2>& yp, double& t, std::array<double, 2>& y) {
                                      if (y[0] > 0.0) return true;
                                      auto root = ode::locate_root(
                                          f, tp, yp, t, y, [](double, const std::array<double, 2>& s) { return s[0]; },
                                          1e-12);
                                      t = root.first;
                                      y = root.second;
                                      return false;
                                  });
    EXPECT_TRUE(r.stopped);
    EXPECT_NEAR(r.t, std::acos(0.0), 1e-7);
}

TEST(Ode, NonFiniteStateThrows) {
    auto blowup = [](double, const std::array<double, 1>& y, std::array<double, 1>& dy) { dy[0] = y[0] * y[0]; };
    EXPECT_THROW(ode::integrate(blowup, 0.0, std::array<double, 1>{1.0}, 2.0), EvaluationError);
}

TEST(Jet, MatchesAnalyticDerivatives) {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(0.2, 3.0);
        const Jet2 t = Jet2::variable(x);
        // f = sin(x) * exp(x) / sqrt(x) + x^2.5
        const Jet2 f = sin(t) * exp(t) / sqrt(t) + pow(t, 2.5);
        const double s = std::sin(x), c = std::cos(x), e = std::exp(x), r = std::sqrt(x);
        const double g = s * e / r;
        const double g1 = (c * e + s * e) / r - 0.5 * s * e / (x * r);
        // Second derivative checked by central difference of the first.
        auto first = [](double z) {
            const Jet2 u = Jet2::variable(z);
            return (sin(u) * exp(u) / sqrt(u) + pow(u, 2.5)).d;
        };
        const double h = 1e-5;
        EXPECT_NEAR(f.v, g + std::pow(x, 2.5), 1e-12 * std::fabs(f.v) + 1e-14);
        EXPECT_NEAR(f.d, g1 + 2.5 * std::pow(x, 1.5), 1e-10 * std::fabs(f.d) + 1e-12);
        EXPECT_NEAR(f.dd, (first(x + h) - first(x - h)) / (2 * h), 1e-5 * (1.0 + std::fabs(f.dd)));
    }
}

TEST(Jet, ChainThroughComposition) {
    // cos(x^2): d = -2x sin(x^2), dd = -2 sin(x^2) - 4x^2 cos(x^2).
    const double x = 0.7;
    const Jet2 t = Jet2::variable(x);
    const Jet2 f = cos(t * t);
    EXPECT_NEAR(f.d, -2 * x * std::sin(x * x), 1e-14);
    EXPECT_NEAR(f.dd, -2 * std::sin(x * x) - 4 * x * x * std::cos(x * x), 1e-14);
}
