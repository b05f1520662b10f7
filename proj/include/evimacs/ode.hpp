#pragma once

// Embedded Dormand-Prince 5(4) integrator on fixed-size states, plus a
// fixed-step mode used for order checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "evimacs/errors.hpp"

namespace evimacs::ode {

struct Tolerances {
    double relative = 1e-9;
    double absolute = 1e-12;
    double initial_step = 0.0;  // 0 picks a step from the derivative scale
    double min_step = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 1000000;
};

struct Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
};

template <std::size_t N>
struct Result {
    double t = 0.0;
    std::array<double, N> y{};
    Stats stats;
    bool stopped = false;  // observer requested the stop
};

namespace detail {

inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Fifth minus fourth order weights.
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace detail

// One Dormand-Prince step from (t, y) with derivative k1 = f(t, y). Writes
// the fifth-order solution, the embedded error estimate and f at the new
// point (first-same-as-last).
template <std::size_t N, class F>
void dopri5_step(F& f, double t, const std::array<double, N>& y, const std::array<double, N>& k1, double h,
                 std::array<double, N>& y_new, std::array<double, N>& err, std::array<double, N>& k7) {
    using namespace detail;
    std::array<double, N> k2, k3, k4, k5, k6, tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, tmp, k6);
    for (std::size_t i = 0; i < N; ++i)
        y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(t + h, y_new, k7);
    for (std::size_t i = 0; i < N; ++i)
        err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
}

// Scaled RMS error norm; <= 1 means the step is acceptable.
template <std::size_t N>
double error_norm(const std::array<double, N>& y, const std::array<double, N>& y_new, const std::array<double, N>& err,
                  const Tolerances& tol) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double sc = tol.absolute + tol.relative * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
        const double r = err[i] / sc;
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(N));
}

// Adaptive integration from t0 towards t_end. `f(t, y, dydt)` writes the
// derivative. `observer(t_prev, y_prev, t, y)` runs after every accepted
// step and returns false to stop; it may overwrite (t, y), e.g. with a
// located event point.
template <std::size_t N, class F, class Observer>
Result<N> integrate(F&& f, double t0, const std::array<double, N>& y0, double t_end, const Tolerances& tol,
                    Observer&& observer) {
    Result<N> out;
    out.t = t0;
    out.y = y0;
    if (t_end == t0) return out;
    const double dir = t_end > t0 ? 1.0 : -1.0;
    std::array<double, N> k1, y_new, err, k7;
    f(t0, y0, k1);
    ++out.stats.rhs_evaluations;

    double h = tol.initial_step;
    if (h <= 0.0) {
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = tol.absolute + tol.relative * std::fabs(y0[i]);
            d0 += (y0[i] / sc) * (y0[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        h = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * std::sqrt(d0 / d1);
    }
    h = std::min({h, tol.max_step, std::fabs(t_end - t0)});

    double t = t0;
    std::array<double, N> y = y0;
    while (true) {
        if (out.stats.accepted + out.stats.rejected >= tol.max_steps)
            throw EvaluationError("integration exceeded " + std::to_string(tol.max_steps) + " steps at t=" +
                                  std::to_string(t));
        const double remaining = std::fabs(t_end - t);
        const bool last = h >= remaining;
        const double hs = last ? remaining : h;
        dopri5_step(f, t, y, k1, dir * hs, y_new, err, k7);
        out.stats.rhs_evaluations += 6;
        const double en = error_norm(y, y_new, err, tol);
        if (!std::isfinite(en)) throw EvaluationError("non-finite state during integration at t=" + std::to_string(t));
        if (en <= 1.0) {
            const double t_prev = t;
            const auto y_prev = y;
            t = last ? t_end : t + dir * hs;
            y = y_new;
            k1 = k7;
            ++out.stats.accepted;
            double t_obs = t;
            auto y_obs = y;
            if (!observer(t_prev, y_prev, t_obs, y_obs)) {
                out.t = t_obs;
                out.y = y_obs;
                out.stopped = true;
                return out;
            }
            if (last) break;
            const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            h = std::min(hs * factor, tol.max_step);
        } else {
            ++out.stats.rejected;
            h = hs * std::max(0.2, 0.9 * std::pow(en, -0.2));
            if (h < tol.min_step)
                throw EvaluationError("step size underflow at t=" + std::to_string(t) + " (h=" + std::to_string(h) +
                                      ")");
        }
    }
    out.t = t;
    out.y = y;
    return out;
}

template <std::size_t N, class F>
Result<N> integrate(F&& f, double t0, const std::array<double, N>& y0, double t_end, const Tolerances& tol = {}) {
    return integrate(std::forward<F>(f), t0, y0, t_end, tol,
                     [](double, const std::array<double, N>&, double&, std::array<double, N>&) { return true; });
}

// Plain Dormand-Prince steps of equal size (no error control).
template <std::size_t N, class F>
std::array<double, N> integrate_fixed(F&& f, double t0, const std::array<double, N>& y0, double t_end,
                                      std::size_t steps) {
    if (steps == 0) throw DomainError("integrate_fixed needs at least one step");
    const double h = (t_end - t0) / static_cast<double>(steps);
    std::array<double, N> y = y0, k1, y_new, err, k7;
    f(t0, y, k1);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = t0 + h * static_cast<double>(s);
        dopri5_step(f, t, y, k1, h, y_new, err, k7);
        y = y_new;
        k1 = k7;
    }
    return y;
}

// Locates a root of g along the step (t_prev, y_prev) -> t_prev + h by
// re-stepping from the step start (Illinois false position). g(t_prev) and
// g(t_prev + h) must bracket zero. Returns the time and the state there.
template <std::size_t N, class F, class G>
std::pair<double, std::array<double, N>> locate_root(F& f, double t_prev, const std::array<double, N>& y_prev,
                                                     double t_next, const std::array<double, N>& y_next, G&& g,
                                                     double time_tolerance) {
    std::array<double, N> k1, y_new, err, k7;
    f(t_prev, y_prev, k1);
    double a = 0.0, b = t_next - t_prev;
    double ga = g(t_prev, y_prev), gb = g(t_next, y_next);
    std::array<double, N> yb = y_next;
    int side = 0;
    for (int iter = 0; iter < 100 && std::fabs(b - a) > time_tolerance; ++iter) {
        double c = (a * gb - b * ga) / (gb - ga);
        if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
        dopri5_step(f, t_prev, y_prev, k1, c, y_new, err, k7);
        const double gc = g(t_prev + c, y_new);
        if (gc == 0.0) return {t_prev + c, y_new};
        if ((gc > 0.0) == (gb > 0.0)) {
            b = c;
            gb = gc;
            yb = y_new;
            if (side == 1) ga *= 0.5;
            side = 1;
        } else {
            a = c;
            ga = gc;
            if (side == -1) gb *= 0.5;
            side = -1;
        }
    }
    if (b == t_next - t_prev) return {t_next, y_next};
    return {t_prev + b, yb};
}

}  // namespace evimacs::ode
