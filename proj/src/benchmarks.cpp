#include "evimacs/benchmarks.hpp"

#include <cmath>

#include "evimacs/errors.hpp"

namespace evimacs::benchmarks {

namespace {

void check_bounds(std::span<const double> x, double lo0, double hi0, double lo, double hi, const char* name) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double l = i == 0 ? lo0 : lo;
        const double h = i == 0 ? hi0 : hi;
        if (!(x[i] >= l && x[i] <= h)) {
            throw DomainError(std::string(name) + ": x[" + std::to_string(i) + "] = " + std::to_string(x[i]) +
                              " outside [" + std::to_string(l) + ", " + std::to_string(h) + "]");
        }
    }
}

}  // namespace

BenchmarkId parse_benchmark(const std::string& id) {
    if (id == "deb" || id == "DEB") return BenchmarkId::Deb;
    if (id == "zdt4" || id == "ZDT4") return BenchmarkId::Zdt4;
    throw ConfigError("unknown benchmark '" + id + "' (valid: deb, zdt4)");
}

BenchmarkSpec BenchmarkSpec::defaults(BenchmarkId id, std::size_t n) {
    if (n < 2) throw ConfigError("benchmarks need n >= 2");
    BenchmarkSpec s;
    s.id = id;
    s.n = n;
    if (id == BenchmarkId::Deb) {
        s.bounds.assign(n, Interval{0.0, 1.0});
    } else {
        s.bounds.assign(n, Interval{-5.0, 5.0});
        s.bounds[0] = Interval{0.0, 1.0};
    }
    return s;
}

std::array<double, 2> zdt4(std::span<const double> x) {
    if (x.size() < 2) throw DomainError("zdt4 needs at least two variables");
    check_bounds(x, 0.0, 1.0, -5.0, 5.0, "zdt4");
    const double n = static_cast<double>(x.size());
    double g = 1.0 + 10.0 * (n - 1.0);
    for (std::size_t i = 1; i < x.size(); ++i) {
        g += x[i] * x[i] - 10.0 * std::cos(4.0 * std::numbers::pi * x[i]);
    }
    const double f1 = x[0];
    return {f1, g * (1.0 - std::sqrt(f1 / g))};
}

double deb_constraint(double f1, double f2, const DebConstants& k) {
    const double ct = std::cos(k.theta);
    const double st = std::sin(k.theta);
    const double inner = std::pow(st * (f2 - k.e) + f1 * ct, k.c);
    return ct * (f2 - k.e) - f1 * st - k.a * std::pow(std::abs(std::sin(k.b * std::numbers::pi * inner)), k.d);
}

DebValue deb(std::span<const double> x, const DebConstants& constants) {
    if (x.size() < 2) throw DomainError("deb needs at least two variables");
    check_bounds(x, 0.0, 1.0, 0.0, 1.0, "deb");
    double sum = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) sum += x[i];
    const double g = 1.0 + 9.0 / static_cast<double>(x.size() - 1) * sum;
    DebValue v;
    v.f1 = x[0];
    v.f2 = g * (1.0 - std::sqrt(v.f1 / g));
    v.c = deb_constraint(v.f1, v.f2, constants);
    return v;
}

ProblemDefinition make_problem(const BenchmarkSpec& spec) {
    ProblemDefinition p;
    p.bounds = spec.bounds;
    p.n_objectives = 2;
    if (spec.id == BenchmarkId::Zdt4) {
        p.name = "zdt4";
        p.evaluate = [](std::span<const double> x) {
            const auto f = zdt4(x);
            return Evaluation{{f[0], f[1]}, {}};
        };
    } else {
        p.name = "deb";
        p.n_constraints = 1;
        p.evaluate = [k = spec.deb](std::span<const double> x) {
            const auto v = deb(x, k);
            return Evaluation{{v.f1, v.f2}, {-v.c}};
        };
    }
    return p;
}

std::vector<pareto::ObjectiveVector> reference_front(BenchmarkId id, std::size_t count, const DebConstants& constants) {
    if (count < 2) throw DomainError("reference front needs at least two points");
    std::vector<pareto::ObjectiveVector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        const double f2 = 1.0 - std::sqrt(t);
        if (id == BenchmarkId::Deb && deb_constraint(t, f2, constants) < 0.0) continue;
        out.push_back({t, f2});
    }
    return out;
}

std::vector<pareto::ObjectiveVector> deb_constrained_front(std::size_t count, const DebConstants& constants) {
    if (count < 2) throw DomainError("reference front needs at least two points");
    constexpr double kStep = 1e-3;
    constexpr double kMaxG = 10.0;
    std::vector<pareto::ObjectiveVector> candidates;
    for (std::size_t i = 0; i < count; ++i) {
        const double f1 = static_cast<double>(i) / static_cast<double>(count - 1);
        const double lo = 1.0 - std::sqrt(f1);
        const double hi = kMaxG - std::sqrt(kMaxG * f1);
        auto feasible = [&](double f2) { return deb_constraint(f1, f2, constants) >= 0.0; };
        if (feasible(lo)) {
            candidates.push_back({f1, lo});
            continue;
        }
        for (double a = lo; a < hi; a += kStep) {
            double b = std::min(a + kStep, hi);
            if (!feasible(b)) continue;
            while (b - a > 1e-13) {
                const double m = 0.5 * (a + b);
                (feasible(m) ? b : a) = m;
            }
            candidates.push_back({f1, b});
            break;
        }
    }
    std::vector<pareto::ObjectiveVector> out;
    for (const auto& c : candidates) {
        bool dominated = false;
        for (const auto& o : candidates) dominated = dominated || pareto::dominates(o, c);
        if (!dominated) out.push_back(c);
    }
    return out;
}

}  // namespace evimacs::benchmarks
