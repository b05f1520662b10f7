#pragma once

// Analytic multiobjective test problems and their reference fronts.

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "evimacs/pareto.hpp"
#include "evimacs/problem.hpp"

namespace evimacs::benchmarks {

enum class BenchmarkId { Deb, Zdt4 };

BenchmarkId parse_benchmark(const std::string& id);

struct DebConstants {
    double a = 0.2;
    double b = 10.0;
    double c = 1.0;
    double d = 6.0;
    double e = 1.0;
    double theta = -0.2 * std::numbers::pi;
};

struct BenchmarkSpec {
    BenchmarkId id = BenchmarkId::Zdt4;
    std::size_t n = 10;
    std::vector<Interval> bounds;
    DebConstants deb;

    static BenchmarkSpec defaults(BenchmarkId id, std::size_t n = 10);
};

// f1 = x1, f2 = g (1 - sqrt(f1/g)), g = 1 + 10(n-1) + sum_{i>=2} (x_i^2 - 10 cos(4 pi x_i)).
std::array<double, 2> zdt4(std::span<const double> x);

struct DebValue {
    double f1 = 0.0;
    double f2 = 0.0;
    double c = 0.0;  // feasible when c >= 0
};

DebValue deb(std::span<const double> x, const DebConstants& constants = {});
double deb_constraint(double f1, double f2, const DebConstants& constants = {});

ProblemDefinition make_problem(const BenchmarkSpec& spec);

// Points on the global front sampled uniformly in f1 over [0, 1]; for DEB the
// same curve restricted to C >= 0.
std::vector<pareto::ObjectiveVector> reference_front(BenchmarkId id, std::size_t count,
                                                     const DebConstants& constants = {});

// Front of the constrained DEB problem: for each f1 on a uniform grid the
// lowest attainable f2 (g between 1 and 10) with C >= 0, then the mutually
// nondominated subset. With the default constants the unconstrained curve is
// infeasible except at f1 = 0, so this is the set to measure runs against.
std::vector<pareto::ObjectiveVector> deb_constrained_front(std::size_t count, const DebConstants& constants = {});

}  // namespace evimacs::benchmarks
