#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "evimacs/interval.hpp"

namespace evimacs {

struct Evaluation {
    std::vector<double> objectives;   // minimized
    std::vector<double> constraints;  // c <= 0 is feasible
};

// Box-bounded mixed-integer problem. The first n_integer components of the
// decision vector are integers.
struct ProblemDefinition {
    std::string name;
    std::vector<Interval> bounds;
    std::size_t n_integer = 0;
    std::size_t n_objectives = 1;
    std::size_t n_constraints = 0;
    std::function<Evaluation(std::span<const double>)> evaluate;

    std::size_t dimension() const { return bounds.size(); }
    void validate() const;
};

// Sum of positive residuals (0 when feasible).
double constraint_violation(std::span<const double> constraints);
double max_residual(std::span<const double> constraints);

}  // namespace evimacs
