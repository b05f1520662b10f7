#include "evimacs/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evimacs/errors.hpp"

namespace evimacs {

void ProblemDefinition::validate() const {
    if (bounds.empty()) throw ConfigError("problem '" + name + "' has no decision variables");
    if (n_integer > bounds.size()) throw ConfigError("problem '" + name + "' declares more integers than variables");
    if (n_objectives == 0) throw ConfigError("problem '" + name + "' has no objectives");
    if (!evaluate) throw ConfigError("problem '" + name + "' has no evaluation handle");
    for (const auto& b : bounds) {
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi) {
            throw ConfigError("problem '" + name + "' has an invalid bound");
        }
    }
}

double constraint_violation(std::span<const double> constraints) {
    double s = 0.0;
    for (double r : constraints) s += std::max(0.0, r);
    return s;
}

double max_residual(std::span<const double> constraints) {
    double m = -std::numeric_limits<double>::infinity();
    for (double r : constraints) m = std::max(m, r);
    return m;
}

}  // namespace evimacs
