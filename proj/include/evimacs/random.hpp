#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "evimacs/interval.hpp"

namespace evimacs {

// Seeded generator with platform-independent uniform draws; the standard
// distributions are implementation defined, which would break replay.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Latin hypercube design of `count` points in `box`: each coordinate has
// exactly one point per stratum of width box_width / count.
std::vector<std::vector<double>> latin_hypercube(std::size_t count, std::span<const Interval> box, Rng& rng);

// Neumaier-compensated summation.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

}  // namespace evimacs
