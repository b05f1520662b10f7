#pragma once

#include <span>
#include <vector>

namespace evimacs {

// Closed interval [lo, hi]; lo <= hi is enforced by make().
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    static Interval make(double lo, double hi);

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }

    // Rescales the width about the midpoint; factor 1 is the identity.
    Interval scaled(double factor) const;

    friend bool operator==(const Interval&, const Interval&) = default;
};

using Box = std::vector<Interval>;

bool box_contains(std::span<const Interval> box, std::span<const double> x);

// Product of widths normalized by the widths of `reference`.
double normalized_volume(std::span<const Interval> box, std::span<const Interval> reference);

}  // namespace evimacs
