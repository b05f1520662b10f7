#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "evimacs/errors.hpp"
#include "evimacs/interval.hpp"
#include "evimacs/random.hpp"

namespace evimacs {

Interval Interval::make(double lo, double hi) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw DomainError("interval requires finite lo <= hi, got [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }
    return Interval{lo, hi};
}

Interval Interval::scaled(double factor) const {
    if (factor == 1.0) return *this;
    const double c = mid();
    const double half = 0.5 * width() * factor;
    return Interval{c - half, c + half};
}

bool box_contains(std::span<const Interval> box, std::span<const double> x) {
    if (box.size() != x.size()) return false;
    for (std::size_t i = 0; i < box.size(); ++i) {
        if (!box[i].contains(x[i])) return false;
    }
    return true;
}

double normalized_volume(std::span<const Interval> box, std::span<const Interval> reference) {
    double v = 1.0;
    for (std::size_t i = 0; i < box.size(); ++i) {
        const double w = reference[i].width();
        v *= w > 0.0 ? box[i].width() / w : 1.0;
    }
    return v;
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) return 0;
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

std::vector<std::vector<double>> latin_hypercube(std::size_t count, std::span<const Interval> box, Rng& rng) {
    std::vector<std::vector<double>> points(count, std::vector<double>(box.size()));
    std::vector<std::size_t> perm(count);
    for (std::size_t d = 0; d < box.size(); ++d) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        // Fisher-Yates with our own draws for reproducibility.
        for (std::size_t i = count; i > 1; --i) {
            std::swap(perm[i - 1], perm[rng.index(i)]);
        }
        const double w = box[d].width();
        for (std::size_t i = 0; i < count; ++i) {
            const double u = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(count);
            points[i][d] = std::min(box[d].hi, box[d].lo + u * w);
        }
    }
    return points;
}

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        compensation_ += (sum_ - t) + x;
    } else {
        compensation_ += (x - t) + sum_;
    }
    sum_ = t;
}

}  // namespace evimacs
