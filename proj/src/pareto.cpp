#include "evimacs/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "evimacs/errors.hpp"

namespace evimacs::pareto {

bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DomainError("dominance check on vectors of length " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()));
    }
    bool strict = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] > b[k]) return false;
        if (a[k] < b[k]) strict = true;
    }
    return strict;
}

std::vector<std::size_t> dominance_index(const std::vector<ObjectiveVector>& population) {
    std::vector<std::size_t> index(population.size(), 0);
    for (std::size_t i = 0; i < population.size(); ++i) {
        for (std::size_t j = i + 1; j < population.size(); ++j) {
            if (dominates(population[i], population[j])) ++index[j];
            else if (dominates(population[j], population[i])) ++index[i];
        }
    }
    return index;
}

const char* to_string(Origin origin) {
    switch (origin) {
        case Origin::AgentBest: return "agent_best";
        case Origin::Perceived: return "perceived";
        case Origin::Converged: return "converged";
    }
    return "unknown";
}

bool constrained_dominates(const ArchiveEntry& a, const ArchiveEntry& b) {
    const bool fa = a.violation <= 0.0;
    const bool fb = b.violation <= 0.0;
    if (fa && !fb) return true;
    if (!fa && fb) return false;
    if (!fa && !fb) return a.violation < b.violation;
    return dominates(a.objectives, b.objectives);
}

namespace {

// Per-objective [min, range] of the entries; zero ranges map to 1.
void objective_frame(std::span<const ArchiveEntry> entries, std::vector<double>& lo, std::vector<double>& range) {
    const std::size_t m = entries.front().objectives.size();
    lo.assign(m, std::numeric_limits<double>::infinity());
    std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
    for (const auto& e : entries) {
        for (std::size_t k = 0; k < m; ++k) {
            lo[k] = std::min(lo[k], e.objectives[k]);
            hi[k] = std::max(hi[k], e.objectives[k]);
        }
    }
    range.resize(m);
    for (std::size_t k = 0; k < m; ++k) range[k] = hi[k] > lo[k] ? hi[k] - lo[k] : 1.0;
}

double normalized_distance(const ArchiveEntry& a, const ArchiveEntry& b, const std::vector<double>& range) {
    double s = 0.0;
    for (std::size_t k = 0; k < range.size(); ++k) {
        const double d = (a.objectives[k] - b.objectives[k]) / range[k];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

std::vector<double> crowding_factors(std::span<const ArchiveEntry> entries) {
    const std::size_t n = entries.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    std::vector<double> lo, range;
    objective_frame(entries, lo, range);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double inv =
                1.0 / std::max(normalized_distance(entries[i], entries[j], range), ParetoArchive::kDistanceFloor);
            out[i] += inv;
            out[j] += inv;
        }
    }
    for (double& c : out) c /= static_cast<double>(n);
    return out;
}

ParetoArchive::ParetoArchive(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("archive capacity must be positive");
}

std::size_t ParetoArchive::update(std::span<const ArchiveEntry> candidates) {
    std::vector<const ArchiveEntry*> inserted;
    for (const auto& c : candidates) {
        bool rejected = false;
        for (const auto& e : entries_) {
            ++counters_.comparisons;
            if (e.decision == c.decision || constrained_dominates(e, c)) {
                rejected = true;
                break;
            }
        }
        if (rejected) continue;
        std::erase_if(entries_, [&](const ArchiveEntry& e) {
            ++counters_.comparisons;
            return constrained_dominates(c, e);
        });
        entries_.push_back(c);
        inserted.push_back(&c);
    }
    prune();
    const auto crowding = crowding_factors(entries_);
    counters_.distance_evaluations += entries_.size() * entries_.size() / 2;
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].crowding = crowding[i];
    // Candidates evicted later in the same batch or pruned do not count.
    return static_cast<std::size_t>(std::count_if(inserted.begin(), inserted.end(), [&](const ArchiveEntry* c) {
        return std::any_of(entries_.begin(), entries_.end(),
                           [&](const ArchiveEntry& e) { return e.decision == c->decision; });
    }));
}

void ParetoArchive::prune() {
    if (entries_.size() <= capacity_) return;
    const std::size_t n = entries_.size();
    std::vector<double> lo, range;
    objective_frame(entries_, lo, range);

    std::vector<bool> protect(n, false);
    const std::size_t m = entries_.front().objectives.size();
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (entries_[i].objectives[k] < entries_[best].objectives[k]) best = i;
        }
        protect[best] = true;
    }

    // Raw inverse-distance sums; the 1/N factor does not change the order.
    std::vector<double> sums(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double inv = 1.0 / std::max(normalized_distance(entries_[i], entries_[j], range), kDistanceFloor);
            sums[i] += inv;
            sums[j] += inv;
        }
    }
    counters_.distance_evaluations += n * (n - 1) / 2;

    std::vector<bool> alive(n, true);
    std::size_t count = n;
    while (count > capacity_) {
        std::size_t worst = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i] || protect[i]) continue;
            if (worst == n || sums[i] > sums[worst]) worst = i;
        }
        if (worst == n) break;
        alive[worst] = false;
        --count;
        for (std::size_t j = 0; j < n; ++j) {
            if (!alive[j]) continue;
            sums[j] -= 1.0 / std::max(normalized_distance(entries_[worst], entries_[j], range), kDistanceFloor);
        }
        counters_.distance_evaluations += count;
    }
    std::vector<ArchiveEntry> kept;
    kept.reserve(count);
    for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) kept.push_back(std::move(entries_[i]));
    }
    entries_ = std::move(kept);
}

std::vector<std::size_t> ParetoArchive::isolation_order() const {
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return entries_[a].crowding < entries_[b].crowding; });
    return order;
}

std::vector<ObjectiveVector> objectives_of(std::span<const ArchiveEntry> entries) {
    std::vector<ObjectiveVector> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.objectives);
    return out;
}

double distance_metric(const std::vector<ObjectiveVector>& front, const std::vector<ObjectiveVector>& reference) {
    if (front.empty() || reference.empty()) throw DomainError("distance metric needs nonempty sets");
    double total = 0.0;
    for (const auto& r : reference) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& f : front) {
            if (f.size() != r.size()) throw DomainError("objective count mismatch in distance metric");
            double s = 0.0;
            for (std::size_t k = 0; k < r.size(); ++k) s += (f[k] - r[k]) * (f[k] - r[k]);
            best = std::min(best, s);
        }
        total += std::sqrt(best);
    }
    return total / static_cast<double>(reference.size());
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string to_csv(const ParetoArchive& archive, const ExportMetadata& meta) {
    std::ostringstream os;
    os << "# seed=" << meta.seed << " version=" << meta.version << " manifest=" << meta.manifest_hash
       << " evaluations=" << meta.evaluations << '\n';
    const auto& entries = archive.entries();
    const std::size_t n = entries.empty() ? 0 : entries.front().decision.size();
    const std::size_t m = entries.empty() ? 0 : entries.front().objectives.size();
    for (std::size_t i = 0; i < n; ++i) os << "decision_" << i << ',';
    for (std::size_t k = 0; k < m; ++k) os << "objective_" << k << ',';
    os << "violation,crowding,origin\n";
    for (const auto& e : entries) {
        for (double v : e.decision) os << fmt17(v) << ',';
        for (double v : e.objectives) os << fmt17(v) << ',';
        os << fmt17(e.violation) << ',' << fmt17(e.crowding) << ',' << to_string(e.origin) << '\n';
    }
    return os.str();
}

std::string to_json(const ParetoArchive& archive, const ExportMetadata& meta) {
    nlohmann::json doc;
    doc["seed"] = meta.seed;
    doc["version"] = meta.version;
    doc["manifest_hash"] = meta.manifest_hash;
    doc["evaluations"] = meta.evaluations;
    doc["capacity"] = archive.capacity();
    doc["entries"] = nlohmann::json::array();
    for (const auto& e : archive.entries()) {
        doc["entries"].push_back({{"decision", e.decision},
                                  {"objectives", e.objectives},
                                  {"violation", e.violation},
                                  {"crowding", e.crowding},
                                  {"origin", to_string(e.origin)}});
    }
    return doc.dump(2);
}

}  // namespace evimacs::pareto
