#pragma once

// Dominance, the global nondominated archive, and front-quality metrics.
// All objectives are minimized.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace evimacs::pareto {

using ObjectiveVector = std::vector<double>;

// a <= b componentwise with at least one strict improvement.
bool dominates(std::span<const double> a, std::span<const double> b);

// For each member, the number of population members dominating it.
std::vector<std::size_t> dominance_index(const std::vector<ObjectiveVector>& population);

enum class Origin { AgentBest, Perceived, Converged };

const char* to_string(Origin origin);

struct ArchiveEntry {
    std::vector<double> decision;
    ObjectiveVector objectives;
    // Sum of positive constraint residuals; 0 for feasible points.
    double violation = 0.0;
    double crowding = 0.0;
    Origin origin = Origin::Perceived;
};

// Feasible beats infeasible, lower violation beats higher among infeasible,
// Pareto dominance among feasible.
bool constrained_dominates(const ArchiveEntry& a, const ArchiveEntry& b);

// Inverse-distance crowding in objective space normalized to the archive's
// bounding box: crowding_i = (1/N) sum_{j != i} 1/max(d_ij, floor).
// Smaller values are more isolated.
std::vector<double> crowding_factors(std::span<const ArchiveEntry> entries);

struct ArchiveCounters {
    std::uint64_t comparisons = 0;
    std::uint64_t distance_evaluations = 0;
};

class ParetoArchive {
public:
    static constexpr std::size_t kDefaultCapacity = 200;
    static constexpr double kDistanceFloor = 1e-12;

    explicit ParetoArchive(std::size_t capacity = kDefaultCapacity);

    // Merges candidates, evicts dominated incumbents, recomputes crowding and
    // prunes to capacity (most crowded first, per-objective extremes kept).
    // Returns the number of candidates present in the archive afterwards.
    std::size_t update(std::span<const ArchiveEntry> candidates);

    const std::vector<ArchiveEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t capacity() const { return capacity_; }
    const ArchiveCounters& counters() const { return counters_; }

    // Entry indices ordered from most isolated to most crowded.
    std::vector<std::size_t> isolation_order() const;

private:
    void prune();

    std::size_t capacity_;
    std::vector<ArchiveEntry> entries_;
    ArchiveCounters counters_;
};

std::vector<ObjectiveVector> objectives_of(std::span<const ArchiveEntry> entries);

// Mean over reference points of the Euclidean distance to the nearest front
// point.
double distance_metric(const std::vector<ObjectiveVector>& front, const std::vector<ObjectiveVector>& reference);

struct ExportMetadata {
    std::uint64_t seed = 0;
    std::string version;
    std::string manifest_hash;
    std::uint64_t evaluations = 0;
};

// CSV with columns decision_*, objective_*, violation, crowding, origin preceded by a
// '#' metadata row.
std::string to_csv(const ParetoArchive& archive, const ExportMetadata& meta);
std::string to_json(const ParetoArchive& archive, const ExportMetadata& meta);

}  // namespace evimacs::pareto
