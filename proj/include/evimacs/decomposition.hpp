#pragma once

// Adaptive partition of the search box into subdomains with sample-density
// bookkeeping and a data-driven branching scheme.

#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "evimacs/interval.hpp"

namespace evimacs::decomposition {

struct Subdomain {
    Box box;
    // Samples per unit normalized volume.
    double density = 0.0;
    std::size_t sample_count = 0;
    std::size_t depth = 0;
    // Branchings of ancestors that produced no archive improvement.
    std::size_t parent_no_improve = 0;
    bool contains_front_member = false;
    // Archive insertions located here since the subdomain was created.
    std::size_t improvements = 0;
    double best_fitness = std::numeric_limits<double>::infinity();
    std::size_t parent = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> children;
};

struct BranchingScheme {
    // Coordinates to split at the next branching (I_s).
    std::set<std::size_t> split_indices;
    // Cut point per coordinate (C_B), in domain coordinates.
    std::map<std::size_t, double> cut_points;
    // Historical number of cuts made per coordinate.
    std::vector<std::size_t> cut_counts;

    // Cut points at the midpoints of the domain.
    static BranchingScheme initial(std::span<const Interval> domain, std::set<std::size_t> split_indices = {});
};

struct ArchivePoint {
    std::vector<double> decision;
    double fitness = 0.0;  // lower is better
};

struct AdaptOptions {
    // Single-linkage gap, relative to the coordinate range.
    double cluster_gap = 0.1;
};

// Number of single-linkage clusters of `values` with absolute gap threshold.
std::vector<std::vector<std::size_t>> cluster_1d(std::span<const double> values, double gap);

BranchingScheme adapt_scheme(const BranchingScheme& scheme, std::span<const Interval> domain,
                             std::span<const ArchivePoint> archive, const AdaptOptions& options = {});

enum class SelectionMode { FrontGuided, Merit };

struct PartitionConfig {
    std::size_t max_depth = 10;
    std::size_t no_improve_threshold = 3;
    // Coordinates split per branching; 2^k children are produced.
    std::size_t max_split_coordinates = 2;
};

struct BranchResult {
    bool branched = false;
    std::size_t subdomain = 0;
    std::vector<std::size_t> coordinates;
    std::string notice;
};

class Partition {
public:
    explicit Partition(Box domain, PartitionConfig config = {});

    const Box& domain() const { return domain_; }
    const PartitionConfig& config() const { return config_; }
    // Leaf subdomain node ids in creation order.
    const std::vector<std::size_t>& leaves() const { return leaves_; }
    const Subdomain& node(std::size_t id) const { return nodes_[id]; }
    std::size_t leaf_count() const { return leaves_.size(); }
    const Subdomain& leaf(std::size_t i) const { return nodes_[leaves_[i]]; }

    void record_sample(std::span<const double> x, double fitness = std::numeric_limits<double>::infinity());
    void record_samples(std::span<const std::vector<double>> samples);
    std::size_t total_samples() const { return samples_.size(); }

    // Leaf index (into leaves()) of the lexicographically lowest leaf box
    // containing x.
    std::size_t locate(std::span<const double> x) const;
    // Leaf index with the minimum density; ties by larger volume, then
    // lexicographic box order.
    std::size_t lowest_density() const;

    void note_improvement(std::span<const double> x);
    void mark_front(std::span<const std::vector<double>> front_members);

    BranchResult select_and_branch(BranchingScheme& scheme, SelectionMode mode, double nu);

    double normalized_volume(std::size_t leaf_index) const;
    std::string to_json() const;

private:
    void refresh_density(Subdomain& s) const;
    std::size_t leaf_of(std::span<const double> x) const;  // node id

    Box domain_;
    PartitionConfig config_;
    std::vector<Subdomain> nodes_;
    std::vector<std::size_t> leaves_;
    std::vector<std::vector<double>> samples_;
    std::vector<double> sample_fitness_;
    std::vector<std::vector<std::size_t>> leaf_samples_;  // per node id
};

}  // namespace evimacs::decomposition
