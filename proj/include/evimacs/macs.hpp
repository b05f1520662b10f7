#pragma once

// Multiagent collaborative search: a small population of agents performing
// local perception and social moves, a shared Pareto archive, and an adaptive
// partition of the search space used for regeneration.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evimacs/decomposition.hpp"
#include "evimacs/pareto.hpp"
#include "evimacs/problem.hpp"
#include "evimacs/random.hpp"

namespace evimacs::macs {

enum class Task { Feasible, Constraint };

struct EngineConfig {
    std::size_t population_size = 10;
    std::size_t n_f = 5;
    std::size_t max_evaluations = 10000;
    double rho_min = 1e-4;
    double collision_distance = 1e-3;
    std::uint64_t seed = 1;
    double w0 = 0.7;
    double w1 = 1.4;
    double w2 = 1.4;
    double epsilon_accept = 0.0;
    // Accept mutually nondominated samples that lower the agent's weighted
    // objective sum; lets agents travel along the front.
    bool scalarized_acceptance = true;
    // Width of the region S at rho = 1 as a fraction of each range; values
    // above 1 let a centred region reach the whole box from any point.
    double region_fraction = 0.25;
    double nonuniform_exponent = 5.0;
    double boundary_fraction = 0.3;
    double mutation_low = 0.1;
    double mutation_high = 0.9;
    std::size_t archive_capacity = 200;
    // Generations between decomposition updates; 0 disables branching.
    std::size_t branch_period = 50;
    decomposition::SelectionMode selection = decomposition::SelectionMode::FrontGuided;
    double nu = 0.5;
    decomposition::PartitionConfig partition;
    double cluster_gap = 0.1;
    std::size_t threads = 1;

    void validate() const;
};

struct Sample {
    std::vector<double> position;  // normalized coordinates
    Evaluation eval;
    double residual = 0.0;
};

struct Agent {
    std::vector<double> position;  // normalized coordinates in [0,1]^n
    std::vector<double> previous;
    Evaluation eval;
    double residual = 0.0;
    double rho = 1.0;
    std::size_t resources = 1;
    std::vector<double> best_position;
    Evaluation best_eval;
    std::vector<double> best_direction;
    std::optional<std::vector<double>> pending_direction;
    bool improved_last_gen = false;
    bool converged = false;
    bool boundary_explorer = false;
    Task task = Task::Feasible;
    std::vector<double> weights;
};

struct BehaviorOutcome {
    std::vector<Sample> samples;
    std::vector<std::size_t> accepted;
};

struct FilterResult {
    std::vector<std::size_t> perceivers;
    std::vector<std::size_t> hibernated;
    std::vector<std::size_t> mutated;
};

struct Assignment {
    std::size_t agent = 0;
    std::vector<double> direction;  // normalized coordinates
};

struct RunStats {
    std::size_t evaluations = 0;
    std::size_t generations = 0;
    std::size_t regenerations = 0;
    std::size_t mutations = 0;
    std::size_t collisions = 0;
    std::size_t convergences = 0;
    std::size_t branchings = 0;
    std::size_t perception_samples = 0;
    std::size_t archive_comparisons = 0;
    std::size_t archive_distance_evaluations = 0;
    std::vector<double> densities;
    bool partial = false;
    std::vector<std::string> warnings;
};

struct GenerationInfo {
    std::size_t generation = 0;
    std::size_t evaluations = 0;
    std::size_t archive_size = 0;
    std::size_t feasible_agents = 0;
    std::size_t nondominated_agents = 0;
    std::size_t subdomains = 0;
};

using ProgressCallback = std::function<void(const GenerationInfo&)>;

struct RunResult {
    pareto::ParetoArchive archive;
    RunStats stats;
    decomposition::Partition partition;
};

// Social move toward the local best and a global target, with explicit
// random factors.
std::vector<double> social_move(std::span<const double> position, std::span<const double> previous,
                                std::span<const double> local_best, std::span<const double> global_target,
                                double w0, double w1, double w2, double r1, double r2);

class Engine {
public:
    Engine(ProblemDefinition problem, EngineConfig config);

    const ProblemDefinition& problem() const { return problem_; }
    const EngineConfig& config() const { return config_; }
    std::vector<Agent>& agents() { return agents_; }
    const std::vector<Agent>& agents() const { return agents_; }
    pareto::ParetoArchive& archive() { return archive_; }
    decomposition::Partition& partition() { return partition_; }
    Rng& rng() { return rng_; }
    std::size_t evaluations() const { return evaluations_; }
    const RunStats& stats() const { return stats_; }

    // Real decision vector of a normalized point, integers rounded.
    std::vector<double> to_real(std::span<const double> u) const;
    std::vector<double> to_normalized(std::span<const double> x) const;
    // Round integer components of a normalized point.
    std::vector<double> snap(std::span<const double> u) const;

    // Evaluates a normalized point; nullopt once the budget is spent.
    std::optional<Sample> evaluate(std::span<const double> u);

    void initialize_population();
    std::vector<double> social_displacement(const Agent& agent, std::span<const double> local_best,
                                            std::span<const double> global_target, Rng& rng) const;
    BehaviorOutcome perception_step(Agent& agent, Rng& rng);
    void update_region(Agent& agent, const BehaviorOutcome& outcome) const;
    void update_resources(Agent& agent, bool improved) const;
    FilterResult filter_population(Rng& rng) const;
    std::vector<Assignment> communicate(Rng& rng);
    void handle_collisions_and_convergence();
    void constraint_split_step();

    // True when `s` improves on the agent under its current task.
    bool improves(const Agent& agent, const Sample& s) const;
    // Signed scalar change relative to the agent (negative is better).
    double scalar_change(const Agent& agent, const Sample& s) const;
    // Best-first ordering of agent indices.
    std::vector<std::size_t> rank_agents() const;

    void regenerate(Agent& agent);
    void mutate(Agent& agent);

    RunResult run(const ProgressCallback& progress = {});

private:
    struct Budget {
        std::size_t used = 0;
        std::size_t limit = 0;
    };

    std::optional<Sample> evaluate_with(std::span<const double> u, Budget& budget) const;
    BehaviorOutcome perceive(Agent& agent, Rng& rng, Budget& budget) const;
    void commit_outcome(Agent& agent, const BehaviorOutcome& outcome);
    void submit(const Sample& s, pareto::Origin origin);
    void flush_candidates();
    void refresh_scales();
    std::vector<double> random_weights(Rng& rng) const;
    std::vector<double> uniform_in_lowest_density(Rng& rng);
    void assign_boundary_explorers();
    Agent make_agent(const Sample& s);
    void maybe_branch();
    std::vector<double> augmented(const Agent& agent, const Sample& s) const;

    ProblemDefinition problem_;
    EngineConfig config_;
    Rng rng_;
    std::vector<Agent> agents_;
    pareto::ParetoArchive archive_;
    decomposition::Partition partition_;
    decomposition::BranchingScheme scheme_;
    std::vector<pareto::ArchiveEntry> candidates_;
    std::vector<double> scales_;
    std::size_t evaluations_ = 0;
    RunStats stats_;
};

}  // namespace evimacs::macs
