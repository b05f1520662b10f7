#include "evimacs/macs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "evimacs/errors.hpp"

namespace evimacs::macs {

namespace {

double inf_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Parameter range [t_lo, t_hi] keeping origin + t*dir inside [lo_i, hi_i].
std::pair<double, double> segment_range(std::span<const double> origin, std::span<const double> dir,
                                        std::span<const double> lo, std::span<const double> hi) {
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < origin.size(); ++i) {
        if (dir[i] == 0.0) continue;
        double a = (lo[i] - origin[i]) / dir[i];
        double b = (hi[i] - origin[i]) / dir[i];
        if (a > b) std::swap(a, b);
        t_lo = std::max(t_lo, a);
        t_hi = std::min(t_hi, b);
    }
    if (!std::isfinite(t_lo)) t_lo = 0.0;
    if (!std::isfinite(t_hi)) t_hi = 0.0;
    return {std::min(t_lo, 0.0), std::max(t_hi, 0.0)};
}

bool epsilon_dominates(std::span<const double> a, std::span<const double> b, double eps) {
    if (eps <= 0.0) return pareto::dominates(a, b);
    bool strict = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] > b[k] + eps) return false;
        if (a[k] < b[k]) strict = true;
    }
    return strict;
}

}  // namespace

void EngineConfig::validate() const {
    if (population_size == 0) throw ConfigError("population_size must be at least 1");
    if (n_f == 0 || n_f > population_size) throw ConfigError("n_f must lie in [1, population_size]");
    if (!(rho_min > 0.0 && rho_min < 1.0)) throw ConfigError("rho_min must lie in (0, 1)");
    if (!(region_fraction > 0.0 && region_fraction <= 2.0)) throw ConfigError("region_fraction must lie in (0, 2]");
    if (!(collision_distance >= 0.0)) throw ConfigError("collision_distance must be nonnegative");
    if (!(boundary_fraction >= 0.0 && boundary_fraction <= 1.0)) throw ConfigError("boundary_fraction must lie in [0, 1]");
    if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("nu must lie in [0, 1]");
    if (archive_capacity == 0) throw ConfigError("archive_capacity must be at least 1");
    if (threads == 0) throw ConfigError("threads must be at least 1");
    if (epsilon_accept < 0.0) throw ConfigError("epsilon_accept must be nonnegative");
}

std::vector<double> social_move(std::span<const double> position, std::span<const double> previous,
                                std::span<const double> local_best, std::span<const double> global_target,
                                double w0, double w1, double w2, double r1, double r2) {
    if (previous.size() != position.size() || local_best.size() != position.size() ||
        global_target.size() != position.size()) {
        throw DomainError("social move needs vectors of equal length");
    }
    std::vector<double> d(position.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = position[i];
        double v = w0 * (x - previous[i]) - w1 * r1 * (x - local_best[i]) - w2 * r2 * (x - global_target[i]);
        d[i] = clamp01(x + v) - x;
    }
    return d;
}

Engine::Engine(ProblemDefinition problem, EngineConfig config)
    : problem_(std::move(problem)),
      config_(config),
      rng_(config.seed),
      archive_(config.archive_capacity),
      partition_((problem_.validate(), problem_.bounds), config.partition) {
    config_.validate();
    scheme_ = decomposition::BranchingScheme::initial(problem_.bounds);
    scales_.assign(problem_.n_objectives, 1.0);
}

std::vector<double> Engine::to_real(std::span<const double> u) const {
    std::vector<double> x(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto& b = problem_.bounds[i];
        double v = b.lo + clamp01(u[i]) * b.width();
        if (i < problem_.n_integer) {
            v = std::clamp(std::round(v), std::ceil(b.lo), std::floor(b.hi));
        }
        x[i] = std::clamp(v, b.lo, b.hi);
    }
    return x;
}

std::vector<double> Engine::to_normalized(std::span<const double> x) const {
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& b = problem_.bounds[i];
        u[i] = b.width() > 0.0 ? clamp01((x[i] - b.lo) / b.width()) : 0.0;
    }
    return u;
}

std::vector<double> Engine::snap(std::span<const double> u) const {
    std::vector<double> out(u.begin(), u.end());
    for (auto& v : out) v = clamp01(v);
    if (problem_.n_integer == 0) return out;
    const auto x = to_real(out);
    const auto back = to_normalized(x);
    for (std::size_t i = 0; i < problem_.n_integer; ++i) out[i] = back[i];
    return out;
}

std::optional<Sample> Engine::evaluate_with(std::span<const double> u, Budget& budget) const {
    if (budget.used >= budget.limit) return std::nullopt;
    ++budget.used;
    Sample s;
    s.position = snap(u);
    s.eval = problem_.evaluate(to_real(s.position));
    if (s.eval.objectives.size() != problem_.n_objectives || s.eval.constraints.size() != problem_.n_constraints) {
        throw EvaluationError("problem '" + problem_.name + "' returned a response of the wrong size");
    }
    for (double f : s.eval.objectives) {
        if (std::isnan(f)) throw EvaluationError("problem '" + problem_.name + "' returned NaN objective");
    }
    for (double c : s.eval.constraints) {
        if (std::isnan(c)) throw EvaluationError("problem '" + problem_.name + "' returned NaN constraint");
    }
    s.residual = constraint_violation(s.eval.constraints);
    return s;
}

std::optional<Sample> Engine::evaluate(std::span<const double> u) {
    Budget b{evaluations_, config_.max_evaluations};
    auto s = evaluate_with(u, b);
    evaluations_ = b.used;
    return s;
}

std::vector<double> Engine::random_weights(Rng& rng) const {
    std::vector<double> w(problem_.n_objectives);
    double sum = 0.0;
    for (auto& v : w) {
        v = -std::log(1.0 - rng.uniform());
        sum += v;
    }
    for (auto& v : w) v = sum > 0.0 ? v / sum : 1.0 / static_cast<double>(w.size());
    return w;
}

Agent Engine::make_agent(const Sample& s) {
    Agent a;
    a.position = s.position;
    a.previous = s.position;
    a.eval = s.eval;
    a.residual = s.residual;
    a.rho = 1.0;
    a.resources = problem_.dimension();
    a.best_position = s.position;
    a.best_eval = s.eval;
    a.task = s.residual > 0.0 ? Task::Constraint : Task::Feasible;
    a.weights = random_weights(rng_);
    return a;
}

void Engine::submit(const Sample& s, pareto::Origin origin) {
    pareto::ArchiveEntry e;
    e.decision = to_real(s.position);
    e.objectives = s.eval.objectives;
    e.violation = s.residual;
    e.origin = origin;
    candidates_.push_back(std::move(e));
    partition_.record_sample(to_real(s.position),
                             s.residual > 0.0 ? std::numeric_limits<double>::infinity() : s.eval.objectives[0]);
}

void Engine::flush_candidates() {
    if (candidates_.empty()) return;
    archive_.update(candidates_);
    // Credit subdomains whose samples entered the archive.
    for (const auto& c : candidates_) {
        for (const auto& e : archive_.entries()) {
            if (e.decision == c.decision) {
                partition_.note_improvement(c.decision);
                break;
            }
        }
    }
    candidates_.clear();
    stats_.archive_comparisons = archive_.counters().comparisons;
    stats_.archive_distance_evaluations = archive_.counters().distance_evaluations;
}

void Engine::refresh_scales() {
    scales_.assign(problem_.n_objectives, 1.0);
    if (archive_.size() < 2) return;
    for (std::size_t k = 0; k < problem_.n_objectives; ++k) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& e : archive_.entries()) {
            lo = std::min(lo, e.objectives[k]);
            hi = std::max(hi, e.objectives[k]);
        }
        const double r = hi - lo;
        scales_[k] = std::isfinite(r) && r > 1e-12 ? r : 1.0;
    }
}

void Engine::initialize_population() {
    agents_.clear();
    const std::size_t n = problem_.dimension();
    const Box unit(n, Interval{0.0, 1.0});
    const auto points = latin_hypercube(config_.population_size, unit, rng_);
    for (const auto& p : points) {
        auto s = evaluate(p);
        if (!s) {
            stats_.partial = true;
            stats_.warnings.push_back("evaluation budget exhausted during initialization");
            Agent a;
            a.position = snap(p);
            a.previous = a.position;
            a.resources = n;
            a.best_position = a.position;
            a.weights = random_weights(rng_);
            a.eval.objectives.assign(problem_.n_objectives, std::numeric_limits<double>::infinity());
            a.eval.constraints.assign(problem_.n_constraints, 0.0);
            a.best_eval = a.eval;
            agents_.push_back(std::move(a));
            continue;
        }
        submit(*s, pareto::Origin::AgentBest);
        agents_.push_back(make_agent(*s));
    }
    flush_candidates();
}

std::vector<double> Engine::social_displacement(const Agent& agent, std::span<const double> local_best,
                                                std::span<const double> global_target, Rng& rng) const {
    const double r1 = rng.uniform();
    const double r2 = rng.uniform();
    return social_move(agent.position, agent.previous, local_best, global_target, config_.w0, config_.w1,
                       config_.w2, r1, r2);
}

std::vector<double> Engine::augmented(const Agent& agent, const Sample& s) const {
    std::vector<double> f = s.eval.objectives;
    if (s.residual > 0.0 && !agent.boundary_explorer) {
        const double m = max_residual(s.eval.constraints);
        for (auto& v : f) v += m;
    }
    return f;
}

bool Engine::improves(const Agent& agent, const Sample& s) const {
    if (agent.task == Task::Constraint) return s.residual < agent.residual - config_.epsilon_accept || (s.residual == 0.0 && agent.residual > 0.0);
    const auto f = augmented(agent, s);
    if (epsilon_dominates(f, agent.eval.objectives, config_.epsilon_accept)) return true;
    if (!config_.scalarized_acceptance || problem_.n_objectives < 2) return false;
    if (pareto::dominates(agent.eval.objectives, f)) return false;
    return scalar_change(agent, s) < -config_.epsilon_accept;
}

double Engine::scalar_change(const Agent& agent, const Sample& s) const {
    if (agent.task == Task::Constraint) return s.residual - agent.residual;
    const auto f = augmented(agent, s);
    double phi = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double w = agent.weights.empty() ? 1.0 : agent.weights[k];
        phi += w * (f[k] - agent.eval.objectives[k]) / scales_[k];
    }
    return phi;
}

BehaviorOutcome Engine::perception_step(Agent& agent, Rng& rng) {
    Budget b{evaluations_, config_.max_evaluations};
    auto out = perceive(agent, rng, b);
    evaluations_ = b.used;
    return out;
}

BehaviorOutcome Engine::perceive(Agent& agent, Rng& rng, Budget& budget) const {
    BehaviorOutcome out;
    const std::size_t n = problem_.dimension();
    const double radius = agent.rho * 0.5 * config_.region_fraction;
    std::vector<double> s_lo(n), s_hi(n);
    for (std::size_t i = 0; i < n; ++i) {
        s_lo[i] = std::max(0.0, agent.position[i] - radius);
        s_hi[i] = std::min(1.0, agent.position[i] + radius);
    }
    auto into_region = [&](std::vector<double> y) {
        for (std::size_t i = 0; i < n; ++i) y[i] = std::clamp(y[i], s_lo[i], s_hi[i]);
        return y;
    };
    const double frac = config_.max_evaluations > 0
                            ? std::min(1.0, static_cast<double>(budget.used) / static_cast<double>(config_.max_evaluations))
                            : 1.0;
    const double shrink = std::pow(1.0 - frac, config_.nonuniform_exponent);

    // Evaluates and records; returns true on improvement.
    auto trial = [&](const std::vector<double>& y) -> std::optional<bool> {
        auto s = evaluate_with(y, budget);
        if (!s) return std::nullopt;
        const bool better = improves(agent, *s);
        out.samples.push_back(std::move(*s));
        if (better) out.accepted.push_back(out.samples.size() - 1);
        return better;
    };

    bool improved = false;
    const std::size_t rounds = std::max<std::size_t>(1, agent.resources);
    for (std::size_t round = 0; round < rounds && !improved; ++round) {
        // Nonuniform random walk.
        std::vector<double> y = agent.position;
        const double p = 1.0 / static_cast<double>(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!rng.bernoulli(p)) continue;
            any = true;
            const double u = rng.uniform();
            const double delta = radius * (1.0 - std::pow(u, shrink));
            y[i] += rng.bernoulli(0.5) ? delta : -delta;
        }
        if (!any) {
            const std::size_t i = rng.index(n);
            const double u = rng.uniform();
            const double delta = radius * (1.0 - std::pow(u, shrink));
            y[i] += rng.bernoulli(0.5) ? delta : -delta;
        }
        y = into_region(snap(into_region(y)));
        auto r = trial(y);
        if (!r) break;
        if (*r) {
            improved = true;
            break;
        }

        // Linear model along the walk direction.
        const Sample& walk = out.samples.back();
        std::vector<double> dir(n);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dir[i] = walk.position[i] - agent.position[i];
            norm = std::max(norm, std::abs(dir[i]));
        }
        if (norm <= 0.0) continue;
        const double phi1 = scalar_change(agent, walk);
        const auto [t_lo, t_hi] = segment_range(agent.position, dir, s_lo, s_hi);
        const double t2 = phi1 < 0.0 ? t_hi : t_lo;
        if (std::abs(t2) < 1e-12 || std::abs(t2 - 1.0) < 1e-12) continue;
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = agent.position[i] + t2 * dir[i];
        r = trial(into_region(snap(into_region(z))));
        if (!r) break;
        if (*r) {
            improved = true;
            break;
        }

        // Quadratic through t = 0, 1, t2.
        const double phi2 = scalar_change(agent, out.samples.back());
        const double a = (phi2 - phi1 * t2) / (t2 * t2 - t2);
        const double bcoef = phi1 - a;
        if (!(a > 0.0) || !std::isfinite(a)) continue;
        const double tv = -bcoef / (2.0 * a);
        if (!(tv > t_lo && tv < t_hi)) continue;
        if (std::abs(tv) < 1e-12 || std::abs(tv - 1.0) < 1e-12 || std::abs(tv - t2) < 1e-12) continue;
        for (std::size_t i = 0; i < n; ++i) z[i] = agent.position[i] + tv * dir[i];
        r = trial(into_region(snap(into_region(z))));
        if (!r) break;
        if (*r) improved = true;
    }

    // Social or historical displacement.
    std::vector<double> disp;
    if (agent.pending_direction) {
        std::vector<double> target(n);
        for (std::size_t i = 0; i < n; ++i) target[i] = clamp01(agent.position[i] + (*agent.pending_direction)[i]);
        disp = social_displacement(agent, agent.best_position, target, rng);
    } else if (!agent.best_direction.empty()) {
        disp = agent.best_direction;
    }
    if (!disp.empty()) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = agent.position[i] + disp[i];
        y = into_region(snap(into_region(y)));
        if (inf_distance(y, agent.position) > 0.0) trial(y);
    }
    return out;
}

void Engine::update_region(Agent& agent, const BehaviorOutcome& outcome) const {
    if (!outcome.accepted.empty()) {
        agent.rho = std::min(1.0, 2.0 * agent.rho);
    } else if (!outcome.samples.empty()) {
        std::size_t best = 0;
        double best_phi = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < outcome.samples.size(); ++j) {
            const double phi = scalar_change(agent, outcome.samples[j]);
            if (phi < best_phi) {
                best_phi = phi;
                best = j;
            }
        }
        const double d = inf_distance(outcome.samples[best].position, agent.position);
        agent.rho = std::min(agent.rho, d / (0.5 * config_.region_fraction));
    }
    agent.converged = agent.rho < config_.rho_min;
}

void Engine::update_resources(Agent& agent, bool improved) const {
    const std::size_t n = std::max<std::size_t>(1, problem_.dimension());
    if (improved) agent.resources = std::min(n, agent.resources + 1);
    else agent.resources = agent.resources > 1 ? agent.resources - 1 : 1;
    agent.resources = std::clamp<std::size_t>(agent.resources, 1, n);
}

void Engine::commit_outcome(Agent& agent, const BehaviorOutcome& outcome) {
    stats_.perception_samples += outcome.samples.size();
    for (const auto& s : outcome.samples) submit(s, pareto::Origin::Perceived);
    const bool improved = !outcome.accepted.empty();
    if (improved) {
        std::size_t best = outcome.accepted.front();
        double best_phi = scalar_change(agent, outcome.samples[best]);
        for (std::size_t j : outcome.accepted) {
            const double phi = scalar_change(agent, outcome.samples[j]);
            if (phi < best_phi) {
                best_phi = phi;
                best = j;
            }
        }
        const Sample& s = outcome.samples[best];
        agent.previous = agent.position;
        agent.best_direction.assign(s.position.size(), 0.0);
        for (std::size_t i = 0; i < s.position.size(); ++i) agent.best_direction[i] = s.position[i] - agent.position[i];
        agent.position = s.position;
        agent.eval = s.eval;
        agent.residual = s.residual;
        const bool best_feasible = constraint_violation(agent.best_eval.constraints) <= 0.0;
        if ((s.residual <= 0.0 && (!best_feasible || !pareto::dominates(agent.best_eval.objectives, s.eval.objectives))) ||
            (!best_feasible && s.residual < constraint_violation(agent.best_eval.constraints))) {
            agent.best_position = s.position;
            agent.best_eval = s.eval;
        }
    } else {
        agent.previous = agent.position;
    }
    update_region(agent, outcome);
    update_resources(agent, improved);
    agent.improved_last_gen = improved;
    agent.pending_direction.reset();
}

std::vector<std::size_t> Engine::rank_agents() const {
    std::vector<std::size_t> feasible, infeasible;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        (agents_[i].residual > 0.0 ? infeasible : feasible).push_back(i);
    }
    std::vector<pareto::ObjectiveVector> objs;
    std::vector<pareto::ArchiveEntry> entries;
    for (std::size_t i : feasible) {
        objs.push_back(agents_[i].eval.objectives);
        pareto::ArchiveEntry e;
        e.objectives = agents_[i].eval.objectives;
        entries.push_back(std::move(e));
    }
    const auto dom = pareto::dominance_index(objs);
    const auto crowd = pareto::crowding_factors(entries);
    std::vector<std::size_t> order(feasible.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dom[a] != dom[b]) return dom[a] < dom[b];
        return crowd[a] < crowd[b];
    });
    std::vector<std::size_t> ranked;
    for (std::size_t k : order) ranked.push_back(feasible[k]);
    std::stable_sort(infeasible.begin(), infeasible.end(),
                     [&](std::size_t a, std::size_t b) { return agents_[a].residual < agents_[b].residual; });
    ranked.insert(ranked.end(), infeasible.begin(), infeasible.end());
    return ranked;
}

FilterResult Engine::filter_population(Rng& rng) const {
    FilterResult r;
    const auto ranked = rank_agents();
    const std::size_t nf = std::min(config_.n_f, ranked.size());
    r.perceivers.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(nf));
    const std::size_t m = ranked.size() - nf;
    for (std::size_t k = 0; k < m; ++k) {
        const double p = m == 1 ? config_.mutation_high
                                : config_.mutation_low + (config_.mutation_high - config_.mutation_low) *
                                                             static_cast<double>(k) / static_cast<double>(m - 1);
        const std::size_t idx = ranked[nf + k];
        (rng.bernoulli(p) ? r.mutated : r.hibernated).push_back(idx);
    }
    return r;
}

std::vector<Assignment> Engine::communicate(Rng& rng) {
    std::vector<Assignment> out;
    if (archive_.empty()) return out;
    std::vector<std::size_t> recipients;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        const auto& a = agents_[i];
        pareto::ArchiveEntry self;
        self.objectives = a.eval.objectives;
        self.violation = a.residual;
        bool dominated = false;
        for (const auto& e : archive_.entries()) {
            if (pareto::constrained_dominates(e, self)) {
                dominated = true;
                break;
            }
        }
        if (dominated || !a.improved_last_gen) recipients.push_back(i);
    }
    const auto order = archive_.isolation_order();
    std::vector<bool> assigned(agents_.size(), false);
    for (std::size_t k = 0; k < recipients.size(); ++k) {
        const auto& entry = archive_.entries()[order[k % order.size()]];
        const auto target = to_normalized(entry.decision);
        Assignment as;
        as.agent = recipients[k];
        as.direction.resize(target.size());
        for (std::size_t i = 0; i < target.size(); ++i) as.direction[i] = target[i] - agents_[as.agent].position[i];
        assigned[as.agent] = true;
        out.push_back(std::move(as));
    }
    if (agents_.size() > 1) {
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            const auto& a = agents_[i];
            if (!a.improved_last_gen || a.best_direction.empty()) continue;
            std::size_t j = rng.index(agents_.size() - 1);
            if (j >= i) ++j;
            if (assigned[j]) continue;
            assigned[j] = true;
            out.push_back(Assignment{j, a.best_direction});
        }
    }
    for (const auto& as : out) agents_[as.agent].pending_direction = as.direction;
    return out;
}

std::vector<double> Engine::uniform_in_lowest_density(Rng& rng) {
    const auto& box = partition_.leaf(partition_.lowest_density()).box;
    std::vector<double> x(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) x[i] = rng.uniform(box[i].lo, box[i].hi);
    return to_normalized(x);
}

void Engine::regenerate(Agent& agent) {
    auto s = evaluate(uniform_in_lowest_density(rng_));
    if (!s) return;
    submit(*s, pareto::Origin::Perceived);
    agent = make_agent(*s);
    ++stats_.regenerations;
}

void Engine::mutate(Agent& agent) {
    auto s = evaluate(uniform_in_lowest_density(rng_));
    if (!s) return;
    submit(*s, pareto::Origin::Perceived);
    agent.previous = agent.position;
    agent.position = s->position;
    agent.eval = s->eval;
    agent.residual = s->residual;
    agent.task = s->residual > 0.0 ? Task::Constraint : Task::Feasible;
    agent.rho = 1.0;
    agent.converged = false;
    agent.best_direction.clear();
    agent.pending_direction.reset();
    ++stats_.mutations;
}

void Engine::handle_collisions_and_convergence() {
    for (auto& a : agents_) {
        if (!a.converged) continue;
        Sample s;
        s.position = a.best_position;
        s.eval = a.best_eval;
        s.residual = constraint_violation(a.best_eval.constraints);
        pareto::ArchiveEntry e;
        e.decision = to_real(s.position);
        e.objectives = s.eval.objectives;
        e.violation = s.residual;
        e.origin = pareto::Origin::Converged;
        candidates_.push_back(std::move(e));
        ++stats_.convergences;
        regenerate(a);
    }
    const double half = 0.5 * config_.region_fraction;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        for (std::size_t j = i + 1; j < agents_.size(); ++j) {
            const auto& a = agents_[i];
            const auto& b = agents_[j];
            const double d = inf_distance(a.position, b.position);
            const bool intersect = d <= half * (a.rho + b.rho);
            if (!intersect || d >= config_.collision_distance) continue;
            pareto::ArchiveEntry ea, eb;
            ea.objectives = a.eval.objectives;
            ea.violation = a.residual;
            eb.objectives = b.eval.objectives;
            eb.violation = b.residual;
            const std::size_t worse = pareto::constrained_dominates(eb, ea) ? i : j;
            ++stats_.collisions;
            regenerate(agents_[worse]);
        }
    }
    flush_candidates();
}

void Engine::assign_boundary_explorers() {
    for (auto& a : agents_) a.boundary_explorer = false;
    std::vector<std::size_t> feasible;
    for (std::size_t i : rank_agents()) {
        if (agents_[i].task == Task::Feasible) feasible.push_back(i);
    }
    if (feasible.size() < 2) return;
    // The best feasible agent never explores across the boundary.
    std::vector<std::size_t> pool(feasible.begin() + 1, feasible.end());
    const auto count = static_cast<std::size_t>(std::floor(config_.boundary_fraction * static_cast<double>(pool.size()) + 0.5));
    for (std::size_t k = 0; k < count && !pool.empty(); ++k) {
        const std::size_t pick = rng_.index(pool.size());
        agents_[pool[pick]].boundary_explorer = true;
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
}

void Engine::constraint_split_step() {
    for (auto& a : agents_) a.task = a.residual > 0.0 ? Task::Constraint : Task::Feasible;
    if (problem_.n_constraints > 0) assign_boundary_explorers();
}

void Engine::maybe_branch() {
    if (config_.branch_period == 0 || stats_.generations % config_.branch_period != 0 || archive_.empty()) return;
    std::vector<decomposition::ArchivePoint> pts;
    std::vector<std::vector<double>> front;
    for (const auto& e : archive_.entries()) {
        if (e.violation > 0.0) continue;
        pts.push_back({e.decision, e.objectives[0]});
        front.push_back(e.decision);
    }
    if (pts.empty()) return;
    scheme_ = decomposition::adapt_scheme(scheme_, problem_.bounds, pts, {config_.cluster_gap});
    partition_.mark_front(front);
    const auto r = partition_.select_and_branch(scheme_, config_.selection, config_.nu);
    if (r.branched) ++stats_.branchings;
}

RunResult Engine::run(const ProgressCallback& progress) {
    initialize_population();
    refresh_scales();
    while (evaluations_ < config_.max_evaluations && !agents_.empty()) {
        const std::size_t before = evaluations_;
        constraint_split_step();
        const auto filter = filter_population(rng_);

        // Deterministic per-agent streams and budget quotas allow concurrent
        // perception without changing results.
        std::vector<Rng> streams;
        std::vector<Budget> quotas;
        std::size_t granted = evaluations_;
        for (std::size_t idx : filter.perceivers) {
            streams.emplace_back(rng_.next());
            const std::size_t need = 3 * std::max<std::size_t>(1, agents_[idx].resources) + 1;
            const std::size_t give = std::min(need, config_.max_evaluations - std::min(granted, config_.max_evaluations));
            quotas.push_back(Budget{granted, granted + give});
            granted += give;
        }
        std::vector<BehaviorOutcome> outcomes(filter.perceivers.size());
        std::vector<Agent> working;
        for (std::size_t idx : filter.perceivers) working.push_back(agents_[idx]);
        auto work = [&](std::size_t k) { outcomes[k] = perceive(working[k], streams[k], quotas[k]); };
        if (config_.threads > 1 && filter.perceivers.size() > 1) {
            std::vector<std::thread> pool;
            const std::size_t t = std::min(config_.threads, filter.perceivers.size());
            std::vector<std::exception_ptr> errors(t);
            for (std::size_t w = 0; w < t; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t k = w; k < filter.perceivers.size(); k += t) work(k);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& th : pool) th.join();
            for (auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
        } else {
            for (std::size_t k = 0; k < filter.perceivers.size(); ++k) work(k);
        }
        std::size_t consumed = 0;
        for (std::size_t k = 0; k < filter.perceivers.size(); ++k) consumed += outcomes[k].samples.size();
        evaluations_ += consumed;
        for (std::size_t k = 0; k < filter.perceivers.size(); ++k) commit_outcome(agents_[filter.perceivers[k]], outcomes[k]);

        for (std::size_t idx : filter.mutated) mutate(agents_[idx]);
        for (std::size_t idx : filter.hibernated) {
            agents_[idx].improved_last_gen = false;
        }

        flush_candidates();
        refresh_scales();
        communicate(rng_);
        handle_collisions_and_convergence();
        flush_candidates();
        ++stats_.generations;
        maybe_branch();

        if (progress) {
            GenerationInfo info;
            info.generation = stats_.generations;
            info.evaluations = evaluations_;
            info.archive_size = archive_.size();
            std::vector<pareto::ObjectiveVector> objs;
            for (const auto& a : agents_) {
                if (a.residual <= 0.0) ++info.feasible_agents;
                objs.push_back(a.eval.objectives);
            }
            const auto dom = pareto::dominance_index(objs);
            info.nondominated_agents = static_cast<std::size_t>(std::count(dom.begin(), dom.end(), std::size_t{0}));
            info.subdomains = partition_.leaf_count();
            progress(info);
        }
        if (evaluations_ == before) break;
    }
    if (evaluations_ < config_.max_evaluations && stats_.generations == 0) {
        stats_.partial = true;
        stats_.warnings.push_back("search stopped before completing a generation");
    }
    stats_.evaluations = evaluations_;
    stats_.densities.clear();
    for (std::size_t i = 0; i < partition_.leaf_count(); ++i) stats_.densities.push_back(partition_.leaf(i).density);
    return RunResult{archive_, stats_, partition_};
}

}  // namespace evimacs::macs
