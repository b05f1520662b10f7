#include "evimacs/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "json.hpp"

#include "evimacs/errors.hpp"

namespace evimacs::decomposition {

namespace {

bool lex_less(const Box& a, const Box& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].lo != b[i].lo) return a[i].lo < b[i].lo;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].hi != b[i].hi) return a[i].hi < b[i].hi;
    }
    return false;
}

}  // namespace

BranchingScheme BranchingScheme::initial(std::span<const Interval> domain, std::set<std::size_t> split_indices) {
    BranchingScheme s;
    s.split_indices = std::move(split_indices);
    s.cut_counts.assign(domain.size(), 0);
    for (std::size_t i = 0; i < domain.size(); ++i) s.cut_points[i] = domain[i].mid();
    return s;
}

std::vector<std::vector<std::size_t>> cluster_1d(std::span<const double> values, double gap) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || values[order[k]] - values[order[k - 1]] > gap) clusters.emplace_back();
        clusters.back().push_back(order[k]);
    }
    return clusters;
}

BranchingScheme adapt_scheme(const BranchingScheme& scheme, std::span<const Interval> domain,
                             std::span<const ArchivePoint> archive, const AdaptOptions& options) {
    BranchingScheme out = scheme;
    if (archive.empty()) return out;
    if (out.cut_counts.size() < domain.size()) out.cut_counts.resize(domain.size(), 0);

    std::size_t best = 0, worst = 0;
    for (std::size_t j = 1; j < archive.size(); ++j) {
        if (archive[j].fitness < archive[best].fitness) best = j;
        if (archive[j].fitness > archive[worst].fitness) worst = j;
    }

    std::vector<double> values(archive.size());
    for (std::size_t i = 0; i < domain.size(); ++i) {
        for (std::size_t j = 0; j < archive.size(); ++j) values[j] = archive[j].decision[i];
        const auto clusters = cluster_1d(values, options.cluster_gap * domain[i].width());
        if (clusters.size() <= out.cut_counts[i]) continue;
        out.split_indices.insert(i);

        auto owner = [&](std::size_t member) {
            for (std::size_t c = 0; c < clusters.size(); ++c) {
                if (std::find(clusters[c].begin(), clusters[c].end(), member) != clusters[c].end()) return c;
            }
            return std::size_t{0};
        };
        auto centroid = [&](std::size_t c) {
            double s = 0.0;
            for (std::size_t m : clusters[c]) s += values[m];
            return s / static_cast<double>(clusters[c].size());
        };
        const std::size_t cb = owner(best);
        const std::size_t cw = owner(worst);
        double cut;
        if (cb != cw) {
            cut = 0.5 * (centroid(cb) + centroid(cw));
        } else {
            const double c = centroid(cb);
            const double far = (c - domain[i].lo) >= (domain[i].hi - c) ? domain[i].lo : domain[i].hi;
            cut = 0.5 * (c + far);
        }
        if (cut > domain[i].lo && cut < domain[i].hi) out.cut_points[i] = cut;
    }
    return out;
}

Partition::Partition(Box domain, PartitionConfig config) : domain_(std::move(domain)), config_(config) {
    if (domain_.empty()) throw ConfigError("partition needs a nonempty domain");
    Subdomain root;
    root.box = domain_;
    nodes_.push_back(root);
    leaves_.push_back(0);
    leaf_samples_.emplace_back();
}

double Partition::normalized_volume(std::size_t leaf_index) const {
    return evimacs::normalized_volume(nodes_[leaves_[leaf_index]].box, domain_);
}

void Partition::refresh_density(Subdomain& s) const {
    const double v = evimacs::normalized_volume(s.box, domain_);
    s.density = v > 0.0 ? static_cast<double>(s.sample_count) / v : static_cast<double>(s.sample_count);
}

std::size_t Partition::leaf_of(std::span<const double> x) const {
    std::size_t found = nodes_.size();
    for (std::size_t id : leaves_) {
        if (!box_contains(nodes_[id].box, x)) continue;
        if (found == nodes_.size() || lex_less(nodes_[id].box, nodes_[found].box)) found = id;
    }
    if (found == nodes_.size()) throw DomainError("sample lies outside the partitioned domain");
    return found;
}

std::size_t Partition::locate(std::span<const double> x) const {
    const std::size_t id = leaf_of(x);
    return static_cast<std::size_t>(std::find(leaves_.begin(), leaves_.end(), id) - leaves_.begin());
}

void Partition::record_sample(std::span<const double> x, double fitness) {
    const std::size_t id = leaf_of(x);
    samples_.emplace_back(x.begin(), x.end());
    sample_fitness_.push_back(fitness);
    leaf_samples_[id].push_back(samples_.size() - 1);
    auto& s = nodes_[id];
    ++s.sample_count;
    s.best_fitness = std::min(s.best_fitness, fitness);
    refresh_density(s);
}

void Partition::record_samples(std::span<const std::vector<double>> samples) {
    for (const auto& x : samples) record_sample(x);
}

std::size_t Partition::lowest_density() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < leaves_.size(); ++i) {
        const auto& a = nodes_[leaves_[i]];
        const auto& b = nodes_[leaves_[best]];
        if (a.density < b.density) {
            best = i;
        } else if (a.density == b.density) {
            const double va = normalized_volume(i);
            const double vb = normalized_volume(best);
            if (va > vb || (va == vb && lex_less(a.box, b.box))) best = i;
        }
    }
    return best;
}

void Partition::note_improvement(std::span<const double> x) {
    ++nodes_[leaf_of(x)].improvements;
}

void Partition::mark_front(std::span<const std::vector<double>> front_members) {
    for (std::size_t id : leaves_) nodes_[id].contains_front_member = false;
    for (const auto& x : front_members) nodes_[leaf_of(x)].contains_front_member = true;
}

BranchResult Partition::select_and_branch(BranchingScheme& scheme, SelectionMode mode, double nu) {
    BranchResult result;
    if (scheme.split_indices.empty()) {
        result.notice = "branching skipped: no coordinate selected for splitting";
        return result;
    }
    auto eligible = [&](const Subdomain& s) {
        return s.depth < config_.max_depth && s.parent_no_improve <= config_.no_improve_threshold;
    };

    std::size_t chosen = leaves_.size();
    if (mode == SelectionMode::FrontGuided) {
        for (std::size_t i = 0; i < leaves_.size(); ++i) {
            const auto& s = nodes_[leaves_[i]];
            if (!s.contains_front_member || !eligible(s)) continue;
            if (chosen == leaves_.size() || s.sample_count < nodes_[leaves_[chosen]].sample_count) chosen = i;
        }
    } else {
        double max_density = 0.0;
        double lo_fit = std::numeric_limits<double>::infinity();
        double hi_fit = -lo_fit;
        for (std::size_t id : leaves_) {
            const auto& s = nodes_[id];
            max_density = std::max(max_density, s.density);
            if (std::isfinite(s.best_fitness)) {
                lo_fit = std::min(lo_fit, s.best_fitness);
                hi_fit = std::max(hi_fit, s.best_fitness);
            }
        }
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < leaves_.size(); ++i) {
            const auto& s = nodes_[leaves_[i]];
            if (!eligible(s)) continue;
            const double w = max_density > 0.0 ? s.density / max_density : 0.0;
            double phi = 1.0;
            if (std::isfinite(s.best_fitness)) phi = hi_fit > lo_fit ? (s.best_fitness - lo_fit) / (hi_fit - lo_fit) : 0.0;
            const double score = (1.0 - nu) * w + nu * phi;
            if (score < best_score) {
                best_score = score;
                chosen = i;
            }
        }
    }
    if (chosen == leaves_.size()) {
        result.notice = "branching skipped: all candidate subdomains exhausted";
        return result;
    }

    std::vector<std::size_t> coords;
    for (std::size_t c : scheme.split_indices) {
        if (coords.size() >= config_.max_split_coordinates) break;
        coords.push_back(c);
    }
    const std::size_t parent_id = leaves_[chosen];
    const Subdomain parent = nodes_[parent_id];
    std::vector<double> cuts;
    for (std::size_t c : coords) {
        const Interval& iv = parent.box[c];
        auto it = scheme.cut_points.find(c);
        double cut = it != scheme.cut_points.end() ? it->second : iv.mid();
        if (!(cut > iv.lo && cut < iv.hi)) cut = iv.mid();
        cuts.push_back(cut);
    }

    std::vector<std::size_t> child_ids;
    const std::size_t child_count = std::size_t{1} << coords.size();
    for (std::size_t mask = 0; mask < child_count; ++mask) {
        Subdomain child;
        child.box = parent.box;
        for (std::size_t k = 0; k < coords.size(); ++k) {
            auto& iv = child.box[coords[k]];
            if ((mask >> (coords.size() - 1 - k)) & 1u) iv.lo = cuts[k];
            else iv.hi = cuts[k];
        }
        child.depth = parent.depth + 1;
        child.parent_no_improve = parent.parent_no_improve + (parent.improvements == 0 ? 1 : 0);
        child.parent = parent_id;
        child_ids.push_back(nodes_.size());
        nodes_.push_back(std::move(child));
        leaf_samples_.emplace_back();
    }
    nodes_[parent_id].children = child_ids;

    auto pos = leaves_.begin() + static_cast<std::ptrdiff_t>(chosen);
    pos = leaves_.erase(pos);
    leaves_.insert(pos, child_ids.begin(), child_ids.end());

    // Reassign the parent's samples; shared faces go to the lowest child.
    auto moved = std::move(leaf_samples_[parent_id]);
    leaf_samples_[parent_id].clear();
    for (std::size_t idx : moved) {
        const std::size_t id = leaf_of(samples_[idx]);
        leaf_samples_[id].push_back(idx);
        auto& s = nodes_[id];
        ++s.sample_count;
        s.best_fitness = std::min(s.best_fitness, sample_fitness_[idx]);
    }
    for (std::size_t id : child_ids) refresh_density(nodes_[id]);

    for (std::size_t c : coords) {
        if (scheme.cut_counts.size() <= c) scheme.cut_counts.resize(c + 1, 0);
        ++scheme.cut_counts[c];
        scheme.split_indices.erase(c);
    }
    result.branched = true;
    result.subdomain = chosen;
    result.coordinates = coords;
    return result;
}

std::string Partition::to_json() const {
    std::function<nlohmann::json(std::size_t)> dump = [&](std::size_t id) {
        const auto& s = nodes_[id];
        nlohmann::json j;
        j["depth"] = s.depth;
        j["samples"] = s.sample_count;
        j["density"] = s.density;
        j["parent_no_improve"] = s.parent_no_improve;
        j["box"] = nlohmann::json::array();
        for (const auto& iv : s.box) j["box"].push_back({iv.lo, iv.hi});
        if (!s.children.empty()) {
            j["children"] = nlohmann::json::array();
            for (std::size_t c : s.children) j["children"].push_back(dump(c));
        }
        return j;
    };
    nlohmann::json doc;
    doc["leaves"] = leaves_.size();
    doc["total_samples"] = samples_.size();
    doc["root"] = dump(0);
    return doc.dump(2);
}

}  // namespace evimacs::decomposition
