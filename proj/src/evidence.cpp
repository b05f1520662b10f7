#include "evimacs/evidence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "evimacs/errors.hpp"
#include "evimacs/random.hpp"

namespace evimacs::evidence {

namespace {

std::string describe_box(std::span<const Interval> box) {
    std::ostringstream os;
    os.precision(10);
    for (std::size_t i = 0; i < box.size(); ++i) {
        os << (i ? " x " : "") << '[' << box[i].lo << ", " << box[i].hi << ']';
    }
    return os.str();
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    // splitmix64 finalizer over the running hash
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return h;
}

std::uint64_t box_seed(std::span<const Interval> box, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (const auto& iv : box) {
        h = mix(h, std::bit_cast<std::uint64_t>(iv.lo));
        h = mix(h, std::bit_cast<std::uint64_t>(iv.hi));
    }
    return h;
}

}  // namespace

BpaStructure::BpaStructure(std::string name, std::vector<FocalInterval> elements)
    : name_(std::move(name)), elements_(std::move(elements)) {
    if (elements_.empty()) {
        throw ConfigError("BPA structure '" + name_ + "' has no focal elements");
    }
    CompensatedSum total;
    for (const auto& e : elements_) {
        if (!(e.mass > 0.0) || e.mass > 1.0) {
            throw ConfigError("BPA structure '" + name_ + "' has a focal mass outside (0, 1]: " +
                              std::to_string(e.mass));
        }
        Interval::make(e.interval.lo, e.interval.hi);
        total.add(e.mass);
    }
    const double defect = total.value() - 1.0;
    if (std::abs(defect) > kMassTolerance) {
        std::ostringstream os;
        os << "BPA structure '" << name_ << "' masses sum to " << total.value() << " (defect " << defect << ")";
        throw ConfigError(os.str());
    }
}

BpaStructure BpaStructure::with_complement(std::string name, std::vector<FocalInterval> elements,
                                           double width_factor) {
    if (elements.empty()) throw ConfigError("BPA structure '" + name + "' has no focal elements");
    CompensatedSum total;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& e : elements) {
        total.add(e.mass);
        lo = std::min(lo, e.interval.lo);
        hi = std::max(hi, e.interval.hi);
    }
    const double missing = 1.0 - total.value();
    if (missing > kMassTolerance) {
        const double c = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo) * width_factor;
        elements.push_back({Interval{c - half, c + half}, missing});
    }
    return BpaStructure(std::move(name), std::move(elements));
}

Interval BpaStructure::hull() const {
    Interval h = elements_.front().interval;
    for (const auto& e : elements_) {
        h.lo = std::min(h.lo, e.interval.lo);
        h.hi = std::max(h.hi, e.interval.hi);
    }
    return h;
}

UncertainSpace::UncertainSpace(std::vector<BpaStructure> dims, std::map<std::size_t, std::size_t> margin_indices)
    : dims_(std::move(dims)), margin_indices_(std::move(margin_indices)) {
    if (dims_.empty()) throw ConfigError("uncertain space needs at least one dimension");
    for (const auto& d : dims_) {
        if (d.size() == 0) throw ConfigError("uncertain space has an empty BPA structure '" + d.name() + "'");
    }
    for (const auto& [dim, slot] : margin_indices_) {
        if (dim >= dims_.size()) throw ConfigError("margin index refers to a missing dimension");
        (void)slot;
    }
}

std::size_t UncertainSpace::joint_count() const {
    std::size_t n = 1;
    for (const auto& d : dims_) n *= d.size();
    return n;
}

std::size_t UncertainSpace::margin_count() const {
    std::size_t n = 0;
    for (const auto& [dim, slot] : margin_indices_) n = std::max(n, slot + 1);
    return n;
}

void UncertainSpace::for_each_joint(
    std::span<const double> margins,
    const std::function<void(std::size_t, const JointFocalElement&)>& visit) const {
    if (margins.size() < margin_count()) {
        throw DomainError("margin vector has " + std::to_string(margins.size()) + " entries, space needs " +
                          std::to_string(margin_count()));
    }
    for (double m : margins) {
        if (!(m >= 0.0 && m <= 1.0)) throw DomainError("margin value outside [0, 1]: " + std::to_string(m));
    }
    const std::size_t d = dims_.size();
    std::vector<double> factor(d, 1.0);
    for (const auto& [dim, slot] : margin_indices_) factor[dim] = margins[slot];

    std::vector<std::size_t> odometer(d, 0);
    JointFocalElement element;
    element.box.resize(d);
    const std::size_t total = joint_count();
    for (std::size_t index = 0; index < total; ++index) {
        double mass = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
            const auto& fe = dims_[k].elements()[odometer[k]];
            element.box[k] = fe.interval.scaled(factor[k]);
            mass *= fe.mass;
        }
        element.mass = mass;
        visit(index, element);
        for (std::size_t k = d; k-- > 0;) {
            if (++odometer[k] < dims_[k].size()) break;
            odometer[k] = 0;
        }
    }
}

std::vector<JointFocalElement> joint_elements(const UncertainSpace& space, std::span<const double> margins) {
    std::vector<JointFocalElement> out;
    out.reserve(space.joint_count());
    space.for_each_joint(margins, [&](std::size_t, const JointFocalElement& e) { out.push_back(e); });
    return out;
}

std::vector<std::vector<double>> extremum_points(std::span<const Interval> box, const ExtremumOptions& options) {
    const std::size_t d = box.size();
    std::vector<std::vector<double>> points;
    auto add_corners = [&] {
        if (d > options.max_corner_dims) {
            throw ResourceError("corner enumeration over " + std::to_string(d) +
                                " dimensions exceeds the cap of " + std::to_string(options.max_corner_dims) +
                                "; use CornersPlusSampling or raise max_corner_dims");
        }
        const std::size_t count = std::size_t{1} << d;
        points.reserve(points.size() + count);
        for (std::size_t mask = 0; mask < count; ++mask) {
            std::vector<double> p(d);
            for (std::size_t k = 0; k < d; ++k) p[k] = (mask >> (d - 1 - k)) & 1u ? box[k].hi : box[k].lo;
            points.push_back(std::move(p));
        }
    };
    switch (options.method) {
        case ExtremumMethod::Corners:
            add_corners();
            break;
        case ExtremumMethod::CornersPlusSampling: {
            add_corners();
            const std::size_t n = options.samples ? options.samples : 50 * d;
            Rng rng(box_seed(box, options.seed));
            auto lhs = latin_hypercube(n, box, rng);
            for (auto& p : lhs) points.push_back(std::move(p));
            break;
        }
        case ExtremumMethod::GridOracle: {
            const std::size_t g = std::max<std::size_t>(options.grid_points, 2);
            std::size_t total = 1;
            for (std::size_t k = 0; k < d; ++k) total *= g;
            points.reserve(total);
            std::vector<std::size_t> idx(d, 0);
            for (std::size_t n = 0; n < total; ++n) {
                std::vector<double> p(d);
                for (std::size_t k = 0; k < d; ++k) {
                    // endpoints exactly, interior by linear spacing
                    if (idx[k] == 0) p[k] = box[k].lo;
                    else if (idx[k] == g - 1) p[k] = box[k].hi;
                    else p[k] = box[k].lo + box[k].width() * static_cast<double>(idx[k]) / static_cast<double>(g - 1);
                }
                points.push_back(std::move(p));
                for (std::size_t k = d; k-- > 0;) {
                    if (++idx[k] < g) break;
                    idx[k] = 0;
                }
            }
            break;
        }
    }
    return points;
}

namespace {

void pad(BoxExtremum& e, double rel) {
    if (rel <= 0.0) return;
    const double w = (e.max_value - e.min_value) * rel;
    e.min_value -= w;
    e.max_value += w;
}

}  // namespace

BoxExtremum box_extremum(const Response& response, std::span<const Interval> box, const ExtremumOptions& options) {
    BoxExtremum out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                    options.method};
    for (const auto& p : extremum_points(box, options)) {
        const double v = response(p);
        out.min_value = std::min(out.min_value, v);
        out.max_value = std::max(out.max_value, v);
    }
    if (options.method == ExtremumMethod::CornersPlusSampling) pad(out, options.conservative_pad);
    return out;
}

bool inside_event(const BoxExtremum& e, Direction direction, double threshold) {
    switch (direction) {
        case Direction::Leq: return e.max_value <= threshold;
        case Direction::Lt: return e.max_value < threshold;
        case Direction::Geq: return e.min_value >= threshold;
        case Direction::Gt: return e.min_value > threshold;
    }
    return false;
}

bool intersects_event(const BoxExtremum& e, Direction direction, double threshold) {
    switch (direction) {
        case Direction::Leq: return e.min_value <= threshold;
        case Direction::Lt: return e.min_value < threshold;
        case Direction::Geq: return e.max_value >= threshold;
        case Direction::Gt: return e.max_value > threshold;
    }
    return false;
}

EvidenceSweep::EvidenceSweep(std::vector<double> masses, std::vector<std::vector<BoxExtremum>> extrema)
    : masses_(std::move(masses)), extrema_(std::move(extrema)) {}

double EvidenceSweep::belief(const ThresholdEvent& event) const {
    CompensatedSum s;
    for (std::size_t j = 0; j < masses_.size(); ++j) {
        if (inside_event(extrema_[j].at(event.response_index), event.direction, event.threshold)) s.add(masses_[j]);
    }
    return std::clamp(s.value(), 0.0, 1.0);
}

double EvidenceSweep::plausibility(const ThresholdEvent& event) const {
    CompensatedSum s;
    for (std::size_t j = 0; j < masses_.size(); ++j) {
        if (intersects_event(extrema_[j].at(event.response_index), event.direction, event.threshold)) {
            s.add(masses_[j]);
        }
    }
    return std::clamp(s.value(), 0.0, 1.0);
}

EvidenceSweep sweep(const UncertainSpace& space, std::span<const double> margins, const MultiResponse& response,
                    std::size_t response_count, const SweepOptions& options) {
    std::vector<double> masses;
    std::vector<std::vector<BoxExtremum>> extrema;
    masses.reserve(space.joint_count());
    extrema.reserve(space.joint_count());
    std::map<std::vector<double>, std::vector<double>> cache;
    std::vector<double> values(response_count);
    std::size_t evaluations = 0;

    space.for_each_joint(margins, [&](std::size_t, const JointFocalElement& element) {
        std::vector<BoxExtremum> ext(response_count,
                                     BoxExtremum{std::numeric_limits<double>::infinity(),
                                                 -std::numeric_limits<double>::infinity(), options.extremum.method});
        try {
            for (auto& p : extremum_points(element.box, options.extremum)) {
                const std::vector<double>* v = nullptr;
                if (options.memoize) {
                    auto it = cache.find(p);
                    if (it == cache.end()) {
                        response(p, values);
                        ++evaluations;
                        it = cache.emplace(std::move(p), values).first;
                    }
                    v = &it->second;
                } else {
                    response(p, values);
                    ++evaluations;
                    v = &values;
                }
                for (std::size_t r = 0; r < response_count; ++r) {
                    const double x = (*v)[r];
                    if (std::isnan(x)) throw EvaluationError("response " + std::to_string(r) + " returned NaN");
                    ext[r].min_value = std::min(ext[r].min_value, x);
                    ext[r].max_value = std::max(ext[r].max_value, x);
                }
            }
        } catch (const ResourceError&) {
            throw;
        } catch (const std::exception& err) {
            throw EvaluationError(std::string("response evaluation failed on focal box ") +
                                  describe_box(element.box) + ": " + err.what());
        }
        if (options.extremum.method == ExtremumMethod::CornersPlusSampling) {
            for (auto& e : ext) pad(e, options.extremum.conservative_pad);
        }
        masses.push_back(element.mass);
        extrema.push_back(std::move(ext));
    });
    EvidenceSweep result(std::move(masses), std::move(extrema));
    result.set_point_evaluations(evaluations);
    return result;
}

namespace {

EvidenceSweep single_sweep(const UncertainSpace& space, std::span<const double> margins, const Response& response,
                           const ExtremumOptions& options) {
    SweepOptions so;
    so.extremum = options;
    return sweep(
        space, margins, [&](std::span<const double> p, std::span<double> out) { out[0] = response(p); }, 1, so);
}

}  // namespace

double belief(const UncertainSpace& space, std::span<const double> margins, const Response& response,
              const ThresholdEvent& event, const ExtremumOptions& options) {
    ThresholdEvent e = event;
    e.response_index = 0;
    return single_sweep(space, margins, response, options).belief(e);
}

double plausibility(const UncertainSpace& space, std::span<const double> margins, const Response& response,
                    const ThresholdEvent& event, const ExtremumOptions& options) {
    ThresholdEvent e = event;
    e.response_index = 0;
    return single_sweep(space, margins, response, options).plausibility(e);
}

std::vector<BpaStructure> parse_bpa_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("BPA file is not valid JSON: ") + e.what());
    }
    if (!doc.contains("parameters") || !doc["parameters"].is_array()) {
        throw ConfigError("BPA file needs a 'parameters' array");
    }
    std::vector<BpaStructure> out;
    for (const auto& p : doc["parameters"]) {
        const std::string name = p.value("name", std::string("unnamed"));
        if (!p.contains("elements") || !p["elements"].is_array()) {
            throw ConfigError("BPA parameter '" + name + "' needs an 'elements' array");
        }
        std::vector<FocalInterval> elems;
        for (const auto& e : p["elements"]) {
            if (!e.contains("lo") || !e.contains("hi") || !e.contains("mass")) {
                throw ConfigError("BPA parameter '" + name + "' has an element without lo/hi/mass");
            }
            const double lo = e["lo"].get<double>();
            const double hi = e["hi"].get<double>();
            if (!(lo <= hi)) throw ConfigError("BPA parameter '" + name + "' has an interval with lo > hi");
            elems.push_back({Interval{lo, hi}, e["mass"].get<double>()});
        }
        if (p.contains("complement_factor")) {
            out.push_back(BpaStructure::with_complement(name, std::move(elems), p["complement_factor"].get<double>()));
        } else {
            out.emplace_back(name, std::move(elems));
        }
    }
    return out;
}

std::vector<BpaStructure> load_bpa_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open BPA file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_bpa_json(ss.str());
}

std::string to_bpa_json(std::span<const BpaStructure> dims) {
    nlohmann::json doc;
    doc["parameters"] = nlohmann::json::array();
    for (const auto& d : dims) {
        nlohmann::json p;
        p["name"] = d.name();
        p["elements"] = nlohmann::json::array();
        for (const auto& e : d.elements()) {
            p["elements"].push_back({{"lo", e.interval.lo}, {"hi", e.interval.hi}, {"mass", e.mass}});
        }
        doc["parameters"].push_back(std::move(p));
    }
    return doc.dump(2);
}

}  // namespace evimacs::evidence
