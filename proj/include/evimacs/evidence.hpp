#pragma once

// Interval-valued basic probability assignments and Belief/Plausibility of
// threshold events on response functions.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evimacs/interval.hpp"

namespace evimacs::evidence {

struct FocalInterval {
    Interval interval;
    double mass = 0.0;
};

// Evidence on a single uncertain parameter. Intervals may overlap and are
// kept verbatim. Masses are positive and sum to one within 1e-12.
class BpaStructure {
public:
    static constexpr double kMassTolerance = 1e-12;

    BpaStructure() = default;
    BpaStructure(std::string name, std::vector<FocalInterval> elements);

    // Adds a catch-all element carrying the mass missing from `elements`
    // (e.g. rows assigned 0.99 with the rest "at infinity"). The catch-all is
    // centred on the hull of the stated intervals, with half-width
    // `width_factor` times the hull half-width.
    static BpaStructure with_complement(std::string name, std::vector<FocalInterval> elements,
                                        double width_factor = 10.0);

    const std::string& name() const { return name_; }
    const std::vector<FocalInterval>& elements() const { return elements_; }
    std::size_t size() const { return elements_.size(); }
    Interval hull() const;

private:
    std::string name_;
    std::vector<FocalInterval> elements_;
};

struct JointFocalElement {
    Box box;
    double mass = 0.0;
};

// Product space of independent BPA structures. Dimensions listed in
// margin_indices map to a slot of the margin vector; their intervals are
// rescaled about the midpoint by that margin before use.
class UncertainSpace {
public:
    UncertainSpace() = default;
    explicit UncertainSpace(std::vector<BpaStructure> dims, std::map<std::size_t, std::size_t> margin_indices = {});

    const std::vector<BpaStructure>& dims() const { return dims_; }
    const std::map<std::size_t, std::size_t>& margin_indices() const { return margin_indices_; }
    std::size_t dimension() const { return dims_.size(); }
    std::size_t joint_count() const;
    std::size_t margin_count() const;

    // Visits joint elements in lexicographic order (last dimension fastest)
    // without materializing them all.
    void for_each_joint(std::span<const double> margins,
                        const std::function<void(std::size_t index, const JointFocalElement&)>& visit) const;

private:
    std::vector<BpaStructure> dims_;
    std::map<std::size_t, std::size_t> margin_indices_;
};

std::vector<JointFocalElement> joint_elements(const UncertainSpace& space, std::span<const double> margins);

enum class Direction { Leq, Lt, Geq, Gt };

struct ThresholdEvent {
    std::size_t response_index = 0;
    double threshold = 0.0;
    Direction direction = Direction::Leq;
};

enum class ExtremumMethod { Corners, CornersPlusSampling, GridOracle };

struct ExtremumOptions {
    ExtremumMethod method = ExtremumMethod::Corners;
    // Interior Latin-hypercube samples for CornersPlusSampling; 0 means 50*d.
    std::size_t samples = 0;
    // Points per dimension for GridOracle (includes both endpoints).
    std::size_t grid_points = 11;
    std::size_t max_corner_dims = 12;
    // Relative widening of a sampled [min, max] range; sampling only sees an
    // inner range, so Bel from raw samples can only be too high.
    double conservative_pad = 0.0;
    std::uint64_t seed = 0x5eed;
};

struct BoxExtremum {
    double min_value = 0.0;
    double max_value = 0.0;
    ExtremumMethod method = ExtremumMethod::Corners;
};

using Response = std::function<double(std::span<const double>)>;
// Writes all responses at a point into `out` (size fixed per sweep).
using MultiResponse = std::function<void(std::span<const double> point, std::span<double> out)>;

BoxExtremum box_extremum(const Response& response, std::span<const Interval> box, const ExtremumOptions& options);

// Points visited by box_extremum/box_extrema for a given box; exposed so
// callers can reuse evaluations across boxes.
std::vector<std::vector<double>> extremum_points(std::span<const Interval> box, const ExtremumOptions& options);

bool inside_event(const BoxExtremum& e, Direction direction, double threshold);
bool intersects_event(const BoxExtremum& e, Direction direction, double threshold);

// Result of evaluating every response over every joint element once. Belief
// and plausibility of any number of events are then cheap lookups.
class EvidenceSweep {
public:
    EvidenceSweep() = default;
    EvidenceSweep(std::vector<double> masses, std::vector<std::vector<BoxExtremum>> extrema);

    double belief(const ThresholdEvent& event) const;
    double plausibility(const ThresholdEvent& event) const;
    std::size_t element_count() const { return masses_.size(); }
    std::size_t response_count() const { return extrema_.empty() ? 0 : extrema_.front().size(); }
    const std::vector<double>& masses() const { return masses_; }
    const std::vector<BoxExtremum>& extrema(std::size_t element) const { return extrema_[element]; }
    std::size_t point_evaluations() const { return point_evaluations_; }
    void set_point_evaluations(std::size_t n) { point_evaluations_ = n; }

private:
    std::vector<double> masses_;
    std::vector<std::vector<BoxExtremum>> extrema_;
    std::size_t point_evaluations_ = 0;
};

struct SweepOptions {
    ExtremumOptions extremum;
    // Reuse response values at points shared by several joint elements.
    bool memoize = true;
};

EvidenceSweep sweep(const UncertainSpace& space, std::span<const double> margins, const MultiResponse& response,
                    std::size_t response_count, const SweepOptions& options = {});

double belief(const UncertainSpace& space, std::span<const double> margins, const Response& response,
              const ThresholdEvent& event, const ExtremumOptions& options = {});
double plausibility(const UncertainSpace& space, std::span<const double> margins, const Response& response,
                    const ThresholdEvent& event, const ExtremumOptions& options = {});

// BPA definition files: {"parameters": [{"name": ..., "elements": [{"lo", "hi",
// "mass"}], "complement_factor": optional}]}. Normalization defects are
// reported with their magnitude.
std::vector<BpaStructure> parse_bpa_json(const std::string& text);
std::vector<BpaStructure> load_bpa_file(const std::string& path);
std::string to_bpa_json(std::span<const BpaStructure> dims);

}  // namespace evimacs::evidence
