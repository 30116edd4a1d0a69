#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace capbound {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Grid geometry and bounded-variation grid functions
// ---------------------------------------------------------------------------

/// Regular grid of resolution^dim cells over [0, side]^dim; values in [0, range].
struct GridGeometry {
    int dim = 1;
    double side = 1.0;
    int resolution = 1;
    double range = 1.0;

    std::size_t cell_count() const;
    double cell_width() const { return side / resolution; }
    /// Measure of one interior face, (side/resolution)^(dim-1).
    double face_measure() const;

    bool operator==(const GridGeometry&) const = default;
};

void validate(const GridGeometry& geometry);

/// Row-major multi-index of a flat cell index (last axis varies fastest).
std::vector<int> cell_coordinates(const GridGeometry& geometry, std::size_t cell);
std::size_t cell_index(const GridGeometry& geometry, std::span<const int> coords);
std::vector<double> cell_center(const GridGeometry& geometry, std::size_t cell);
/// Floor-indexing; the closed upper face x_k = side maps to the last cell.
std::size_t locate_cell(const GridGeometry& geometry, std::span<const double> point);

/// Piecewise-constant function on grid cells, a member of BV([0,A]^d, [0,M]).
class GridBVFunction {
public:
    GridBVFunction(GridGeometry geometry, std::vector<double> values);

    const GridGeometry& geometry() const { return geometry_; }
    std::span<const double> values() const { return values_; }
    double at_cell(std::size_t cell) const { return values_[cell]; }
    double operator()(std::span<const double> point) const;

    /// Cached at construction; equals capbound::total_variation(*this).
    double total_variation() const { return variation_; }

private:
    GridGeometry geometry_;
    std::vector<double> values_;
    double variation_;
};

/// Sum over interior faces of |jump| times the face measure. This is the
/// exact total variation of the piecewise-constant function.
double total_variation(const GridBVFunction& f);

/// Draws i.i.d. uniform values in [0, range], then if the total variation
/// exceeds the target shrinks toward the mean by target/TV and clamps.
GridBVFunction random_bv(const GridGeometry& geometry, double variation_target, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Multi-class margins and the truncated hinge loss
// ---------------------------------------------------------------------------

/// C > 2 component functions with identical geometry; labels are 1..C.
class MultiClassTuple {
public:
    explicit MultiClassTuple(std::vector<GridBVFunction> components);

    int classes() const { return static_cast<int>(components_.size()); }
    const GridGeometry& geometry() const { return components_.front().geometry(); }
    const std::vector<GridBVFunction>& components() const { return components_; }

    std::vector<double> scores_at_cell(std::size_t cell) const;
    std::vector<double> scores(std::span<const double> point) const;

private:
    std::vector<GridBVFunction> components_;
};

/// phi_gamma(t): 1 for t <= 0, 1 - t/gamma on (0, gamma], 0 above gamma.
double phi_gamma(double t, double gamma);

/// Half the gap between the score of `label` (1-based) and the best other score.
double margin_from_scores(std::span<const double> scores, int label);
double margin_fn(const MultiClassTuple& g, std::span<const double> point, int label);

/// Margin clipped to [0, gamma].
double truncate_margin(double margin, double gamma);
double truncated_margin(const MultiClassTuple& g, std::span<const double> point, int label, double gamma);

// ---------------------------------------------------------------------------
// Empirical metrics and finite classes
// ---------------------------------------------------------------------------

/// Order p of an empirical L_p pseudo-metric; p = kInfinity for the max metric.
struct LpOrder {
    double p = 1.0;
    static LpOrder infinity() { return {kInfinity}; }
    bool is_infinite() const { return p == kInfinity; }
};

double empirical_distance(LpOrder order, std::span<const double> f1, std::span<const double> f2);

/// Symmetric pairwise distance matrix with zero diagonal.
class DistanceMatrix {
public:
    DistanceMatrix(std::size_t size, std::vector<double> entries);

    std::size_t size() const { return size_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * size_ + j]; }

private:
    std::size_t size_;
    std::vector<double> entries_;
};

/// |F| x n value matrix: row i holds f_i evaluated at the points t_1..t_n.
class FiniteFunctionClass {
public:
    FiniteFunctionClass(std::size_t functions, std::size_t points, std::vector<double> values,
                        double range, std::string provenance = {});

    std::size_t size() const { return functions_; }
    std::size_t points() const { return points_; }
    double range() const { return range_; }
    const std::string& provenance() const { return provenance_; }

    double value(std::size_t function, std::size_t point) const { return values_[function * points_ + point]; }
    std::span<const double> row(std::size_t function) const
    {
        return {values_.data() + function * points_, points_};
    }

    FiniteFunctionClass restrict_points(std::span<const std::size_t> columns) const;
    /// F united with -F.
    FiniteFunctionClass with_negations() const;
    DistanceMatrix distances(LpOrder order) const;

private:
    std::size_t functions_;
    std::size_t points_;
    std::vector<double> values_;
    double range_;
    std::string provenance_;
};

// ---------------------------------------------------------------------------
// Parameter bundle, distributions, estimates
// ---------------------------------------------------------------------------

/// Symbols shared by the closed-form calculators. The constants whose
/// existence is asserted without a value all default to 1.
struct BoundParams {
    double side = 1.0;       // A
    double range = 1.0;      // M
    double variation = 1.0;  // V
    int dim = 1;             // d
    int classes = 3;         // C
    double gamma = 1.0;
    double epsilon = 0.5;
    double delta = 0.05;
    double K = 1.0;          // fat-shattering / entropy constant
    double K_P = 1.0;        // density bound of the sampling law
    double K1 = 1.0;
    double K2 = 1.0;
    double K3 = 1.0;
    double K_F = 1.0;        // Rademacher class constant
};

/// Checks gamma in (0,1], delta in (0,1), M <= V and positivity.
void validate(const BoundParams& params);

/// Law of (cell center, label): P(cell) * P(label | cell), optionally with
/// the stay probability of a stay-or-refresh Markov chain.
struct DistributionSpec {
    GridGeometry geometry;
    int classes = 3;
    std::vector<double> cell_probs;   // cell_count entries
    std::vector<double> label_probs;  // cell_count x classes, row-major
    std::optional<double> rho;

    double label_prob(std::size_t cell, int label) const
    {
        return label_probs[cell * static_cast<std::size_t>(classes) + static_cast<std::size_t>(label - 1)];
    }

    static DistributionSpec uniform(const GridGeometry& geometry, int classes);
};

void validate(const DistributionSpec& dist);

enum class Measure { covering, packing, fat, rademacher };

std::string to_string(Measure measure);

struct CapacityEstimate {
    Measure measure = Measure::covering;
    double scale = 0.0;
    double lower = 0.0;
    double upper = kInfinity;
    std::string method;
    std::uint64_t seed = 0;
    std::optional<double> estimate;   // point estimate when lower < upper is a CI
    std::optional<double> std_error;
    std::map<std::string, std::uint64_t> counters;
};

void validate(const CapacityEstimate& estimate);

} // namespace capbound
