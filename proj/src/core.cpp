#include "capbound/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "capbound/error.hpp"
#include "capbound/rng.hpp"

namespace capbound {

// ---------------------------------------------------------------------------
// Geometry

std::size_t GridGeometry::cell_count() const
{
    std::size_t count = 1;
    for (int k = 0; k < dim; ++k) count *= static_cast<std::size_t>(resolution);
    return count;
}

double GridGeometry::face_measure() const
{
    return std::pow(cell_width(), dim - 1);
}

void validate(const GridGeometry& geometry)
{
    require(geometry.dim >= 1, "grid dimension d >= 1 required");
    require(geometry.resolution >= 1, "grid resolution G >= 1 required");
    require(geometry.side > 0.0 && std::isfinite(geometry.side), "side A > 0 required");
    require(geometry.range > 0.0 && std::isfinite(geometry.range), "range M > 0 required");
    require(std::pow(static_cast<double>(geometry.resolution), geometry.dim) <= 1e8,
            "grid too large: G^d <= 1e8 required");
}

std::vector<int> cell_coordinates(const GridGeometry& geometry, std::size_t cell)
{
    std::vector<int> coords(static_cast<std::size_t>(geometry.dim));
    const auto g = static_cast<std::size_t>(geometry.resolution);
    for (int k = geometry.dim - 1; k >= 0; --k) {
        coords[static_cast<std::size_t>(k)] = static_cast<int>(cell % g);
        cell /= g;
    }
    return coords;
}

std::size_t cell_index(const GridGeometry& geometry, std::span<const int> coords)
{
    require(coords.size() == static_cast<std::size_t>(geometry.dim), "coordinate count must equal d");
    std::size_t cell = 0;
    for (int c : coords) {
        require(c >= 0 && c < geometry.resolution, "cell coordinate out of range");
        cell = cell * static_cast<std::size_t>(geometry.resolution) + static_cast<std::size_t>(c);
    }
    return cell;
}

std::vector<double> cell_center(const GridGeometry& geometry, std::size_t cell)
{
    const auto coords = cell_coordinates(geometry, cell);
    std::vector<double> center(coords.size());
    const double width = geometry.cell_width();
    for (std::size_t k = 0; k < coords.size(); ++k) center[k] = (coords[k] + 0.5) * width;
    return center;
}

std::size_t locate_cell(const GridGeometry& geometry, std::span<const double> point)
{
    require(point.size() == static_cast<std::size_t>(geometry.dim), "point dimension must equal d");
    std::size_t cell = 0;
    const double width = geometry.cell_width();
    for (double x : point) {
        require(x >= 0.0 && x <= geometry.side, "point must lie in [0, A]^d");
        auto c = static_cast<int>(std::floor(x / width));
        c = std::clamp(c, 0, geometry.resolution - 1);
        cell = cell * static_cast<std::size_t>(geometry.resolution) + static_cast<std::size_t>(c);
    }
    return cell;
}

// ---------------------------------------------------------------------------
// GridBVFunction

namespace {

double face_jump_sum(const GridGeometry& geometry, std::span<const double> values)
{
    const auto g = static_cast<std::size_t>(geometry.resolution);
    double jumps = 0.0;
    std::size_t stride = 1;
    for (int axis = geometry.dim - 1; axis >= 0; --axis) {
        for (std::size_t cell = 0; cell < values.size(); ++cell) {
            if ((cell / stride) % g + 1 < g) jumps += std::abs(values[cell] - values[cell + stride]);
        }
        stride *= g;
    }
    return jumps * geometry.face_measure();
}

} // namespace

GridBVFunction::GridBVFunction(GridGeometry geometry, std::vector<double> values)
    : geometry_(geometry), values_(std::move(values))
{
    validate(geometry_);
    require(values_.size() == geometry_.cell_count(), "value count must equal G^d");
    for (double v : values_) {
        require(v >= 0.0 && v <= geometry_.range, "grid function values must lie in [0, M]");
    }
    variation_ = face_jump_sum(geometry_, values_);
}

double GridBVFunction::operator()(std::span<const double> point) const
{
    return values_[locate_cell(geometry_, point)];
}

double total_variation(const GridBVFunction& f)
{
    return face_jump_sum(f.geometry(), f.values());
}

GridBVFunction random_bv(const GridGeometry& geometry, double variation_target, std::uint64_t seed)
{
    validate(geometry);
    require(variation_target >= 0.0, "V_target >= 0 required");
    Rng rng(seed, "random_bv");
    std::vector<double> raw(geometry.cell_count());
    for (double& v : raw) v = rng.uniform(0.0, geometry.range);

    const double raw_tv = face_jump_sum(geometry, raw);
    if (raw_tv <= variation_target) return GridBVFunction(geometry, std::move(raw));

    const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(raw.size());
    double lambda = variation_target / raw_tv;
    std::vector<double> shrunk(raw.size());
    // Rounding can leave the recomputed variation a few ulps above target;
    // re-verify and tighten.
    for (int attempt = 0; attempt < 64; ++attempt) {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            shrunk[i] = std::clamp(mean + lambda * (raw[i] - mean), 0.0, geometry.range);
        }
        const double tv = face_jump_sum(geometry, shrunk);
        if (tv <= variation_target) return GridBVFunction(geometry, std::move(shrunk));
        lambda *= std::min(variation_target / tv, 1.0 - 1e-12);
    }
    std::fill(shrunk.begin(), shrunk.end(), std::clamp(mean, 0.0, geometry.range));
    return GridBVFunction(geometry, std::move(shrunk));
}

// ---------------------------------------------------------------------------
// Margins

MultiClassTuple::MultiClassTuple(std::vector<GridBVFunction> components)
    : components_(std::move(components))
{
    require(components_.size() > 2, "C > 2 component functions required");
    const GridGeometry& first = components_.front().geometry();
    for (const auto& c : components_) {
        require(c.geometry() == first, "all components must share grid geometry");
    }
    require(first.side >= 1.0 && first.range >= 1.0, "components of G_0 require A >= 1 and M >= 1");
}

std::vector<double> MultiClassTuple::scores_at_cell(std::size_t cell) const
{
    std::vector<double> out(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) out[k] = components_[k].at_cell(cell);
    return out;
}

std::vector<double> MultiClassTuple::scores(std::span<const double> point) const
{
    return scores_at_cell(locate_cell(geometry(), point));
}

double phi_gamma(double t, double gamma)
{
    require(gamma > 0.0 && gamma <= 1.0, "gamma in (0, 1] required");
    if (t <= 0.0) return 1.0;
    if (t <= gamma) return 1.0 - t / gamma;
    return 0.0;
}

double margin_from_scores(std::span<const double> scores, int label)
{
    require(scores.size() >= 2, "at least two class scores required");
    require(label >= 1 && static_cast<std::size_t>(label) <= scores.size(), "label must lie in 1..C");
    const auto y = static_cast<std::size_t>(label - 1);
    double best_other = -kInfinity;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (k != y) best_other = std::max(best_other, scores[k]);
    }
    return 0.5 * (scores[y] - best_other);
}

double margin_fn(const MultiClassTuple& g, std::span<const double> point, int label)
{
    return margin_from_scores(g.scores(point), label);
}

double truncate_margin(double margin, double gamma)
{
    require(gamma > 0.0 && gamma <= 1.0, "gamma in (0, 1] required");
    return std::max(0.0, std::min(gamma, margin));
}

double truncated_margin(const MultiClassTuple& g, std::span<const double> point, int label, double gamma)
{
    return truncate_margin(margin_fn(g, point, label), gamma);
}

// ---------------------------------------------------------------------------
// Metrics

double empirical_distance(LpOrder order, std::span<const double> f1, std::span<const double> f2)
{
    require(f1.size() == f2.size(), "distance vectors must have equal length");
    require(!f1.empty(), "distance requires n >= 1 points");
    require(order.p >= 1.0, "metric order p >= 1 required");
    const auto n = static_cast<double>(f1.size());
    if (order.is_infinite()) {
        double worst = 0.0;
        for (std::size_t i = 0; i < f1.size(); ++i) worst = std::max(worst, std::abs(f1[i] - f2[i]));
        return worst;
    }
    double sum = 0.0;
    if (order.p == 1.0) {
        for (std::size_t i = 0; i < f1.size(); ++i) sum += std::abs(f1[i] - f2[i]);
        return sum / n;
    }
    for (std::size_t i = 0; i < f1.size(); ++i) sum += std::pow(std::abs(f1[i] - f2[i]), order.p);
    return std::pow(sum / n, 1.0 / order.p);
}

DistanceMatrix::DistanceMatrix(std::size_t size, std::vector<double> entries)
    : size_(size), entries_(std::move(entries))
{
    require(size_ >= 1, "distance matrix must be nonempty");
    require(entries_.size() == size_ * size_, "distance matrix must be n x n");
    for (std::size_t i = 0; i < size_; ++i) {
        require(entries_[i * size_ + i] == 0.0, "distance matrix must have zero diagonal");
        for (std::size_t j = 0; j < i; ++j) {
            const double a = entries_[i * size_ + j];
            require(a >= 0.0, "distances must be nonnegative");
            require(a == entries_[j * size_ + i], "distance matrix must be symmetric");
        }
    }
}

FiniteFunctionClass::FiniteFunctionClass(std::size_t functions, std::size_t points, std::vector<double> values,
                                         double range, std::string provenance)
    : functions_(functions), points_(points), values_(std::move(values)), range_(range),
      provenance_(std::move(provenance))
{
    require(functions_ >= 1, "a function class needs |F| >= 1");
    require(points_ >= 1, "a function class needs n >= 1 points");
    require(values_.size() == functions_ * points_, "value matrix must be |F| x n");
    require(range_ > 0.0, "range M_F > 0 required");
    for (double v : values_) {
        require(std::abs(v) <= range_, "class values must lie in [-M_F, M_F]");
    }
}

FiniteFunctionClass FiniteFunctionClass::restrict_points(std::span<const std::size_t> columns) const
{
    std::vector<double> out;
    out.reserve(functions_ * columns.size());
    for (std::size_t i = 0; i < functions_; ++i) {
        for (std::size_t c : columns) {
            require(c < points_, "restricted column out of range");
            out.push_back(value(i, c));
        }
    }
    return {functions_, columns.size(), std::move(out), range_, provenance_};
}

FiniteFunctionClass FiniteFunctionClass::with_negations() const
{
    std::vector<double> out(values_);
    out.reserve(2 * values_.size());
    for (double v : values_) out.push_back(-v);
    return {2 * functions_, points_, std::move(out), range_, provenance_ + " + negations"};
}

DistanceMatrix FiniteFunctionClass::distances(LpOrder order) const
{
    std::vector<double> d(functions_ * functions_, 0.0);
    for (std::size_t i = 0; i < functions_; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double dist = empirical_distance(order, row(i), row(j));
            d[i * functions_ + j] = dist;
            d[j * functions_ + i] = dist;
        }
    }
    return {functions_, std::move(d)};
}

// ---------------------------------------------------------------------------
// Parameters, distributions, estimates

void validate(const BoundParams& p)
{
    require(p.side > 0.0 && p.range > 0.0 && p.variation > 0.0, "A, M, V > 0 required");
    require(p.dim >= 1 && p.classes >= 1, "d >= 1 and C >= 1 required");
    require(p.gamma > 0.0 && p.gamma <= 1.0, "gamma in (0, 1] required");
    require(p.delta > 0.0 && p.delta < 1.0, "delta in (0, 1) required");
    require(p.epsilon > 0.0, "epsilon > 0 required");
    require(p.K > 0.0 && p.K_P > 0.0 && p.K1 > 0.0 && p.K2 > 0.0 && p.K3 > 0.0 && p.K_F > 0.0,
            "constants K, K_P, K1, K2, K3, K_F > 0 required");
    require(p.range <= p.variation, "M <= V required");
}

DistributionSpec DistributionSpec::uniform(const GridGeometry& geometry, int classes)
{
    DistributionSpec dist;
    dist.geometry = geometry;
    dist.classes = classes;
    const std::size_t cells = geometry.cell_count();
    dist.cell_probs.assign(cells, 1.0 / static_cast<double>(cells));
    dist.label_probs.assign(cells * static_cast<std::size_t>(classes), 1.0 / classes);
    return dist;
}

void validate(const DistributionSpec& dist)
{
    validate(dist.geometry);
    require(dist.classes >= 1, "distribution needs C >= 1 labels");
    const std::size_t cells = dist.geometry.cell_count();
    const auto c = static_cast<std::size_t>(dist.classes);
    require(dist.cell_probs.size() == cells, "cell probabilities must have G^d entries");
    require(dist.label_probs.size() == cells * c, "label table must have G^d x C entries");
    double total = 0.0;
    for (double p : dist.cell_probs) {
        require(p >= 0.0, "cell probabilities must be nonnegative");
        total += p;
    }
    require(std::abs(total - 1.0) <= 1e-12, "cell probabilities must sum to 1 within 1e-12");
    for (std::size_t cell = 0; cell < cells; ++cell) {
        double row = 0.0;
        for (std::size_t y = 0; y < c; ++y) {
            const double p = dist.label_probs[cell * c + y];
            require(p >= 0.0, "label probabilities must be nonnegative");
            row += p;
        }
        require(std::abs(row - 1.0) <= 1e-12, "label probabilities must sum to 1 within 1e-12 per cell");
    }
    if (dist.rho) require(*dist.rho >= 0.0 && *dist.rho < 1.0, "rho in [0, 1) required");
}

std::string to_string(Measure measure)
{
    switch (measure) {
    case Measure::covering: return "covering";
    case Measure::packing: return "packing";
    case Measure::fat: return "fat";
    case Measure::rademacher: return "rademacher";
    }
    return "unknown";
}

void validate(const CapacityEstimate& estimate)
{
    require(estimate.lower >= 0.0, "capacity estimate lower bound must be >= 0");
    require(estimate.lower <= estimate.upper, "capacity estimate needs lower <= upper");
}

} // namespace capbound
