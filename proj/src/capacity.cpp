#include "capbound/capacity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "capbound/error.hpp"

namespace capbound {

namespace {

/// Advances `idx` (sorted, distinct, values < n) to the next k-combination.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n)
{
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

std::vector<std::size_t> first_combination(std::size_t k)
{
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

} // namespace

// ---------------------------------------------------------------------------
// Covering and packing

std::vector<std::size_t> greedy_separated_subset(const DistanceMatrix& distances, double epsilon)
{
    require(epsilon > 0.0, "packing scale eps > 0 required");
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        const bool separated = std::all_of(members.begin(), members.end(),
                                           [&](std::size_t j) { return distances(i, j) >= epsilon; });
        if (separated) members.push_back(i);
    }
    return members;
}

GreedyPacking greedy_packing(const DistanceMatrix& distances, double epsilon)
{
    GreedyPacking out;
    out.members = greedy_separated_subset(distances, epsilon);
    const auto m = static_cast<double>(out.members.size());
    const auto m_half = static_cast<double>(greedy_separated_subset(distances, epsilon / 2).size());
    const auto m_double = static_cast<double>(greedy_separated_subset(distances, 2 * epsilon).size());

    out.packing.measure = Measure::packing;
    out.packing.scale = epsilon;
    out.packing.lower = m;
    out.packing.upper = m_half;  // M(eps) <= N(eps/2) <= m(eps/2)
    out.packing.method = "greedy";
    out.packing.counters["members"] = out.members.size();

    out.covering.measure = Measure::covering;
    out.covering.scale = epsilon;
    out.covering.lower = m_double;  // m(2 eps) <= M(2 eps) <= N(eps)
    out.covering.upper = m;
    out.covering.method = "greedy";
    out.covering.counters["members"] = out.members.size();
    return out;
}

std::size_t exact_covering(const DistanceMatrix& distances, double epsilon, std::size_t cap)
{
    require(epsilon > 0.0, "covering scale eps > 0 required");
    const std::size_t n = distances.size();
    require(n <= cap && n <= 63, "exact covering size cap exceeded (n <= " + std::to_string(cap) + ")");
    std::vector<std::uint64_t> ball(n, 0);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t f = 0; f < n; ++f) {
            if (distances(f, c) < epsilon) ball[c] |= std::uint64_t{1} << f;
        }
    }
    const std::uint64_t full = (n == 64) ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    for (std::size_t k = 1; k <= n; ++k) {
        auto idx = first_combination(k);
        do {
            std::uint64_t covered = 0;
            for (std::size_t c : idx) covered |= ball[c];
            if (covered == full) return k;
        } while (next_combination(idx, n));
    }
    return n;
}

std::size_t exact_packing(const DistanceMatrix& distances, double epsilon, std::size_t cap)
{
    require(epsilon > 0.0, "packing scale eps > 0 required");
    const std::size_t n = distances.size();
    require(n <= cap && n <= 20, "exact packing size cap exceeded (n <= " + std::to_string(cap) + ")");
    std::vector<std::uint32_t> separated(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        separated[i] |= std::uint32_t{1} << i;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && distances(i, j) >= epsilon) separated[i] |= std::uint32_t{1} << j;
        }
    }
    std::size_t best = 0;
    for (std::uint32_t subset = 1; subset < (std::uint32_t{1} << n); ++subset) {
        const auto size = static_cast<std::size_t>(std::popcount(subset));
        if (size <= best) continue;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if ((subset >> i) & 1u) ok = (subset & ~separated[i]) == 0;
        }
        if (ok) best = size;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Fat-shattering

WitnessGrid::WitnessGrid(const FiniteFunctionClass& F, std::span<const std::size_t> points, double epsilon)
{
    require(epsilon > 0.0, "shattering scale eps > 0 required");
    levels_.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& levels = levels_[i];
        levels.reserve(2 * F.size());
        for (std::size_t f = 0; f < F.size(); ++f) {
            const double v = F.value(f, points[i]);
            levels.push_back({v - epsilon, v, -1});
            levels.push_back({v + epsilon, v, +1});
        }
        std::sort(levels.begin(), levels.end(), [](const WitnessLevel& a, const WitnessLevel& b) {
            if (a.level != b.level) return a.level < b.level;
            if (a.base != b.base) return a.base < b.base;
            return a.side < b.side;
        });
    }
}

namespace {

/// 1 if v is at least eps above the level, 0 if at least eps below, -1 otherwise.
/// With level = base + side*eps the comparisons are done against base so the
/// eps shift cancels exactly.
int classify(double v, const WitnessLevel& w, double epsilon)
{
    if (w.side < 0) {
        if (v >= w.base) return 1;
        if (w.base - v >= 2 * epsilon) return 0;
        return -1;
    }
    if (v - w.base >= 2 * epsilon) return 1;
    if (w.base >= v) return 0;
    return -1;
}

struct Alive {
    std::size_t function;
    std::uint32_t pattern;
};

class ShatterSearch {
public:
    ShatterSearch(const FiniteFunctionClass& F, std::span<const std::size_t> points, double epsilon)
        : F_(F), points_(points), epsilon_(epsilon), grid_(F, points, epsilon), witness_(points.size())
    {
    }

    ShatterResult run()
    {
        ShatterResult result;
        std::vector<Alive> alive(F_.size());
        for (std::size_t f = 0; f < F_.size(); ++f) alive[f] = {f, 0};
        result.shattered = descend(0, alive);
        result.witnesses_tried = tried_;
        if (result.shattered) result.witness = witness_;
        return result;
    }

private:
    bool descend(std::size_t depth, const std::vector<Alive>& alive)
    {
        if (depth == points_.size()) {
            settle_witness(alive);
            return true;
        }
        const std::size_t column = points_[depth];
        const std::uint64_t needed = std::uint64_t{1} << (depth + 1);
        std::vector<Alive> next;
        next.reserve(alive.size());
        const auto candidates = grid_.candidates(depth);
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const WitnessLevel& w = candidates[c];
            if (c > 0 && w.base == candidates[c - 1].base && w.side == candidates[c - 1].side) continue;
            ++tried_;
            next.clear();
            std::uint64_t seen = 0;
            for (const Alive& a : alive) {
                const int cls = classify(F_.value(a.function, column), w, epsilon_);
                if (cls < 0) continue;
                const std::uint32_t pattern = a.pattern | (static_cast<std::uint32_t>(cls) << depth);
                next.push_back({a.function, pattern});
                seen |= std::uint64_t{1} << pattern;
            }
            if (static_cast<std::uint64_t>(std::popcount(seen)) != needed) continue;
            if (descend(depth + 1, next)) return true;
        }
        return false;
    }

    /// The surviving functions pin each coordinate to the interval
    /// [max below + eps, min above - eps]; its midpoint keeps both margins
    /// at least eps after rounding unless the interval is a single point.
    void settle_witness(const std::vector<Alive>& alive)
    {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            double below = -kInfinity;
            double above = kInfinity;
            for (const Alive& a : alive) {
                const double v = F_.value(a.function, points_[i]);
                if ((a.pattern >> i) & 1U) {
                    above = std::min(above, v);
                } else {
                    below = std::max(below, v);
                }
            }
            witness_[i] = 0.5 * (below + above);
        }
    }

    const FiniteFunctionClass& F_;
    std::span<const std::size_t> points_;
    double epsilon_;
    WitnessGrid grid_;
    std::vector<double> witness_;
    std::uint64_t tried_ = 0;
};

} // namespace

ShatterResult fat_shattering_check(const FiniteFunctionClass& F, std::span<const std::size_t> points,
                                   double epsilon, std::size_t cap)
{
    require(epsilon > 0.0, "shattering scale eps > 0 required");
    require(points.size() <= cap && points.size() <= 6,
            "fat-shattering check cap exceeded (points <= " + std::to_string(std::min<std::size_t>(cap, 6)) + ")");
    for (std::size_t p : points) require(p < F.points(), "shattering point index out of range");
    if (points.empty()) return {true, {}, 0};
    // Each function realises at most one pattern per witness.
    if (F.size() < (std::size_t{1} << points.size())) return {};
    return ShatterSearch(F, points, epsilon).run();
}

bool shatters_with_witness(const FiniteFunctionClass& F, std::span<const std::size_t> points,
                           std::span<const double> witness, double epsilon)
{
    require(witness.size() == points.size(), "witness must have one level per point");
    const std::size_t k = points.size();
    require(k <= 6, "direct shattering test supports at most 6 points");
    std::uint64_t seen = 0;
    for (std::size_t f = 0; f < F.size(); ++f) {
        std::uint32_t pattern = 0;
        bool realises = true;
        for (std::size_t i = 0; i < k && realises; ++i) {
            const double gap = F.value(f, points[i]) - witness[i];
            if (gap >= epsilon) {
                pattern |= std::uint32_t{1} << i;
            } else if (-gap < epsilon) {
                realises = false;
            }
        }
        if (realises) seen |= std::uint64_t{1} << pattern;
    }
    return static_cast<std::uint64_t>(std::popcount(seen)) == (std::uint64_t{1} << k);
}

std::size_t fat_counting_bound(const FiniteFunctionClass& F)
{
    const auto log2_size = static_cast<std::size_t>(std::bit_width(F.size()) - 1);
    return std::min(F.points(), log2_size);
}

FatResult fat_shattering_dimension(const FiniteFunctionClass& F, double epsilon, const FatMode& mode,
                                   const ExactCaps& caps)
{
    require(epsilon > 0.0, "shattering scale eps > 0 required");
    const std::size_t n = F.points();
    const std::size_t counting = fat_counting_bound(F);
    const std::size_t check_cap = std::min<std::size_t>(caps.points_per_check, 6);

    FatResult out;
    out.estimate.measure = Measure::fat;
    out.estimate.scale = epsilon;
    out.estimate.counters["counting_bound"] = counting;
    std::uint64_t checks = 0;
    std::uint64_t witnesses = 0;

    auto try_subset = [&](const std::vector<std::size_t>& subset) {
        ++checks;
        auto r = fat_shattering_check(F, subset, epsilon, check_cap);
        witnesses += r.witnesses_tried;
        if (r.shattered && subset.size() > out.shattered_points.size()) {
            out.shattered_points = subset;
            out.witness = r.witness;
        }
        return r.shattered;
    };

    if (std::holds_alternative<ExactMode>(mode)) {
        require(n <= caps.pool, "exact fat-shattering pool cap exceeded (n <= " + std::to_string(caps.pool) + ")");
        require(F.size() <= caps.functions,
                "exact fat-shattering class cap exceeded (|F| <= " + std::to_string(caps.functions) + ")");
        require(counting <= check_cap, "exact fat-shattering needs min(n, log2|F|) <= points-per-check cap");
        // Subsets of shattered sets are shattered, so the first size with no
        // shattered subset ends the search.
        for (std::size_t k = 1; k <= counting; ++k) {
            auto idx = first_combination(k);
            bool found = false;
            do {
                found = try_subset(idx);
            } while (!found && next_combination(idx, n));
            if (!found) break;
        }
        const auto d = static_cast<double>(out.shattered_points.size());
        out.estimate.method = "exact";
        out.estimate.lower = d;
        out.estimate.upper = d;
        out.estimate.estimate = d;
    } else {
        const auto& randomized = std::get<RandomizedMode>(mode);
        Rng rng(randomized.seed, "fat-random-search");
        const std::size_t top = std::min(counting, check_cap);
        for (std::size_t k = 1; k <= top; ++k) {
            // Exhaust the level when it is no larger than the budget.
            double subsets = 1.0;
            for (std::size_t i = 0; i < k; ++i) subsets = subsets * static_cast<double>(n - i) / static_cast<double>(i + 1);
            bool found = false;
            if (subsets <= static_cast<double>(randomized.budget)) {
                auto idx = first_combination(k);
                do {
                    found = try_subset(idx);
                } while (!found && next_combination(idx, n));
            } else {
                std::vector<std::size_t> perm(n);
                for (std::uint64_t attempt = 0; attempt < randomized.budget && !found; ++attempt) {
                    std::vector<std::size_t> subset;
                    if (attempt % 2 == 0 && out.shattered_points.size() + 1 == k) {
                        // Grow the best shattered set by one point.
                        subset = out.shattered_points;
                        std::size_t extra;
                        do {
                            extra = static_cast<std::size_t>(rng.below(n));
                        } while (std::find(subset.begin(), subset.end(), extra) != subset.end());
                        subset.push_back(extra);
                    } else {
                        std::iota(perm.begin(), perm.end(), std::size_t{0});
                        for (std::size_t i = 0; i < k; ++i) {
                            std::swap(perm[i], perm[i + static_cast<std::size_t>(rng.below(n - i))]);
                        }
                        subset.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
                    }
                    std::sort(subset.begin(), subset.end());
                    found = try_subset(subset);
                }
            }
            if (!found) break;
        }
        out.estimate.method = "randomized";
        out.estimate.seed = randomized.seed;
        out.estimate.lower = static_cast<double>(out.shattered_points.size());
        out.estimate.upper = static_cast<double>(counting);
        out.estimate.counters["budget"] = randomized.budget;
    }
    out.estimate.counters["subset_checks"] = checks;
    out.estimate.counters["witnesses_tried"] = witnesses;
    validate(out.estimate);
    return out;
}

// ---------------------------------------------------------------------------
// Rademacher complexity

double exact_rademacher(const FiniteFunctionClass& F, std::size_t cap)
{
    const std::size_t n = F.points();
    require(n <= cap && n <= 30, "exact Rademacher cap exceeded (n <= " + std::to_string(cap) + ")");
    // Gray-code walk over sign vectors, starting from all -1.
    std::vector<double> sums(F.size(), 0.0);
    for (std::size_t f = 0; f < F.size(); ++f) {
        for (std::size_t i = 0; i < n; ++i) sums[f] -= F.value(f, i);
    }
    std::vector<int> sigma(n, -1);
    const std::uint64_t vectors = std::uint64_t{1} << n;
    long double total = 0.0L;
    for (std::uint64_t step = 0;; ++step) {
        total += *std::max_element(sums.begin(), sums.end());
        if (step + 1 == vectors) break;
        const auto flip = static_cast<std::size_t>(std::countr_zero(step + 1));
        sigma[flip] = -sigma[flip];
        for (std::size_t f = 0; f < F.size(); ++f) sums[f] += 2.0 * sigma[flip] * F.value(f, flip);
    }
    return static_cast<double>(total / static_cast<long double>(vectors) / static_cast<long double>(n));
}

CapacityEstimate rademacher(const FiniteFunctionClass& F, const RademacherMode& mode, const ExactCaps& caps)
{
    CapacityEstimate out;
    out.measure = Measure::rademacher;
    out.scale = 0.0;
    if (std::holds_alternative<ExactMode>(mode)) {
        const double value = exact_rademacher(F, caps.rademacher_points);
        out.method = "exact";
        out.estimate = value;
        out.lower = std::max(0.0, value);
        out.upper = std::max(out.lower, value);
        out.counters["sign_vectors"] = std::uint64_t{1} << F.points();
    } else {
        const auto& mc = std::get<MonteCarloMode>(mode);
        require(mc.trials >= 2, "Monte Carlo Rademacher needs trials >= 2");
        Rng rng(mc.seed, "rademacher-mc");
        const std::size_t n = F.points();
        std::vector<int> sigma(n);
        double mean = 0.0;
        double m2 = 0.0;
        for (std::uint64_t t = 0; t < mc.trials; ++t) {
            for (int& s : sigma) s = rng.sign();
            double best = -kInfinity;
            for (std::size_t f = 0; f < F.size(); ++f) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) acc += sigma[i] * F.value(f, i);
                best = std::max(best, acc / static_cast<double>(n));
            }
            const double delta = best - mean;
            mean += delta / static_cast<double>(t + 1);
            m2 += delta * (best - mean);
        }
        const double variance = m2 / static_cast<double>(mc.trials - 1);
        const double se = std::sqrt(variance / static_cast<double>(mc.trials));
        out.method = "monte-carlo";
        out.seed = mc.seed;
        out.estimate = mean;
        out.std_error = se;
        out.lower = std::max(0.0, mean - se);
        out.upper = std::max(out.lower, mean + se);
        out.counters["trials"] = mc.trials;
    }
    validate(out);
    return out;
}

// ---------------------------------------------------------------------------
// Lemma checks

std::string to_string(LemmaSuite suite)
{
    switch (suite) {
    case LemmaSuite::lemma1: return "lemma1";
    case LemmaSuite::lemmaB1: return "lemmaB1";
    case LemmaSuite::finite_counting: return "finite_counting";
    }
    return "unknown";
}

LemmaSuite lemma_suite_from_string(const std::string& name)
{
    if (name == "lemma1") return LemmaSuite::lemma1;
    if (name == "lemmaB1") return LemmaSuite::lemmaB1;
    if (name == "finite_counting") return LemmaSuite::finite_counting;
    throw PreconditionError("unknown lemma suite '" + name + "' (lemma1 | lemmaB1 | finite_counting)");
}

FiniteFunctionClass random_tiny_class(Rng& rng, std::size_t max_functions, std::size_t max_points,
                                      bool lattice_values)
{
    const std::size_t functions = 1 + static_cast<std::size_t>(rng.below(max_functions));
    const std::size_t points = 1 + static_cast<std::size_t>(rng.below(max_points));
    std::vector<double> values(functions * points);
    for (double& v : values) {
        v = lattice_values ? 0.5 * (static_cast<double>(rng.below(5)) - 2.0) : rng.uniform(-1.0, 1.0);
    }
    return {functions, points, std::move(values), 1.0, lattice_values ? "random-lattice" : "random-uniform"};
}

namespace {

std::string describe(std::size_t case_index, const std::string& what)
{
    return "case " + std::to_string(case_index) + ": " + what;
}

void record(LemmaReport& report, bool ok, std::size_t case_index, const std::string& what)
{
    ++report.checks;
    if (ok) {
        ++report.passed;
    } else {
        ++report.failed;
        if (report.failures.size() < 20) report.failures.push_back(describe(case_index, what));
    }
}

} // namespace

LemmaReport lemma_checks(LemmaSuite suite, std::uint64_t seed, std::size_t cases)
{
    LemmaReport report;
    report.suite = suite;
    report.seed = seed;
    report.cases = cases;
    const ExactCaps caps;
    for (std::size_t c = 0; c < cases; ++c) {
        Rng rng(seed, "lemma-case", c);
        switch (suite) {
        case LemmaSuite::lemma1: {
            const bool lattice = (c % 2 == 1);
            const auto F = random_tiny_class(rng, 10, 8, lattice);
            const double eps = lattice ? 0.25 * static_cast<double>(1 + rng.below(2)) : rng.uniform(0.02, 0.6);
            const auto fat = fat_shattering_dimension(F, eps, ExactMode{}, caps);
            const std::size_t d = fat.shattered_points.size();
            std::size_t cover = 1;  // on zero points every function coincides
            if (d > 0) {
                const auto at_shattered = F.restrict_points(fat.shattered_points);
                cover = exact_covering(at_shattered.distances(LpOrder::infinity()), eps, caps.covering_functions);
            }
            report.max_dimension = std::max(report.max_dimension, d);
            record(report, (std::size_t{1} << d) <= cover, c,
                   "d=" + std::to_string(d) + " but N_inf=" + std::to_string(cover));
            break;
        }
        case LemmaSuite::lemmaB1: {
            const auto F = random_tiny_class(rng, 10, 8, false);
            const double eps = rng.uniform(0.01, F.range());
            const auto fat = fat_shattering_dimension(F, eps, ExactMode{}, caps);
            const std::size_t d = fat.shattered_points.size();
            report.max_dimension = std::max(report.max_dimension, d);
            for (std::size_t n = 1; n <= F.points(); ++n) {
                double sup_rad = -kInfinity;
                auto idx = first_combination(n);
                do {
                    sup_rad = std::max(sup_rad, exact_rademacher(F.restrict_points(idx), caps.rademacher_points));
                } while (next_combination(idx, F.points()));
                if (sup_rad <= eps) {
                    record(report, d <= n, c,
                           "sup R_" + std::to_string(n) + "=" + std::to_string(sup_rad) + " <= eps=" +
                               std::to_string(eps) + " but d=" + std::to_string(d));
                }
            }
            break;
        }
        case LemmaSuite::finite_counting: {
            const bool lattice = (c % 2 == 1);
            const auto F = random_tiny_class(rng, 12, 8, lattice);
            const double eps = lattice ? 0.25 * static_cast<double>(1 + rng.below(2)) : rng.uniform(0.02, 0.6);
            const auto fat = fat_shattering_dimension(F, eps, ExactMode{}, caps);
            const std::size_t d = fat.shattered_points.size();
            report.max_dimension = std::max(report.max_dimension, d);
            record(report, (std::size_t{1} << d) <= F.size(), c,
                   "d=" + std::to_string(d) + " exceeds log2 |F| with |F|=" + std::to_string(F.size()));
            break;
        }
        }
    }
    return report;
}

} // namespace capbound
