#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "capbound/core.hpp"
#include "capbound/rng.hpp"

namespace capbound {

/// Size limits of the exhaustive searches.
struct ExactCaps {
    std::size_t covering_functions = 15;
    std::size_t points_per_check = 5;   // at most 6: patterns are kept in a 64-bit mask
    std::size_t pool = 12;
    std::size_t functions = 12;
    std::size_t rademacher_points = 20;
};

// ---------------------------------------------------------------------------
// Covering and packing

struct GreedyPacking {
    std::vector<std::size_t> members;  // maximal eps-separated subset, insertion order
    CapacityEstimate packing;          // [m(eps), m(eps/2)]
    CapacityEstimate covering;         // [m(2 eps), m(eps)]
};

/// Maximal eps-separated (>= eps) subset in input order. A maximal separated
/// set is a strict eps-net, so m(eps) bounds both M(eps) from below and
/// N(eps) from above; the sandwich M(2 eps) <= N(eps) <= M(eps) supplies the
/// other sides.
GreedyPacking greedy_packing(const DistanceMatrix& distances, double epsilon);

/// Members of the greedy maximal eps-separated subset.
std::vector<std::size_t> greedy_separated_subset(const DistanceMatrix& distances, double epsilon);

/// Minimum number of centres from the class whose open eps-balls cover it.
std::size_t exact_covering(const DistanceMatrix& distances, double epsilon,
                           std::size_t cap = ExactCaps{}.covering_functions);

/// Largest eps-separated (>= eps) subset, by exhaustive search.
std::size_t exact_packing(const DistanceMatrix& distances, double epsilon,
                          std::size_t cap = ExactCaps{}.covering_functions);

// ---------------------------------------------------------------------------
// Fat-shattering

/// Candidate witness level f(t_i) + side * eps, kept symbolically so that
/// margin comparisons against it reduce to f(t_i) - base comparisons.
struct WitnessLevel {
    double level;
    double base;
    int side;  // -1 or +1
};

/// Per chosen point, the sorted 2|F| levels {f(t_i) - eps, f(t_i) + eps}.
class WitnessGrid {
public:
    WitnessGrid(const FiniteFunctionClass& F, std::span<const std::size_t> points, double epsilon);

    std::size_t coordinates() const { return levels_.size(); }
    std::span<const WitnessLevel> candidates(std::size_t coordinate) const { return levels_[coordinate]; }

private:
    std::vector<std::vector<WitnessLevel>> levels_;
};

struct ShatterResult {
    bool shattered = false;
    std::vector<double> witness;       // set when shattered
    std::uint64_t witnesses_tried = 0; // witness prefixes visited
};

ShatterResult fat_shattering_check(const FiniteFunctionClass& F, std::span<const std::size_t> points,
                                   double epsilon, std::size_t cap = ExactCaps{}.points_per_check);

/// Direct test of the definition for a given witness.
bool shatters_with_witness(const FiniteFunctionClass& F, std::span<const std::size_t> points,
                           std::span<const double> witness, double epsilon);

struct ExactMode {};
struct RandomizedMode {
    std::uint64_t budget = 2000;
    std::uint64_t seed = 0;
};
using FatMode = std::variant<ExactMode, RandomizedMode>;

struct FatResult {
    CapacityEstimate estimate;
    std::vector<std::size_t> shattered_points;  // a largest shattered set found
    std::vector<double> witness;
};

/// min(n, floor(log2 |F|)): each function realises at most one sign pattern
/// per witness.
std::size_t fat_counting_bound(const FiniteFunctionClass& F);

FatResult fat_shattering_dimension(const FiniteFunctionClass& F, double epsilon, const FatMode& mode,
                                   const ExactCaps& caps = {});

// ---------------------------------------------------------------------------
// Rademacher complexity

struct MonteCarloMode {
    std::uint64_t trials = 1000;
    std::uint64_t seed = 0;
};
using RademacherMode = std::variant<ExactMode, MonteCarloMode>;

/// Average over all 2^n sign vectors of sup_f (1/n) sum sigma_i f(t_i).
double exact_rademacher(const FiniteFunctionClass& F, std::size_t cap = ExactCaps{}.rademacher_points);

CapacityEstimate rademacher(const FiniteFunctionClass& F, const RademacherMode& mode, const ExactCaps& caps = {});

// ---------------------------------------------------------------------------
// Randomised checks of the capacity lemmas on tiny classes

enum class LemmaSuite { lemma1, lemmaB1, finite_counting };

std::string to_string(LemmaSuite suite);
LemmaSuite lemma_suite_from_string(const std::string& name);

struct LemmaReport {
    LemmaSuite suite = LemmaSuite::lemma1;
    std::uint64_t seed = 0;
    std::size_t cases = 0;
    std::size_t checks = 0;   // implications whose premise held (all cases for the other suites)
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::size_t max_dimension = 0;
    std::vector<std::string> failures;
};

/// Random tiny class used by the lemma suites: |F| in [1, max_functions],
/// pool in [1, max_points], values in [-1, 1].
FiniteFunctionClass random_tiny_class(Rng& rng, std::size_t max_functions, std::size_t max_points,
                                      bool lattice_values);

LemmaReport lemma_checks(LemmaSuite suite, std::uint64_t seed, std::size_t cases);

} // namespace capbound
