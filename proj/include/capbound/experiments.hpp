#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "capbound/bounds.hpp"
#include "capbound/core.hpp"

namespace capbound {

// ---------------------------------------------------------------------------
// Samples

struct LabeledSample {
    std::size_t dim = 1;
    std::vector<double> points;       // n x dim cell-center coordinates, row-major
    std::vector<std::size_t> cells;   // cell of each draw
    std::vector<int> labels;          // 1..C
    std::uint64_t seed = 0;
    std::optional<double> rho;        // set for Markov samples
    std::uint64_t spec_hash = 0;

    std::size_t size() const { return labels.size(); }
    std::span<const double> point(std::size_t i) const { return {points.data() + i * dim, dim}; }
};

/// FNV-1a over the 17-digit text of every field of the law.
std::uint64_t distribution_hash(const DistributionSpec& dist);

LabeledSample sample_iid(const DistributionSpec& dist, std::size_t n, std::uint64_t seed);

/// Stay-or-refresh chain: the first draw and every refresh come from `dist`;
/// each later step repeats the previous draw with probability rho. The chain
/// is stationary with marginal `dist`, and since a refresh makes the future
/// independent of the past, beta(k) <= rho^k. Refresh draws use the same
/// stream as sample_iid, so rho = 0 reproduces it exactly.
LabeledSample sample_markov(const DistributionSpec& dist, double rho, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Risks

/// phi_gamma of the truncated margin for every (cell, label), cells x C.
std::vector<double> loss_table(const MultiClassTuple& g, double gamma);
/// Truncated margin for every (cell, label), cells x C.
std::vector<double> truncated_margin_table(const MultiClassTuple& g, double gamma);

double exact_risk(const MultiClassTuple& g, double gamma, const DistributionSpec& dist);
double empirical_risk(const MultiClassTuple& g, double gamma, const LabeledSample& sample);

/// `count` tuples of C random_bv components with total variation <= variation.
std::vector<MultiClassTuple> random_tuple_class(const GridGeometry& geometry, int classes, std::size_t count,
                                                double variation, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Uniform deviation experiments

struct DeviationConfig {
    std::size_t n = 0;
    double epsilon = 0.1;
    double gamma = 0.5;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    double variation = 1.0;   // V fed to the bounded-variation fat bound
    unsigned threads = 0;
};

struct DeviationReport {
    std::size_t class_size = 0;
    std::vector<double> exact_risks;
    std::vector<double> sup_deviation;   // per trial
    std::vector<std::uint8_t> exceeded;  // per trial, sup_deviation > eps
    double p_hat = 0.0;
    double std_error = 0.0;
    std::size_t covering_number = 0;     // exact N_1 on the ghost draw
    BoundValue bound_covering;           // thm1 (or mixing) rhs with ln of that covering number
    BoundValue bound_bv;                 // same with cor2 composed with the bounded-variation fat bound
    double baseline = 0.0;               // m exp(-2 n eps^2)
};

/// Throws unless n > 2/eps^2 and trials >= 1.
DeviationReport deviation_experiment(std::span<const MultiClassTuple> classes, const DistributionSpec& dist,
                                     const DeviationConfig& config);

struct IndexRange {
    std::size_t first = 0;  // 1-based, inclusive
    std::size_t last = 0;

    bool operator==(const IndexRange&) const = default;
};

struct BlockPartition {
    std::size_t block_length = 0;  // a_n
    std::size_t blocks = 0;        // b_n
    std::vector<IndexRange> odd;   // S_j
    std::vector<IndexRange> even;  // S'_j
};

/// S_j = [2(j-1)a+1, (2j-1)a], S'_j = [(2j-1)a+1, 2ja] for j = 1..n/(2a).
BlockPartition blocking(std::size_t n, std::size_t block_length);

struct MixingConfig {
    DeviationConfig base;
    double rho = 0.0;
    std::size_t block_length = 1;
};

struct MixingReport {
    DeviationReport deviation;       // bounds hold the mixing right-hand side
    BlockPartition partition;
    double beta_at_block = 0.0;      // rho^a_n
    std::vector<double> surrogate_sup_deviation;
    double surrogate_p_hat = 0.0;    // diagnostic only
};

/// Throws unless 2 a_n | n and b_n > 2/(eps^2 a_n).
MixingReport mixing_deviation_experiment(std::span<const MultiClassTuple> classes, const DistributionSpec& dist,
                                         const MixingConfig& config);

} // namespace capbound
