#include "capbound/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "capbound/capacity.hpp"
#include "capbound/error.hpp"
#include "capbound/io.hpp"
#include "capbound/parallel.hpp"
#include "capbound/rng.hpp"

namespace capbound {

std::uint64_t distribution_hash(const DistributionSpec& dist)
{
    std::string text = std::to_string(dist.geometry.dim) + ';' + format_real(dist.geometry.side) + ';' +
                       std::to_string(dist.geometry.resolution) + ';' + format_real(dist.geometry.range) + ';' +
                       std::to_string(dist.classes) + ';';
    for (double p : dist.cell_probs) text += format_real(p) + ',';
    text += ';';
    for (double p : dist.label_probs) text += format_real(p) + ',';
    text += ';';
    if (dist.rho) text += format_real(*dist.rho);
    return fnv1a(text);
}

namespace {

/// Inverse-CDF sampler over the (cell, label) pairs of a law.
class JointSampler {
public:
    explicit JointSampler(const DistributionSpec& dist) : dist_(dist)
    {
        validate(dist);
        const std::size_t cells = dist.geometry.cell_count();
        cumulative_.reserve(cells * static_cast<std::size_t>(dist.classes));
        double total = 0.0;
        for (std::size_t cell = 0; cell < cells; ++cell) {
            for (int label = 1; label <= dist.classes; ++label) {
                total += dist.cell_probs[cell] * dist.label_prob(cell, label);
                cumulative_.push_back(total);
            }
        }
    }

    /// Flat (cell, label) index.
    std::size_t draw(Rng& rng) const
    {
        const double u = rng.uniform() * cumulative_.back();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
    }

    LabeledSample empty_sample(std::size_t n, std::uint64_t seed) const
    {
        LabeledSample s;
        s.dim = static_cast<std::size_t>(dist_.geometry.dim);
        s.points.reserve(n * s.dim);
        s.cells.reserve(n);
        s.labels.reserve(n);
        s.seed = seed;
        s.spec_hash = distribution_hash(dist_);
        return s;
    }

    void append(LabeledSample& s, std::size_t joint) const
    {
        const auto classes = static_cast<std::size_t>(dist_.classes);
        const std::size_t cell = joint / classes;
        const auto center = cell_center(dist_.geometry, cell);
        s.points.insert(s.points.end(), center.begin(), center.end());
        s.cells.push_back(cell);
        s.labels.push_back(static_cast<int>(joint % classes) + 1);
    }

private:
    const DistributionSpec& dist_;
    std::vector<double> cumulative_;
};

} // namespace

LabeledSample sample_iid(const DistributionSpec& dist, std::size_t n, std::uint64_t seed)
{
    return sample_markov(dist, 0.0, n, seed);
}

LabeledSample sample_markov(const DistributionSpec& dist, double rho, std::size_t n, std::uint64_t seed)
{
    require(rho >= 0.0 && rho < 1.0, "rho in [0, 1) required");
    const JointSampler sampler(dist);
    auto sample = sampler.empty_sample(n, seed);
    if (rho > 0.0) sample.rho = rho;
    Rng fresh(seed, "sample-fresh");
    Rng stay(seed, "sample-stay");
    std::size_t current = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (t == 0 || rho == 0.0 || !(stay.uniform() < rho)) current = sampler.draw(fresh);
        sampler.append(sample, current);
    }
    return sample;
}

// ---------------------------------------------------------------------------
// Risks

std::vector<double> truncated_margin_table(const MultiClassTuple& g, double gamma)
{
    const std::size_t cells = g.geometry().cell_count();
    const auto classes = static_cast<std::size_t>(g.classes());
    std::vector<double> table(cells * classes);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const auto scores = g.scores_at_cell(cell);
        for (std::size_t y = 0; y < classes; ++y) {
            table[cell * classes + y] = truncate_margin(margin_from_scores(scores, static_cast<int>(y) + 1), gamma);
        }
    }
    return table;
}

std::vector<double> loss_table(const MultiClassTuple& g, double gamma)
{
    auto table = truncated_margin_table(g, gamma);
    for (double& v : table) v = phi_gamma(v, gamma);
    return table;
}

namespace {

void require_compatible(const MultiClassTuple& g, const DistributionSpec& dist)
{
    require(g.geometry() == dist.geometry, "classifier and distribution grids differ");
    require(g.classes() == dist.classes, "classifier and distribution class counts differ");
}

double exact_from_table(std::span<const double> table, const DistributionSpec& dist)
{
    double risk = 0.0;
    const std::size_t cells = dist.geometry.cell_count();
    const auto classes = static_cast<std::size_t>(dist.classes);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        if (dist.cell_probs[cell] == 0.0) continue;
        double row = 0.0;
        for (std::size_t y = 0; y < classes; ++y) row += dist.label_probs[cell * classes + y] * table[cell * classes + y];
        risk += dist.cell_probs[cell] * row;
    }
    return std::clamp(risk, 0.0, 1.0);
}

double empirical_from_table(std::span<const double> table, std::size_t classes, const LabeledSample& sample,
                            std::size_t begin, std::size_t end)
{
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        sum += table[sample.cells[i] * classes + static_cast<std::size_t>(sample.labels[i] - 1)];
    }
    return sum / static_cast<double>(end - begin);
}

} // namespace

double exact_risk(const MultiClassTuple& g, double gamma, const DistributionSpec& dist)
{
    validate(dist);
    require_compatible(g, dist);
    return exact_from_table(loss_table(g, gamma), dist);
}

double empirical_risk(const MultiClassTuple& g, double gamma, const LabeledSample& sample)
{
    require(sample.size() >= 1, "empirical risk needs a nonempty sample");
    const auto classes = static_cast<std::size_t>(g.classes());
    const std::size_t cells = g.geometry().cell_count();
    for (std::size_t i = 0; i < sample.size(); ++i) {
        require(sample.cells[i] < cells, "sample cell outside the classifier grid");
        require(sample.labels[i] >= 1 && static_cast<std::size_t>(sample.labels[i]) <= classes,
                "sample label out of range");
    }
    return empirical_from_table(loss_table(g, gamma), classes, sample, 0, sample.size());
}

std::vector<MultiClassTuple> random_tuple_class(const GridGeometry& geometry, int classes, std::size_t count,
                                                double variation, std::uint64_t seed)
{
    require(count >= 1, "class size >= 1 required");
    require(classes > 2, "C > 2 required");
    std::vector<MultiClassTuple> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<GridBVFunction> components;
        for (int k = 0; k < classes; ++k) {
            const auto index = i * static_cast<std::size_t>(classes) + static_cast<std::size_t>(k);
            components.push_back(random_bv(geometry, variation, derive_seed(seed, "class-member", index)));
        }
        out.emplace_back(std::move(components));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Uniform deviation experiments

namespace {

void check_config(std::span<const MultiClassTuple> classes, const DistributionSpec& dist,
                  const DeviationConfig& config)
{
    require(!classes.empty(), "class list must be nonempty");
    require(config.trials >= 1, "trials >= 1 required");
    require(config.epsilon > 0.0 && config.epsilon < 1.0, "eps in (0, 1) required");
    require(config.gamma > 0.0 && config.gamma <= 1.0, "gamma in (0, 1] required");
    validate(dist);
    for (const auto& g : classes) require_compatible(g, dist);
}

struct ClassTables {
    std::vector<std::vector<double>> losses;
    std::vector<double> exact;
    std::size_t classes = 0;

    ClassTables(std::span<const MultiClassTuple> list, const DistributionSpec& dist, double gamma)
        : classes(static_cast<std::size_t>(dist.classes))
    {
        for (const auto& g : list) {
            losses.push_back(loss_table(g, gamma));
            exact.push_back(exact_from_table(losses.back(), dist));
        }
    }

    double sup_deviation(const LabeledSample& sample, std::size_t begin, std::size_t end) const
    {
        double sup = -kInfinity;
        for (std::size_t i = 0; i < losses.size(); ++i) {
            sup = std::max(sup, exact[i] - empirical_from_table(losses[i], classes, sample, begin, end));
        }
        return sup;
    }
};

template <typename Draw>
void run_trials(const ClassTables& tables, const DeviationConfig& config, Draw&& draw, DeviationReport& report)
{
    report.class_size = tables.losses.size();
    report.exact_risks = tables.exact;
    report.sup_deviation.assign(config.trials, 0.0);
    report.exceeded.assign(config.trials, 0);
    parallel_for(config.trials, config.threads, [&](std::size_t t) {
        const auto sample = draw(t);
        report.sup_deviation[t] = tables.sup_deviation(sample, 0, sample.size());
        report.exceeded[t] = report.sup_deviation[t] > config.epsilon ? 1 : 0;
    });
    std::size_t hits = 0;
    for (auto e : report.exceeded) hits += e;
    const double trials = static_cast<double>(config.trials);
    report.p_hat = static_cast<double>(hits) / trials;
    report.std_error = std::sqrt(report.p_hat * (1.0 - report.p_hat) / trials);
    report.baseline = static_cast<double>(tables.losses.size()) *
                      std::exp(-2.0 * static_cast<double>(config.n) * config.epsilon * config.epsilon);
}

/// Covering number under d_1 of the truncated margins on an i.i.d. ghost draw
/// of size 2n. Exact within the cap, else the greedy upper bound m(eps).
std::size_t ghost_covering(std::span<const MultiClassTuple> classes, const DistributionSpec& dist,
                           const DeviationConfig& config, double scale)
{
    const auto ghost = sample_iid(dist, 2 * config.n, derive_seed(config.seed, "ghost-sample"));
    const auto labels = static_cast<std::size_t>(dist.classes);
    std::vector<double> values;
    values.reserve(classes.size() * ghost.size());
    for (const auto& g : classes) {
        const auto table = truncated_margin_table(g, config.gamma);
        for (std::size_t i = 0; i < ghost.size(); ++i) {
            values.push_back(table[ghost.cells[i] * labels + static_cast<std::size_t>(ghost.labels[i] - 1)]);
        }
    }
    const FiniteFunctionClass F(classes.size(), ghost.size(), std::move(values), config.gamma, "truncated margins");
    const auto distances = F.distances(LpOrder{1.0});
    if (F.size() <= ExactCaps{}.covering_functions) return exact_covering(distances, scale);
    return greedy_packing(distances, scale).members.size();
}

EntropyFn bv_entropy(const DistributionSpec& dist, const DeviationConfig& config)
{
    BoundParams params;
    params.side = dist.geometry.side;
    params.range = dist.geometry.range;
    params.variation = config.variation;
    params.dim = dist.geometry.dim;
    params.classes = dist.classes;
    params.gamma = config.gamma;
    params.epsilon = config.epsilon;
    validate(params);
    auto fat = fat_from_bv_bound(params);
    return [fat, params](double scale, double) {
        return cor2_entropy(params.classes, scale, params.gamma, params.range, fat).value;
    };
}

} // namespace

DeviationReport deviation_experiment(std::span<const MultiClassTuple> classes, const DistributionSpec& dist,
                                     const DeviationConfig& config)
{
    check_config(classes, dist, config);
    const double n = static_cast<double>(config.n);
    require(n > 2.0 / (config.epsilon * config.epsilon), "n > 2/eps^2 required");

    DeviationReport report;
    const ClassTables tables(classes, dist, config.gamma);
    run_trials(tables, config,
               [&](std::size_t t) { return sample_iid(dist, config.n, derive_seed(config.seed, "deviation-trial", t)); },
               report);

    report.covering_number = ghost_covering(classes, dist, config, config.epsilon * config.gamma / 8.0);
    report.bound_covering = thm1_rhs(n, config.epsilon, config.gamma,
                                     constant_entropy(std::log(static_cast<double>(report.covering_number))));
    report.bound_bv = thm1_rhs(n, config.epsilon, config.gamma, bv_entropy(dist, config));
    return report;
}

BlockPartition blocking(std::size_t n, std::size_t block_length)
{
    require(block_length >= 1, "a_n >= 1 required");
    require(n >= 2 * block_length && n % (2 * block_length) == 0, "2 a_n must divide n");
    BlockPartition out;
    out.block_length = block_length;
    out.blocks = n / (2 * block_length);
    for (std::size_t j = 1; j <= out.blocks; ++j) {
        out.odd.push_back({2 * (j - 1) * block_length + 1, (2 * j - 1) * block_length});
        out.even.push_back({(2 * j - 1) * block_length + 1, 2 * j * block_length});
    }
    return out;
}

MixingReport mixing_deviation_experiment(std::span<const MultiClassTuple> classes, const DistributionSpec& dist,
                                         const MixingConfig& config)
{
    const auto& base = config.base;
    check_config(classes, dist, base);
    require(config.rho >= 0.0 && config.rho < 1.0, "rho in [0, 1) required");

    MixingReport report;
    report.partition = blocking(base.n, config.block_length);
    const auto a = config.block_length;
    const auto b = report.partition.blocks;
    require(static_cast<double>(b) > 2.0 / (base.epsilon * base.epsilon * static_cast<double>(a)),
            "b_n > 2/(eps^2 a_n) required");

    const ClassTables tables(classes, dist, base.gamma);
    run_trials(tables, base,
               [&](std::size_t t) {
                   return sample_markov(dist, config.rho, base.n, derive_seed(base.seed, "deviation-trial", t));
               },
               report.deviation);

    const double rho = config.rho;
    const MixingFn beta = [rho](double k) { return std::pow(rho, k); };
    report.beta_at_block = beta(static_cast<double>(a));
    const double scale = base.epsilon * base.gamma / 16.0;
    report.deviation.covering_number = ghost_covering(classes, dist, base, scale);
    report.deviation.bound_covering =
        mixing_thm_rhs(b, a, base.epsilon, base.gamma, beta,
                       constant_entropy(std::log(static_cast<double>(report.deviation.covering_number))));
    report.deviation.bound_bv = mixing_thm_rhs(b, a, base.epsilon, base.gamma, beta, bv_entropy(dist, base));

    // Odd blocks replaced by independent stationary segments.
    report.surrogate_sup_deviation.assign(base.trials, 0.0);
    parallel_for(base.trials, base.threads, [&](std::size_t t) {
        const JointSampler sampler(dist);
        auto joined = sampler.empty_sample(a * b, derive_seed(base.seed, "surrogate-trial", t));
        for (std::size_t j = 0; j < b; ++j) {
            const auto block = sample_markov(dist, rho, a, derive_seed(base.seed, "surrogate-block", t * b + j));
            joined.points.insert(joined.points.end(), block.points.begin(), block.points.end());
            joined.cells.insert(joined.cells.end(), block.cells.begin(), block.cells.end());
            joined.labels.insert(joined.labels.end(), block.labels.begin(), block.labels.end());
        }
        report.surrogate_sup_deviation[t] = tables.sup_deviation(joined, 0, joined.size());
    });
    const auto hits = std::count_if(report.surrogate_sup_deviation.begin(), report.surrogate_sup_deviation.end(),
                                    [&](double d) { return d > base.epsilon; });
    report.surrogate_p_hat = static_cast<double>(hits) / static_cast<double>(base.trials);
    return report;
}

} // namespace capbound
