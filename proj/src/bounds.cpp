#include "capbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "capbound/error.hpp"

namespace capbound {

std::string BoundValue::flag_string() const
{
    std::string out;
    auto add = [&](BoundFlag flag, const char* name) {
        if (!has(flag)) return;
        if (!out.empty()) out += '|';
        out += name;
    };
    add(BoundFlag::vacuous_regime, "vacuous-regime");
    add(BoundFlag::overflow, "overflow");
    add(BoundFlag::out_of_regime, "out-of-regime");
    add(BoundFlag::informative, "informative");
    return out;
}

namespace {

/// log of `arg` in `base`, clamped at 0 (flagged) when the argument is below 1.
double clamped_log(double arg, LogBase base, BoundValue& result)
{
    if (!(arg >= 1.0)) {
        result.set(BoundFlag::vacuous_regime);
        return 0.0;
    }
    return base == LogBase::binary ? std::log2(arg) : std::log(arg);
}

BoundValue& finish(BoundValue& result)
{
    if (std::isnan(result.value)) throw std::runtime_error("bound evaluated to NaN");
    if (std::isinf(result.value)) result.set(BoundFlag::overflow);
    return result;
}

double checked_fat(const FatFn& fat, double scale)
{
    const double d = fat(scale);
    require(d >= 0.0 && !std::isnan(d), "fat-shattering function must be nonnegative");
    return d;
}

double checked_entropy(const EntropyFn& entropy, double scale, double n)
{
    const double h = entropy(scale, n);
    require(h >= 0.0 && !std::isnan(h), "entropy function must be nonnegative");
    return h;
}

void require_unit_open(double epsilon)
{
    require(epsilon > 0.0 && epsilon < 1.0, "eps in (0, 1) required");
}

void require_gamma(double gamma)
{
    require(gamma > 0.0 && gamma <= 1.0, "gamma in (0, 1] required");
}

} // namespace

// ---------------------------------------------------------------------------
// Handles

FatFn constant_fat(double value)
{
    require(value >= 0.0, "constant fat value must be >= 0");
    return [value](double) { return value; };
}

FatFn fat_from_bv_bound(const BoundParams& params)
{
    return [params](double scale) { return bv_fat_bound(params, scale); };
}

FatFn fat_from_estimates(std::vector<CapacityEstimate> estimates)
{
    for (const auto& e : estimates) {
        require(e.measure == Measure::fat, "fat function needs fat-shattering estimates");
    }
    return [estimates = std::move(estimates)](double scale) {
        double best = kInfinity;
        for (const auto& e : estimates) {
            if (e.scale <= scale) best = std::min(best, e.upper);
        }
        require(best < kInfinity, "no fat-shattering estimate at or below the requested scale");
        return best;
    };
}

EntropyFn constant_entropy(double value)
{
    require(value >= 0.0, "constant entropy must be >= 0");
    return [value](double, double) { return value; };
}

void check_fat_fn(const FatFn& fn, std::span<const double> scales)
{
    std::vector<double> sorted(scales.begin(), scales.end());
    std::sort(sorted.begin(), sorted.end());
    double previous = kInfinity;
    for (double s : sorted) {
        const double d = fn(s);
        require(d >= 0.0, "fat function must be nonnegative");
        require(d <= previous, "fat function must be non-increasing in the scale");
        previous = d;
    }
}

void check_entropy_fn(const EntropyFn& fn, std::span<const double> scales, double n)
{
    std::vector<double> sorted(scales.begin(), scales.end());
    std::sort(sorted.begin(), sorted.end());
    double previous = kInfinity;
    for (double s : sorted) {
        const double h = fn(s, n);
        require(h >= 0.0, "entropy function must be nonnegative");
        require(h <= previous, "entropy function must be non-increasing in the scale");
        previous = h;
    }
}

// ---------------------------------------------------------------------------
// Component class

double bv_fat_bound(const BoundParams& params, double epsilon)
{
    validate(params);
    require(epsilon > 0.0 && epsilon <= params.range, "eps in (0, M] required");
    const double spread = params.side * std::sqrt(params.variation * params.K * params.dim);
    return std::pow(1.0 + spread / epsilon, params.dim);
}

BoundValue mv_entropy(double range, double epsilon, const FatFn& fat)
{
    require(epsilon > 0.0, "eps > 0 required");
    require(range > 0.0, "M > 0 required");
    BoundValue out;
    const double d = checked_fat(fat, epsilon / 96.0);
    out.value = 20.0 * d * clamped_log(7.0 * range / epsilon, LogBase::natural, out);
    return finish(out);
}

BoundValue alon_entropy(double range, double n, double epsilon, const FatFn& fat)
{
    require(epsilon > 0.0, "eps > 0 required");
    require(range > 0.0, "M > 0 required");
    require(n >= 1.0, "n >= 1 required");
    BoundValue out;
    const double d = checked_fat(fat, epsilon / 4.0);
    if (d < 1.0) out.set(BoundFlag::out_of_regime);
    if (d <= 0.0) return out;
    const double log2_term =
        clamped_log(2.0 * range * std::numbers::e * n / (d * epsilon), LogBase::binary, out);
    const double ln_term = clamped_log(16.0 * range * range * n / (epsilon * epsilon), LogBase::natural, out);
    out.value = d * log2_term * ln_term;
    return finish(out);
}

BoundValue dutta_entropy(const BoundParams& params, double epsilon, DuttaVariant variant)
{
    validate(params);
    require(epsilon > 0.0 && epsilon <= params.range, "eps in (0, M] required");
    BoundValue out;
    const double d = params.dim;
    const double prefactor = params.K * params.range *
                             std::pow(std::sqrt(d) * params.side * params.variation * params.K_P, d) /
                             (d * params.K_P * params.K_P);
    const double numerator = variant == DuttaVariant::empirical ? 2.0 : 1.0;
    out.value = prefactor * std::pow(numerator / epsilon, d);
    return finish(out);
}

// ---------------------------------------------------------------------------
// Decompositions

BoundValue decompose_entropy(int classes, LpOrder order, double epsilon, const EntropyFn& component_entropy,
                             double n)
{
    require(classes >= 1, "C >= 1 required");
    require(order.p >= 1.0, "metric order p >= 1 required");
    require(epsilon > 0.0, "eps > 0 required");
    BoundValue out;
    const double shrink = order.is_infinite() ? 1.0 : std::pow(static_cast<double>(classes), 1.0 / order.p);
    out.value = classes * checked_entropy(component_entropy, epsilon / shrink, n);
    return finish(out);
}

BoundValue musl_entropy(const BoundParams& params, double epsilon, double n)
{
    validate(params);
    require(epsilon > 0.0, "eps > 0 required");
    require(n >= 1.0, "n >= 1 required");
    BoundValue out;
    const double c = params.classes;
    const double d = params.dim;
    const double log2c = std::log2(2.0 * c);
    const double spread = 60.0 * params.side * std::sqrt(params.variation * params.K * d) / epsilon;
    const double ln_term =
        clamped_log(30.0 * std::numbers::e * n * log2c * params.range / epsilon, LogBase::natural, out);
    out.value = 2.0 * c * std::pow(log2c, d) * std::pow(spread, d) * ln_term;
    return finish(out);
}

BoundValue duan_fat_decomposition(int classes, double epsilon, double range_g, const FatFn& fat)
{
    require(classes >= 1, "C >= 1 required");
    require(epsilon > 0.0, "eps > 0 required");
    require(range_g > 0.0, "M_G > 0 required");
    BoundValue out;
    const double root_c = std::sqrt(static_cast<double>(classes));
    const double d = checked_fat(fat, epsilon / (96.0 * root_c));
    out.value = 462.0 * classes * d * clamped_log(24.0 * range_g * root_c / epsilon, LogBase::natural, out);
    return finish(out);
}

BoundValue thm3_fat_decomposition(int classes, double epsilon, double range, const FatFn& fat, LogBase base)
{
    require(classes >= 1, "C >= 1 required");
    require(epsilon > 0.0, "eps > 0 required");
    require(range > 0.0, "M > 0 required");
    BoundValue out;
    const double d = checked_fat(fat, epsilon / 4.0);
    if (d < 1.0) out.set(BoundFlag::out_of_regime);
    const double l = clamped_log(256.0 * classes * range * range * d / (epsilon * epsilon), base, out);
    out.value = 32.0 * classes * d * l * l;
    return finish(out);
}

BoundValue cor2_entropy(int classes, double epsilon, double gamma, double range, const FatFn& fat, LogBase base)
{
    require(classes >= 1, "C >= 1 required");
    require_gamma(gamma);
    require(epsilon > 0.0 && epsilon <= gamma, "eps in (0, gamma] required");
    require(range > 0.0, "M > 0 required");
    BoundValue out;
    const double d = checked_fat(fat, epsilon / 384.0);
    if (d < 1.0) out.set(BoundFlag::out_of_regime);
    const double l = clamped_log(256.0 * classes * range * range * d / (epsilon * epsilon), base, out);
    out.value = 640.0 * classes * d * l * l * std::log(7.0 * gamma / epsilon);
    return finish(out);
}

double rad_fat_bound(int classes, double k_f, double epsilon)
{
    require(classes >= 1 && k_f > 0.0 && epsilon > 0.0, "C, K_F, eps > 0 required");
    const double c = classes;
    return c * c * k_f * k_f / (epsilon * epsilon);
}

// ---------------------------------------------------------------------------
// Deviation bounds

BoundValue thm1_rhs(double n, double epsilon, double gamma, const EntropyFn& entropy)
{
    require_unit_open(epsilon);
    require_gamma(gamma);
    require(n > 2.0 / (epsilon * epsilon), "n > 2/eps^2 required");
    BoundValue out;
    const double h = checked_entropy(entropy, epsilon * gamma / 8.0, 2.0 * n);
    out.value = 2.0 * std::exp(h - n * epsilon * epsilon / 32.0);
    if (out.value < 1.0) out.set(BoundFlag::informative);
    return finish(out);
}

BoundValue mixing_thm_rhs(std::uint64_t blocks, std::uint64_t block_length, double epsilon, double gamma,
                          const MixingFn& beta, const EntropyFn& entropy)
{
    require_unit_open(epsilon);
    require_gamma(gamma);
    require(blocks >= 1 && block_length >= 1, "b_n >= 1 and a_n >= 1 required");
    const double b = static_cast<double>(blocks);
    const double a = static_cast<double>(block_length);
    require(b > 2.0 / (epsilon * epsilon * a), "b_n > 2/(eps^2 a_n) required");
    const double n = 2.0 * a * b;
    const double beta_a = beta(a);
    require(beta_a >= 0.0, "mixing coefficient must be >= 0");
    BoundValue out;
    const double h = checked_entropy(entropy, epsilon * gamma / 16.0, 2.0 * n);
    out.value = 4.0 * std::exp(h - b * epsilon * epsilon / 32.0) + 2.0 * b * beta_a;
    if (out.value < 1.0) out.set(BoundFlag::informative);
    return finish(out);
}

// ---------------------------------------------------------------------------
// Sample complexity

namespace {

void require_sample_params(const BoundParams& params)
{
    validate(params);
    require_unit_open(params.epsilon);
    require_gamma(params.gamma);
}

SampleSize to_sample_size(double raw, const BoundValue& logs)
{
    SampleSize out;
    out.raw = raw;
    out.flags = logs.flags;
    const double n = std::ceil(raw);
    if (!(n < 0x1.0p64)) {
        out.n = ~std::uint64_t{0};
        out.flags |= static_cast<unsigned>(BoundFlag::overflow);
    } else {
        out.n = static_cast<std::uint64_t>(std::max(n, 0.0));
    }
    return out;
}

} // namespace

SampleSize thm4_sample_size(Thm4Variant variant, const BoundParams& params)
{
    require_sample_params(params);
    const double eps = params.epsilon;
    const double gamma = params.gamma;
    const double c = params.classes;
    const double big_f =
        std::pow(params.side * std::sqrt(params.variation * params.K * params.dim) / (eps * gamma), params.dim);
    BoundValue logs;
    const double l = clamped_log(c * params.range * params.range * big_f / (eps * eps * gamma * gamma),
                                 LogBase::natural, logs);
    const double confidence = std::log(2.0 / params.delta);
    double core = 0.0;
    if (variant == Thm4Variant::alon) {
        core = params.K1 * c * big_f * l * l;
    } else {
        core = params.K2 * c * big_f * l * l * std::log(1.0 / eps);
    }
    return to_sample_size((core + confidence) / (eps * eps), logs);
}

SampleSizePair thm4_sample_sizes(const BoundParams& params)
{
    require(params.K1 < params.K2, "0 < K1 < K2 required");
    return {thm4_sample_size(Thm4Variant::alon, params), thm4_sample_size(Thm4Variant::cor2, params)};
}

EffectiveComplexity effective_sample_complexity(const BoundParams& params, const MixingRate& rate,
                                                const FatFn& fat)
{
    require_sample_params(params);
    require(rate.beta0 > 0.0 && rate.beta_rate > 0.0 && rate.k > 0.0 && rate.k_prime > 0.0,
            "mixing parameters beta0, beta, k, k' > 0 required");
    const double eps = params.epsilon;
    const double gamma = params.gamma;
    const double c = params.classes;
    EffectiveComplexity out;
    out.fat = checked_fat(fat, eps * gamma / 6144.0);
    BoundValue logs;
    const double l = clamped_log(c * params.range * params.range * out.fat / (eps * eps * gamma * gamma),
                                 LogBase::natural, logs);
    const double inner = c * params.K3 * out.fat * l * l * std::log(1.0 / eps) +
                         std::log((4.0 + params.K1) / params.delta);
    const auto blocks = to_sample_size(inner / std::min(eps * eps / 32.0, params.K2), logs);
    out.blocks = blocks.n;
    out.raw_blocks = blocks.raw;
    out.flags = blocks.flags;

    const double b = std::ceil(blocks.raw);
    if (rate.kind == MixingKind::algebraic) {
        out.block_length = std::exp((std::log(rate.beta0) + params.K2 * b - std::log(params.K1)) / rate.k);
    } else {
        const double base = (params.K2 * b + std::log(rate.beta0 / params.K1)) / rate.beta_rate;
        if (base <= 0.0) {
            out.flags |= static_cast<unsigned>(BoundFlag::out_of_regime);
            out.block_length = 0.0;
        } else {
            out.block_length = std::pow(base, 1.0 / rate.k_prime);
        }
    }
    if (std::isinf(out.block_length)) out.flags |= static_cast<unsigned>(BoundFlag::overflow);
    return out;
}

// ---------------------------------------------------------------------------
// Auxiliary inequalities

AuxResult aux_bartlett_log(double a, double b, double x)
{
    require(a >= 1.0 && b >= 1.0 && x >= 1.0, "a, b, x >= 1 required");
    const long double la = a;
    const long double l1 = std::log2(static_cast<long double>(b) * x);
    const long double l2 = std::log2(16.0L * la * b);
    const long double lhs = la * l1 * l1;
    const long double rhs = static_cast<long double>(x) / 2.0L + 16.0L * la * l2 * l2;
    return {static_cast<double>(lhs), static_cast<double>(rhs), lhs <= rhs};
}

AuxResult aux_ln_sqrt(double k, double n)
{
    require(k > 0.0 && n >= 1.0, "K > 0 and n >= 1 required");
    // Equality holds at K n = 4, so evaluate in extended precision.
    const long double lk = k;
    const long double e2 = std::exp(2.0L);
    const long double lhs = std::log(static_cast<long double>(n));
    const long double rhs = std::sqrt(lk * n) + std::log(4.0L / (lk * e2));
    return {static_cast<double>(lhs), static_cast<double>(rhs), lhs <= rhs};
}

} // namespace capbound
