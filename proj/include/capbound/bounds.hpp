#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "capbound/core.hpp"

namespace capbound {

// ---------------------------------------------------------------------------
// Results and function handles

enum class BoundFlag : unsigned {
    vacuous_regime = 1u << 0,  // a log factor went negative and was clamped to 0
    overflow = 1u << 1,        // the value is +inf in double precision
    out_of_regime = 1u << 2,   // an assumption of the formula (e.g. fat >= 1) fails
    informative = 1u << 3,     // a probability bound below 1
};

struct BoundValue {
    double value = 0.0;
    unsigned flags = 0;

    bool has(BoundFlag flag) const { return (flags & static_cast<unsigned>(flag)) != 0; }
    void set(BoundFlag flag) { flags |= static_cast<unsigned>(flag); }
    /// Flag names joined by '|', empty when none are set.
    std::string flag_string() const;
};

/// Scale -> fat-shattering dimension d(scale).
using FatFn = std::function<double(double scale)>;
/// (scale, sample size) -> metric entropy ln N(scale, ., n).
using EntropyFn = std::function<double(double scale, double n)>;
/// Block length -> beta-mixing coefficient.
using MixingFn = std::function<double(double block)>;

FatFn constant_fat(double value);
FatFn fat_from_bv_bound(const BoundParams& params);
/// Upper envelope from measured estimates: min of `upper` over estimates at
/// scales <= the query, valid because d is non-increasing in the scale.
FatFn fat_from_estimates(std::vector<CapacityEstimate> estimates);
EntropyFn constant_entropy(double value);

/// Throws unless fn is nonnegative and non-increasing on the given scales.
void check_fat_fn(const FatFn& fn, std::span<const double> scales);
void check_entropy_fn(const EntropyFn& fn, std::span<const double> scales, double n);

enum class LogBase { natural, binary };

// ---------------------------------------------------------------------------
// Fat-shattering and metric entropy of the component class

/// (1 + A sqrt(V K d)/eps)^d for eps in (0, M].
double bv_fat_bound(const BoundParams& params, double epsilon);

/// 20 d(eps/96) ln(7M/eps).
BoundValue mv_entropy(double range, double epsilon, const FatFn& fat);

/// D log2(2Men/(D eps)) ln(16 M^2 n/eps^2) with D = d(eps/4).
BoundValue alon_entropy(double range, double n, double epsilon, const FatFn& fat);

enum class DuttaVariant { continuous, empirical };

/// K M (sqrt(d) A V K_P)^d / (d K_P^2) * (c/eps)^d with c = 1 (continuous)
/// or 2 (empirical).
BoundValue dutta_entropy(const BoundParams& params, double epsilon, DuttaVariant variant);

// ---------------------------------------------------------------------------
// Multi-class decompositions

/// C * H(eps / C^(1/p), n); C^(1/inf) = 1.
BoundValue decompose_entropy(int classes, LpOrder order, double epsilon, const EntropyFn& component_entropy,
                             double n);

/// 2C log2^d(2C) (60 A sqrt(VKd)/eps)^d ln(30 e n log2(2C) M/eps).
BoundValue musl_entropy(const BoundParams& params, double epsilon, double n);

/// 462 C d(eps/(96 sqrt C)) ln(24 M_G sqrt C / eps).
BoundValue duan_fat_decomposition(int classes, double epsilon, double range_g, const FatFn& fat);

/// 32 C D log^2(256 C M^2 D / eps^2), D = d(eps/4); base 2 by default.
BoundValue thm3_fat_decomposition(int classes, double epsilon, double range, const FatFn& fat,
                                  LogBase base = LogBase::binary);

/// 640 C D log^2(256 C M^2 D/eps^2) ln(7 gamma/eps), D = d(eps/384), eps in (0, gamma].
BoundValue cor2_entropy(int classes, double epsilon, double gamma, double range, const FatFn& fat,
                        LogBase base = LogBase::natural);

/// C^2 K_F^2 / eps^2.
double rad_fat_bound(int classes, double k_f, double epsilon);

// ---------------------------------------------------------------------------
// Deviation bounds and sample complexity

/// 2 exp(H(eps gamma/8, 2n)) exp(-n eps^2/32), for n > 2/eps^2.
BoundValue thm1_rhs(double n, double epsilon, double gamma, const EntropyFn& entropy);

/// 4 exp(H(eps gamma/16, 2n)) exp(-b eps^2/32) + 2 b beta(a), n = 2ab,
/// for b > 2/(eps^2 a).
BoundValue mixing_thm_rhs(std::uint64_t blocks, std::uint64_t block_length, double epsilon, double gamma,
                          const MixingFn& beta, const EntropyFn& entropy);

enum class Thm4Variant { alon, cor2 };

struct SampleSize {
    std::uint64_t n = 0;  // saturated at UINT64_MAX when raw overflows
    double raw = 0.0;
    unsigned flags = 0;
};

/// F = (A sqrt(VKd)/(eps gamma))^d; the smallest integer at least
///   (1/eps^2)(K1 C F ln^2(C M^2 F/(eps^2 gamma^2)) + ln(2/delta))            (alon)
///   (1/eps^2)(K2 C F ln^2(C M^2 F/(eps^2 gamma^2)) ln(1/eps) + ln(2/delta))  (cor2)
SampleSize thm4_sample_size(Thm4Variant variant, const BoundParams& params);

struct SampleSizePair {
    SampleSize alon;
    SampleSize cor2;
};

/// Both variants; requires K1 < K2.
SampleSizePair thm4_sample_sizes(const BoundParams& params);

enum class MixingKind { algebraic, exponential };

struct MixingRate {
    MixingKind kind = MixingKind::exponential;
    double beta0 = 1.0;      // beta_0 (algebraic) or beta'_0 (exponential)
    double beta_rate = 1.0;  // beta of the exponential rate
    double k = 1.0;          // algebraic exponent
    double k_prime = 1.0;    // exponential exponent
};

struct EffectiveComplexity {
    std::uint64_t blocks = 0;  // b_n
    double raw_blocks = 0.0;
    double block_length = 0.0; // a_n, real-valued
    double fat = 0.0;          // F = d(eps gamma / 6144)
    unsigned flags = 0;
};

EffectiveComplexity effective_sample_complexity(const BoundParams& params, const MixingRate& rate,
                                                const FatFn& fat);

// ---------------------------------------------------------------------------
// Auxiliary inequalities used inside the proofs

struct AuxResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// a log2^2(bx) <= x/2 + 16 a log2^2(16ab) for a, b, x >= 1.
AuxResult aux_bartlett_log(double a, double b, double x);

/// ln n <= sqrt(K n) + ln(4/(K e^2)) for K > 0, n >= 1.
AuxResult aux_ln_sqrt(double k, double n);

} // namespace capbound
