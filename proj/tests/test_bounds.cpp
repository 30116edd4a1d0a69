#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "capbound/bounds.hpp"
#include "capbound/error.hpp"
#include "capbound/rng.hpp"

using namespace capbound;

// Reference values below were recomputed with 40-digit arithmetic by
// tests/oracles/bounds_oracle.py.

namespace {

BoundParams unit_params()
{
    BoundParams p;
    p.classes = 1;
    return p;
}

constexpr double kRel = 1e-13;

} // namespace

TEST_CASE("bv_fat_bound")
{
    auto p = unit_params();
    CHECK(bv_fat_bound(p, 1.0) == 2.0);
    p.variation = 4.0;
    p.dim = 2;
    CHECK(bv_fat_bound(p, 0.5) == doctest::Approx(44.31370849898476).epsilon(kRel));
    CHECK_THROWS_AS(bv_fat_bound(p, 0.0), PreconditionError);
    CHECK_THROWS_AS(bv_fat_bound(p, 1.5), PreconditionError);
    double previous = kInfinity;
    for (int i = 1; i <= 50; ++i) {
        const double v = bv_fat_bound(p, i / 50.0);
        CHECK(v <= previous);
        previous = v;
    }
}

TEST_CASE("mv_entropy")
{
    CHECK(mv_entropy(1.0, 7.0, constant_fat(1)).value == 0.0);
    CHECK(mv_entropy(1.0, 0.7, constant_fat(1)).value == doctest::Approx(46.05170185988091).epsilon(kRel));
    CHECK(mv_entropy(1.0, 0.3, constant_fat(4)).value == 2.0 * mv_entropy(1.0, 0.3, constant_fat(2)).value);
    const auto vacuous = mv_entropy(1.0, 8.0, constant_fat(1));
    CHECK(vacuous.value == 0.0);
    CHECK(vacuous.has(BoundFlag::vacuous_regime));
    CHECK_THROWS_AS(mv_entropy(1.0, 0.0, constant_fat(1)), PreconditionError);
}

TEST_CASE("alon_entropy")
{
    CHECK(alon_entropy(1.0, 2.0, 1.0, constant_fat(1)).value == doctest::Approx(11.931471805599453).epsilon(kRel));
    // log2(e) ln 4 = 2 ln 2 / ln 2 = 2.
    CHECK(alon_entropy(1.0, 1.0, 2.0, constant_fat(1)).value == doctest::Approx(2.0).epsilon(kRel));
    double previous = 0.0;
    for (double n = 1; n <= 1e6; n *= 3) {
        const double v = alon_entropy(1.0, n, 0.5, constant_fat(1)).value;
        CHECK(v > previous);
        previous = v;
    }
    const auto low = alon_entropy(1.0, 4.0, 0.5, constant_fat(0.5));
    CHECK(low.has(BoundFlag::out_of_regime));
    CHECK(alon_entropy(1.0, 4.0, 0.5, constant_fat(0)).value == 0.0);
}

TEST_CASE("decompose_entropy")
{
    const EntropyFn h = [](double scale, double n) { return std::log1p(n / scale); };
    for (double p : {1.0, 2.0, 5.0, kInfinity}) {
        CHECK(decompose_entropy(1, LpOrder{p}, 0.3, h, 10).value == h(0.3, 10));
    }
    CHECK(decompose_entropy(7, LpOrder::infinity(), 0.3, h, 10).value == 7 * h(0.3, 10));
    CHECK(decompose_entropy(4, LpOrder{1.0}, 0.3, h, 10).value == 4 * h(0.3 / 4, 10));
}

TEST_CASE("musl_entropy")
{
    auto p = unit_params();
    CHECK(musl_entropy(p, 60.0, 1.0).value == doctest::Approx(0.6137056388801094).epsilon(kRel));
    const double eps = 0.5;
    const double reduced = 2.0 * (60.0 / eps) * std::log(30.0 * std::numbers::e * 4.0 / eps);
    CHECK(musl_entropy(p, eps, 4.0).value == doctest::Approx(reduced).epsilon(kRel));
    double previous = 0.0;
    for (int c = 1; c <= 16; ++c) {
        p.classes = c;
        const double v = musl_entropy(p, eps, 4.0).value;
        CHECK(v > previous);
        previous = v;
    }
}

TEST_CASE("duan_fat_decomposition")
{
    CHECK(duan_fat_decomposition(1, 24.0, 1.0, constant_fat(1)).value == 0.0);
    CHECK(duan_fat_decomposition(4, 24.0, 1.0, constant_fat(1)).value ==
          doctest::Approx(1280.935989674779).epsilon(kRel));
    CHECK(duan_fat_decomposition(4, 2.0, 1.0, constant_fat(3)).value ==
          doctest::Approx(3 * duan_fat_decomposition(4, 2.0, 1.0, constant_fat(1)).value).epsilon(kRel));
    const auto clamped = duan_fat_decomposition(1, 30.0, 1.0, constant_fat(1));
    CHECK(clamped.value == 0.0);
    CHECK(clamped.has(BoundFlag::vacuous_regime));
}

TEST_CASE("thm3_fat_decomposition")
{
    CHECK(thm3_fat_decomposition(1, 4.0, 1.0, constant_fat(1)).value == 512.0);
    CHECK(thm3_fat_decomposition(1, 16.0, 1.0, constant_fat(1)).value == 0.0);
    CHECK(thm3_fat_decomposition(1, 0.5, 1.0, constant_fat(0.5)).has(BoundFlag::out_of_regime));
    double previous = 0.0;
    for (int c = 1; c <= 20; ++c) {
        const double v = thm3_fat_decomposition(c, 0.5, 1.0, constant_fat(2)).value;
        CHECK(v > previous);
        previous = v;
    }
    const double natural = thm3_fat_decomposition(1, 4.0, 1.0, constant_fat(1), LogBase::natural).value;
    CHECK(natural == doctest::Approx(32.0 * std::pow(std::log(16.0), 2)).epsilon(kRel));
}

TEST_CASE("cor2_entropy")
{
    const double boundary = cor2_entropy(1, 0.5, 0.5, 1.0, constant_fat(1)).value;
    CHECK(boundary / (640.0 * std::pow(std::log(256.0 / 0.25), 2)) == doctest::Approx(1.9459101490553133).epsilon(kRel));
    CHECK(cor2_entropy(1, 0.5, 1.0, 1.0, constant_fat(1)).value == doctest::Approx(81148.35506666057).epsilon(kRel));
    CHECK_THROWS_AS(cor2_entropy(1, 0.6, 0.5, 1.0, constant_fat(1)), PreconditionError);
    double previous = 0.0;
    for (int c = 1; c <= 20; ++c) {
        const double v = cor2_entropy(c, 0.5, 1.0, 1.0, constant_fat(1)).value;
        CHECK(v > previous);
        CHECK(v <= c * cor2_entropy(1, 0.5, 1.0, 1.0, constant_fat(1)).value * (1.0 + std::log(c)));
        previous = v;
    }
}

TEST_CASE("dutta_entropy")
{
    auto p = unit_params();
    CHECK(dutta_entropy(p, 1.0, DuttaVariant::continuous).value == doctest::Approx(1.0).epsilon(kRel));
    p.dim = 2;
    CHECK(dutta_entropy(p, 0.5, DuttaVariant::continuous).value == doctest::Approx(4.0).epsilon(kRel));
    for (int d = 1; d <= 4; ++d) {
        p.dim = d;
        const double ratio =
            dutta_entropy(p, 0.3, DuttaVariant::empirical).value / dutta_entropy(p, 0.3, DuttaVariant::continuous).value;
        CHECK(ratio == doctest::Approx(std::pow(2.0, d)).epsilon(kRel));
    }
    CHECK_THROWS_AS(dutta_entropy(p, 1.5, DuttaVariant::continuous), PreconditionError);
}

TEST_CASE("thm1_rhs")
{
    const double eps = 0.5;
    const auto zero = thm1_rhs(32.0 / (eps * eps), eps, 1.0, constant_entropy(0));
    CHECK(std::abs(zero.value - 0.7357588823428847) <= 1e-12);
    CHECK(zero.has(BoundFlag::informative));
    double previous = kInfinity;
    for (double n = 10; n < 1e5; n *= 2) {
        const double v = thm1_rhs(n, eps, 1.0, constant_entropy(0)).value;
        CHECK(v < previous);
        previous = v;
    }
    CHECK_THROWS_AS(thm1_rhs(8.0, eps, 1.0, constant_entropy(0)), PreconditionError);
    CHECK_THROWS_AS(thm1_rhs(100.0, 1.0, 1.0, constant_entropy(0)), PreconditionError);

    // Composition with cor2 over the bounded-variation fat bound.
    auto p = unit_params();
    p.classes = 3;
    const auto fat = fat_from_bv_bound(p);
    const EntropyFn h = [&](double scale, double) { return cor2_entropy(3, scale, 1.0, 1.0, fat).value; };
    previous = kInfinity;
    BoundValue v;
    for (double n = 1e6; n <= 1e13; n *= 4) {
        v = thm1_rhs(n, 0.9, 1.0, h);
        CHECK(v.value <= previous);
        CHECK(v.has(BoundFlag::overflow) == (v.value == kInfinity));
        previous = v.value;
    }
    CHECK(v.has(BoundFlag::informative));
}

TEST_CASE("thm4_sample_size")
{
    auto p = unit_params();
    p.delta = 2.0 / std::exp(2.0);
    const auto alon = thm4_sample_size(Thm4Variant::alon, p);
    CHECK(alon.raw == doctest::Approx(42.5926170021105).epsilon(kRel));
    CHECK(alon.n == 43);
    p.delta = 0.05;
    CHECK(thm4_sample_size(Thm4Variant::cor2, p).raw == doctest::Approx(38.73329275965867).epsilon(kRel));

    std::uint64_t previous = 0;
    for (double delta : {0.5, 0.1, 1e-2, 1e-4, 1e-8}) {
        p.delta = delta;
        const auto n = thm4_sample_size(Thm4Variant::alon, p).n;
        CHECK(n > previous);
        previous = n;
    }
    p.delta = 0.05;
    for (auto variant : {Thm4Variant::alon, Thm4Variant::cor2}) {
        std::uint64_t last = 0;
        for (int c = 1; c <= 10; ++c) {
            p.classes = c;
            const auto n = thm4_sample_size(variant, p).n;
            CHECK(n > last);
            last = n;
        }
    }
    CHECK_THROWS_AS(thm4_sample_sizes(p), PreconditionError);
    p.K2 = 2.0;
    CHECK_NOTHROW(thm4_sample_sizes(p));
    p.epsilon = 1.0;
    CHECK_THROWS_AS(thm4_sample_size(Thm4Variant::alon, p), PreconditionError);
}

TEST_CASE("mixing_thm_rhs")
{
    const double eps = 0.5;
    const auto b = static_cast<std::uint64_t>(32.0 / (eps * eps));
    const MixingFn geometric = [](double k) { return std::pow(0.5, k); };
    const auto v = mixing_thm_rhs(b, 10, eps, 1.0, geometric, constant_entropy(0));
    CHECK(v.value == doctest::Approx(1.7215177646857693).epsilon(kRel));

    const MixingFn none = [](double) { return 0.0; };
    CHECK(mixing_thm_rhs(b, 10, eps, 1.0, none, constant_entropy(0)).value ==
          doctest::Approx(4.0 / std::numbers::e).epsilon(kRel));

    // With beta = 0 the bound is twice the i.i.d. bound on b blocks at half the scale.
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const double e = rng.uniform(0.05, 0.95);
        const double g = rng.uniform(0.05, 1.0);
        const std::uint64_t a = 1 + rng.below(20);
        const auto blocks = static_cast<std::uint64_t>(std::ceil(2.0 / (e * e * a))) + 1 + rng.below(50);
        const auto bb = std::max<std::uint64_t>(blocks, static_cast<std::uint64_t>(2.0 / (e * e)) + 1);
        const double n = 2.0 * a * bb;
        const EntropyFn h = [](double scale, double m) { return 0.01 * std::log1p(m) / scale; };
        const EntropyFn shifted = [&](double scale, double) { return h(scale / 2.0, 2.0 * n); };
        const double mixing = mixing_thm_rhs(bb, a, e, g, none, h).value;
        const double iid = thm1_rhs(static_cast<double>(bb), e, g, shifted).value;
        CHECK(mixing == 2.0 * iid);
    }

    double previous = kInfinity;
    for (std::uint64_t a : {2, 4, 8, 16}) {
        const std::uint64_t bb = 256 / a;
        const double term = 2.0 * bb * geometric(static_cast<double>(a));
        CHECK(term < previous);
        previous = term;
    }
    CHECK_THROWS_AS(mixing_thm_rhs(1, 1, eps, 1.0, none, constant_entropy(0)), PreconditionError);
}

TEST_CASE("effective_sample_complexity")
{
    BoundParams p;
    p.classes = 2;
    const MixingRate exponential{};
    const auto e = effective_sample_complexity(p, exponential, fat_from_bv_bound(p));
    CHECK(e.fat == doctest::Approx(12289.0).epsilon(kRel));
    CHECK(e.blocks == 288183372u);
    CHECK(e.block_length == doctest::Approx(288183372.0).epsilon(kRel));

    MixingRate algebraic;
    algebraic.kind = MixingKind::algebraic;
    const auto small = effective_sample_complexity(p, algebraic, constant_fat(0.01));
    CHECK(small.block_length == doctest::Approx(std::exp(static_cast<double>(small.blocks))).epsilon(1e-12));

    std::uint64_t previous = 0;
    for (double delta : {0.5, 0.1, 1e-3, 1e-9}) {
        p.delta = delta;
        const auto b = effective_sample_complexity(p, exponential, constant_fat(1)).blocks;
        CHECK(b > previous);
        previous = b;
    }
    MixingRate bad;
    bad.beta0 = 0.0;
    CHECK_THROWS_AS(effective_sample_complexity(p, bad, constant_fat(1)), PreconditionError);
}

TEST_CASE("rad_fat_bound")
{
    CHECK(rad_fat_bound(1, 1, 1) == 1.0);
    CHECK(rad_fat_bound(3, 2, 0.5) == 144.0);
    for (int c = 1; c < 20; ++c) CHECK(rad_fat_bound(2 * c, 1.3, 0.7) == 4.0 * rad_fat_bound(c, 1.3, 0.7));
}

TEST_CASE("auxiliary inequalities")
{
    const auto b = aux_bartlett_log(1, 1, 1);
    CHECK(b.lhs == 0.0);
    CHECK(b.rhs == 256.5);
    CHECK(b.holds);
    const auto l = aux_ln_sqrt(4.0 / std::exp(2.0), 1.0);
    CHECK(l.rhs == doctest::Approx(0.7357588823428847).epsilon(1e-12));
    CHECK(l.holds);

    Rng rng(99);
    std::size_t violations = 0;
    for (int i = 0; i < 100000; ++i) {
        if (!aux_bartlett_log(rng.uniform(1, 1e3), rng.uniform(1, 1e3), rng.uniform(1, 1e3)).holds) ++violations;
        if (!aux_ln_sqrt(rng.uniform(1e-3, 10), rng.uniform(1, 1e6)).holds) ++violations;
    }
    CHECK(violations == 0);
    CHECK_THROWS_AS(aux_bartlett_log(0.5, 1, 1), PreconditionError);
    CHECK_THROWS_AS(aux_ln_sqrt(0.0, 1), PreconditionError);
}

TEST_CASE("entropy evaluators are nonnegative and non-increasing in the scale")
{
    BoundParams p;
    p.variation = 2.0;
    p.dim = 2;
    const auto fat = fat_from_bv_bound(p);
    std::vector<double> scales;
    for (int i = 1; i <= 40; ++i) scales.push_back(0.025 * i);

    const std::vector<EntropyFn> evaluators = {
        [&](double s, double) { return mv_entropy(1.0, s, fat).value; },
        // D log(2Men/(D eps)) only decreases in D while D < 2Mn/eps, hence the large n.
        [&](double s, double) { return alon_entropy(1.0, 1e6, s, fat).value; },
        [&](double s, double n) { return musl_entropy(p, s, n).value; },
        [&](double s, double) { return dutta_entropy(p, s, DuttaVariant::continuous).value; },
        [&](double s, double) { return dutta_entropy(p, s, DuttaVariant::empirical).value; },
        [&](double s, double) { return cor2_entropy(3, s, 1.0, 1.0, fat).value; },
        [&](double s, double) { return duan_fat_decomposition(3, s, 1.0, fat).value; },
        [&](double s, double) { return thm3_fat_decomposition(3, s, 1.0, fat).value; },
    };
    for (const auto& h : evaluators) CHECK_NOTHROW(check_entropy_fn(h, scales, 100.0));
    CHECK_NOTHROW(check_fat_fn(fat, scales));
    CHECK_THROWS_AS(check_fat_fn([](double s) { return s; }, scales), PreconditionError);
}

TEST_CASE("C = 1 never exceeds C = 2")
{
    Rng rng(4);
    for (int i = 0; i < 500; ++i) {
        const double eps = rng.uniform(0.01, 2.0);
        const double fat = rng.uniform(1.0, 50.0);
        CHECK(thm3_fat_decomposition(1, eps, 1.0, constant_fat(fat)).value <=
              thm3_fat_decomposition(2, eps, 1.0, constant_fat(fat)).value);
        CHECK(duan_fat_decomposition(1, eps, 1.0, constant_fat(fat)).value <=
              duan_fat_decomposition(2, eps, 1.0, constant_fat(fat)).value);
    }
}

TEST_CASE("fat function from estimates")
{
    std::vector<CapacityEstimate> estimates(2);
    estimates[0].measure = estimates[1].measure = Measure::fat;
    estimates[0].scale = 0.1;
    estimates[0].upper = 5;
    estimates[1].scale = 0.3;
    estimates[1].upper = 2;
    const auto fat = fat_from_estimates(estimates);
    CHECK(fat(0.2) == 5.0);
    CHECK(fat(0.5) == 2.0);
    CHECK_THROWS_AS(fat(0.05), PreconditionError);
}

TEST_CASE("overflow is reported, not saturated")
{
    auto p = unit_params();
    p.dim = 200;
    const auto big = cor2_entropy(1, 1e-3, 1.0, 1.0, fat_from_bv_bound(p));
    CHECK(std::isinf(big.value));
    CHECK(big.has(BoundFlag::overflow));
    CHECK(big.flag_string() == "overflow");
}
