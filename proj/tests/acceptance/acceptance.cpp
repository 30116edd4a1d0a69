// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "capbound/bounds.hpp"
#include "capbound/capacity.hpp"
#include "capbound/experiments.hpp"
#include "capbound/rng.hpp"

using namespace capbound;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
        outcome = body();
    } catch (const std::exception& e) {
        outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > limit_s) {
        outcome.pass = false;
        outcome.detail += "; over time limit";
    }
    if (!outcome.pass) ++failures;
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2fs/%.0fs", elapsed, limit_s);
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << ") [" << timing
              << "] " << outcome.detail << std::endl;
}

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::string lemma_detail(const LemmaReport& r)
{
    std::string s = std::to_string(r.cases) + " cases, " + std::to_string(r.checks) + " checks, " +
                    std::to_string(r.failed) + " failed, max d=" + std::to_string(r.max_dimension);
    if (!r.failures.empty()) s += "; first: " + r.failures.front();
    return s;
}

// Values of `count` random_bv functions on `points` distinct cells.
FiniteFunctionClass sampled_bv_class(const GridGeometry& geometry, double variation, std::size_t count,
                                     std::size_t points, std::uint64_t seed)
{
    const std::size_t cells = geometry.cell_count();
    std::vector<std::size_t> order(cells);
    for (std::size_t i = 0; i < cells; ++i) order[i] = i;
    Rng rng(seed, "acceptance-points");
    for (std::size_t i = 0; i < points; ++i) std::swap(order[i], order[i + rng.below(cells - i)]);
    std::vector<double> values;
    for (std::size_t f = 0; f < count; ++f) {
        const auto g = random_bv(geometry, variation, derive_seed(seed, "acceptance-member", f));
        for (std::size_t i = 0; i < points; ++i) values.push_back(g.at_cell(order[i]));
    }
    return FiniteFunctionClass(count, points, std::move(values), geometry.range);
}

Outcome bv_fat_consistency()
{
    struct Failure {
        BoundParams params;
        double epsilon;
        double lower;
    };
    std::vector<Failure> failed;
    std::size_t configs = 0;
    double worst_ratio = 0.0;
    const double M = 1.0;
    for (int d : {1, 2}) {
        for (int G : {4, 8}) {
            for (double V : {1.0, 2.0, 4.0}) {
                const GridGeometry geometry{d, 1.0, G, M};
                for (double eps : {M / 8, M / 4, M / 2}) {
                    for (std::uint64_t rep = 0; rep < 4; ++rep) {
                        const std::uint64_t seed =
                            derive_seed(1000 * static_cast<std::uint64_t>(d) + G, "acceptance-bv", rep);
                        const auto points = std::min<std::size_t>(8, geometry.cell_count());
                        const auto F = sampled_bv_class(geometry, V, 12, points, seed);
                        const auto fat = fat_shattering_dimension(F, eps, RandomizedMode{4000, seed});
                        BoundParams params;
                        params.dim = d;
                        params.variation = V;
                        params.range = M;
                        params.K = 1.0;
                        const double bound = bv_fat_bound(params, eps);
                        worst_ratio = std::max(worst_ratio, fat.estimate.lower / bound);
                        if (fat.estimate.lower > bound) failed.push_back({params, eps, fat.estimate.lower});
                        ++configs;
                    }
                }
            }
        }
    }
    std::string detail = std::to_string(configs) + " classes, max lower/bound=" + num(worst_ratio);
    if (failed.empty()) return {true, detail};

    // The bound grows with K, so bisect for the smallest K that covers every failure.
    auto covers = [&](double K) {
        for (auto f : failed) {
            f.params.K = K;
            if (bv_fat_bound(f.params, f.epsilon) < f.lower) return false;
        }
        return true;
    };
    double lo = 1.0, hi = 2.0;
    while (!covers(hi)) hi *= 2.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (covers(mid) ? hi : lo) = mid;
    }
    return {false, detail + "; " + std::to_string(failed.size()) + " failures with K=1, minimal K=" + num(hi)};
}

Outcome aux_inequalities()
{
    Rng rng(2024, "acceptance-aux");
    std::size_t bartlett = 0, ln_sqrt = 0;
    const std::size_t draws = 100000;
    for (std::size_t i = 0; i < draws; ++i) {
        if (!aux_bartlett_log(rng.uniform(1.0, 1e3), rng.uniform(1.0, 1e3), rng.uniform(1.0, 1e3)).holds) {
            ++bartlett;
        }
        const double k = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
        const double n = std::exp(rng.uniform(0.0, std::log(1e6)));
        if (!aux_ln_sqrt(k, n).holds) ++ln_sqrt;
    }
    return {bartlett == 0 && ln_sqrt == 0, std::to_string(draws) + " draws each; violations: bartlett_log=" +
                                               std::to_string(bartlett) + ", ln_sqrt=" + std::to_string(ln_sqrt)};
}

// Shared configuration of the deviation criteria.
const GridGeometry kGeometry{1, 1.0, 8, 1.0};
constexpr int kClasses = 3;
constexpr double kVariation = 2.0;

std::vector<MultiClassTuple> deviation_class()
{
    return random_tuple_class(kGeometry, kClasses, 8, kVariation, 77);
}

DeviationConfig deviation_config(std::uint64_t seed)
{
    DeviationConfig c;
    c.n = 2048;
    c.epsilon = 0.1;
    c.gamma = 0.5;
    c.trials = 2000;
    c.seed = seed;
    c.variation = kVariation;
    return c;
}

// Checks p_hat against a bound only in its informative regime.
bool within(double p_hat, double se, const BoundValue& bound, std::string& detail, const std::string& label)
{
    detail += ", " + label + "=" + num(bound.value);
    if (!(bound.value < 1.0)) {
        detail += " (>= 1, not checked)";
        return true;
    }
    return p_hat <= bound.value + 3.0 * se;
}

double deviation_p_hat = 0.0;
double deviation_se = 0.0;

Outcome iid_deviation()
{
    const auto classes = deviation_class();
    const auto r = deviation_experiment(classes, DistributionSpec::uniform(kGeometry, kClasses), deviation_config(5));
    deviation_p_hat = r.p_hat;
    deviation_se = r.std_error;
    std::string detail = "p_hat=" + num(r.p_hat) + ", SE=" + num(r.std_error) + ", baseline=" + num(r.baseline);
    bool ok = r.p_hat <= r.baseline + 3.0 * r.std_error;
    ok = within(r.p_hat, r.std_error, r.bound_covering, detail, "bound(covering N=" +
                                                                      std::to_string(r.covering_number) + ")") && ok;
    ok = within(r.p_hat, r.std_error, r.bound_bv, detail, "bound(bv)") && ok;
    return {ok, detail};
}

Outcome mixing_deviation()
{
    const auto classes = deviation_class();
    const auto dist = DistributionSpec::uniform(kGeometry, kClasses);
    MixingConfig config{deviation_config(5), 0.5, 16};
    const auto r = mixing_deviation_experiment(classes, dist, config);
    const auto& dev = r.deviation;
    std::string detail = "rho=0.5: p_hat=" + num(dev.p_hat) + ", SE=" + num(dev.std_error) +
                         ", beta(a_n)=" + num(r.beta_at_block);
    bool ok = within(dev.p_hat, dev.std_error, dev.bound_covering, detail, "bound(covering)");
    ok = within(dev.p_hat, dev.std_error, dev.bound_bv, detail, "bound(bv)") && ok;

    // Independent seed, so the comparison with the i.i.d. run is statistical.
    MixingConfig iid{deviation_config(6), 0.0, 16};
    const auto r0 = mixing_deviation_experiment(classes, dist, iid);
    const double se = std::hypot(r0.deviation.std_error, deviation_se);
    const bool agrees = std::abs(r0.deviation.p_hat - deviation_p_hat) <= 3.0 * se;
    detail += "; rho=0: p_hat=" + num(r0.deviation.p_hat) + " vs " + num(deviation_p_hat);
    return {ok && agrees, detail};
}

Outcome oracle_equivalences()
{
    Rng rng(4242, "acceptance-oracles");
    std::size_t sandwich_bad = 0;
    for (int t = 0; t < 200; ++t) {
        const auto F = random_tiny_class(rng, 12, 8, t % 3 == 0);
        const double eps = rng.uniform(0.05, 1.0);
        const auto D = F.distances(t % 2 ? LpOrder{1.0} : LpOrder::infinity());
        const auto exact = exact_covering(D, eps);
        if (greedy_packing(D, 2 * eps).members.size() > exact || exact > greedy_packing(D, eps).members.size()) {
            ++sandwich_bad;
        }
    }

    std::size_t mc_inside = 0;
    for (int t = 0; t < 50; ++t) {
        const auto F = random_tiny_class(rng, 8, 8, false);
        const double exact = exact_rademacher(F);
        const auto mc = rademacher(F, MonteCarloMode{4000, rng.next_u64()});
        if (std::abs(*mc.estimate - exact) <= 3.0 * *mc.std_error + 1e-12) ++mc_inside;
    }

    std::size_t contradictions = 0, shattered = 0;
    for (int t = 0; t < 50; ++t) {
        const auto F = random_tiny_class(rng, 8, 3, t % 2 == 0);
        const double eps = rng.uniform(0.05, 0.5);
        std::vector<std::size_t> pts(F.points());
        for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = i;
        const auto check = fat_shattering_check(F, pts, eps);
        if (check.shattered) {
            ++shattered;
            if (!shatters_with_witness(F, pts, check.witness, eps)) ++contradictions;
            continue;
        }
        std::vector<double> s(pts.size());
        for (int draw = 0; draw < 10000; ++draw) {
            for (double& v : s) v = rng.uniform(-1.0 - eps, 1.0 + eps);
            if (shatters_with_witness(F, pts, s, eps)) ++contradictions;
        }
    }

    const bool ok = sandwich_bad == 0 && mc_inside == 50 && contradictions == 0;
    return {ok, "sandwich violations=" + std::to_string(sandwich_bad) + "/200, MC within 3 SE=" +
                    std::to_string(mc_inside) + "/50, witness contradictions=" + std::to_string(contradictions) +
                    " (" + std::to_string(shattered) + "/50 shattered)"};
}

Outcome spot_values()
{
    std::vector<std::string> bad;
    BoundParams p;
    p.side = 1.0;
    p.variation = 1.0;
    p.K = 1.0;
    p.dim = 1;
    if (bv_fat_bound(p, 1.0) != 2.0) bad.push_back("bv_fat_bound");
    if (thm3_fat_decomposition(1, 4.0, 1.0, constant_fat(1.0)).value != 512.0) bad.push_back("thm3");
    const double eps = 0.5;
    const double thm1 = thm1_rhs(32.0 / (eps * eps), eps, 1.0, constant_entropy(0.0)).value;
    if (std::abs(thm1 - 2.0 / std::exp(1.0)) > 1e-12) bad.push_back("thm1_rhs");
    const auto blocks = blocking(8, 2);
    const std::vector<IndexRange> odd{{1, 2}, {5, 6}}, even{{3, 4}, {7, 8}};
    if (blocks.blocks != 2 || blocks.odd != odd || blocks.even != even) bad.push_back("blocking");
    std::string detail = "bv_fat_bound=2, thm3=512, thm1_rhs=" + num(thm1) + ", blocking(8,2)";
    for (const auto& b : bad) detail += "; mismatch: " + b;
    return {bad.empty(), detail};
}

std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome cli_determinism()
{
    const auto dir = std::filesystem::temp_directory_path() / "capbound_acceptance";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "malformed.json") << "{\"epsilon\": ";

    const std::vector<std::pair<std::string, int>> examples = {
        {"bounds --formula bv-fat --A 1 --V 1 --K 1 --d 1 --epsilon 1", 0},
        {"lemmas --suite lemma1 --cases 100 --seed 3", 0},
        {"bounds --config " + (dir / "malformed.json").string(), 2},
        {"bounds --formula bv-fat --sweep epsilon=0.1:1:10", 0},
        {"bounds --formula bv-fat --sweep epsilon=0.1:1:0", 0},
        {"capacity --measure fat --epsilons 0.05,0.1,0.2 --seed 5", 0},
        {"capacity --measure rademacher --mode mc --seed 5", 0},
        {"deviation --trials 50 --n 512 --seed 9", 0},
        {"mixing --trials 50 --n 512 --a-n 16 --rho 0.5 --seed 9", 0},
        {"sample-size --C 2 --K2 2", 0},
    };
    std::size_t mismatched = 0, wrong_exit = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        std::string outputs[2];
        for (int rep = 0; rep < 2; ++rep) {
            const auto base = dir / ("run" + std::to_string(i) + "_" + std::to_string(rep));
            const std::string cmd = std::string(CAPBOUND_EXE) + " " + examples[i].first + " --out " +
                                    base.string() + ".json --csv " + base.string() + ".csv 2> " + base.string() +
                                    ".err";
            const int status = std::system(cmd.c_str());
            const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
            if (code != examples[i].second) ++wrong_exit;
            outputs[rep] = slurp(base.string() + ".json") + '\0' + slurp(base.string() + ".csv") + '\0' +
                           slurp(base.string() + ".err");
        }
        if (outputs[0] != outputs[1]) ++mismatched;
    }
    std::filesystem::remove_all(dir);
    return {mismatched == 0 && wrong_exit == 0, std::to_string(examples.size()) + " examples, " +
                                                    std::to_string(mismatched) + " differing reruns, " +
                                                    std::to_string(wrong_exit) + " unexpected exit codes"};
}

} // namespace

int main()
{
    criterion(1, "fat dimension vs L_inf covering", 60, [] {
        const auto r = lemma_checks(LemmaSuite::lemma1, 1, 200);
        return Outcome{r.failed == 0 && r.cases >= 100, lemma_detail(r)};
    });
    criterion(2, "Rademacher vs fat dimension", 120, [] {
        const auto r = lemma_checks(LemmaSuite::lemmaB1, 2, 60);
        return Outcome{r.failed == 0 && r.cases >= 50, lemma_detail(r)};
    });
    criterion(3, "randomized fat lower bounds under the bv bound", 600, bv_fat_consistency);
    criterion(4, "auxiliary inequalities", 10, aux_inequalities);
    criterion(5, "i.i.d. uniform deviation", 300, iid_deviation);
    criterion(6, "beta-mixing uniform deviation", 600, mixing_deviation);
    criterion(7, "oracle equivalences", 300, oracle_equivalences);
    criterion(8, "formula spot values", 1, spot_values);
    criterion(9, "CLI determinism", 300, cli_determinism);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
