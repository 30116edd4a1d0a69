#include "capbound/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "capbound/bounds.hpp"
#include "capbound/capacity.hpp"
#include "capbound/error.hpp"
#include "capbound/experiments.hpp"
#include "capbound/io.hpp"

namespace capbound {

namespace {

// ---------------------------------------------------------------------------
// Parameter tables

enum class Kind { real, integer, text, object, list };

struct Param {
    std::string key;
    Kind kind;
    Json fallback;
    std::string help;
};

struct Context {
    Json config;
    std::set<std::string> explicit_keys;
    unsigned threads = 0;
};

struct Outcome {
    Json results;
    CsvTable table;
    int exit_code = 0;
};

using Handler = Outcome (*)(const Context&);

struct Command {
    std::string name;
    std::string help;
    std::vector<Param> params;
    Handler handler;
};

std::string flag_name(const std::string& key)
{
    std::string out = "--" + key;
    std::replace(out.begin() + 2, out.end(), '_', '-');
    return out;
}

double parse_real(const std::string& raw, const std::string& key)
{
    if (raw == "inf" || raw == "+inf" || raw == "infinity") return kInfinity;
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    require(!raw.empty() && end == raw.c_str() + raw.size() && std::isfinite(v),
            key + " must be a real number, got '" + raw + "'");
    return v;
}

std::uint64_t parse_integer(const std::string& raw, const std::string& key)
{
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    require(!raw.empty() && ec == std::errc{} && ptr == raw.data() + raw.size(),
            key + " must be a nonnegative integer, got '" + raw + "'");
    return v;
}

Json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return Json::parse(buffer.str());
    } catch (const Json::parse_error& e) {
        throw PreconditionError("malformed JSON in '" + path + "': " + e.what());
    }
}

Json value_from_flag(const Param& p, const std::string& raw)
{
    switch (p.kind) {
    case Kind::real:
        return real_to_json(parse_real(raw, p.key));
    case Kind::integer:
        return parse_integer(raw, p.key);
    case Kind::text:
        return raw;
    case Kind::object: {
        if (!raw.empty() && raw.front() == '{') {
            try {
                return Json::parse(raw);
            } catch (const Json::parse_error& e) {
                throw PreconditionError("malformed JSON for " + p.key + ": " + e.what());
            }
        }
        auto j = read_json_file(raw);
        require(j.is_object(), p.key + " must be a JSON object");
        return j;
    }
    case Kind::list: {
        Json out = Json::array();
        std::stringstream in(raw);
        std::string item;
        while (std::getline(in, item, ',')) out.push_back(real_to_json(parse_real(item, p.key)));
        return out;
    }
    }
    return nullptr;
}

Json value_from_config(const Param& p, const Json& v)
{
    if (v.is_null()) return v;
    const std::string where = "config key '" + p.key + "'";
    switch (p.kind) {
    case Kind::real:
        if (v.is_string()) return real_to_json(parse_real(v.get<std::string>(), p.key));
        require(v.is_number(), where + " must be a real number");
        return v;
    case Kind::integer:
        if (v.is_number_unsigned()) return v;
        require(v.is_number_integer() && v.get<std::int64_t>() >= 0, where + " must be a nonnegative integer");
        return v.get<std::uint64_t>();
    case Kind::text:
        require(v.is_string(), where + " must be a string");
        return v;
    case Kind::object:
        require(v.is_object(), where + " must be a JSON object");
        return v;
    case Kind::list: {
        require(v.is_array(), where + " must be an array of reals");
        Json out = Json::array();
        for (const auto& item : v) {
            require(item.is_number() || item.is_string(), where + " must be an array of reals");
            out.push_back(item.is_string() ? real_to_json(parse_real(item.get<std::string>(), p.key)) : item);
        }
        return out;
    }
    }
    return v;
}

const Param& find_param(const std::vector<Param>& params, const std::string& key)
{
    for (const auto& p : params) {
        if (p.key == key) return p;
    }
    throw PreconditionError("unknown parameter '" + key + "'");
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& what)
{
    for (const auto& [key, value] : j.items()) {
        require(allowed.count(key) != 0, "unknown key '" + key + "' in " + what);
    }
}

// ---------------------------------------------------------------------------
// Typed access to the resolved config

double real(const Json& cfg, const std::string& key) { return real_from_json(cfg.at(key)); }
std::uint64_t integer(const Json& cfg, const std::string& key) { return cfg.at(key).get<std::uint64_t>(); }
std::string text(const Json& cfg, const std::string& key) { return cfg.at(key).get<std::string>(); }
bool given(const Json& cfg, const std::string& key) { return !cfg.at(key).is_null(); }

int small_int(const Json& cfg, const std::string& key)
{
    const auto v = integer(cfg, key);
    require(v <= 1000000, key + " is too large");
    return static_cast<int>(v);
}

std::vector<Param> symbol_params()
{
    return {
        {"A", Kind::real, 1.0, "side length of the domain cube"},
        {"M", Kind::real, 1.0, "range bound of the component functions"},
        {"V", Kind::real, 1.0, "total variation bound"},
        {"d", Kind::integer, 1, "input dimension"},
        {"C", Kind::integer, 3, "number of classes"},
        {"gamma", Kind::real, 1.0, "margin parameter in (0, 1]"},
        {"epsilon", Kind::real, 0.5, "scale / accuracy"},
        {"delta", Kind::real, 0.05, "confidence parameter in (0, 1)"},
        {"K", Kind::real, 1.0, "fat-shattering constant"},
        {"K_P", Kind::real, 1.0, "density bound constant"},
        {"K1", Kind::real, 1.0, "sample-size constant K1"},
        {"K2", Kind::real, 1.0, "sample-size constant K2"},
        {"K3", Kind::real, 1.0, "mixing sample-size constant K3"},
        {"K_F", Kind::real, 1.0, "Rademacher class constant"},
    };
}

std::vector<Param> mixing_rate_params()
{
    return {
        {"kind", Kind::text, "exponential", "mixing rate: algebraic | exponential"},
        {"beta0", Kind::real, 1.0, "beta_0 (algebraic) or beta'_0 (exponential)"},
        {"beta", Kind::real, 1.0, "exponential rate beta"},
        {"k", Kind::real, 1.0, "algebraic exponent"},
        {"k_prime", Kind::real, 1.0, "exponential exponent"},
    };
}

BoundParams params_from(const Json& cfg)
{
    BoundParams p;
    p.side = real(cfg, "A");
    p.range = real(cfg, "M");
    p.variation = real(cfg, "V");
    p.dim = small_int(cfg, "d");
    p.classes = small_int(cfg, "C");
    p.gamma = real(cfg, "gamma");
    p.epsilon = real(cfg, "epsilon");
    p.delta = real(cfg, "delta");
    p.K = real(cfg, "K");
    p.K_P = real(cfg, "K_P");
    p.K1 = real(cfg, "K1");
    p.K2 = real(cfg, "K2");
    p.K3 = real(cfg, "K3");
    p.K_F = real(cfg, "K_F");
    validate(p);
    return p;
}

MixingRate rate_from(const Json& cfg)
{
    MixingRate rate;
    const auto kind = text(cfg, "kind");
    require(kind == "algebraic" || kind == "exponential", "kind must be algebraic or exponential");
    rate.kind = kind == "algebraic" ? MixingKind::algebraic : MixingKind::exponential;
    rate.beta0 = real(cfg, "beta0");
    rate.beta_rate = real(cfg, "beta");
    rate.k = real(cfg, "k");
    rate.k_prime = real(cfg, "k_prime");
    return rate;
}

void require_ordered_constants(const Context& ctx, const BoundParams& p)
{
    if (ctx.explicit_keys.count("K1") && ctx.explicit_keys.count("K2")) {
        require(p.K1 < p.K2, "0 < K1 < K2 required");
    }
}

Json flags_json(unsigned flags)
{
    Json out = Json::array();
    const BoundValue probe{0.0, flags};
    const std::pair<BoundFlag, const char*> names[] = {
        {BoundFlag::vacuous_regime, "vacuous-regime"},
        {BoundFlag::overflow, "overflow"},
        {BoundFlag::out_of_regime, "out-of-regime"},
        {BoundFlag::informative, "informative"},
    };
    for (const auto& [flag, name] : names) {
        if (probe.has(flag)) out.push_back(name);
    }
    return out;
}

std::string flags_text(unsigned flags) { return BoundValue{0.0, flags}.flag_string(); }

Json bound_json(const BoundValue& b) { return Json{{"value", real_to_json(b.value)}, {"flags", flags_json(b.flags)}}; }

std::string csv_value(const Json& v)
{
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number()) return format_real(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

// ---------------------------------------------------------------------------
// bounds

struct Evaluation {
    Json value;
    unsigned flags = 0;
    Json details = Json::object();
};

FatFn fat_from(const Json& cfg, const BoundParams& p)
{
    if (given(cfg, "fat")) return constant_fat(real(cfg, "fat"));
    return fat_from_bv_bound(p);
}

EntropyFn entropy_from(const Json& cfg, const BoundParams& p)
{
    if (given(cfg, "entropy")) return constant_entropy(real(cfg, "entropy"));
    auto fat = fat_from(cfg, p);
    return [fat, p](double scale, double) { return cor2_entropy(p.classes, scale, p.gamma, p.range, fat).value; };
}

LogBase base_from(const Json& cfg, LogBase fallback)
{
    if (!given(cfg, "base")) return fallback;
    const auto b = text(cfg, "base");
    if (b == "2" || b == "binary") return LogBase::binary;
    if (b == "e" || b == "natural") return LogBase::natural;
    throw PreconditionError("base must be 2 | binary | e | natural");
}

Evaluation from_bound(const BoundValue& b) { return {real_to_json(b.value), b.flags, Json::object()}; }

Evaluation evaluate_formula(const Context& ctx, const Json& cfg)
{
    const auto formula = text(cfg, "formula");
    const auto p = params_from(cfg);
    const double eps = p.epsilon;
    const double n = real(cfg, "n");

    if (formula == "bv-fat") return {real_to_json(bv_fat_bound(p, eps)), 0, Json::object()};
    if (formula == "mv") return from_bound(mv_entropy(p.range, eps, fat_from(cfg, p)));
    if (formula == "alon") return from_bound(alon_entropy(p.range, n, eps, fat_from(cfg, p)));
    if (formula == "decompose") {
        const double order = real(cfg, "p");
        const LpOrder lp = std::isinf(order) ? LpOrder::infinity() : LpOrder{order};
        EntropyFn component;
        if (given(cfg, "entropy")) {
            component = constant_entropy(real(cfg, "entropy"));
        } else {
            component = [p](double scale, double) { return dutta_entropy(p, scale, DuttaVariant::empirical).value; };
        }
        return from_bound(decompose_entropy(p.classes, lp, eps, component, n));
    }
    if (formula == "musl") return from_bound(musl_entropy(p, eps, n));
    if (formula == "duan") {
        const double range_g = given(cfg, "M_G") ? real(cfg, "M_G") : p.range;
        return from_bound(duan_fat_decomposition(p.classes, eps, range_g, fat_from(cfg, p)));
    }
    if (formula == "thm3") {
        return from_bound(thm3_fat_decomposition(p.classes, eps, p.range, fat_from(cfg, p),
                                                 base_from(cfg, LogBase::binary)));
    }
    if (formula == "cor2") {
        return from_bound(
            cor2_entropy(p.classes, eps, p.gamma, p.range, fat_from(cfg, p), base_from(cfg, LogBase::natural)));
    }
    if (formula == "dutta") {
        const auto variant = given(cfg, "variant") ? text(cfg, "variant") : std::string("continuous");
        require(variant == "continuous" || variant == "empirical", "variant must be continuous or empirical");
        return from_bound(dutta_entropy(p, eps, variant == "empirical" ? DuttaVariant::empirical
                                                                         : DuttaVariant::continuous));
    }
    if (formula == "thm1") return from_bound(thm1_rhs(n, eps, p.gamma, entropy_from(cfg, p)));
    if (formula == "thm4") {
        require_ordered_constants(ctx, p);
        const auto variant = given(cfg, "variant") ? text(cfg, "variant") : std::string("alon");
        require(variant == "alon" || variant == "cor2", "variant must be alon or cor2");
        const auto s = thm4_sample_size(variant == "alon" ? Thm4Variant::alon : Thm4Variant::cor2, p);
        return {s.n, s.flags, Json{{"raw", real_to_json(s.raw)}}};
    }
    if (formula == "mixing") {
        const double rho = real(cfg, "rho");
        require(rho >= 0.0 && rho < 1.0, "rho in [0, 1) required");
        const MixingFn beta = [rho](double k) { return std::pow(rho, k); };
        return from_bound(mixing_thm_rhs(integer(cfg, "b_n"), integer(cfg, "a_n"), eps, p.gamma, beta,
                                         entropy_from(cfg, p)));
    }
    if (formula == "eff-complexity") {
        const auto e = effective_sample_complexity(p, rate_from(cfg), fat_from(cfg, p));
        return {e.blocks, e.flags,
                Json{{"raw_b_n", real_to_json(e.raw_blocks)},
                     {"a_n", real_to_json(e.block_length)},
                     {"a_n_floor", real_to_json(std::floor(e.block_length))},
                     {"fat", real_to_json(e.fat)}}};
    }
    if (formula == "rad-fat") return {real_to_json(rad_fat_bound(p.classes, p.K_F, eps)), 0, Json::object()};
    if (formula == "aux") {
        const auto kind = text(cfg, "aux");
        AuxResult r;
        if (kind == "bartlett_log") {
            r = aux_bartlett_log(real(cfg, "a"), real(cfg, "b"), real(cfg, "x"));
        } else if (kind == "ln_sqrt") {
            r = aux_ln_sqrt(p.K, n);
        } else {
            throw PreconditionError("aux must be bartlett_log or ln_sqrt");
        }
        return {r.holds, 0, Json{{"lhs", real_to_json(r.lhs)}, {"rhs", real_to_json(r.rhs)}}};
    }
    throw PreconditionError("unknown formula '" + formula + "'");
}

struct Sweep {
    std::string key;
    std::vector<double> values;
};

Sweep parse_sweep(const std::string& spec, const std::vector<Param>& params)
{
    const auto eq = spec.find('=');
    require(eq != std::string::npos, "sweep must look like key=start:stop:steps");
    Sweep s;
    s.key = spec.substr(0, eq);
    const auto& p = find_param(params, s.key);
    require(p.kind == Kind::real || p.kind == Kind::integer, "sweep key must be numeric");
    std::vector<std::string> parts;
    std::stringstream in(spec.substr(eq + 1));
    std::string item;
    while (std::getline(in, item, ':')) parts.push_back(item);
    require(parts.size() == 3, "sweep must look like key=start:stop:steps");
    const double start = parse_real(parts[0], "sweep start");
    const double stop = parse_real(parts[1], "sweep stop");
    const auto steps = parse_integer(parts[2], "sweep steps");
    require(steps <= 1000000, "sweep steps too large");
    for (std::uint64_t i = 0; i < steps; ++i) {
        double v = start;
        if (steps > 1) {
            v = i + 1 == steps ? stop : start + (stop - start) * static_cast<double>(i) / static_cast<double>(steps - 1);
        }
        if (p.kind == Kind::integer) require(v >= 0.0 && v == std::floor(v), "integer sweep values required for " + s.key);
        s.values.push_back(v);
    }
    return s;
}

std::vector<Param> bounds_params()
{
    auto params = symbol_params();
    const std::vector<Param> extra = {
        {"formula", Kind::text, "bv-fat",
         "bv-fat | mv | alon | decompose | musl | duan | thm3 | cor2 | dutta | thm1 | thm4 | mixing | "
         "eff-complexity | rad-fat | aux"},
        {"n", Kind::real, 1.0, "sample size"},
        {"p", Kind::real, 1.0, "metric order for decompose (inf allowed)"},
        {"fat", Kind::real, nullptr, "constant fat-shattering value (default: bounded-variation bound)"},
        {"entropy", Kind::real, nullptr, "constant metric entropy (default: cor2 with the fat function)"},
        {"M_G", Kind::real, nullptr, "range of the margin class for duan (default: M)"},
        {"base", Kind::text, nullptr, "log base for thm3 / cor2: 2 | e"},
        {"variant", Kind::text, nullptr, "dutta: continuous | empirical; thm4: alon | cor2"},
        {"b_n", Kind::integer, 64, "number of block pairs"},
        {"a_n", Kind::integer, 16, "block length"},
        {"rho", Kind::real, 0.5, "Markov stay probability, beta(k) = rho^k"},
        {"aux", Kind::text, "bartlett_log", "bartlett_log | ln_sqrt"},
        {"a", Kind::real, 1.0, "aux argument a"},
        {"b", Kind::real, 1.0, "aux argument b"},
        {"x", Kind::real, 1.0, "aux argument x"},
        {"sweep", Kind::text, nullptr, "key=start:stop:steps, inclusive"},
    };
    params.insert(params.end(), extra.begin(), extra.end());
    const auto rate = mixing_rate_params();
    params.insert(params.end(), rate.begin(), rate.end());
    return params;
}

Outcome run_bounds(const Context& ctx)
{
    const auto& cfg = ctx.config;
    const auto formula = text(cfg, "formula");
    if (!given(cfg, "sweep")) {
        const auto e = evaluate_formula(ctx, cfg);
        Outcome out{Json::object(), CsvTable({"formula", "value", "flags"})};
        out.results["formula"] = formula;
        out.results["value"] = e.value;
        out.results["flags"] = flags_json(e.flags);
        out.results["details"] = e.details;
        out.table.add_row({formula, csv_value(e.value), flags_text(e.flags)});
        return out;
    }
    const auto sweep = parse_sweep(text(cfg, "sweep"), bounds_params());
    const auto& param = find_param(bounds_params(), sweep.key);
    Outcome out{Json::object(), CsvTable({sweep.key, "value", "flags"})};
    Json rows = Json::array();
    for (double x : sweep.values) {
        Json point = cfg;
        point[sweep.key] = param.kind == Kind::integer ? Json(static_cast<std::uint64_t>(x)) : Json(x);
        const auto e = evaluate_formula(ctx, point);
        rows.push_back(Json{{sweep.key, point[sweep.key]}, {"value", e.value}, {"flags", flags_json(e.flags)}});
        out.table.add_row({csv_value(point[sweep.key]), csv_value(e.value), flags_text(e.flags)});
    }
    out.results["formula"] = formula;
    out.results["sweep"] = Json{{"key", sweep.key}, {"rows", rows}};
    return out;
}

// ---------------------------------------------------------------------------
// sample-size

std::vector<Param> sample_size_params()
{
    auto params = symbol_params();
    params.push_back({"fat", Kind::real, nullptr, "constant fat value for the mixing complexity"});
    const auto rate = mixing_rate_params();
    params.insert(params.end(), rate.begin(), rate.end());
    return params;
}

Outcome run_sample_size(const Context& ctx)
{
    const auto& cfg = ctx.config;
    const auto p = params_from(cfg);
    require_ordered_constants(ctx, p);
    const auto alon = thm4_sample_size(Thm4Variant::alon, p);
    const auto cor2 = thm4_sample_size(Thm4Variant::cor2, p);
    const auto eff = effective_sample_complexity(p, rate_from(cfg), fat_from(cfg, p));

    auto size_json = [](const SampleSize& s) {
        return Json{{"n", s.n}, {"raw", real_to_json(s.raw)}, {"flags", flags_json(s.flags)}};
    };
    Outcome out{Json::object(), CsvTable({"quantity", "value", "flags"})};
    out.results["thm4_alon"] = size_json(alon);
    out.results["thm4_cor2"] = size_json(cor2);
    out.results["mixing"] = Json{{"b_n", eff.blocks},
                                 {"raw_b_n", real_to_json(eff.raw_blocks)},
                                 {"a_n", real_to_json(eff.block_length)},
                                 {"a_n_floor", real_to_json(std::floor(eff.block_length))},
                                 {"fat", real_to_json(eff.fat)},
                                 {"flags", flags_json(eff.flags)}};
    out.table.add_row({"thm4_alon_n", std::to_string(alon.n), flags_text(alon.flags)});
    out.table.add_row({"thm4_cor2_n", std::to_string(cor2.n), flags_text(cor2.flags)});
    out.table.add_row({"mixing_b_n", std::to_string(eff.blocks), flags_text(eff.flags)});
    out.table.add_row({"mixing_a_n", format_real(eff.block_length), flags_text(eff.flags)});
    return out;
}

// ---------------------------------------------------------------------------
// capacity

GridGeometry geometry_from(const Json& spec)
{
    GridGeometry g;
    g.dim = spec.value("d", 1);
    g.side = spec.value("A", 1.0);
    g.resolution = spec.value("G", 8);
    g.range = spec.value("M", 1.0);
    validate(g);
    return g;
}

FiniteFunctionClass capacity_class(const Json& spec, std::uint64_t seed)
{
    if (spec.contains("values")) {
        check_keys(spec, {"values", "M_F", "provenance"}, "class_spec");
        return function_class_from_json(spec);
    }
    check_keys(spec, {"generator", "d", "A", "G", "M", "V", "count", "points", "seed"}, "class_spec");
    require(spec.value("generator", std::string()) == "random_bv",
            "class_spec needs either 'values' or generator 'random_bv'");
    const auto geometry = geometry_from(spec);
    const double variation = spec.value("V", 1.0);
    const auto count = spec.value("count", std::uint64_t{8});
    const std::uint64_t gen_seed = spec.value("seed", seed);
    const std::size_t cells = geometry.cell_count();
    const std::size_t points = spec.value("points", std::min<std::uint64_t>(6, cells));
    require(count >= 1 && points >= 1 && points <= cells, "class_spec needs count >= 1 and 1 <= points <= G^d");

    std::vector<std::size_t> order(cells);
    for (std::size_t i = 0; i < cells; ++i) order[i] = i;
    Rng rng(gen_seed, "capacity-points");
    for (std::size_t i = 0; i < points; ++i) std::swap(order[i], order[i + rng.below(cells - i)]);

    std::vector<double> values;
    values.reserve(count * points);
    for (std::uint64_t f = 0; f < count; ++f) {
        const auto g = random_bv(geometry, variation, derive_seed(gen_seed, "class-member", f));
        for (std::size_t i = 0; i < points; ++i) values.push_back(g.at_cell(order[i]));
    }
    return FiniteFunctionClass(count, points, std::move(values), geometry.range,
                               "random_bv seed=" + std::to_string(gen_seed));
}

std::vector<Param> capacity_params()
{
    return {
        {"class_spec", Kind::object,
         Json{{"generator", "random_bv"}, {"d", 1}, {"A", 1.0}, {"G", 8}, {"M", 1.0}, {"V", 2.0}, {"count", 8},
              {"points", 6}},
         "class as {values: [[..]]} or a random_bv generator spec (inline JSON or file)"},
        {"measure", Kind::text, "fat", "cover | pack | fat | rademacher"},
        {"mode", Kind::text, "exact", "cover/pack: exact | greedy; fat: exact | randomized; rademacher: exact | mc"},
        {"epsilon", Kind::real, 0.25, "scale"},
        {"epsilons", Kind::list, nullptr, "comma-separated scales for a sweep"},
        {"p", Kind::real, kInfinity, "metric order for cover / pack (inf allowed)"},
        {"trials", Kind::integer, 1000, "Monte Carlo draws"},
        {"budget", Kind::integer, 2000, "randomized fat-shattering subset budget"},
    };
}

CapacityEstimate estimate_capacity(const FiniteFunctionClass& F, const Json& cfg, double eps)
{
    const auto measure = text(cfg, "measure");
    const auto mode = text(cfg, "mode");
    const std::uint64_t seed = integer(cfg, "seed");
    auto metric = [&] {
        const double order = real(cfg, "p");
        return F.distances(std::isinf(order) ? LpOrder::infinity() : LpOrder{order});
    };
    if (measure == "cover" || measure == "pack") {
        const auto D = metric();
        if (mode == "greedy") {
            auto g = greedy_packing(D, eps);
            return measure == "cover" ? g.covering : g.packing;
        }
        require(mode == "exact", "cover/pack mode must be exact or greedy");
        CapacityEstimate e;
        e.measure = measure == "cover" ? Measure::covering : Measure::packing;
        e.scale = eps;
        const auto v = static_cast<double>(measure == "cover" ? exact_covering(D, eps) : exact_packing(D, eps));
        e.lower = e.upper = v;
        e.method = "exact";
        return e;
    }
    if (measure == "fat") {
        if (mode == "randomized") {
            return fat_shattering_dimension(F, eps, RandomizedMode{integer(cfg, "budget"), seed}).estimate;
        }
        require(mode == "exact", "fat mode must be exact or randomized");
        return fat_shattering_dimension(F, eps, ExactMode{}).estimate;
    }
    if (measure == "rademacher") {
        CapacityEstimate e;
        if (mode == "mc") {
            e = rademacher(F, MonteCarloMode{integer(cfg, "trials"), seed});
        } else {
            require(mode == "exact", "rademacher mode must be exact or mc");
            e = rademacher(F, ExactMode{});
        }
        e.scale = eps;
        return e;
    }
    throw PreconditionError("measure must be cover, pack, fat or rademacher");
}

Outcome run_capacity(const Context& ctx)
{
    const auto& cfg = ctx.config;
    const auto F = capacity_class(cfg.at("class_spec"), integer(cfg, "seed"));
    std::vector<double> scales;
    if (given(cfg, "epsilons")) {
        for (const auto& v : cfg.at("epsilons")) scales.push_back(real_from_json(v));
    } else {
        scales.push_back(real(cfg, "epsilon"));
    }
    Outcome out{Json::object(), CsvTable({"epsilon", "lower", "upper", "method", "seed"})};
    out.results["class"] = Json{{"functions", F.size()}, {"points", F.points()}, {"provenance", F.provenance()}};
    Json estimates = Json::array();
    for (double eps : scales) {
        const auto e = estimate_capacity(F, cfg, eps);
        validate(e);
        estimates.push_back(capacity_estimate_to_json(e));
        out.table.add_row({format_real(eps), format_real(e.lower), format_real(e.upper), e.method,
                           std::to_string(e.seed)});
    }
    out.results["estimates"] = estimates;
    return out;
}

// ---------------------------------------------------------------------------
// lemmas

std::vector<Param> lemma_params()
{
    return {
        {"suite", Kind::text, "lemma1", "lemma1 | lemmaB1 | finite_counting"},
        {"cases", Kind::integer, 100, "number of random classes"},
    };
}

Outcome run_lemmas(const Context& ctx)
{
    const auto& cfg = ctx.config;
    const auto report = lemma_checks(lemma_suite_from_string(text(cfg, "suite")), integer(cfg, "seed"),
                                     integer(cfg, "cases"));
    Outcome out{Json::object(), CsvTable({"index", "failure"})};
    out.results = Json{{"suite", to_string(report.suite)},
                       {"seed", report.seed},
                       {"cases", report.cases},
                       {"checks", report.checks},
                       {"passed", report.passed},
                       {"failed", report.failed},
                       {"failures", report.failures},
                       {"max_dimension", report.max_dimension}};
    for (std::size_t i = 0; i < report.failures.size(); ++i) {
        out.table.add_row({std::to_string(i), report.failures[i]});
    }
    out.exit_code = report.failed == 0 ? 0 : 1;
    return out;
}

// ---------------------------------------------------------------------------
// deviation and mixing

struct TupleClass {
    std::vector<MultiClassTuple> tuples;
    double variation = 1.0;
};

TupleClass tuple_class(const Json& spec, std::uint64_t seed)
{
    TupleClass out;
    if (spec.contains("tuples")) {
        check_keys(spec, {"tuples", "V"}, "class_spec");
        for (const auto& t : spec.at("tuples")) out.tuples.push_back(tuple_from_json(t));
        require(!out.tuples.empty(), "class_spec.tuples must be nonempty");
        double tv = out.tuples.front().geometry().range;
        for (const auto& t : out.tuples) {
            for (const auto& c : t.components()) tv = std::max(tv, c.total_variation());
        }
        out.variation = spec.value("V", tv);
        return out;
    }
    check_keys(spec, {"generator", "d", "A", "G", "M", "C", "V", "count", "seed"}, "class_spec");
    require(spec.value("generator", std::string()) == "random_bv",
            "class_spec needs either 'tuples' or generator 'random_bv'");
    out.variation = spec.value("V", 2.0);
    out.tuples = random_tuple_class(geometry_from(spec), spec.value("C", 3), spec.value("count", std::uint64_t{8}),
                                    out.variation, spec.value("seed", seed));
    return out;
}

std::vector<Param> deviation_params(bool mixing)
{
    std::vector<Param> params = {
        {"class_spec", Kind::object,
         Json{{"generator", "random_bv"}, {"d", 1}, {"A", 1.0}, {"G", 8}, {"M", 1.0}, {"C", 3}, {"V", 2.0},
              {"count", 8}},
         "tuples as {tuples: [..]} or a random_bv generator spec (inline JSON or file)"},
        {"dist_spec", Kind::object, nullptr, "law on cells x labels (default: uniform)"},
        {"n", Kind::integer, 2048, "sample size"},
        {"epsilon", Kind::real, 0.1, "deviation threshold"},
        {"gamma", Kind::real, 0.5, "margin parameter"},
        {"trials", Kind::integer, 200, "Monte Carlo trials"},
    };
    if (mixing) {
        params.push_back({"rho", Kind::real, 0.5, "Markov stay probability"});
        params.push_back({"a_n", Kind::integer, 16, "block length"});
    }
    return params;
}

struct DeviationSetup {
    TupleClass tuples;
    DistributionSpec dist;
    DeviationConfig config;
};

DeviationSetup deviation_setup(const Context& ctx)
{
    const auto& cfg = ctx.config;
    DeviationSetup s;
    s.config.seed = integer(cfg, "seed");
    s.tuples = tuple_class(cfg.at("class_spec"), s.config.seed);
    const auto& g = s.tuples.tuples.front();
    s.dist = given(cfg, "dist_spec") ? distribution_from_json(cfg.at("dist_spec"))
                                     : DistributionSpec::uniform(g.geometry(), g.classes());
    s.config.n = integer(cfg, "n");
    s.config.epsilon = real(cfg, "epsilon");
    s.config.gamma = real(cfg, "gamma");
    s.config.trials = integer(cfg, "trials");
    s.config.variation = s.tuples.variation;
    s.config.threads = ctx.threads;
    return s;
}

Json deviation_json(const DeviationReport& r, const std::string& bound_name)
{
    Json exact = Json::array();
    for (double v : r.exact_risks) exact.push_back(real_to_json(v));
    std::size_t hits = 0;
    for (auto e : r.exceeded) hits += e;
    const double tol = 3.0 * r.std_error;
    Json checks = Json::object();
    checks["baseline"] = r.p_hat <= r.baseline + tol;
    if (r.bound_covering.value < 1.0) {
        checks[bound_name] = r.p_hat <= r.bound_covering.value + tol;
    } else {
        checks[bound_name] = nullptr;
    }
    return Json{{"class_size", r.class_size},
                {"exact_risks", exact},
                {"trials", r.sup_deviation.size()},
                {"exceedances", hits},
                {"p_hat", real_to_json(r.p_hat)},
                {"std_error", real_to_json(r.std_error)},
                {"max_sup_deviation",
                 real_to_json(*std::max_element(r.sup_deviation.begin(), r.sup_deviation.end()))},
                {"covering_number", r.covering_number},
                {bound_name + "_covering", bound_json(r.bound_covering)},
                {bound_name + "_bv", bound_json(r.bound_bv)},
                {"finite_baseline", real_to_json(r.baseline)},
                {"checks", checks}};
}

CsvTable trial_table(const DeviationReport& r)
{
    CsvTable table({"trial", "sup_dev", "exceeded"});
    for (std::size_t t = 0; t < r.sup_deviation.size(); ++t) {
        table.add_row({std::to_string(t), format_real(r.sup_deviation[t]), r.exceeded[t] ? "1" : "0"});
    }
    return table;
}

Outcome run_deviation(const Context& ctx)
{
    const auto s = deviation_setup(ctx);
    const auto r = deviation_experiment(s.tuples.tuples, s.dist, s.config);
    return {deviation_json(r, "thm1_rhs"), trial_table(r)};
}

Outcome run_mixing(const Context& ctx)
{
    const auto s = deviation_setup(ctx);
    MixingConfig config{s.config, real(ctx.config, "rho"), integer(ctx.config, "a_n")};
    const auto r = mixing_deviation_experiment(s.tuples.tuples, s.dist, config);
    auto results = deviation_json(r.deviation, "mixing_rhs");
    results["rho"] = real_to_json(config.rho);
    results["a_n"] = r.partition.block_length;
    results["b_n"] = r.partition.blocks;
    results["beta_a_n"] = real_to_json(r.beta_at_block);
    results["surrogate_p_hat"] = real_to_json(r.surrogate_p_hat);
    return {results, trial_table(r.deviation)};
}

// ---------------------------------------------------------------------------

std::vector<Command> commands()
{
    return {
        {"bounds", "evaluate a closed-form bound", bounds_params(), run_bounds},
        {"capacity", "estimate a capacity measure of a finite class", capacity_params(), run_capacity},
        {"deviation", "i.i.d. uniform deviation experiment", deviation_params(false), run_deviation},
        {"mixing", "Markov-chain uniform deviation experiment", deviation_params(true), run_mixing},
        {"lemmas", "randomised checks of the capacity lemmas", lemma_params(), run_lemmas},
        {"sample-size", "sample sizes and mixing block counts", sample_size_params(), run_sample_size},
    };
}

std::optional<unsigned> threads_from_env()
{
    const char* env = std::getenv("CAPBOUND_THREADS");
    if (env == nullptr || *env == '\0') return std::nullopt;
    const auto v = parse_integer(env, "CAPBOUND_THREADS");
    require(v <= 4096, "CAPBOUND_THREADS too large");
    return static_cast<unsigned>(v);
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Capacity measures and margin bounds for multi-class bounded-variation classifiers", "capbound"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_path;
    std::string csv_path;
    unsigned threads = 0;
    bool timing = false;
    auto* seed_opt = app.add_option("--seed", seed, "base seed of every random stream");
    app.add_option("--config", config_path, "JSON config; flags override its values");
    app.add_option("--out", out_path, "report path (default: stdout)");
    app.add_option("--csv", csv_path, "CSV data path");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads, 0 = auto");
    app.add_flag("--timing", timing, "record wall time in the report");

    const auto table = commands();
    std::vector<CLI::App*> subs;
    std::vector<std::map<std::string, std::string>> raw(table.size());
    std::vector<std::map<std::string, CLI::Option*>> options(table.size());
    for (std::size_t c = 0; c < table.size(); ++c) {
        auto* sub = app.add_subcommand(table[c].name, table[c].help);
        for (const auto& p : table[c].params) {
            options[c][p.key] = sub->add_option(flag_name(p.key), raw[c][p.key], p.help);
        }
        subs.push_back(sub);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        std::size_t c = 0;
        while (!subs[c]->parsed()) ++c;
        const auto& command = table[c];

        Context ctx;
        Json& cfg = ctx.config;
        for (const auto& p : command.params) cfg[p.key] = p.fallback;
        cfg["seed"] = std::uint64_t{0};

        if (!config_path.empty()) {
            const auto file = read_json_file(config_path);
            require(file.is_object(), "config must be a JSON object");
            for (const auto& [key, value] : file.items()) {
                if (key == "seed") {
                    cfg["seed"] = value_from_config({"seed", Kind::integer, 0, ""}, value);
                } else {
                    const auto known = std::find_if(command.params.begin(), command.params.end(),
                                                    [&](const Param& p) { return p.key == key; });
                    require(known != command.params.end(),
                            "unknown config key '" + key + "' for subcommand " + command.name);
                    cfg[key] = value_from_config(*known, value);
                }
                ctx.explicit_keys.insert(key);
            }
        }
        for (const auto& p : command.params) {
            if (options[c][p.key]->count() > 0) {
                cfg[p.key] = value_from_flag(p, raw[c][p.key]);
                ctx.explicit_keys.insert(p.key);
            }
        }
        if (seed_opt->count() > 0) {
            cfg["seed"] = seed;
            ctx.explicit_keys.insert("seed");
        }
        if (threads_opt->count() > 0) {
            ctx.threads = threads;
        } else if (const auto env = threads_from_env()) {
            ctx.threads = *env;
        }

        const auto start = std::chrono::steady_clock::now();
        auto outcome = command.handler(ctx);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

        Json report;
        report["schema_version"] = kReportSchemaVersion;
        report["subcommand"] = command.name;
        report["config"] = cfg;
        report["results"] = outcome.results;
        report["wall_time_s"] = timing ? Json(elapsed.count()) : Json(nullptr);
        const auto text = report.dump(2) + "\n";
        if (out_path.empty()) {
            out << text;
        } else {
            write_file_atomic(out_path, text);
        }
        if (!csv_path.empty()) write_file_atomic(csv_path, outcome.table.str());
        if (outcome.exit_code != 0) err << "error: checks failed\n";
        return outcome.exit_code;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Json::exception& e) {
        err << "error: malformed config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace capbound
