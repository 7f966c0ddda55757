#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "kaplab/coefficients.hpp"
#include "kaplab/nonlinearity.hpp"

namespace kaplab::runner {

/// Schema violation, reported with the offending line and field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& known_clauses() {
    static const std::vector<std::string> ids = {"T1a", "T1b", "T1c", "T1d", "T1blowup", "T1concave", "T2a", "T2b", "T2c",
                                                 "L1",  "L2var", "L2", "L3", "L4", "L5", "L6", "W"};
    return ids;
}

struct GridConfig {
    std::string kind = "interval";
    int dimension = 1;
    double x_lo = 0.0;
    double x_hi = std::numbers::pi;
    double radius = 1.0;
    std::size_t node_count = 401;
    bool operator==(const GridConfig&) const = default;
};

struct PotentialConfig {
    std::string kind = "none";  // none | constant | table
    double value = 0.0;
    std::string file;
    bool operator==(const PotentialConfig&) const = default;
};

struct OperatorConfig {
    std::string laplacian = "dirichlet";
    PotentialConfig potential;
    bool operator==(const OperatorConfig&) const = default;
};

struct SteadyConfig {
    std::string kind = "zero";  // zero | chen_li | shooting | table
    double lambda = 1.0;
    int n = 3;
    double p = 5.0;
    double v_center = 1.0;
    std::string file;
    bool operator==(const SteadyConfig&) const = default;
};

struct NonlinearityConfig {
    std::string kind = "quadratic";  // power_abs | power_neg | exponential | quadratic
    double p = 2.0;
    std::string convexity;           // optional cross-check
    bool operator==(const NonlinearityConfig&) const = default;
};

/// constant(value) | power_decay(b0, alpha) | power_growth(a1, r)
/// | cos_modulated(b0, alpha, omega) | shifted_sine(b0, amp)
struct CoefficientSpec {
    std::string kind = "constant";
    double value = 0.0;
    double b0 = 0.0;
    double alpha = 0.0;
    double omega = 1.0;
    double a1 = 1.0;
    double r = 0.0;
    double amp = 0.0;
    bool operator==(const CoefficientSpec&) const = default;

    static CoefficientSpec constant(double v) {
        CoefficientSpec s;
        s.value = v;
        return s;
    }
};

struct DeclaredConfig {
    std::optional<double> b_sup;
    std::optional<double> b_l1;
    std::optional<double> b_over_a_l1;
    bool b_positive = false;
    bool operator==(const DeclaredConfig&) const = default;
};

struct CoefficientsConfig {
    CoefficientSpec a = CoefficientSpec::constant(1.0);
    CoefficientSpec b = CoefficientSpec::constant(0.0);
    DeclaredConfig declared;
    bool operator==(const CoefficientsConfig&) const = default;
};

struct EquationConfig {
    std::string kind = "hyperbolic";
    double t_max = 20.0;
    double cfl = 0.5;
    bool operator==(const EquationConfig&) const = default;
};

struct PerturbationConfig {
    double epsilon = 1e-3;
    std::optional<double> delta;
    std::optional<double> delta_factor;
    bool concave_mode = false;
    bool operator==(const PerturbationConfig&) const = default;
};

struct CertifyConfig {
    std::vector<std::string> clauses;
    double rel_slack = 1e-2;
    double inequality_tol = 1e-3;
    double window = 0.5;
    bool operator==(const CertifyConfig&) const = default;
};

struct OutputConfig {
    std::string directory = "out";
    double cadence = 0.01;
    bool operator==(const OutputConfig&) const = default;
};

struct SweepConfig {
    std::string parameter;
    std::vector<double> values;
    bool operator==(const SweepConfig&) const = default;
};

struct Config {
    std::string name = "scenario";
    GridConfig grid;
    OperatorConfig op;
    SteadyConfig steady;
    NonlinearityConfig nonlinearity;
    CoefficientsConfig coefficients;
    EquationConfig equation;
    PerturbationConfig perturbation;
    CertifyConfig certify;
    OutputConfig output;
    std::optional<SweepConfig> sweep;
    /// Directory relative table files are resolved against (not serialized).
    std::string base_dir;

    bool operator==(const Config& o) const {
        return name == o.name && grid == o.grid && op == o.op && steady == o.steady && nonlinearity == o.nonlinearity &&
               coefficients == o.coefficients && equation == o.equation && perturbation == o.perturbation &&
               certify == o.certify && output == o.output && sweep == o.sweep;
    }
};

// ---------------------------------------------------------------------------
// coefficient specs -> time functions

struct CoefficientFunctions {
    TimeFunction value;
    TimeFunction derivative;
};

inline CoefficientFunctions make_coefficient(const CoefficientSpec& s) {
    if (s.kind == "constant") {
        const double v = s.value;
        return {[v](double) { return v; }, [](double) { return 0.0; }};
    }
    if (s.kind == "power_decay") {
        const double b0 = s.b0, al = s.alpha;
        return {[b0, al](double t) { return b0 * std::pow(1.0 + t, -al); },
                [b0, al](double t) { return -al * b0 * std::pow(1.0 + t, -al - 1.0); }};
    }
    if (s.kind == "power_growth") {
        const double a1 = s.a1, r = s.r;
        return {[a1, r](double t) { return a1 * std::pow(1.0 + t, r); },
                [a1, r](double t) { return a1 * r * std::pow(1.0 + t, r - 1.0); }};
    }
    if (s.kind == "cos_modulated") {
        const double b0 = s.b0, al = s.alpha, w = s.omega;
        return {[=](double t) { return b0 * std::cos(w * t) * std::pow(1.0 + t, -al); },
                [=](double t) {
                    return b0 * std::pow(1.0 + t, -al) * (-w * std::sin(w * t) - al * std::cos(w * t) / (1.0 + t));
                }};
    }
    if (s.kind == "shifted_sine") {
        const double b0 = s.b0, amp = s.amp;
        return {[=](double t) { return b0 + amp * std::sin(t); }, [=](double t) { return amp * std::cos(t); }};
    }
    throw ConfigError("unknown coefficient kind '" + s.kind + "'");
}

/// Coefficient profile of a config: a-side scalars follow from the a spec,
/// b-side norms and the positivity flag are the config's declarations.
inline CoefficientProfile make_profile(const CoefficientsConfig& c) {
    CoefficientProfile p;
    const auto a = make_coefficient(c.a);
    const auto b = make_coefficient(c.b);
    p.a = a.value;
    p.a_prime = a.derivative;
    p.b = b.value;
    const auto& s = c.a;
    if (s.kind == "constant") {
        p.a0 = s.value;
        p.a1 = s.value;
        p.growth_constant = s.value;
    } else if (s.kind == "power_growth") {
        p.a0 = s.a1;
        if (s.r == 0.0) p.a1 = s.a1;
        p.growth_constant = s.a1;
        p.growth_exponent = s.r;
        p.monotone_increasing = s.r > 0.0;
    } else if (s.kind == "shifted_sine") {
        p.a0 = s.b0 - std::abs(s.amp);
        p.a1 = s.b0 + std::abs(s.amp);
        p.growth_constant = *p.a1;
    } else {
        throw ConfigError("coefficients.a: kind '" + s.kind + "' is not bounded below by a positive constant");
    }
    p.b_sup = c.declared.b_sup;
    p.b_l1 = c.declared.b_l1;
    p.b_over_a_l1 = c.declared.b_over_a_l1;
    p.b_positive = c.declared.b_positive;
    if (c.b.kind == "power_decay" || c.b.kind == "cos_modulated") p.decay_exponent = c.b.alpha;
    return p;
}

inline Nonlinearity make_nonlinearity(const NonlinearityConfig& c) {
    if (c.kind == "power_abs") return Nonlinearity::power_abs(c.p);
    if (c.kind == "power_neg") return Nonlinearity::power_neg(c.p);
    if (c.kind == "exponential") return Nonlinearity::exponential();
    if (c.kind == "quadratic") return Nonlinearity::quadratic();
    throw ConfigError("unknown nonlinearity kind '" + c.kind + "'");
}

// ---------------------------------------------------------------------------
// parsing

namespace detail {

inline std::string where(const YAML::Node& n, const std::string& field) {
    return "line " + std::to_string(n.Mark().line + 1) + ": field '" + field + "'";
}

[[noreturn]] inline void fail(const YAML::Node& n, const std::string& field, const std::string& what) {
    throw ConfigError(where(n, field) + ": " + what);
}

inline void check_keys(const YAML::Node& n, const std::string& section, const std::set<std::string>& allowed) {
    if (!n.IsMap()) fail(n, section, "expected a mapping");
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) {
            throw ConfigError("line " + std::to_string(kv.first.Mark().line + 1) + ": unknown key '" + section + "." + key + "'");
        }
    }
}

template <class T>
T read(const YAML::Node& parent, const std::string& key, const std::string& path, T fallback) {
    const YAML::Node n = parent[key];
    if (!n) return fallback;
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        fail(n, path + "." + key, "wrong type");
    }
}

template <class T>
std::optional<T> read_optional(const YAML::Node& parent, const std::string& key, const std::string& path) {
    const YAML::Node n = parent[key];
    if (!n) return std::nullopt;
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        fail(n, path + "." + key, "wrong type");
    }
}

inline const std::map<std::string, std::set<std::string>>& coefficient_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"constant", {"kind", "value"}},
        {"power_decay", {"kind", "b0", "alpha"}},
        {"power_growth", {"kind", "a1", "r"}},
        {"cos_modulated", {"kind", "b0", "alpha", "omega"}},
        {"shifted_sine", {"kind", "b0", "amp"}},
    };
    return keys;
}

inline CoefficientSpec parse_coefficient(const YAML::Node& n, const std::string& path) {
    if (!n.IsMap()) fail(n, path, "expected a mapping");
    CoefficientSpec s;
    s.kind = read<std::string>(n, "kind", path, "constant");
    const auto it = coefficient_keys().find(s.kind);
    if (it == coefficient_keys().end()) fail(n, path + ".kind", "unknown coefficient kind '" + s.kind + "'");
    check_keys(n, path, it->second);
    s.value = read<double>(n, "value", path, s.value);
    s.b0 = read<double>(n, "b0", path, s.b0);
    s.alpha = read<double>(n, "alpha", path, s.alpha);
    s.omega = read<double>(n, "omega", path, s.omega);
    s.a1 = read<double>(n, "a1", path, s.a1);
    s.r = read<double>(n, "r", path, s.r);
    s.amp = read<double>(n, "amp", path, s.amp);
    if (s.kind == "power_decay" && !(s.alpha > 0.0)) fail(n, path + ".alpha", "power_decay needs alpha > 0");
    if (s.kind == "power_growth" && !(s.r >= 0.0 && s.r < 1.0)) fail(n, path + ".r", "power_growth needs r in [0,1)");
    if (s.kind == "power_growth" && !(s.a1 > 0.0)) fail(n, path + ".a1", "power_growth needs a1 > 0");
    if (s.kind == "shifted_sine" && !(std::abs(s.amp) < std::abs(s.b0))) fail(n, path + ".amp", "shifted_sine needs |amp| < |b0|");
    return s;
}

/// Clause prerequisites that can be decided from the document alone.
inline void check_clause_requirements(const Config& c, const YAML::Node& root) {
    const auto& d = c.coefficients.declared;
    const auto& a = c.coefficients.a;
    const bool a_bounded = a.kind == "constant" || a.kind == "shifted_sine" || (a.kind == "power_growth" && a.r == 0.0);
    const bool a_monotone = a.kind == "power_growth" && a.r > 0.0;
    const bool hyperbolic = c.equation.kind == "hyperbolic";
    const YAML::Node where_node = root["certify"] ? root["certify"] : root;
    auto need = [&](bool ok, const std::string& clause, const std::string& what) {
        if (!ok) fail(where_node, "certify.clauses", "clause " + clause + " requires " + what);
    };
    for (const auto& id : c.certify.clauses) {
        if (std::find(known_clauses().begin(), known_clauses().end(), id) == known_clauses().end()) {
            fail(where_node, "certify.clauses", "unknown clause '" + id + "'");
        }
        if (id.rfind("T1", 0) == 0) need(hyperbolic, id, "equation.kind hyperbolic");
        if (id.rfind("T2", 0) == 0) need(!hyperbolic, id, "equation.kind parabolic");
        if (id == "T1b" || id == "L2var") {
            need(d.b_sup.has_value(), id, "coefficients.declared.b_sup (||b||_inf)");
            need(a_monotone, id, "an increasing a(t) (power_growth with r > 0)");
        }
        if (id == "T1c" || id == "L2") {
            need(d.b_sup.has_value(), id, "coefficients.declared.b_sup (||b||_inf)");
            need(a_bounded, id, "a bounded a(t)");
        }
        if (id == "T1d" || id == "L3") {
            need(d.b_over_a_l1.has_value(), id, "coefficients.declared.b_over_a_l1 (||b/a||_1)");
            need(a_bounded, id, "a bounded a(t)");
        }
        if (id == "T1blowup" || id == "L4") need(d.b_sup.has_value(), id, "coefficients.declared.b_sup (||b||_inf)");
        if (id == "L4") need(a_bounded, id, "a bounded a(t)");
        if (id == "T1concave") need(c.perturbation.concave_mode, id, "perturbation.concave_mode true");
        if (id == "T2a" || id == "T2b" || id == "T2c" || id == "L5" || id == "L6") {
            need(d.b_positive, id, "coefficients.declared.b_positive true");
        }
        if (id == "T2b" || id == "T2c" || id == "L5" || id == "L6") {
            need(d.b_sup.has_value(), id, "coefficients.declared.b_sup (||b||_inf)");
        }
    }
}

}  // namespace detail

/**
 * Parses a YAML scenario document. Unknown keys, wrong types and clauses
 * whose declared prerequisites are missing are rejected with the line of the
 * offending node.
 */
inline Config parse_config(const std::string& text, const std::string& base_dir = ".") {
    using namespace detail;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(std::string("malformed document: ") + e.what());
    }
    if (!root.IsMap()) throw ConfigError("line 1: document must be a mapping");
    check_keys(root, "config", {"name", "grid", "operator", "steady", "nonlinearity", "coefficients", "equation",
                                "perturbation", "certify", "output", "sweep"});
    Config c;
    c.base_dir = base_dir;
    c.name = read<std::string>(root, "name", "config", c.name);

    if (const auto g = root["grid"]) {
        check_keys(g, "grid", {"kind", "dimension", "x_lo", "x_hi", "radius", "node_count"});
        c.grid.kind = read<std::string>(g, "kind", "grid", c.grid.kind);
        if (c.grid.kind != "interval" && c.grid.kind != "radial") fail(g, "grid.kind", "expected interval or radial");
        c.grid.dimension = read<int>(g, "dimension", "grid", c.grid.kind == "radial" ? 2 : 1);
        c.grid.x_lo = read<double>(g, "x_lo", "grid", c.grid.x_lo);
        c.grid.x_hi = read<double>(g, "x_hi", "grid", c.grid.x_hi);
        c.grid.radius = read<double>(g, "radius", "grid", c.grid.radius);
        c.grid.node_count = read<std::size_t>(g, "node_count", "grid", c.grid.node_count);
        if (c.grid.node_count < 3) fail(g, "grid.node_count", "need at least 3 nodes");
    }
    if (const auto o = root["operator"]) {
        check_keys(o, "operator", {"laplacian", "potential"});
        c.op.laplacian = read<std::string>(o, "laplacian", "operator", c.op.laplacian);
        if (c.op.laplacian != "dirichlet") fail(o, "operator.laplacian", "only dirichlet is supported");
        if (const auto p = o["potential"]) {
            check_keys(p, "operator.potential", {"kind", "value", "file"});
            c.op.potential.kind = read<std::string>(p, "kind", "operator.potential", c.op.potential.kind);
            if (c.op.potential.kind != "none" && c.op.potential.kind != "constant" && c.op.potential.kind != "table") {
                fail(p, "operator.potential.kind", "expected none, constant or table");
            }
            c.op.potential.value = read<double>(p, "value", "operator.potential", 0.0);
            c.op.potential.file = read<std::string>(p, "file", "operator.potential", "");
            if (c.op.potential.kind == "table" && c.op.potential.file.empty()) fail(p, "operator.potential.file", "table potential needs a file");
        }
    }
    if (const auto s = root["steady"]) {
        c.steady.kind = read<std::string>(s, "kind", "steady", c.steady.kind);
        static const std::map<std::string, std::set<std::string>> keys = {
            {"zero", {"kind"}}, {"chen_li", {"kind", "lambda"}}, {"shooting", {"kind", "n", "p", "v_center"}}, {"table", {"kind", "file"}}};
        const auto it = keys.find(c.steady.kind);
        if (it == keys.end()) fail(s, "steady.kind", "expected zero, chen_li, shooting or table");
        check_keys(s, "steady", it->second);
        c.steady.lambda = read<double>(s, "lambda", "steady", c.steady.lambda);
        c.steady.n = read<int>(s, "n", "steady", c.steady.n);
        c.steady.p = read<double>(s, "p", "steady", c.steady.p);
        c.steady.v_center = read<double>(s, "v_center", "steady", c.steady.v_center);
        c.steady.file = read<std::string>(s, "file", "steady", "");
    }
    if (const auto f = root["nonlinearity"]) {
        check_keys(f, "nonlinearity", {"kind", "p", "convexity"});
        c.nonlinearity.kind = read<std::string>(f, "kind", "nonlinearity", c.nonlinearity.kind);
        c.nonlinearity.p = read<double>(f, "p", "nonlinearity", c.nonlinearity.p);
        c.nonlinearity.convexity = read<std::string>(f, "convexity", "nonlinearity", "");
        Nonlinearity nl = Nonlinearity::quadratic();
        try {
            nl = make_nonlinearity(c.nonlinearity);
        } catch (const std::invalid_argument& e) {
            fail(f, "nonlinearity", e.what());
        }
        if (!c.nonlinearity.convexity.empty() && c.nonlinearity.convexity != to_string(nl.convexity())) {
            fail(f, "nonlinearity.convexity", "declared '" + c.nonlinearity.convexity + "' but kind is " + to_string(nl.convexity()));
        }
    }
    if (const auto k = root["coefficients"]) {
        check_keys(k, "coefficients", {"a", "b", "declared"});
        if (k["a"]) c.coefficients.a = parse_coefficient(k["a"], "coefficients.a");
        if (k["b"]) c.coefficients.b = parse_coefficient(k["b"], "coefficients.b");
        if (c.coefficients.a.kind == "power_decay" || c.coefficients.a.kind == "cos_modulated") {
            fail(k["a"], "coefficients.a.kind", "a(t) must stay above a positive constant");
        }
        const auto& a = c.coefficients.a;
        if ((a.kind == "constant" && !(a.value > 0.0)) || (a.kind == "shifted_sine" && !(a.b0 - std::abs(a.amp) > 0.0))) {
            fail(k["a"], "coefficients.a", "a(t) must stay above a positive constant");
        }
        if (const auto d = k["declared"]) {
            check_keys(d, "coefficients.declared", {"b_sup", "b_l1", "b_over_a_l1", "b_positive"});
            c.coefficients.declared.b_sup = read_optional<double>(d, "b_sup", "coefficients.declared");
            c.coefficients.declared.b_l1 = read_optional<double>(d, "b_l1", "coefficients.declared");
            c.coefficients.declared.b_over_a_l1 = read_optional<double>(d, "b_over_a_l1", "coefficients.declared");
            c.coefficients.declared.b_positive = read<bool>(d, "b_positive", "coefficients.declared", false);
        }
    }
    if (const auto e = root["equation"]) {
        check_keys(e, "equation", {"kind", "t_max", "cfl"});
        c.equation.kind = read<std::string>(e, "kind", "equation", c.equation.kind);
        if (c.equation.kind != "hyperbolic" && c.equation.kind != "parabolic") fail(e, "equation.kind", "expected hyperbolic or parabolic");
        c.equation.t_max = read<double>(e, "t_max", "equation", c.equation.t_max);
        c.equation.cfl = read<double>(e, "cfl", "equation", c.equation.cfl);
        if (!(c.equation.t_max > 0.0 && c.equation.cfl > 0.0)) {
            fail(e, "equation", "t_max and cfl must be positive");
        }
    }
    if (const auto p = root["perturbation"]) {
        check_keys(p, "perturbation", {"epsilon", "delta", "delta_factor", "concave_mode"});
        c.perturbation.epsilon = read<double>(p, "epsilon", "perturbation", c.perturbation.epsilon);
        c.perturbation.delta = read_optional<double>(p, "delta", "perturbation");
        c.perturbation.delta_factor = read_optional<double>(p, "delta_factor", "perturbation");
        c.perturbation.concave_mode = read<bool>(p, "concave_mode", "perturbation", false);
        if (c.perturbation.delta && c.perturbation.delta_factor) fail(p, "perturbation", "give delta or delta_factor, not both");
        if (c.perturbation.delta_factor && !c.coefficients.declared.b_sup) {
            fail(p, "perturbation.delta_factor", "delta_factor scales the threshold, which needs coefficients.declared.b_sup");
        }
    }
    if (const auto s = root["certify"]) {
        check_keys(s, "certify", {"clauses", "rel_slack", "inequality_tol", "window"});
        c.certify.clauses = read<std::vector<std::string>>(s, "clauses", "certify", {});
        c.certify.rel_slack = read<double>(s, "rel_slack", "certify", c.certify.rel_slack);
        c.certify.inequality_tol = read<double>(s, "inequality_tol", "certify", c.certify.inequality_tol);
        c.certify.window = read<double>(s, "window", "certify", c.certify.window);
    }
    if (const auto o = root["output"]) {
        check_keys(o, "output", {"directory", "cadence"});
        c.output.directory = read<std::string>(o, "directory", "output", c.output.directory);
        c.output.cadence = read<double>(o, "cadence", "output", c.output.cadence);
        if (!(c.output.cadence > 0.0)) fail(o, "output.cadence", "must be positive");
    }
    if (const auto w = root["sweep"]) {
        check_keys(w, "sweep", {"parameter", "values"});
        SweepConfig sw;
        sw.parameter = read<std::string>(w, "parameter", "sweep", "");
        sw.values = read<std::vector<double>>(w, "values", "sweep", {});
        if (sw.parameter.empty() || sw.values.empty()) fail(w, "sweep", "needs parameter and values");
        c.sweep = sw;
    }
    check_clause_requirements(c, root);
    return c;
}

inline Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path().string());
}

// ---------------------------------------------------------------------------
// serialization

namespace detail {

inline void emit_coefficient(YAML::Emitter& out, const CoefficientSpec& s) {
    out << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << s.kind;
    const auto& keys = coefficient_keys().at(s.kind);
    auto put = [&](const char* key, double v) {
        if (keys.count(key)) out << YAML::Key << key << YAML::Value << v;
    };
    put("value", s.value);
    put("b0", s.b0);
    put("alpha", s.alpha);
    put("omega", s.omega);
    put("a1", s.a1);
    put("r", s.r);
    put("amp", s.amp);
    out << YAML::EndMap;
}

}  // namespace detail

/// Canonical YAML text; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const Config& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;

    out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << c.grid.kind;
    out << YAML::Key << "dimension" << YAML::Value << c.grid.dimension;
    if (c.grid.kind == "interval") {
        out << YAML::Key << "x_lo" << YAML::Value << c.grid.x_lo;
        out << YAML::Key << "x_hi" << YAML::Value << c.grid.x_hi;
    } else {
        out << YAML::Key << "radius" << YAML::Value << c.grid.radius;
    }
    out << YAML::Key << "node_count" << YAML::Value << c.grid.node_count;
    out << YAML::EndMap;

    out << YAML::Key << "operator" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "laplacian" << YAML::Value << c.op.laplacian;
    out << YAML::Key << "potential" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << c.op.potential.kind;
    if (c.op.potential.kind == "constant") out << YAML::Key << "value" << YAML::Value << c.op.potential.value;
    if (c.op.potential.kind == "table") out << YAML::Key << "file" << YAML::Value << c.op.potential.file;
    out << YAML::EndMap << YAML::EndMap;

    out << YAML::Key << "steady" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << c.steady.kind;
    if (c.steady.kind == "chen_li") out << YAML::Key << "lambda" << YAML::Value << c.steady.lambda;
    if (c.steady.kind == "shooting") {
        out << YAML::Key << "n" << YAML::Value << c.steady.n;
        out << YAML::Key << "p" << YAML::Value << c.steady.p;
        out << YAML::Key << "v_center" << YAML::Value << c.steady.v_center;
    }
    if (c.steady.kind == "table") out << YAML::Key << "file" << YAML::Value << c.steady.file;
    out << YAML::EndMap;

    out << YAML::Key << "nonlinearity" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << c.nonlinearity.kind;
    out << YAML::Key << "p" << YAML::Value << c.nonlinearity.p;
    if (!c.nonlinearity.convexity.empty()) out << YAML::Key << "convexity" << YAML::Value << c.nonlinearity.convexity;
    out << YAML::EndMap;

    out << YAML::Key << "coefficients" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "a" << YAML::Value;
    detail::emit_coefficient(out, c.coefficients.a);
    out << YAML::Key << "b" << YAML::Value;
    detail::emit_coefficient(out, c.coefficients.b);
    out << YAML::Key << "declared" << YAML::Value << YAML::BeginMap;
    const auto& d = c.coefficients.declared;
    if (d.b_sup) out << YAML::Key << "b_sup" << YAML::Value << *d.b_sup;
    if (d.b_l1) out << YAML::Key << "b_l1" << YAML::Value << *d.b_l1;
    if (d.b_over_a_l1) out << YAML::Key << "b_over_a_l1" << YAML::Value << *d.b_over_a_l1;
    out << YAML::Key << "b_positive" << YAML::Value << d.b_positive;
    out << YAML::EndMap << YAML::EndMap;

    out << YAML::Key << "equation" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << c.equation.kind;
    out << YAML::Key << "t_max" << YAML::Value << c.equation.t_max;
    out << YAML::Key << "cfl" << YAML::Value << c.equation.cfl;
    out << YAML::EndMap;

    out << YAML::Key << "perturbation" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "epsilon" << YAML::Value << c.perturbation.epsilon;
    if (c.perturbation.delta) out << YAML::Key << "delta" << YAML::Value << *c.perturbation.delta;
    if (c.perturbation.delta_factor) out << YAML::Key << "delta_factor" << YAML::Value << *c.perturbation.delta_factor;
    out << YAML::Key << "concave_mode" << YAML::Value << c.perturbation.concave_mode;
    out << YAML::EndMap;

    out << YAML::Key << "certify" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "clauses" << YAML::Value << YAML::Flow << c.certify.clauses;
    out << YAML::Key << "rel_slack" << YAML::Value << c.certify.rel_slack;
    out << YAML::Key << "inequality_tol" << YAML::Value << c.certify.inequality_tol;
    out << YAML::Key << "window" << YAML::Value << c.certify.window;
    out << YAML::EndMap;

    out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "directory" << YAML::Value << c.output.directory;
    out << YAML::Key << "cadence" << YAML::Value << c.output.cadence;
    out << YAML::EndMap;

    if (c.sweep) {
        out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "parameter" << YAML::Value << c.sweep->parameter;
        out << YAML::Key << "values" << YAML::Value << YAML::Flow << c.sweep->values;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

/// 64-bit FNV-1a of the canonical serialization, as 16 hex digits.
inline std::string fingerprint(const Config& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize_config(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Copy of `c` with the dotted scalar `path` (e.g. "coefficients.b.alpha")
/// set to `value`, re-validated through the parser.
inline Config with_parameter(const Config& c, const std::string& path, double value) {
    YAML::Node root = YAML::Load(serialize_config(c));
    std::vector<std::string> parts;
    std::stringstream ss(path);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    if (parts.empty()) throw ConfigError("sweep: empty parameter path");
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        YAML::Node next = chain.back()[parts[i]];
        if (!next || !next.IsMap()) throw ConfigError("sweep: parameter path '" + path + "' does not name a section");
        chain.push_back(next);
    }
    if (!chain.back()[parts.back()]) throw ConfigError("sweep: parameter '" + path + "' is not set in the base config");
    chain.back()[parts.back()] = value;
    root.remove("sweep");
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << root;
    return parse_config(out.c_str(), c.base_dir);
}

}  // namespace kaplab::runner
