#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kaplab/evolve.hpp"
#include "kaplab/kaplan.hpp"
#include "kaplab/odelab.hpp"
#include "kaplab/runner/config.hpp"
#include "kaplab/spectral.hpp"
#include "kaplab/steady.hpp"

namespace kaplab::runner {

using Json = nlohmann::ordered_json;

enum ExitCode : int { exit_ok = 0, exit_operational = 1, exit_hypothesis = 2, exit_clause_failed = 3 };

// ---------------------------------------------------------------------------
// pipeline: grid -> operator -> steady -> eigenpair

/// Last column of a CSV (header optional) as numbers.
inline std::vector<double> read_column_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open table '" + path.string() + "'");
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find_last_of(',');
        const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str()) {
            if (values.empty()) continue;  // header
            throw ConfigError("table '" + path.string() + "': unreadable value '" + cell + "'");
        }
        values.push_back(v);
    }
    return values;
}

inline std::filesystem::path resolve(const Config& c, const std::string& file) {
    std::filesystem::path p(file);
    return p.is_absolute() ? p : std::filesystem::path(c.base_dir) / p;
}

struct Pipeline {
    Grid grid;
    OperatorMatrix op;
    SteadyState steady;
    OperatorMatrix linearized;
    CoefficientProfile profile;
};

inline Grid make_grid(const Config& c) {
    if (c.grid.kind == "interval") return build_interval_grid(c.grid.x_lo, c.grid.x_hi, c.grid.node_count);
    return build_radial_grid(c.grid.dimension, c.grid.radius, c.grid.node_count);
}

inline OperatorMatrix make_operator(const Config& c, const Grid& g) {
    OperatorMatrix op = assemble_dirichlet_laplacian(g);
    const auto& p = c.op.potential;
    if (p.kind == "constant") op = add_potential(op, PotentialField::constant(g.interior_count(), p.value));
    if (p.kind == "table") {
        auto values = read_column_table(resolve(c, p.file));
        if (values.size() == g.node_count) values = std::vector<double>(values.begin() + g.interior_begin(), values.begin() + g.interior_begin() + g.interior_count());
        if (values.size() != g.interior_count()) throw ConfigError("potential table length matches neither node nor interior count");
        op = add_potential(op, PotentialField(values));
    }
    return op;
}

inline SteadyState make_steady(const Config& c, const Grid& g) {
    const Nonlinearity f = make_nonlinearity(c.nonlinearity);
    const auto& s = c.steady;
    if (s.kind == "zero") return zero_steady(g, f);
    if (s.kind == "chen_li") {
        if (f.kind() != NonlinearityKind::exponential) throw ConfigError("steady chen_li needs nonlinearity.kind exponential");
        return chen_li_exponential(s.lambda, g);
    }
    if (s.kind == "shooting") {
        if (f.kind() != NonlinearityKind::power_abs || f.exponent() != s.p) {
            throw ConfigError("steady shooting needs nonlinearity power_abs with the same p");
        }
        return power_steady_shooting(s.n, s.p, s.v_center, g);
    }
    return tabulated_steady(g, read_column_table(resolve(c, s.file)), f);
}

inline Pipeline build_pipeline(const Config& c) {
    Pipeline p;
    p.grid = make_grid(c);
    p.op = make_operator(c, p.grid);
    p.steady = make_steady(c, p.grid);
    validate_steady(p.steady, p.op);
    p.linearized = assemble_linearized(p.op, p.steady);
    p.profile = make_profile(c.coefficients);
    return p;
}

// ---------------------------------------------------------------------------
// clause verdicts

struct ClauseVerdict {
    std::string clause;
    bool pass = false;
    bool hypothesis_violation = false;
    std::string note;
    Json margins = Json::object();
    Json rates = Json::object();
    Json envelope_params = Json::object();
};

/// Everything a verdict needs, recoverable from a run directory.
struct VerdictContext {
    const Config& config;
    const CoefficientProfile& profile;
    const EigenPair& eig;
    const Nonlinearity& nonlinearity;
    VerdictContext(const Config& c, const CoefficientProfile& prof, const EigenPair& e, const Nonlinearity& f)
        : config(c), profile(prof), eig(e), nonlinearity(f) {}
    double phi_l2 = 1.0;
    double phi_l1 = 1.0;
    std::vector<RunSample> samples;
    RunStatus status = RunStatus::completed;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();
    double tol_scale = 1.0;
};

/// W and W' of the run; first-order runs differentiate the sampled W.
inline KaplanSeries series_from_samples(const std::vector<RunSample>& samples, OdeKind kind, SignMode mode) {
    KaplanSeries ks;
    ks.sign_mode = mode;
    for (const auto& s : samples) {
        ks.times.push_back(s.t);
        ks.W.push_back(s.W);
        ks.Wprime.push_back(s.Wprime);
    }
    if (kind == OdeKind::parabolic) ks.Wprime = sampled_derivative(ks.times, ks.W);
    return ks;
}

namespace detail {

inline Json params_json(const EnvelopeBound& e) {
    Json j = Json::object();
    j["kind"] = to_string(e.kind);
    for (const auto& [k, v] : e.parameters) j[k] = v;
    if (std::isfinite(e.valid_until)) j["valid_until"] = e.valid_until;
    return j;
}

inline double finite_or_null(double x) { return std::isfinite(x) ? x : std::numeric_limits<double>::quiet_NaN(); }

/// Samples strictly before the blow-up bracket (all of them for completed runs).
inline std::size_t pre_bracket_count(const VerdictContext& ctx) {
    if (ctx.status == RunStatus::blowup && ctx.samples.size() >= 2) return ctx.samples.size() - 1;
    return ctx.samples.size();
}

inline double t_stop(const VerdictContext& ctx) {
    if (ctx.status == RunStatus::blowup && ctx.samples.size() >= 2) return ctx.samples[ctx.samples.size() - 2].t;
    return std::numeric_limits<double>::infinity();
}

inline void envelope_clause(ClauseVerdict& v, const VerdictContext& ctx, const KaplanSeries& ks, const EnvelopeBound& e) {
    const double slack = ctx.config.certify.rel_slack * ctx.tol_scale;
    const double stop = t_stop(ctx);
    const auto rep = compare_to_envelope(ks, e, slack, stop);
    v.envelope_params = params_json(e);
    v.margins["min_margin"] = rep.min_margin;
    v.margins["min_scaled_margin"] = rep.min_scaled_margin;
    v.margins["samples_checked"] = rep.samples_checked;
    if (rep.first_violation) v.margins["first_violation_t"] = *rep.first_violation;
    v.pass = rep.pass && rep.samples_checked > 0;
    if (e.rate) {
        const double t_end = std::min(stop, ks.times.back());
        try {
            const auto fit = fit_rate(ks, 0.5 * t_end, t_end);
            v.rates["fitted"] = fit.rate;
            v.rates["envelope"] = *e.rate;
            v.rates["fit_residual_rms"] = fit.residual_rms;
            v.rates["fit_window"] = Json::array({0.5 * t_end, t_end});
            const bool dominant = fit.rate >= *e.rate - 0.05;
            v.rates["dominates"] = dominant;
            v.pass = v.pass && dominant;
        } catch (const std::invalid_argument& err) {
            v.note = err.what();
            v.pass = false;
        }
    }
}

inline void require_instability(const VerdictContext& ctx) {
    if (ctx.eig.verdict != EigenVerdict::principal) throw HypothesisViolation("principal eigenfunction changes sign");
    if (!(ctx.eig.sigma_sq > 0.0)) throw HypothesisViolation("linearized operator has no negative eigenvalue");
}

inline void require_convexity(const VerdictContext& ctx, bool concave) {
    const Convexity want = concave ? Convexity::concave : Convexity::convex;
    if (ctx.nonlinearity.convexity() != want) {
        throw HypothesisViolation(std::string("nonlinearity is not ") + to_string(want));
    }
}

inline void require_positive_data(const VerdictContext& ctx, bool hyperbolic) {
    const auto& s0 = ctx.samples.front();
    if (!(s0.W > 0.0)) throw HypothesisViolation("initial projection W(0) is not positive");
    if (hyperbolic && !(s0.Wprime > 0.0)) throw HypothesisViolation("initial projection W'(0) is not positive");
}

inline ClauseVerdict evaluate_clause(const std::string& id, const VerdictContext& ctx) {
    ClauseVerdict v;
    v.clause = id;
    const auto& cfg = ctx.config;
    const OdeKind kind = cfg.equation.kind == "hyperbolic" ? OdeKind::hyperbolic : OdeKind::parabolic;
    const SignMode mode = cfg.perturbation.concave_mode ? SignMode::concave_flipped : SignMode::standard;
    const KaplanSeries ks = series_from_samples(ctx.samples, kind, mode);
    const double sigma_sq = ctx.eig.sigma_sq;
    const auto& prof = ctx.profile;
    const double W0 = ks.W.front();
    const double Wp0 = ks.Wprime.front();
    const std::size_t n_pre = pre_bracket_count(ctx);
    const double rel = 1e-12;

    try {
        require_instability(ctx);
        if (id == "T1a" || id == "T1concave") {
            require_convexity(ctx, id == "T1concave");
            require_positive_data(ctx, true);
            double min_wp = std::numeric_limits<double>::infinity();
            double min_norm_gap = std::numeric_limits<double>::infinity();
            double min_chain = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n_pre; ++i) {
                const auto& s = ctx.samples[i];
                min_wp = std::min(min_wp, ks.Wprime[i]);
                if (i > 0) min_norm_gap = std::min(min_norm_gap, s.l2_norm - W0 / ctx.phi_l2);
                min_chain = std::min(min_chain, s.l2_norm * ctx.phi_l2 - std::abs(ks.W[i]) + rel * std::abs(ks.W[i]));
            }
            v.margins["min_Wprime"] = min_wp;
            v.margins["min_l2_minus_W0_over_phi_l2"] = min_norm_gap;
            v.margins["min_chain_l2"] = min_chain;
            v.pass = min_wp > 0.0 && min_norm_gap > 0.0 && min_chain >= 0.0;
        } else if (id == "T1b") {
            require_convexity(ctx, cfg.perturbation.concave_mode);
            require_positive_data(ctx, true);
            if (!hyperbolic_threshold(sigma_sq, prof, W0, Wp0)) throw HypothesisViolation("initial data below the growth threshold");
            v.margins["threshold_slope"] = threshold_slope(sigma_sq, prof);
            envelope_clause(v, ctx, ks, envelope_L2var(sigma_sq, prof, W0));
        } else if (id == "T1c") {
            require_convexity(ctx, cfg.perturbation.concave_mode);
            require_positive_data(ctx, true);
            envelope_clause(v, ctx, ks, envelope_L2(sigma_sq, prof, W0, Wp0));
        } else if (id == "T1d") {
            require_convexity(ctx, cfg.perturbation.concave_mode);
            require_positive_data(ctx, true);
            envelope_clause(v, ctx, ks, envelope_L3(sigma_sq, prof, W0));
        } else if (id == "T1blowup" || id == "T2c") {
            require_convexity(ctx, cfg.perturbation.concave_mode);
            require_positive_data(ctx, kind == OdeKind::hyperbolic);
            if (!ctx.nonlinearity.lower_bound() && !cfg.perturbation.concave_mode) {
                throw HypothesisViolation("nonlinearity has no bound f >= C|u|^p");
            }
            v.margins["t_star"] = finite_or_null(ctx.blowup_time);
            v.margins["final_sup_norm"] = ctx.samples.back().sup_norm;
            v.pass = ctx.status == RunStatus::blowup && std::isfinite(ctx.blowup_time);
        } else if (id == "T2a") {
            require_convexity(ctx, cfg.perturbation.concave_mode);
            require_positive_data(ctx, false);
            double min_growth = std::numeric_limits<double>::infinity();
            double min_norm_gap = std::numeric_limits<double>::infinity();
            double min_chain = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n_pre; ++i) {
                const auto& s = ctx.samples[i];
                if (i > 0) {
                    min_growth = std::min(min_growth, ks.W[i] - W0);
                    min_norm_gap = std::min(min_norm_gap, s.sup_norm - W0 / ctx.phi_l1);
                }
                min_chain = std::min(min_chain, s.sup_norm * ctx.phi_l1 - std::abs(ks.W[i]) + rel * std::abs(ks.W[i]));
            }
            v.margins["min_W_minus_W0"] = min_growth;
            v.margins["min_sup_minus_W0_over_phi_l1"] = min_norm_gap;
            v.margins["min_chain_sup"] = min_chain;
            v.pass = min_growth > 0.0 && min_norm_gap > 0.0 && min_chain >= 0.0;
        } else if (id == "T2b") {
            require_convexity(ctx, cfg.perturbation.concave_mode);
            require_positive_data(ctx, false);
            envelope_clause(v, ctx, ks, envelope_L5(sigma_sq, prof, W0));
        } else if (id == "W") {
            require_convexity(ctx, cfg.perturbation.concave_mode);
            KaplanSeries pre = ks;
            pre.times.resize(n_pre);
            pre.W.resize(n_pre);
            pre.Wprime.resize(n_pre);
            const auto rep = check_projected_inequality(pre, prof, sigma_sq, cfg.certify.window,
                                                        cfg.certify.inequality_tol * ctx.tol_scale, kind);
            v.margins["windows"] = rep.windows;
            v.margins["min_scaled_margin"] = rep.min_scaled_margin;
            v.pass = rep.pass;
        } else {
            // oracle clauses: equality-case oracle runs with c = sigma^2 and the run's initial projections
            const double t_end = cfg.equation.t_max;
            const double slack = 1e-6 * ctx.tol_scale;
            auto witness_margins = [&](const OdeWitness& w) {
                v.margins["oracle_steps"] = w.steps;
                v.margins["oracle_status"] = w.status == WitnessStatus::blowup ? "blowup" : "completed";
                if (w.status == WitnessStatus::blowup) v.margins["oracle_blowup_time"] = w.blowup_time;
            };
            auto check = [&](const OdeWitness& w, const EnvelopeBound& e) {
                const auto rep = verify_envelope(w, e, slack);
                v.envelope_params = params_json(e);
                v.margins["min_scaled_margin"] = rep.min_scaled_margin;
                witness_margins(w);
                return rep.pass;
            };
            if (id == "L1" || id == "L2var" || id == "L2" || id == "L3") {
                require_positive_data(ctx, true);
                const auto w = oracle_integrate(OdeKind::hyperbolic, prof, OdeRhs::linear(sigma_sq), W0, Wp0, t_end);
                if (id == "L1") {
                    double m = std::numeric_limits<double>::infinity();
                    for (double yp : w.Yprime) m = std::min(m, yp);
                    v.margins["min_Yprime"] = m;
                    witness_margins(w);
                    v.pass = m > 0.0;
                } else if (id == "L2var") {
                    if (!hyperbolic_threshold(sigma_sq, prof, W0, Wp0)) throw HypothesisViolation("initial data below the growth threshold");
                    v.pass = check(w, envelope_L2var(sigma_sq, prof, W0));
                } else if (id == "L2") {
                    v.pass = check(w, envelope_L2(sigma_sq, prof, W0, Wp0));
                } else {
                    v.pass = check(w, envelope_L3(sigma_sq, prof, W0));
                }
            } else if (id == "L4") {
                require_positive_data(ctx, true);
                const double p = ctx.nonlinearity.lower_bound() ? ctx.nonlinearity.lower_bound()->exponent : 2.0;
                if (!prof.B()) throw HypothesisViolation("L4 needs a declared bound on |b|");
                if (!prof.growth_constant && !prof.a1) throw HypothesisViolation("L4 needs a(t) <= K (1+t)^r");
                const double B = *prof.B();
                const double C = 1.0 / prof.growth_constant.value_or(prof.a1.value_or(1.0));
                const auto model = CoefficientProfile::constant(1.0, B);
                const auto w = oracle_integrate(OdeKind::hyperbolic, model, OdeRhs::power_law(C, p, prof.growth_exponent), W0, Wp0,
                                                std::max(t_end, 1e3));
                v.envelope_params = Json{{"B", B}, {"C", C}, {"r", prof.growth_exponent}, {"p", p}};
                witness_margins(w);
                v.pass = w.status == WitnessStatus::blowup;
            } else if (id == "L5") {
                require_positive_data(ctx, false);
                const auto w = oracle_integrate(OdeKind::parabolic, prof, OdeRhs::linear(sigma_sq), W0, std::nullopt, t_end);
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t i = 1; i < w.Y.size(); ++i) m = std::min(m, w.Y[i] - W0);
                v.margins["min_Y_minus_Y0"] = m;
                v.pass = check(w, envelope_L5(sigma_sq, prof, W0)) && m > 0.0;
            } else if (id == "L6") {
                require_positive_data(ctx, false);
                const auto lb = ctx.nonlinearity.lower_bound();
                if (!lb) throw HypothesisViolation("nonlinearity has no bound f >= C|u|^p");
                const double t_inf = blowup_time_L6(lb->constant, lb->exponent, prof, W0);
                const auto w = oracle_integrate(OdeKind::parabolic, prof, OdeRhs::power_law(lb->constant, lb->exponent), W0,
                                                std::nullopt, 1.5 * t_inf);
                const bool dominated = check(w, lower_curve_L6(lb->constant, lb->exponent, prof, W0));
                v.margins["T_inf_minus_oracle_blowup"] = w.status == WitnessStatus::blowup ? t_inf - w.blowup_time : -1.0;
                v.pass = dominated && w.status == WitnessStatus::blowup && w.blowup_time <= t_inf * (1.0 + 1e-9);
            }
        }
    } catch (const HypothesisViolation& e) {
        v.pass = false;
        v.hypothesis_violation = true;
        v.note = e.what();
    } catch (const ConvergenceError& e) {
        v.pass = false;
        v.note = e.what();
    }
    return v;
}

}  // namespace detail

inline std::vector<ClauseVerdict> evaluate_clauses(const VerdictContext& ctx) {
    std::vector<ClauseVerdict> out;
    for (const auto& id : ctx.config.certify.clauses) out.push_back(detail::evaluate_clause(id, ctx));
    return out;
}

inline Json verdicts_json(const std::string& scenario, const std::vector<ClauseVerdict>& verdicts) {
    Json arr = Json::array();
    for (const auto& v : verdicts) {
        Json j;
        j["scenario"] = scenario;
        j["theorem_clause"] = v.clause;
        j["pass"] = v.pass;
        j["margins"] = v.margins;
        j["rates"] = v.rates;
        j["envelope_params"] = v.envelope_params;
        if (v.hypothesis_violation) j["hypothesis_violation"] = true;
        if (!v.note.empty()) j["note"] = v.note;
        arr.push_back(j);
    }
    return arr;
}

inline int exit_code_for(const std::vector<ClauseVerdict>& verdicts) {
    bool violation = false, failed = false;
    for (const auto& v : verdicts) {
        violation = violation || v.hypothesis_violation;
        failed = failed || !v.pass;
    }
    if (violation) return exit_hypothesis;
    return failed ? exit_clause_failed : exit_ok;
}

// ---------------------------------------------------------------------------
// artifacts

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_series_csv(std::ostream& os, const RunRecord& rec) {
    os << "t,l2_norm,sup_norm,W,Wprime,dt\n";
    for (const auto& s : rec.samples) {
        os << format_number(s.t) << ',' << format_number(s.l2_norm) << ',' << format_number(s.sup_norm) << ','
           << format_number(s.W) << ',' << format_number(s.Wprime) << ',' << format_number(s.dt) << '\n';
    }
}

inline std::vector<RunSample> read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    if (line != "t,l2_norm,sup_norm,W,Wprime,dt") throw std::runtime_error("series.csv: unexpected header '" + line + "'");
    std::vector<RunSample> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RunSample s{};
        double* fields[] = {&s.t, &s.l2_norm, &s.sup_norm, &s.W, &s.Wprime, &s.dt};
        std::stringstream ss(line);
        std::string cell;
        for (double* f : fields) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("series.csv: short row");
            *f = std::strtod(cell.c_str(), nullptr);
        }
        out.push_back(s);
    }
    return out;
}

inline Json eig_json(const Grid& grid, const EigenPair& e, double steady_residual, double leakage) {
    Json j;
    j["lambda1"] = e.lambda1();
    j["sigma_sq"] = e.sigma_sq;
    j["verdict"] = e.verdict == EigenVerdict::principal ? "principal" : "mixed_sign";
    j["residual"] = e.residual;
    j["iterations"] = e.iterations;
    j["phi1_l2"] = l2_norm(grid, e.phi1);
    j["phi1_l1"] = l1_norm(grid, e.phi1);
    j["steady_residual"] = detail::finite_or_null(steady_residual);
    j["boundary_leakage"] = leakage;
    return j;
}

struct RunOptions {
    double tol_scale = 1.0;
    bool write = true;
    std::optional<std::filesystem::path> out_dir;
};

struct RunOutcome {
    int exit_code = exit_ok;
    std::string message;
    std::vector<ClauseVerdict> verdicts;
    RunRecord record;
    EigenPair eig;
    std::filesystem::path directory;
};

inline std::filesystem::path output_dir(const Config& c, const RunOptions& o) {
    if (o.out_dir) return *o.out_dir;
    const std::filesystem::path p(c.output.directory);
    return p.is_absolute() ? p : std::filesystem::path(c.base_dir) / p;
}

/// Scenario for a config: delta_factor scales the growth threshold slope
/// times W(0) = epsilon.
inline Scenario make_scenario(const Config& c, const Pipeline& p, const EigenPair& eig) {
    Scenario s;
    s.grid = p.grid;
    s.op = p.op;
    s.steady = p.steady;
    s.profile = p.profile;
    s.kind = c.equation.kind == "hyperbolic" ? OdeKind::hyperbolic : OdeKind::parabolic;
    s.epsilon = c.perturbation.epsilon;
    s.concave_mode = c.perturbation.concave_mode;
    s.t_max = c.equation.t_max;
    s.cadence = c.output.cadence;
    s.cfl = c.equation.cfl;
    s.keep_snapshots = false;
    if (c.perturbation.delta) s.delta = *c.perturbation.delta;
    if (c.perturbation.delta_factor) s.delta = *c.perturbation.delta_factor * threshold_slope(eig.sigma_sq, p.profile) * s.epsilon;
    return s;
}

/**
 * Materializes grid, operator, steady state, eigenpair and run, writes every
 * artifact under the output directory and returns the clause verdicts.
 * Hypothesis violations detected before or during the run map to exit 2.
 */
inline RunOutcome run_config(const Config& c, const RunOptions& opts = {}) {
    namespace fs = std::filesystem;
    RunOutcome outcome;
    outcome.directory = output_dir(c, opts);
    if (opts.write) {
        fs::create_directories(outcome.directory);
        write_text(outcome.directory / "config.yaml", serialize_config(c));
    }
    const Pipeline p = build_pipeline(c);
    try {
        outcome.eig = principal_eigenpair(p.linearized);
    } catch (const ConvergenceError& e) {
        outcome.exit_code = exit_operational;
        outcome.message = e.what();
        return outcome;
    }
    if (opts.write) {
        std::ostringstream steady_csv, eig_csv;
        write_steady_csv(steady_csv, p.steady);
        write_eigenpair_csv(eig_csv, p.grid, outcome.eig);
        write_text(outcome.directory / "steady.csv", steady_csv.str());
        write_text(outcome.directory / "eigenpair.csv", eig_csv.str());
        write_text(outcome.directory / "eig.json",
                   eig_json(p.grid, outcome.eig, p.steady.residual_norm, p.steady.boundary_leakage()).dump(2) + "\n");
    }

    auto violation = [&](const std::string& what) {
        outcome.exit_code = exit_hypothesis;
        outcome.message = what;
        for (const auto& id : c.certify.clauses) {
            ClauseVerdict v;
            v.clause = id;
            v.hypothesis_violation = true;
            v.note = what;
            outcome.verdicts.push_back(v);
        }
        if (opts.write) write_text(outcome.directory / "verdicts.json", verdicts_json(c.name, outcome.verdicts).dump(2) + "\n");
        return outcome;
    };

    const auto cert = certify_profile(p.profile, c.equation.t_max);
    if (!cert.ok) return violation(cert.failures.front());
    if (outcome.eig.verdict != EigenVerdict::principal) return violation("principal eigenfunction changes sign");

    const Scenario s = make_scenario(c, p, outcome.eig);
    try {
        outcome.record = run_scenario(s, outcome.eig);
    } catch (const HypothesisViolation& e) {
        return violation(e.what());
    }
    outcome.record.fingerprint = fingerprint(c);

    VerdictContext ctx{c, p.profile, outcome.eig, p.steady.nonlinearity};
    ctx.phi_l2 = l2_norm(p.grid, outcome.eig.phi1);
    ctx.phi_l1 = l1_norm(p.grid, outcome.eig.phi1);
    ctx.samples = outcome.record.samples;
    ctx.status = outcome.record.status;
    ctx.blowup_time = outcome.record.blowup_time;
    ctx.tol_scale = opts.tol_scale;
    outcome.verdicts = evaluate_clauses(ctx);
    outcome.exit_code = exit_code_for(outcome.verdicts);

    if (opts.write) {
        std::ostringstream series;
        write_series_csv(series, outcome.record);
        write_text(outcome.directory / "series.csv", series.str());
        Json run;
        run["scenario"] = c.name;
        run["fingerprint"] = outcome.record.fingerprint;
        run["equation"] = c.equation.kind;
        run["status"] = to_string(outcome.record.status);
        run["t_star"] = detail::finite_or_null(outcome.record.blowup_time);
        run["blowup_cause"] = outcome.record.blowup_cause;
        run["blowup_threshold"] = outcome.record.blowup_threshold;
        run["delta"] = s.delta;
        run["epsilon"] = s.epsilon;
        run["solver"] = Json{{"method", "rk4"},
                             {"steps", outcome.record.stats.steps},
                             {"growth_limited_steps", outcome.record.stats.rejections},
                             {"final_dt", outcome.record.stats.final_dt},
                             {"spectral_radius_estimate", outcome.record.stats.spectral_radius}};
        run["tol_scale"] = opts.tol_scale;
        write_text(outcome.directory / "run.json", run.dump(2) + "\n");
        write_text(outcome.directory / "verdicts.json", verdicts_json(c.name, outcome.verdicts).dump(2) + "\n");
    }
    return outcome;
}

/// Recomputes verdicts from a run directory's config.yaml, series.csv and
/// run.json; writes nothing.
inline RunOutcome verify_directory(const std::filesystem::path& dir, double tol_scale = 1.0) {
    const Config c = load_config(dir / "config.yaml");
    const Pipeline p = build_pipeline(c);
    RunOutcome outcome;
    outcome.directory = dir;
    outcome.eig = principal_eigenpair(p.linearized);
    std::ifstream run_in(dir / "run.json");
    if (!run_in) {
        // the run stopped on a hypothesis violation; its verdicts are final
        std::ifstream vin(dir / "verdicts.json");
        if (!vin) throw std::runtime_error("verify: neither run.json nor verdicts.json in '" + dir.string() + "'");
        const Json v = Json::parse(vin);
        for (const auto& j : v) {
            ClauseVerdict cv;
            cv.clause = j.at("theorem_clause").get<std::string>();
            cv.pass = j.at("pass").get<bool>();
            cv.hypothesis_violation = j.value("hypothesis_violation", false);
            cv.note = j.value("note", "");
            outcome.verdicts.push_back(cv);
        }
        outcome.exit_code = exit_code_for(outcome.verdicts);
        return outcome;
    }
    const Json run = Json::parse(run_in);
    outcome.record.samples = read_series_csv(dir / "series.csv");
    const std::string status = run.at("status").get<std::string>();
    outcome.record.status = status == "blowup" ? RunStatus::blowup : status == "stalled" ? RunStatus::stalled : RunStatus::completed;
    outcome.record.blowup_time =
        run.at("t_star").is_number() ? run.at("t_star").get<double>() : std::numeric_limits<double>::quiet_NaN();
    outcome.record.fingerprint = run.at("fingerprint").get<std::string>();
    if (outcome.record.fingerprint != fingerprint(c)) throw std::runtime_error("verify: fingerprint does not match config.yaml");

    VerdictContext ctx{c, p.profile, outcome.eig, p.steady.nonlinearity};
    ctx.phi_l2 = l2_norm(p.grid, outcome.eig.phi1);
    ctx.phi_l1 = l1_norm(p.grid, outcome.eig.phi1);
    ctx.samples = outcome.record.samples;
    ctx.status = outcome.record.status;
    ctx.blowup_time = outcome.record.blowup_time;
    ctx.tol_scale = tol_scale;
    outcome.verdicts = evaluate_clauses(ctx);
    outcome.exit_code = exit_code_for(outcome.verdicts);
    return outcome;
}

struct BatchRow {
    std::size_t index = 0;
    double value = 0.0;
    int exit_code = 0;
    std::string status;
    double t_star = std::numeric_limits<double>::quiet_NaN();
    std::size_t clauses_passed = 0;
    std::size_t clauses = 0;
    std::string message;
};

/// Runs every sweep value into <out>/<name>_<i>/ with up to `workers`
/// concurrent runs; rows come back in sweep order.
inline std::vector<BatchRow> run_batch(const Config& base, std::size_t workers, const RunOptions& opts = {}) {
    if (!base.sweep) throw ConfigError("batch: config has no sweep block");
    const auto root = output_dir(base, opts);
    std::vector<BatchRow> rows(base.sweep->values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            BatchRow& row = rows[i];
            row.index = i;
            row.value = base.sweep->values[i];
            try {
                Config c = with_parameter(base, base.sweep->parameter, row.value);
                c.name = base.name + "_" + std::to_string(i);
                RunOptions o = opts;
                o.out_dir = root / c.name;
                const auto out = run_config(c, o);
                row.exit_code = out.exit_code;
                row.status = out.record.samples.empty() ? "not_run" : to_string(out.record.status);
                row.t_star = out.record.blowup_time;
                row.clauses = out.verdicts.size();
                for (const auto& v : out.verdicts) row.clauses_passed += v.pass ? 1 : 0;
                row.message = out.message;
            } catch (const std::exception& e) {
                row.exit_code = exit_operational;
                row.status = "error";
                row.message = e.what();
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, rows.size()));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (opts.write) {
        std::ostringstream os;
        os << "index,value,exit_code,status,t_star,clauses_passed,clauses\n";
        for (const auto& r : rows) {
            os << r.index << ',' << format_number(r.value) << ',' << r.exit_code << ',' << r.status << ','
               << format_number(r.t_star) << ',' << r.clauses_passed << ',' << r.clauses << '\n';
        }
        std::filesystem::create_directories(root);
        write_text(root / "summary.csv", os.str());
    }
    return rows;
}

inline int batch_exit_code(const std::vector<BatchRow>& rows) {
    int code = exit_ok;
    for (const auto& r : rows) {
        if (r.exit_code == exit_operational) return exit_operational;
        if (r.exit_code == exit_hypothesis) code = exit_hypothesis;
        else if (r.exit_code == exit_clause_failed && code == exit_ok) code = exit_clause_failed;
    }
    return code;
}

}  // namespace kaplab::runner
