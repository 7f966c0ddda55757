#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kaplab/coefficients.hpp"
#include "kaplab/error.hpp"
#include "kaplab/grid.hpp"
#include "kaplab/kaplan.hpp"
#include "kaplab/odelab.hpp"
#include "kaplab/operator.hpp"
#include "kaplab/spectral.hpp"
#include "kaplab/steady.hpp"

namespace kaplab {

/// One perturbed-PDE experiment about a steady state.
struct Scenario {
    Grid grid;
    OperatorMatrix op;
    SteadyState steady;
    CoefficientProfile profile;
    OdeKind kind = OdeKind::hyperbolic;
    double epsilon = 1e-3;
    double delta = 0.0;
    bool concave_mode = false;
    double t_max = 10.0;
    double cadence = 0.05;

    double cfl = 0.5;
    double growth_factor = 0.2;
    double blowup_threshold = 1e8;
    double dt_floor = 1e-12;
    std::size_t max_steps = 50'000'000;
    bool keep_snapshots = true;

    const Nonlinearity& nonlinearity() const { return steady.nonlinearity; }
    SignMode sign_mode() const { return concave_mode ? SignMode::concave_flipped : SignMode::standard; }
};

struct InitialState {
    std::vector<double> u;
    std::vector<double> ut;
    double W0 = 0.0;
    double Wp0 = 0.0;
};

/// u(0) = v + s eps phi1 and, for second-order runs, u_t(0) = s delta phi1,
/// with s = -1 in concave mode.
inline InitialState build_perturbation(const Scenario& s, const EigenPair& eig, bool certification = false) {
    detail::require(eig.phi1.size() == s.grid.interior_count(), "build_perturbation: eigenfunction/grid mismatch");
    if (eig.verdict != EigenVerdict::principal) throw HypothesisViolation("principal eigenfunction changes sign");
    if (certification && s.epsilon == 0.0) throw std::invalid_argument("build_perturbation: epsilon = 0 gives W(0) = 0");
    const double sign = sign_of(s.sign_mode());
    const auto v = s.steady.interior();
    InitialState init;
    init.u.resize(v.size());
    init.ut.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) init.u[i] = v[i] + sign * s.epsilon * eig.phi1[i];
    if (s.kind == OdeKind::hyperbolic) {
        for (std::size_t i = 0; i < v.size(); ++i) init.ut[i] = sign * s.delta * eig.phi1[i];
    }
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = init.u[i] - v[i];
    init.W0 = sign * inner(s.grid, eig.phi1, w);
    init.Wp0 = sign * inner(s.grid, eig.phi1, init.ut);
    return init;
}

/// Largest-magnitude eigenvalue of A by power iteration on its symmetric
/// form, seeded with the alternating vector.
inline double estimate_spectral_radius(const OperatorMatrix& op, int iterations = 60) {
    const SymTridiagonal s = op.symmetric_form();
    const std::size_t n = s.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (i % 2 == 0) ? 1.0 : -1.0;
    double lambda = 0.0;
    for (int k = 0; k < iterations; ++k) {
        const double nx = std::sqrt(detail::dot(x, x));
        for (double& e : x) e /= nx;
        s.multiply(x, y);
        lambda = detail::dot(x, y);
        std::swap(x, y);
    }
    return std::abs(lambda);
}

enum class BlowupVerdict { none, blowup, nonfinite };

inline const char* to_string(BlowupVerdict v) {
    switch (v) {
        case BlowupVerdict::none: return "none";
        case BlowupVerdict::blowup: return "blowup";
        case BlowupVerdict::nonfinite: return "nonfinite state";
    }
    return "?";
}

inline BlowupVerdict detect_blowup(std::span<const double> w, double threshold = 1e8) {
    double m = 0.0;
    for (double x : w) {
        if (!std::isfinite(x)) return BlowupVerdict::nonfinite;
        m = std::max(m, std::abs(x));
    }
    return m >= threshold ? BlowupVerdict::blowup : BlowupVerdict::none;
}

enum class RunStatus { completed, blowup, stalled };

inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::completed: return "completed";
        case RunStatus::blowup: return "blowup";
        case RunStatus::stalled: return "stalled";
    }
    return "?";
}

struct RunSample {
    double t;
    double l2_norm;
    double sup_norm;
    double W;
    double Wprime;
    double dt;
};

struct SolverStats {
    std::size_t steps = 0;
    std::size_t rejections = 0;      // steps shortened by the growth limiter
    double final_dt = 0.0;
    double spectral_radius = 0.0;
};

struct RunRecord {
    std::vector<RunSample> samples;
    std::vector<Snapshot> snapshots;
    RunStatus status = RunStatus::completed;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();
    std::string blowup_cause;
    SolverStats stats;
    std::string fingerprint;
    double blowup_threshold = 1e8;

    std::vector<double> times() const {
        std::vector<double> t;
        t.reserve(samples.size());
        for (const auto& s : samples) t.push_back(s.t);
        return t;
    }
    /// Start of the last accepted step before the threshold crossing.
    double bracket_start() const {
        return samples.size() >= 2 ? samples[samples.size() - 2].t : 0.0;
    }
};

namespace detail {

/// Right-hand sides of the method-of-lines systems, with reusable buffers.
class Stepper {
public:
    explicit Stepper(const Scenario& sc)
        : s_(sc), x_(sc.grid.interior_nodes().begin(), sc.grid.interior_nodes().end()),
          boundary_(sc.steady.boundary_value()), n_(x_.size()), lu_(n_), us_(n_), vs_(n_) {
        for (auto& k : ku_) k.resize(n_);
        for (auto& k : kv_) k.resize(n_);
    }

    /// out = f(x, u) - A u
    void forcing(std::span<const double> u, std::span<double> out) const {
        apply_into(s_.op, u, lu_, boundary_);
        const auto& f = s_.nonlinearity();
        for (std::size_t i = 0; i < n_; ++i) out[i] = f.eval(x_[i], u[i]) - lu_[i];
    }

    double max_fu(std::span<const double> u) const {
        double m = 0.0;
        const auto& f = s_.nonlinearity();
        for (std::size_t i = 0; i < n_; ++i) m = std::max(m, std::abs(f.deriv(x_[i], u[i])));
        return m;
    }

    void hyperbolic(std::vector<double>& u, std::vector<double>& ut, double t, double dt) {
        auto rhs = [&](double tt, const std::vector<double>& uu, const std::vector<double>& vv, int k) {
            forcing(uu, kv_[k]);
            const double a = s_.profile.a(tt);
            const double b = s_.profile.b(tt);
            for (std::size_t i = 0; i < n_; ++i) {
                ku_[k][i] = vv[i];
                kv_[k][i] = (kv_[k][i] - b * vv[i]) / a;
            }
        };
        rhs(t, u, ut, 0);
        stage(u, ut, 0.5 * dt, 0);
        rhs(t + 0.5 * dt, us_, vs_, 1);
        stage(u, ut, 0.5 * dt, 1);
        rhs(t + 0.5 * dt, us_, vs_, 2);
        stage(u, ut, dt, 2);
        rhs(t + dt, us_, vs_, 3);
        for (std::size_t i = 0; i < n_; ++i) {
            u[i] += dt / 6.0 * (ku_[0][i] + 2.0 * ku_[1][i] + 2.0 * ku_[2][i] + ku_[3][i]);
            ut[i] += dt / 6.0 * (kv_[0][i] + 2.0 * kv_[1][i] + 2.0 * kv_[2][i] + kv_[3][i]);
        }
    }

    void parabolic(std::vector<double>& u, double t, double dt) {
        auto rhs = [&](double tt, const std::vector<double>& uu, int k) {
            forcing(uu, ku_[k]);
            const double inv_b = 1.0 / s_.profile.b(tt);
            for (double& e : ku_[k]) e *= inv_b;
        };
        rhs(t, u, 0);
        for (std::size_t i = 0; i < n_; ++i) us_[i] = u[i] + 0.5 * dt * ku_[0][i];
        rhs(t + 0.5 * dt, us_, 1);
        for (std::size_t i = 0; i < n_; ++i) us_[i] = u[i] + 0.5 * dt * ku_[1][i];
        rhs(t + 0.5 * dt, us_, 2);
        for (std::size_t i = 0; i < n_; ++i) us_[i] = u[i] + dt * ku_[2][i];
        rhs(t + dt, us_, 3);
        for (std::size_t i = 0; i < n_; ++i) u[i] += dt / 6.0 * (ku_[0][i] + 2.0 * ku_[1][i] + 2.0 * ku_[2][i] + ku_[3][i]);
    }

private:
    void stage(const std::vector<double>& u, const std::vector<double>& ut, double h, int k) {
        for (std::size_t i = 0; i < n_; ++i) {
            us_[i] = u[i] + h * ku_[k][i];
            vs_[i] = ut[i] + h * kv_[k][i];
        }
    }

    const Scenario& s_;
    std::vector<double> x_;
    double boundary_;
    std::size_t n_;
    mutable std::vector<double> lu_;
    std::vector<double> us_, vs_;
    std::vector<double> ku_[4], kv_[4];
};

}  // namespace detail

/// One RK4 step of u_t = v, a(t) v_t = f(x,u) - A u - b(t) v.
inline void step_hyperbolic(std::vector<double>& u, std::vector<double>& ut, double t, double dt, const Scenario& s) {
    detail::Stepper(s).hyperbolic(u, ut, t, dt);
}

/// Smallest of b sampled at 5 points of [t, t + dt]; throws when b <= 0.
inline double sampled_b_min(const CoefficientProfile& prof, double t, double dt) {
    double m = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 5; ++k) {
        const double b = prof.b(t + dt * k / 4.0);
        if (!(b > 0.0)) throw HypothesisViolation("parabolicity violated");
        m = std::min(m, b);
    }
    return m;
}

/// One RK4 step of b(t) u_t = f(x,u) - A u.
inline void step_parabolic(std::vector<double>& u, double t, double dt, const Scenario& s) {
    sampled_b_min(s.profile, t, dt);
    detail::Stepper(s).parabolic(u, t, dt);
}

/**
 * Integrates the scenario from build_perturbation's data up to t_max or a
 * blow-up, recording a sample (and snapshot) at every multiple of the cadence
 * and at the final step.
 */
inline RunRecord run_scenario(const Scenario& s, const EigenPair& eig) {
    detail::require(s.t_max > 0.0 && s.cadence > 0.0, "run_scenario: t_max and cadence must be positive");
    detail::require(s.op.dimension() == s.grid.interior_count(), "run_scenario: operator/grid mismatch");
    if (s.kind == OdeKind::parabolic && !s.profile.b_positive) {
        throw HypothesisViolation("parabolicity violated: b(t) > 0 not declared");
    }
    const InitialState init = build_perturbation(s, eig);
    detail::Stepper ev(s);
    const auto v = s.steady.interior();
    const std::size_t n = v.size();
    const double sign = sign_of(s.sign_mode());

    RunRecord rec;
    rec.blowup_threshold = s.blowup_threshold;
    rec.stats.spectral_radius = 1.05 * estimate_spectral_radius(s.op);
    const double lambda_max = std::max(rec.stats.spectral_radius, 1e-300);

    std::vector<double> u = init.u;
    std::vector<double> ut = init.ut;
    std::vector<double> w(n), scratch(n);

    auto deviation = [&] {
        for (std::size_t i = 0; i < n; ++i) w[i] = u[i] - v[i];
    };
    auto record = [&](double t, double dt) {
        deviation();
        RunSample smp;
        smp.t = t;
        smp.l2_norm = l2_norm(s.grid, w);
        smp.sup_norm = sup_norm(w);
        smp.W = sign * inner(s.grid, eig.phi1, w);
        if (s.kind == OdeKind::hyperbolic) {
            smp.Wprime = sign * inner(s.grid, eig.phi1, ut);
        } else {
            ev.forcing(u, scratch);
            const double b = s.profile.b(t);
            for (double& e : scratch) e /= b;
            smp.Wprime = sign * inner(s.grid, eig.phi1, scratch);
        }
        smp.dt = dt;
        rec.samples.push_back(smp);
        if (s.keep_snapshots) {
            Snapshot snap{t, w, {}};
            if (s.kind == OdeKind::hyperbolic) snap.velocity = ut;
            rec.snapshots.push_back(std::move(snap));
        }
    };

    double t = 0.0;
    std::size_t next_index = 1;
    record(0.0, 0.0);
    double dt = 0.0;
    while (t < s.t_max * (1.0 - 1e-14)) {
        if (rec.stats.steps >= s.max_steps) {
            rec.status = RunStatus::stalled;
            record(t, dt);
            return rec;
        }
        const double next_output = std::min(s.t_max, next_index * s.cadence);
        double cap;
        double growth_rate;
        if (s.kind == OdeKind::hyperbolic) {
            const double a = s.profile.a(t);
            const double b = std::abs(s.profile.b(t));
            cap = s.cfl * std::sqrt(s.profile.a0 / lambda_max);
            if (b > 0.0) cap = std::min(cap, s.cfl * a / b);
            growth_rate = std::sqrt(ev.max_fu(u) / s.profile.a0);
        } else {
            const double b_min = sampled_b_min(s.profile, t, std::min(next_output - t, s.cfl / lambda_max));
            cap = s.cfl * b_min / lambda_max;
            growth_rate = ev.max_fu(u) / b_min;
        }
        if (growth_rate * cap > s.growth_factor) {
            cap = s.growth_factor / growth_rate;
            ++rec.stats.rejections;
        }
        if (cap < s.dt_floor) {
            rec.status = RunStatus::blowup;
            rec.blowup_cause = "step size below floor";
            rec.blowup_time = t;
            record(t, cap);
            rec.stats.final_dt = cap;
            return rec;
        }
        dt = std::min(cap, next_output - t);
        const bool lands_on_output = dt >= next_output - t;
        if (s.kind == OdeKind::hyperbolic) {
            ev.hyperbolic(u, ut, t, dt);
        } else {
            sampled_b_min(s.profile, t, dt);
            ev.parabolic(u, t, dt);
        }
        const double t_prev = t;
        t = lands_on_output ? next_output : t + dt;
        ++rec.stats.steps;
        rec.stats.final_dt = dt;

        deviation();
        const BlowupVerdict verdict = detect_blowup(w, s.blowup_threshold);
        if (verdict != BlowupVerdict::none) {
            rec.status = RunStatus::blowup;
            rec.blowup_cause = to_string(verdict);
            rec.blowup_time = 0.5 * (t_prev + t);
            record(t, dt);
            if (verdict == BlowupVerdict::nonfinite) rec.samples.back().sup_norm = std::numeric_limits<double>::infinity();
            return rec;
        }
        if (lands_on_output) {
            record(t, dt);
            ++next_index;
        }
    }
    return rec;
}

/// Kaplan series of a finished run, using its snapshots.
inline KaplanSeries kaplan_series(const Scenario& s, const RunRecord& rec, const EigenPair& eig) {
    return project_series(s.grid, rec.snapshots, eig, s.sign_mode(), s.kind);
}

}  // namespace kaplab
