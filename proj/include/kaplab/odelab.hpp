#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "kaplab/coefficients.hpp"
#include "kaplab/error.hpp"

namespace kaplab {

enum class EnvelopeKind { L2var, L2, L3, L5, L6_lower };

inline const char* to_string(EnvelopeKind k) {
    switch (k) {
        case EnvelopeKind::L2var: return "L2var";
        case EnvelopeKind::L2: return "L2";
        case EnvelopeKind::L3: return "L3";
        case EnvelopeKind::L5: return "L5";
        case EnvelopeKind::L6_lower: return "L6_lower";
    }
    return "?";
}

/// Certified lower bound t -> Y(t) for solutions of a growth inequality.
struct EnvelopeBound {
    EnvelopeKind kind = EnvelopeKind::L5;
    std::map<std::string, double> parameters;
    std::function<double(double)> evaluator;
    double valid_until = std::numeric_limits<double>::infinity();
    /// Asymptotic exponential rate of the curve, when it has one.
    std::optional<double> rate;

    double operator()(double t) const { return evaluator(t); }
};

/// Slope s(B) = -B + sqrt(c/a(0) + B^2) of the initial-data threshold.
inline double threshold_slope(double c, const CoefficientProfile& prof) {
    detail::require(prof.b_sup.has_value(), "threshold needs declared ||b||_inf");
    const double B = *prof.B();
    return -B + std::sqrt(c / prof.a(0.0) + B * B);
}

/// Initial-data condition Y'(0) >= (-B + sqrt(c/a(0) + B^2)) Y(0).
inline bool hyperbolic_threshold(double c, const CoefficientProfile& prof, double Y0, double Yp0) {
    detail::require(c > 0.0, "threshold: c must be positive");
    detail::require(Y0 > 0.0, "threshold: Y0 must be positive");
    return Yp0 >= threshold_slope(c, prof) * Y0;
}

/// Envelope Y0 exp(mu(t)), mu(t) = int_0^t (-B + sqrt(c/a(s) + B^2)) ds.
inline EnvelopeBound envelope_L2var(double c, const CoefficientProfile& prof, double Y0) {
    detail::require(prof.monotone_increasing, "Lemma 2var hypothesis a'>0");
    detail::require(prof.b_sup.has_value(), "envelope L2var needs declared ||b||_inf");
    detail::require(prof.a0 > 0.0, "envelope L2var needs a0 > 0");
    const double B = *prof.B();
    const TimeFunction a = prof.a;
    auto integrand = [a, B, c](double s) { return -B + std::sqrt(c / a(s) + B * B); };
    EnvelopeBound e;
    e.kind = EnvelopeKind::L2var;
    e.parameters = {{"B", B}, {"c", c}, {"Y0", Y0}, {"mu_rate_at_0", integrand(0.0)}};
    e.evaluator = [integrand, Y0](double t) {
        if (t <= 0.0) return Y0;
        return Y0 * std::exp(integrate_adaptive(integrand, 0.0, t, 1e-10));
    };
    return e;
}

/// Characteristic-root envelope for aY'' + bY' - cY >= 0 with bounded a.
inline EnvelopeBound envelope_L2(double c, const CoefficientProfile& prof, double Y0, double Yp0) {
    detail::require(prof.a1.has_value(), "envelope L2 needs declared a1 (bounded a)");
    detail::require(prof.b_sup.has_value(), "envelope L2 needs declared ||b||_inf");
    detail::require(Y0 > 0.0 && Yp0 > 0.0, "envelope L2 needs Y0, Yp0 > 0");
    const double beta = *prof.b_sup / prof.a0;
    const double gamma = c / *prof.a1;
    const double disc = std::sqrt(beta * beta + 4.0 * gamma);
    const double lp = 0.5 * (-beta + disc);
    const double lm = 0.5 * (-beta - disc);
    const double z0 = Yp0 - lm * Y0;
    EnvelopeBound e;
    e.kind = EnvelopeKind::L2;
    e.parameters = {{"beta", beta}, {"gamma", gamma}, {"lambda_plus", lp}, {"lambda_minus", lm},
                    {"Z0", z0}, {"c", c}, {"Y0", Y0}};
    e.evaluator = [=](double t) {
        return z0 / (lp - lm) * (std::exp(lp * t) - std::exp(lm * t)) + Y0 * std::exp(lm * t);
    };
    e.rate = lp;
    return e;
}

/// Rate of the integrable-damping envelope.
inline double l3_rate(double c, double a1, double b_over_a_l1) {
    return std::sqrt(21.0 * c / (40.0 * a1) * std::exp(-b_over_a_l1));
}

/// Envelope (1/2) Y0 exp(mu t) for integrable b/a.
inline EnvelopeBound envelope_L3(double c, const CoefficientProfile& prof, double Y0) {
    detail::require(prof.a1.has_value(), "envelope L3 needs declared a1");
    detail::require(prof.b_over_a_l1.has_value() && std::isfinite(*prof.b_over_a_l1),
                    "envelope L3 needs declared finite ||b/a||_1");
    const double mu = l3_rate(c, *prof.a1, *prof.b_over_a_l1);
    EnvelopeBound e;
    e.kind = EnvelopeKind::L3;
    e.parameters = {{"mu", mu}, {"c", c}, {"a1", *prof.a1}, {"b_over_a_l1", *prof.b_over_a_l1}, {"Y0", Y0}};
    e.evaluator = [=](double t) { return 0.5 * Y0 * std::exp(mu * t); };
    e.rate = mu;
    return e;
}

/// Envelope Y0 exp((c/||b||_inf) t) for bY' >= cY with positive b.
inline EnvelopeBound envelope_L5(double c, const CoefficientProfile& prof, double Y0) {
    if (!prof.b_positive) throw HypothesisViolation("envelope L5 needs b(t) > 0 (parabolicity)");
    detail::require(prof.b_sup.has_value() && *prof.b_sup > 0.0, "envelope L5 needs declared ||b||_inf");
    const double rate = c / *prof.b_sup;
    EnvelopeBound e;
    e.kind = EnvelopeKind::L5;
    e.parameters = {{"rate", rate}, {"c", c}, {"b_sup", *prof.b_sup}, {"Y0", Y0}};
    e.evaluator = [=](double t) { return Y0 * std::exp(rate * t); };
    e.rate = rate;
    return e;
}

/// Upper bound T_inf = ||b||_inf Y0^{1-p} / (c (p-1)) on the lifespan of bY' >= cY^p.
inline double blowup_time_L6(double c, double p, const CoefficientProfile& prof, double Y0) {
    detail::require(p > 1.0, "blow-up bound needs p > 1");
    detail::require(c > 0.0 && Y0 > 0.0, "blow-up bound needs c, Y0 > 0");
    if (!prof.b_positive) throw HypothesisViolation("blow-up bound needs b(t) > 0 (parabolicity)");
    detail::require(prof.b_sup.has_value() && *prof.b_sup > 0.0, "blow-up bound needs declared ||b||_inf");
    return *prof.b_sup * std::pow(Y0, 1.0 - p) / (c * (p - 1.0));
}

/// Lower curve [Y0^{1-p} - (p-1)(c/||b||_inf) t]^{1/(1-p)} on [0, T_inf).
inline EnvelopeBound lower_curve_L6(double c, double p, const CoefficientProfile& prof, double Y0) {
    const double t_inf = blowup_time_L6(c, p, prof, Y0);
    const double k = (p - 1.0) * c / *prof.b_sup;
    EnvelopeBound e;
    e.kind = EnvelopeKind::L6_lower;
    e.parameters = {{"T_inf", t_inf}, {"c", c}, {"p", p}, {"b_sup", *prof.b_sup}, {"Y0", Y0}};
    e.evaluator = [=](double t) {
        const double base = std::pow(Y0, 1.0 - p) - k * t;
        if (base <= 0.0) return std::numeric_limits<double>::infinity();
        return std::pow(base, 1.0 / (1.0 - p));
    };
    e.valid_until = t_inf;
    return e;
}

enum class OdeKind { hyperbolic, parabolic };

inline const char* to_string(OdeKind k) { return k == OdeKind::hyperbolic ? "hyperbolic" : "parabolic"; }

/// Right-hand side c Y (linear) or c (1+t)^{-r} |Y|^p (power).
struct OdeRhs {
    double c = 1.0;
    double p = 1.0;
    double r_decay = 0.0;
    bool power = false;

    static OdeRhs linear(double c) { return OdeRhs{c, 1.0, 0.0, false}; }
    static OdeRhs power_law(double c, double p, double r_decay = 0.0) {
        detail::require(p > 1.0, "power rhs needs p > 1");
        return OdeRhs{c, p, r_decay, true};
    }

    double operator()(double t, double y) const {
        if (!power) return c * y;
        return c * std::pow(1.0 + t, -r_decay) * std::pow(std::abs(y), p);
    }
};

enum class WitnessStatus { completed, blowup };

struct OdeWitness {
    std::vector<double> times;
    std::vector<double> Y;
    std::vector<double> Yprime;
    WitnessStatus status = WitnessStatus::completed;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();
    double bracket_lo = std::numeric_limits<double>::quiet_NaN();
    double bracket_hi = std::numeric_limits<double>::quiet_NaN();
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::string method = "dopri5";
    double rel_tol = 0.0;
};

struct OracleOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    double blowup_threshold = 1e12;
    double min_dt = 1e-14;
    double initial_dt = 1e-4;
    std::size_t max_steps = 2'000'000;
};

/**
 * Equality-case integrator for a Y'' + b Y' = rhs(t, Y) (hyperbolic) or
 * b Y' = rhs(t, Y) (parabolic). Every accepted step is recorded. A crossing
 * of the blow-up threshold stops the run; the blow-up time is the midpoint of
 * the last accepted step.
 */
inline OdeWitness oracle_integrate(OdeKind kind, const CoefficientProfile& prof, const OdeRhs& rhs, double Y0,
                                   std::optional<double> Yp0, double t_end, OracleOptions options = {}) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2>;
    detail::require(t_end > 0.0, "oracle: t_end must be positive");
    if (kind == OdeKind::hyperbolic) detail::require(Yp0.has_value(), "oracle: hyperbolic kind needs Y'(0)");
    if (kind == OdeKind::parabolic) {
        if (!prof.b_positive) throw HypothesisViolation("parabolicity violated: b positivity not declared");
        for (int k = 0; k <= 1000; ++k) {
            if (!(prof.b(t_end * k / 1000.0) > 0.0)) throw HypothesisViolation("parabolicity violated");
        }
    }

    auto system = [&](const State& y, State& dy, double t) {
        if (kind == OdeKind::hyperbolic) {
            dy[0] = y[1];
            dy[1] = (rhs(t, y[0]) - prof.b(t) * y[1]) / prof.a(t);
        } else {
            const double b = prof.b(t);
            if (!(b > 0.0)) throw HypothesisViolation("parabolicity violated");
            dy[0] = rhs(t, y[0]) / b;
            dy[1] = 0.0;
        }
    };
    auto derivative = [&](const State& y, double t) {
        if (kind == OdeKind::hyperbolic) return y[1];
        return rhs(t, y[0]) / prof.b(t);
    };

    // Steps are taken in s with dt/ds = 1 / (1 + |Y'| / max(1, |Y|)), so
    // finite-time blow-up in t becomes exponential growth in s.
    using Ext = std::array<double, 3>;
    auto slowdown = [&](double t, double Y, double V) {
        const double rate = std::abs(kind == OdeKind::hyperbolic ? V : rhs(t, Y) / prof.b(t));
        return 1.0 / (1.0 + rate / std::max(1.0, std::abs(Y)));
    };
    auto rescaled = [&](const Ext& z, Ext& dz, double) {
        const State y{z[1], z[2]};
        State dy{};
        system(y, dy, z[0]);
        const double g = slowdown(z[0], z[1], z[2]);
        dz[0] = g;
        dz[1] = g * dy[0];
        dz[2] = g * dy[1];
    };

    OdeWitness w;
    w.method = "dopri5 controlled in rescaled time, rel " + std::to_string(options.rel_tol);
    w.rel_tol = options.rel_tol;
    Ext z{0.0, Y0, kind == OdeKind::hyperbolic ? *Yp0 : 0.0};
    double s = 0.0;
    double ds = options.initial_dt;
    w.times.push_back(0.0);
    w.Y.push_back(Y0);
    w.Yprime.push_back(derivative(State{z[1], z[2]}, 0.0));

    auto record = [&](double t, double Y, double V) {
        ++w.steps;
        w.times.push_back(t);
        w.Y.push_back(Y);
        w.Yprime.push_back(derivative(State{Y, V}, t));
    };

    auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol, odeint::runge_kutta_dopri5<Ext>());
    while (true) {
        if (w.steps >= options.max_steps) throw ConvergenceError("integrator stall", z[1]);
        if (ds < options.min_dt) throw ConvergenceError("integrator stall", z[1]);
        const double s_prev = s;
        const Ext z_prev = z;
        const auto result = stepper.try_step(rescaled, z, s, ds);
        if (result == odeint::fail) {
            ++w.rejected;
            continue;
        }
        if (!std::all_of(z.begin(), z.end(), [](double v) { return std::isfinite(v); })) {
            const double taken = s - s_prev;
            z = z_prev;
            s = s_prev;
            ds = 0.5 * (taken > 0.0 ? taken : ds);
            stepper.reset();
            ++w.rejected;
            continue;
        }
        if (z[0] >= t_end) {
            z = z_prev;
            break;
        }
        record(z[0], z[1], z[2]);
        if (std::abs(z[1]) >= options.blowup_threshold) {
            w.status = WitnessStatus::blowup;
            w.bracket_lo = z_prev[0];
            w.bracket_hi = z[0];
            w.blowup_time = 0.5 * (z_prev[0] + z[0]);
            return w;
        }
    }

    // the last stretch to t_end, stepped in t so the endpoint is hit exactly
    State y{z[1], z[2]};
    double t = z[0];
    double dt = std::max(t_end - t, options.min_dt);
    auto finisher = odeint::make_controlled(options.abs_tol, options.rel_tol, odeint::runge_kutta_dopri5<State>());
    while (t < t_end) {
        if (w.steps >= options.max_steps || dt < options.min_dt) throw ConvergenceError("integrator stall", y[0]);
        dt = std::min(dt, t_end - t);
        const double t_prev = t;
        const State y_prev = y;
        if (finisher.try_step(system, y, t, dt) == odeint::fail) {
            ++w.rejected;
            continue;
        }
        if (!std::isfinite(y[0]) || !std::isfinite(y[1])) {
            y = y_prev;
            t = t_prev;
            dt *= 0.5;
            finisher.reset();
            ++w.rejected;
            continue;
        }
        record(t, y[0], y[1]);
        if (std::abs(y[0]) >= options.blowup_threshold) {
            w.status = WitnessStatus::blowup;
            w.bracket_lo = t_prev;
            w.bracket_hi = t;
            w.blowup_time = 0.5 * (t_prev + t);
            return w;
        }
    }
    return w;
}

struct EnvelopeReport {
    bool pass = true;
    double min_margin = std::numeric_limits<double>::infinity();
    double min_scaled_margin = std::numeric_limits<double>::infinity();
    std::optional<double> first_violation;
    std::size_t samples_checked = 0;
};

/// Sample-wise check values[i] >= e(times[i]) - rel_slack max(1, |values[i]|)
/// on the envelope's validity interval, optionally cut at t_stop.
inline EnvelopeReport check_dominance(std::span<const double> times, std::span<const double> values,
                                      const EnvelopeBound& e, double rel_slack,
                                      double t_stop = std::numeric_limits<double>::infinity()) {
    detail::require(times.size() == values.size(), "dominance: length mismatch");
    EnvelopeReport r;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (t >= e.valid_until || t > t_stop) break;
        const double bound = e(t);
        if (!std::isfinite(bound)) break;
        const double margin = values[i] - bound;
        const double scale = std::max(1.0, std::abs(values[i]));
        ++r.samples_checked;
        r.min_margin = std::min(r.min_margin, margin);
        r.min_scaled_margin = std::min(r.min_scaled_margin, margin / scale);
        if (margin < -rel_slack * scale && r.pass) {
            r.pass = false;
            r.first_violation = t;
        }
    }
    return r;
}

inline EnvelopeReport verify_envelope(const OdeWitness& w, const EnvelopeBound& e, double rel_slack) {
    return check_dominance(w.times, w.Y, e, rel_slack);
}

}  // namespace kaplab
