#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "kaplab/error.hpp"

namespace kaplab {

enum class NonlinearityKind { power_abs, power_neg, exponential, quadratic, custom };
enum class Convexity { convex, concave };

inline const char* to_string(NonlinearityKind k) {
    switch (k) {
        case NonlinearityKind::power_abs: return "power_abs";
        case NonlinearityKind::power_neg: return "power_neg";
        case NonlinearityKind::exponential: return "exponential";
        case NonlinearityKind::quadratic: return "quadratic";
        case NonlinearityKind::custom: return "custom";
    }
    return "?";
}

inline const char* to_string(Convexity c) { return c == Convexity::convex ? "convex" : "concave"; }

/**
 * Source term f(x, u) with its u-derivative.
 *
 * |u|^p uses sign(u) p |u|^{p-1} as derivative, which is C^1 for p > 1 with
 * derivative 0 at u = 0. lower_bound records f(x,u) >= C |u|^q when the kind
 * satisfies such a bound (needed for the blow-up clauses).
 */
class Nonlinearity {
public:
    using Eval = std::function<double(double x, double u)>;

    struct LowerBound {
        double constant;
        double exponent;
    };

    static Nonlinearity power_abs(double p) {
        detail::require(p > 1.0, "power nonlinearity needs p > 1");
        Nonlinearity f(NonlinearityKind::power_abs, p, Convexity::convex);
        f.lower_bound_ = LowerBound{1.0, p};
        return f;
    }
    static Nonlinearity power_neg(double p) {
        detail::require(p > 1.0, "power nonlinearity needs p > 1");
        return Nonlinearity(NonlinearityKind::power_neg, p, Convexity::concave);
    }
    static Nonlinearity exponential() { return Nonlinearity(NonlinearityKind::exponential, 0.0, Convexity::convex); }
    static Nonlinearity quadratic() {
        Nonlinearity f(NonlinearityKind::quadratic, 2.0, Convexity::convex);
        f.lower_bound_ = LowerBound{1.0, 2.0};
        return f;
    }
    /// The declared convexity is audited by sampling at x = 0 (the built-in
    /// kinds hold theirs by construction).
    static Nonlinearity custom(Eval eval, Eval deriv, Convexity convexity,
                               std::optional<LowerBound> lower_bound = std::nullopt);

    NonlinearityKind kind() const { return kind_; }
    double exponent() const { return p_; }
    Convexity convexity() const { return convexity_; }
    const std::optional<LowerBound>& lower_bound() const { return lower_bound_; }

    double eval(double x, double u) const {
        switch (kind_) {
            case NonlinearityKind::power_abs: return std::pow(std::abs(u), p_);
            case NonlinearityKind::power_neg: return -std::pow(std::abs(u), p_);
            case NonlinearityKind::exponential: return std::exp(u);
            case NonlinearityKind::quadratic: return u * u;
            case NonlinearityKind::custom: return eval_(x, u);
        }
        return 0.0;
    }

    double deriv(double x, double u) const {
        switch (kind_) {
            case NonlinearityKind::power_abs: return signed_power_derivative(u);
            case NonlinearityKind::power_neg: return -signed_power_derivative(u);
            case NonlinearityKind::exponential: return std::exp(u);
            case NonlinearityKind::quadratic: return 2.0 * u;
            case NonlinearityKind::custom: return deriv_(x, u);
        }
        return 0.0;
    }

private:
    Nonlinearity(NonlinearityKind kind, double p, Convexity c) : kind_(kind), p_(p), convexity_(c) {}

    double signed_power_derivative(double u) const {
        if (u == 0.0) return 0.0;
        const double m = p_ * std::pow(std::abs(u), p_ - 1.0);
        return u > 0.0 ? m : -m;
    }

    NonlinearityKind kind_;
    double p_ = 0.0;
    Convexity convexity_;
    std::optional<LowerBound> lower_bound_;
    Eval eval_;
    Eval deriv_;
};

inline double nonlinearity_eval(const Nonlinearity& f, double x, double u) { return f.eval(x, u); }
inline double nonlinearity_deriv(const Nonlinearity& f, double x, double u) { return f.deriv(x, u); }

/// Midpoint test of the declared convexity on the sampled triples
/// u, w in [-range, range]; returns false at the first violation.
inline bool verify_convexity(const Nonlinearity& f, double x, double range = 4.0, int samples = 41) {
    const double sign = f.convexity() == Convexity::convex ? 1.0 : -1.0;
    for (int i = 0; i < samples; ++i) {
        for (int j = 0; j < samples; ++j) {
            const double u = -range + 2.0 * range * i / (samples - 1);
            const double w = -range + 2.0 * range * j / (samples - 1);
            const double mid = f.eval(x, 0.5 * (u + w));
            const double chord = 0.5 * (f.eval(x, u) + f.eval(x, w));
            if (sign * (mid - chord) > 1e-12 * std::max(1.0, std::abs(chord))) return false;
        }
    }
    return true;
}

inline Nonlinearity Nonlinearity::custom(Eval eval, Eval deriv, Convexity convexity,
                                         std::optional<LowerBound> lower_bound) {
    Nonlinearity f(NonlinearityKind::custom, 0.0, convexity);
    f.eval_ = std::move(eval);
    f.deriv_ = std::move(deriv);
    f.lower_bound_ = lower_bound;
    if (!verify_convexity(f, 0.0)) {
        throw std::invalid_argument(std::string("custom nonlinearity is not ") + to_string(convexity) +
                                    " on the sampled range");
    }
    return f;
}

/// Centered-difference check of deriv against eval, relative tolerance.
inline bool verify_derivative(const Nonlinearity& f, double x, double range = 4.0, int samples = 81,
                              double rel_tol = 1e-6) {
    for (int i = 0; i < samples; ++i) {
        const double u = -range + 2.0 * range * i / (samples - 1);
        const double step = 1e-5 * std::max(1.0, std::abs(u));
        const double fd = (f.eval(x, u + step) - f.eval(x, u - step)) / (2.0 * step);
        const double d = f.deriv(x, u);
        if (std::abs(fd - d) > rel_tol * std::max(1.0, std::abs(d))) return false;
    }
    return true;
}

}  // namespace kaplab
