#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kaplab/coefficients.hpp"
#include "kaplab/grid.hpp"
#include "kaplab/odelab.hpp"
#include "kaplab/spectral.hpp"

namespace kaplab {

enum class SignMode { standard, concave_flipped };

inline const char* to_string(SignMode m) { return m == SignMode::standard ? "standard" : "concave-flipped"; }

inline double sign_of(SignMode m) { return m == SignMode::standard ? 1.0 : -1.0; }

/// Deviation w = u - v (and its time derivative for second-order runs) on
/// interior nodes at one output time.
struct Snapshot {
    double t = 0.0;
    std::vector<double> w;
    std::vector<double> velocity;
};

/// W(t) = +-int phi1 w and W'(t) on the sampled times.
struct KaplanSeries {
    std::vector<double> times;
    std::vector<double> W;
    std::vector<double> Wprime;
    SignMode sign_mode = SignMode::standard;
};

/// Derivative of sampled data by centered differences (second order on
/// nonuniform spacing), one-sided at the ends.
inline std::vector<double> sampled_derivative(std::span<const double> t, std::span<const double> y) {
    const std::size_t n = t.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    d[0] = (y[1] - y[0]) / (t[1] - t[0]);
    d[n - 1] = (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = t[i] - t[i - 1];
        const double h1 = t[i + 1] - t[i];
        d[i] = (h0 * h0 * (y[i + 1] - y[i]) + h1 * h1 * (y[i] - y[i - 1])) / (h0 * h1 * (h0 + h1));
    }
    return d;
}

inline KaplanSeries project_series(const Grid& grid, std::span<const Snapshot> snapshots, const EigenPair& eig,
                                   SignMode mode, OdeKind kind) {
    const double sign = sign_of(mode);
    KaplanSeries ks;
    ks.sign_mode = mode;
    for (const auto& s : snapshots) {
        detail::require(s.w.size() == eig.phi1.size(), "project_series: snapshot/eigenfunction length mismatch");
        ks.times.push_back(s.t);
        ks.W.push_back(sign * inner(grid, eig.phi1, s.w));
        if (kind == OdeKind::hyperbolic) {
            if (s.velocity.size() != eig.phi1.size()) throw std::invalid_argument("project_series: hyperbolic snapshot lacks velocity field");
            ks.Wprime.push_back(sign * inner(grid, eig.phi1, s.velocity));
        }
    }
    if (kind == OdeKind::parabolic) ks.Wprime = sampled_derivative(ks.times, ks.W);
    return ks;
}

struct InequalityReport {
    bool pass = true;
    std::vector<double> window_start;
    std::vector<double> margins;        // raw windowed integrals
    std::vector<double> scaled_margins; // margin / scale
    double min_scaled_margin = std::numeric_limits<double>::infinity();
    std::size_t windows = 0;
};

/**
 * Weak form of a W'' + b W' - sigma^2 W >= 0 (hyperbolic) or
 * b W' - sigma^2 W >= 0 (parabolic), tested against the bump
 * theta(t) = exp(-1/(1-s^2)) on consecutive windows of length `window`.
 * A window passes when its integral is >= -tol * scale, with
 * scale = max(sigma^2 max|W|, max|a W'|/window) * int theta.
 */
inline InequalityReport check_projected_inequality(const KaplanSeries& ks, const CoefficientProfile& prof, double sigma_sq,
                                                   double window, double tol, OdeKind kind = OdeKind::hyperbolic) {
    detail::require(window > 0.0 && tol >= 0.0, "projected inequality: invalid window or tolerance");
    detail::require(ks.times.size() == ks.W.size() && ks.W.size() == ks.Wprime.size(), "projected inequality: ragged series");
    detail::require(ks.times.size() >= 2, "projected inequality: need at least two samples");
    InequalityReport r;
    const double t_first = ks.times.front();
    const double t_last = ks.times.back();
    const std::size_t n = ks.times.size();

    std::size_t lo = 0;
    for (double t1 = t_first; t1 + window <= t_last * (1.0 + 1e-12); t1 += window) {
        const double t2 = t1 + window;
        while (lo < n && ks.times[lo] < t1 - 1e-12 * std::max(1.0, std::abs(t1))) ++lo;
        std::size_t hi = lo;
        while (hi < n && ks.times[hi] <= t2 + 1e-12 * std::max(1.0, std::abs(t2))) ++hi;
        if (hi - lo < 20) {
            char msg[200];
            std::snprintf(msg, sizeof msg,
                          "projected inequality: sampling too coarse (%zu samples in window [%g, %g]); need cadence <= %g",
                          hi - lo, t1, t2, window / 20.0);
            throw std::invalid_argument(msg);
        }
        double integral = 0.0;
        double bump_mass = 0.0;
        double max_w = 0.0;
        double max_aw = 0.0;
        double prev_f = 0.0, prev_theta = 0.0, prev_t = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double t = ks.times[i];
            const double s = (2.0 * t - t1 - t2) / (t2 - t1);
            double theta = 0.0, dtheta = 0.0;
            if (std::abs(s) < 1.0) {
                const double q = 1.0 - s * s;
                theta = std::exp(-1.0 / q);
                dtheta = theta * (-2.0 * s / (q * q)) * (2.0 / (t2 - t1));
            }
            const double W = ks.W[i];
            const double Wp = ks.Wprime[i];
            const double b = prof.b(t);
            double f;
            if (kind == OdeKind::hyperbolic) {
                const double a = prof.a(t);
                f = -a * dtheta * Wp - prof.a_prime(t) * theta * Wp + b * theta * Wp - sigma_sq * theta * W;
                max_aw = std::max(max_aw, std::abs(a * Wp));
            } else {
                f = b * theta * Wp - sigma_sq * theta * W;
                max_aw = std::max(max_aw, std::abs(b * Wp));
            }
            max_w = std::max(max_w, std::abs(W));
            if (i > lo) {
                integral += 0.5 * (t - prev_t) * (f + prev_f);
                bump_mass += 0.5 * (t - prev_t) * (theta + prev_theta);
            }
            prev_f = f;
            prev_theta = theta;
            prev_t = t;
        }
        const double scale = std::max(sigma_sq * max_w, max_aw / window) * bump_mass;
        const double scaled = scale > 0.0 ? integral / scale : (integral < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
        r.window_start.push_back(t1);
        r.margins.push_back(integral);
        r.scaled_margins.push_back(scaled);
        r.min_scaled_margin = std::min(r.min_scaled_margin, scaled);
        if (scaled < -tol) r.pass = false;
        ++r.windows;
        lo = hi > lo ? hi - 1 : lo;
    }
    detail::require(r.windows > 0, "projected inequality: series shorter than one window");
    return r;
}

/// Envelope instantiated on a PDE run's W series, cut at t_stop.
inline EnvelopeReport compare_to_envelope(const KaplanSeries& ks, const EnvelopeBound& e, double rel_slack,
                                          double t_stop = std::numeric_limits<double>::infinity()) {
    return check_dominance(ks.times, ks.W, e, rel_slack, t_stop);
}

struct RateFit {
    double rate = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
    std::size_t samples = 0;
};

/// Least-squares slope of log W over [t_lo, t_hi].
inline RateFit fit_rate(const KaplanSeries& ks, double t_lo, double t_hi) {
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < ks.times.size(); ++i) {
        const double t = ks.times[i];
        if (t < t_lo || t > t_hi) continue;
        if (!(ks.W[i] > 0.0)) throw std::invalid_argument("fit_rate: nonpositive W in window");
        const double y = std::log(ks.W[i]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++m;
    }
    detail::require(m >= 2, "fit_rate: need at least two samples in window");
    const double denom = m * stt - st * st;
    detail::require(denom > 0.0, "fit_rate: degenerate window");
    RateFit fit;
    fit.samples = m;
    fit.rate = (m * sty - st * sy) / denom;
    fit.intercept = (sy - fit.rate * st) / m;
    double ss = 0.0;
    for (std::size_t i = 0; i < ks.times.size(); ++i) {
        const double t = ks.times[i];
        if (t < t_lo || t > t_hi) continue;
        const double e = std::log(ks.W[i]) - (fit.intercept + fit.rate * t);
        ss += e * e;
    }
    fit.residual_rms = std::sqrt(ss / m);
    return fit;
}

}  // namespace kaplab
