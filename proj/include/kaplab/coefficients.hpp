#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kaplab/error.hpp"

namespace kaplab {

using TimeFunction = std::function<double(double)>;

/**
 * Time-dependent coefficients a(t), b(t) together with the scalars the
 * growth envelopes need. Norms and flags are declarations made by whoever
 * builds the profile; certify_profile() audits them by sampling.
 */
struct CoefficientProfile {
    TimeFunction a = [](double) { return 1.0; };
    TimeFunction a_prime = [](double) { return 0.0; };
    TimeFunction b = [](double) { return 0.0; };

    double a0 = 1.0;                        // inf a
    std::optional<double> a1;               // sup a, when bounded
    double growth_exponent = 0.0;           // r in a(t) <= growth_constant (t+1)^r
    std::optional<double> growth_constant;
    bool monotone_increasing = false;       // a' > 0

    std::optional<double> b_sup;            // ||b||_inf
    std::optional<double> b_l1;             // ||b||_1
    std::optional<double> b_over_a_l1;      // ||b/a||_1
    bool b_positive = false;
    std::optional<double> decay_exponent;   // b ~ (1+t)^{-alpha}

    /// B = ||b||_inf / a0.
    std::optional<double> B() const {
        if (!b_sup) return std::nullopt;
        return *b_sup / a0;
    }

    /// Constant a and b with every norm declared exactly.
    static CoefficientProfile constant(double a_value, double b_value) {
        detail::require(a_value > 0.0, "constant profile: a must be positive");
        CoefficientProfile p;
        p.a = [a_value](double) { return a_value; };
        p.b = [b_value](double) { return b_value; };
        p.a0 = a_value;
        p.a1 = a_value;
        p.growth_constant = a_value;
        p.b_sup = std::abs(b_value);
        if (b_value == 0.0) {
            p.b_l1 = 0.0;
            p.b_over_a_l1 = 0.0;
        }
        p.b_positive = b_value > 0.0;
        return p;
    }
};

/// Adaptive Gauss–Kronrod integral of g over [lo, hi], split at unit
/// intervals so oscillatory or kinked integrands stay resolved.
inline double integrate_adaptive(const std::function<double(double)>& g, double lo, double hi, double tol = 1e-10) {
    using boost::math::quadrature::gauss_kronrod;
    if (!(hi > lo)) return 0.0;
    double total = 0.0;
    double left = lo;
    while (left < hi) {
        const double right = std::min(hi, std::floor(left) + 1.0);
        total += gauss_kronrod<double, 31>::integrate(g, left, right, 15, tol);
        left = right;
    }
    return total;
}

struct ProfileCertificate {
    bool ok = true;
    std::vector<std::string> failures;
    double sampled_a_min = 0.0;
    double sampled_a_max = 0.0;
    double sampled_b_sup = 0.0;
    double sampled_b_min = 0.0;
    std::optional<double> b_l1_on_horizon;
    std::optional<double> b_over_a_l1_on_horizon;
    bool parabolicity_violated = false;
};

/// Audits the declared scalars of `prof` on [0, t_max].
inline ProfileCertificate certify_profile(const CoefficientProfile& prof, double t_max, int samples = 20001) {
    detail::require(t_max > 0.0 && samples >= 2, "certify_profile: invalid horizon");
    ProfileCertificate cert;
    auto fail = [&](const std::string& why) {
        cert.ok = false;
        cert.failures.push_back(why);
    };
    cert.sampled_a_min = std::numeric_limits<double>::infinity();
    cert.sampled_a_max = -cert.sampled_a_min;
    cert.sampled_b_min = cert.sampled_a_min;
    double previous_a = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    bool growth_ok = true;
    for (int k = 0; k < samples; ++k) {
        const double t = t_max * k / (samples - 1);
        const double a = prof.a(t);
        const double b = prof.b(t);
        cert.sampled_a_min = std::min(cert.sampled_a_min, a);
        cert.sampled_a_max = std::max(cert.sampled_a_max, a);
        cert.sampled_b_sup = std::max(cert.sampled_b_sup, std::abs(b));
        cert.sampled_b_min = std::min(cert.sampled_b_min, b);
        if (a < previous_a) monotone = false;
        previous_a = a;
        if (prof.growth_constant && a > *prof.growth_constant * std::pow(t + 1.0, prof.growth_exponent) * (1.0 + 1e-12)) {
            growth_ok = false;
        }
    }
    if (cert.sampled_a_min < prof.a0 * (1.0 - 1e-12)) fail("a(t) drops below declared a0");
    if (prof.a1 && cert.sampled_a_max > *prof.a1 * (1.0 + 1e-12)) fail("a(t) exceeds declared a1");
    if (!growth_ok) fail("a(t) exceeds declared growth bound a1 (t+1)^r");
    if (prof.monotone_increasing && !monotone) fail("a(t) is not nondecreasing");
    if (prof.b_sup && cert.sampled_b_sup > *prof.b_sup * (1.0 + 1e-9)) fail("|b(t)| exceeds declared ||b||_inf");
    if (prof.b_positive && !(cert.sampled_b_min > 0.0)) {
        cert.parabolicity_violated = true;
        fail("parabolicity violated: b(t) <= 0 sampled");
    }
    if (prof.b_l1) {
        cert.b_l1_on_horizon = integrate_adaptive([&](double t) { return std::abs(prof.b(t)); }, 0.0, t_max);
        if (*cert.b_l1_on_horizon > *prof.b_l1 * (1.0 + 1e-6)) fail("integral of |b| exceeds declared ||b||_1");
    }
    if (prof.b_over_a_l1) {
        cert.b_over_a_l1_on_horizon =
            integrate_adaptive([&](double t) { return std::abs(prof.b(t) / prof.a(t)); }, 0.0, t_max);
        if (*cert.b_over_a_l1_on_horizon > *prof.b_over_a_l1 * (1.0 + 1e-6)) fail("integral of |b/a| exceeds declared ||b/a||_1");
    }
    return cert;
}

}  // namespace kaplab
