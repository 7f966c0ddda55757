#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kaplab/grid.hpp"
#include "kaplab/operator.hpp"
#include "kaplab/steady.hpp"

namespace kaplab {

/// L - d_u f(x, v) on the steady state's interior nodes.
inline OperatorMatrix assemble_linearized(const OperatorMatrix& op, const SteadyState& s) {
    detail::require(op.dimension() == s.grid.interior_count(), "assemble_linearized: operator/steady mismatch");
    const auto v = s.interior();
    const auto x = s.grid.interior_nodes();
    std::vector<double> minus_fu(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) minus_fu[i] = -s.nonlinearity.deriv(x[i], v[i]);
    return add_diagonal(op.adjoint(), minus_fu);
}

enum class EigenVerdict { principal, mixed_sign };

/// lambda1 = -sigma_sq with phi1 normalized to unit grid L^2 norm and its
/// largest-magnitude entry positive.
struct EigenPair {
    double sigma_sq = 0.0;
    std::vector<double> phi1;
    double residual = 0.0;
    int iterations = 0;
    EigenVerdict verdict = EigenVerdict::principal;

    double lambda1() const { return -sigma_sq; }
    bool unstable() const { return sigma_sq > 0.0 && verdict == EigenVerdict::principal; }
};

namespace detail {

/// Number of eigenvalues of t strictly below mu (Sylvester inertia of the
/// LDL^T factorization of t - mu I).
inline std::size_t sturm_count(const SymTridiagonal& t, double mu) {
    const double tiny = std::numeric_limits<double>::min();
    std::size_t count = 0;
    double d = 1.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e2 = i == 0 ? 0.0 : t.off[i - 1] * t.off[i - 1];
        d = (t.diag[i] - mu) - (i == 0 ? 0.0 : e2 / d);
        if (d == 0.0) d = -tiny;
        if (d < 0.0) ++count;
    }
    return count;
}

inline void gershgorin(const SymTridiagonal& t, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(t.off[i - 1]);
        if (i + 1 < t.size()) r += std::abs(t.off[i]);
        lo = std::min(lo, t.diag[i] - r);
        hi = std::max(hi, t.diag[i] + r);
    }
}

/// Solves (t - mu I) y = rhs by Gaussian elimination with partial pivoting.
inline void shifted_solve(const SymTridiagonal& t, double mu, std::span<const double> rhs, std::span<double> y) {
    const std::size_t n = t.size();
    // rows hold (lower, diag, upper, upper2) after pivoting
    std::vector<double> dl(n, 0.0), d(n), du(n, 0.0), du2(n, 0.0), b(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = t.diag[i] - mu;
        if (i + 1 < n) {
            du[i] = t.off[i];
            dl[i] = t.off[i];
        }
    }
    const double scale = std::max(std::abs(mu), 1.0) * std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == 0.0) d[i] = scale;
            const double m = dl[i] / d[i];
            d[i + 1] -= m * du[i];
            b[i + 1] -= m * b[i];
            dl[i] = m;
        } else {
            const double m = d[i] / dl[i];
            d[i] = dl[i];
            std::swap(b[i], b[i + 1]);
            const double tmp = d[i + 1];
            d[i + 1] = du[i] - m * tmp;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -m * du2[i];
            }
            du[i] = tmp;
            b[i + 1] -= m * b[i];
            dl[i] = m;
        }
    }
    if (d[n - 1] == 0.0) d[n - 1] = scale;
    y[n - 1] = b[n - 1] / d[n - 1];
    if (n > 1) y[n - 2] = (b[n - 2] - du[n - 2] * y[n - 1]) / d[n - 2];
    for (std::size_t k = n > 2 ? n - 2 : 0; k-- > 0;) y[k] =(b[k] - du[k] * y[k + 1] - du2[k] * y[k + 2]) / d[k];
}

inline double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

}  // namespace detail

/// Smallest eigenvalue of the symmetric tridiagonal matrix by Sturm bisection.
inline double smallest_eigenvalue_bisection(const SymTridiagonal& t, double lower_hint = -std::numeric_limits<double>::infinity(),
                                            int* bisections = nullptr) {
    double lo, hi;
    detail::gershgorin(t, lo, hi);
    if (std::isfinite(lower_hint) && lower_hint > lo && lower_hint < hi && detail::sturm_count(t, lower_hint) == 0) {
        lo = lower_hint;
    }
    int steps = 0;
    // invariant: count(lo) == 0, count(hi) >= 1
    while (hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(lo), std::abs(hi), 1e-300}) &&
           steps < 200) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (detail::sturm_count(t, mid) == 0) lo = mid; else hi = mid;
        ++steps;
    }
    if (bisections) *bisections = steps;
    return lo;
}

/**
 * Principal eigenpair of A = M^{-1} K + diag(shift).
 *
 * Works on the similar symmetric tridiagonal form S = M^{1/2} A M^{-1/2}. The
 * shift is placed at (or just below) lambda_1 by Sturm bisection, after
 * which inverse iteration from the positive constant vector converges in a
 * handful of solves. A converged eigenfunction with entries below -1e-8
 * after sign normalization yields verdict mixed_sign.
 */
inline EigenPair principal_eigenpair(const OperatorMatrix& op, double shift_guess = std::numeric_limits<double>::quiet_NaN(),
                                     double tol = 1e-10, int max_iterations = 100) {
    const std::size_t n = op.dimension();
    detail::require(n >= 1, "principal_eigenpair: empty operator");
    const SymTridiagonal s = op.symmetric_form();

    const double shift = smallest_eigenvalue_bisection(s, shift_guess);

    std::vector<double> psi(n), next(n), work(n);
    for (std::size_t i = 0; i < n; ++i) psi[i] = std::sqrt(op.mass[i]);  // M^{1/2} * constant
    {
        const double nrm = std::sqrt(detail::dot(psi, psi));
        for (double& x : psi) x /= nrm;
    }

    double rq = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iterations; ++it) {
        detail::shifted_solve(s, shift, psi, next);
        double nrm = std::sqrt(detail::dot(next, next));
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw ConvergenceError("principal_eigenpair: breakdown in inverse iteration", residual);
        for (std::size_t i = 0; i < n; ++i) psi[i] = next[i] / nrm;
        s.multiply(psi, work);
        rq = detail::dot(psi, work);
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) r2 += (work[i] - rq * psi[i]) * (work[i] - rq * psi[i]);
        residual = std::sqrt(r2);
        if (residual <= tol * std::max(1.0, std::abs(rq))) {
            ++it;
            break;
        }
    }
    if (!(residual <= tol * std::max(1.0, std::abs(rq)))) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "principal_eigenpair: no convergence after %d iterations (residual %.3e)", it, residual);
        throw ConvergenceError(msg, residual);
    }

    EigenPair e;
    e.sigma_sq = -rq;
    e.iterations = it;
    e.residual = residual;
    e.phi1.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.phi1[i] = psi[i] / std::sqrt(op.mass[i]);
    const auto biggest = std::max_element(e.phi1.begin(), e.phi1.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (*biggest < 0.0) {
        for (double& x : e.phi1) x = -x;
    }
    const double minimum = *std::min_element(e.phi1.begin(), e.phi1.end());
    e.verdict = minimum >= -1e-8 ? EigenVerdict::principal : EigenVerdict::mixed_sign;
    return e;
}

/// Rayleigh quotient <A xi, xi> / <xi, xi> in the grid inner product.
inline double rayleigh_quotient(const Grid& grid, const OperatorMatrix& op, std::span<const double> xi) {
    const auto axi = kaplab::apply(op, xi);
    return inner(grid, axi, xi) / inner(grid, xi, xi);
}

/**
 * Quadrature of |xi'|^2 - e^{v} xi^2 on a 2D radial grid, with xi and v on
 * all nodes. Gradient: centered differences inside, one-sided at r = 0, R.
 */
inline double energy_functional_exponential(const Grid& grid, const SteadyState& s, std::span<const double> xi) {
    detail::require(grid.kind == GridKind::radial && grid.dimension == 2, "energy functional: needs a 2D radial grid");
    detail::require(xi.size() == grid.node_count && s.values.size() == grid.node_count, "energy functional: length mismatch");
    const std::size_t n = grid.node_count;
    const double h = grid.h;
    std::vector<double> integrand(n);
    for (std::size_t i = 0; i < n; ++i) {
        double g;
        if (i == 0) g = (xi[1] - xi[0]) / h;
        else if (i + 1 == n) g = (xi[n - 1] - xi[n - 2]) / h;
        else g = (xi[i + 1] - xi[i - 1]) / (2.0 * h);
        integrand[i] = g * g - std::exp(s.values[i]) * xi[i] * xi[i];
    }
    return quadrature(grid, integrand);
}

/// Critical exponent separating linearly unstable (p < p_c) from stable
/// steady states of -Delta v = |v|^p; +infinity for n <= 10.
inline double pc_threshold(int n) {
    detail::require(n > 2, "pc_threshold: need n > 2");
    if (n <= 10) return std::numeric_limits<double>::infinity();
    const double d = n;
    return (d * d - 8.0 * d + 4.0 + 8.0 * std::sqrt(d - 1.0)) / ((d - 2.0) * (d - 10.0));
}

namespace detail {
inline void check_gnw_range(int n, double p) {
    require(n > 2, "gnw_condition: need n > 2");
    require(std::isfinite(p) && p >= (n + 2.0) / (n - 2.0) * (1.0 - 1e-12), "gnw_condition: need p >= (n+2)/(n-2)");
}
}  // namespace detail

/**
 * Negative-eigenvalue condition for -Delta - p v^{p-1}:
 *   ((n-2)/2)^2 < (2p/(p-1)) (n - 2 - 2/(p-1)),
 * the Hardy constant against p times the singular solution's coefficient.
 */
inline bool gnw_condition(int n, double p) {
    detail::check_gnw_range(n, p);
    const double lhs = 0.25 * (n - 2.0) * (n - 2.0);
    const double rhs = 2.0 * p / (p - 1.0) * (n - 2.0 - 2.0 / (p - 1.0));
    return lhs < rhs;
}

/// The same inequality with p/(p-1) in place of 2/(p-1) in the last factor.
/// Kept for comparison; it is not equivalent to p < p_c.
inline bool gnw_condition_as_printed(int n, double p) {
    detail::check_gnw_range(n, p);
    const double lhs = 0.25 * (n - 2.0) * (n - 2.0);
    const double rhs = 2.0 * p / (p - 1.0) * (n - 2.0 - p / (p - 1.0));
    return lhs < rhs;
}

struct DichotomyRow {
    int n;
    double p;
    bool gnw;
    double pc;
    std::string verdict;  // unstable | stable | boundary | counterexample
};

/// Samples p uniformly on [(n+2)/(n-2), 4 p_c] (or 10 (n+2)/(n-2) when
/// p_c = inf) and classifies each point.
inline std::vector<DichotomyRow> dichotomy_table(int n_min, int n_max, int p_samples) {
    detail::require(n_min > 2 && n_max >= n_min && p_samples >= 2, "dichotomy_table: invalid ranges");
    std::vector<DichotomyRow> rows;
    for (int n = n_min; n <= n_max; ++n) {
        const double pc = pc_threshold(n);
        const double lo = (n + 2.0) / (n - 2.0);
        const double hi = std::isfinite(pc) ? 4.0 * pc : 10.0 * lo;
        for (int k = 0; k < p_samples; ++k) {
            const double p = lo + (hi - lo) * k / (p_samples - 1);
            DichotomyRow row{n, p, gnw_condition(n, p), pc, ""};
            if (std::abs(p - pc) < 1e-9) row.verdict = "boundary";
            else if (row.gnw != (p < pc)) row.verdict = "counterexample";
            else row.verdict = row.gnw ? "unstable" : "stable";
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline void write_dichotomy_csv(std::ostream& os, const std::vector<DichotomyRow>& rows) {
    os << "n,p,gnw,p_c,verdict\n";
    char line[160];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%d,%.17g,%d,%.17g,%s\n", r.n, r.p, r.gnw ? 1 : 0, r.pc, r.verdict.c_str());
        os << line;
    }
}

inline void write_eigenpair_csv(std::ostream& os, const Grid& grid, const EigenPair& e) {
    os << "node,phi1\n";
    const auto x = grid.interior_nodes();
    char line[64];
    for (std::size_t i = 0; i < e.phi1.size(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", x[i], e.phi1[i]);
        os << line;
    }
}

}  // namespace kaplab
