#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "kaplab/grid.hpp"
#include "kaplab/nonlinearity.hpp"
#include "kaplab/operator.hpp"

namespace kaplab {

/// Steady state v of L v = f(x, v), sampled on every node of its grid
/// (the last value is the Dirichlet datum at the truncation boundary).
struct SteadyState {
    Grid grid;
    std::vector<double> values;
    Nonlinearity nonlinearity = Nonlinearity::quadratic();
    double residual_norm = std::numeric_limits<double>::quiet_NaN();
    std::string label;

    std::span<const double> interior() const {
        return std::span<const double>(values).subspan(grid.interior_begin(), grid.interior_count());
    }
    double boundary_value() const { return values.back(); }
    /// Truncation leakage: how far the Dirichlet datum is from zero.
    double boundary_leakage() const { return std::abs(values.back()); }
};

inline SteadyState zero_steady(const Grid& grid, const Nonlinearity& f) {
    return SteadyState{grid, std::vector<double>(grid.node_count, 0.0), f,
                       std::numeric_limits<double>::quiet_NaN(), "zero"};
}

inline SteadyState tabulated_steady(const Grid& grid, std::vector<double> values, const Nonlinearity& f) {
    detail::require(values.size() == grid.node_count, "steady table length does not match node count");
    return SteadyState{grid, std::move(values), f, std::numeric_limits<double>::quiet_NaN(), "table"};
}

/// Chen–Li solution of -Delta v = e^v in R^2 centred at the origin:
/// v(r) = log(32 lambda^2 / (4 + lambda^2 r^2)^2).
inline double chen_li_value(double lambda, double r) {
    const double q = 4.0 + lambda * lambda * r * r;
    return std::log(32.0 * lambda * lambda / (q * q));
}

inline SteadyState chen_li_exponential(double lambda, const Grid& grid) {
    detail::require(lambda > 0.0, "chen_li: lambda must be positive");
    detail::require(grid.kind == GridKind::radial && grid.dimension == 2,
                    "chen_li: requires a radial grid with dimension 2");
    SteadyState s{grid, {}, Nonlinearity::exponential(), std::numeric_limits<double>::quiet_NaN(), "chen_li"};
    s.values.resize(grid.node_count);
    for (std::size_t i = 0; i < grid.node_count; ++i) s.values[i] = chen_li_value(lambda, grid.nodes[i]);
    return s;
}

struct ShootingOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
};

/**
 * Positive radial solution of -Delta v = v^p with v(0) = v_center, v'(0) = 0,
 * integrated outward to the grid radius with Dormand–Prince 5(4) and sampled
 * at the nodes from the dense output. The singular origin is stepped over
 * with the series v = v_c - v_c^p r^2/(2n) + p v_c^{2p-1} r^4/(8n(n+2)).
 */
inline SteadyState power_steady_shooting(int n, double p, double v_center, const Grid& grid,
                                         ShootingOptions options = {}) {
    namespace odeint = boost::numeric::odeint;
    detail::require(n > 2, "shooting: dimension must exceed 2");
    detail::require(p >= (n + 2.0) / (n - 2.0) * (1.0 - 1e-12), "shooting: need p >= (n+2)/(n-2)");
    detail::require(v_center >= 0.0, "shooting: v_center must be nonnegative");
    detail::require(grid.kind == GridKind::radial && grid.dimension == n, "shooting: grid must be radial with matching dimension");

    SteadyState s{grid, std::vector<double>(grid.node_count, 0.0), Nonlinearity::power_abs(p),
                  std::numeric_limits<double>::quiet_NaN(), "shooting"};
    if (v_center == 0.0) return s;

    using State = std::array<double, 2>;
    const double dn = n;
    auto series = [&](double r) -> State {
        const double a2 = -std::pow(v_center, p) / (2.0 * dn);
        const double a4 = p * std::pow(v_center, 2.0 * p - 1.0) / (8.0 * dn * (dn + 2.0));
        return {v_center + a2 * r * r + a4 * r * r * r * r, 2.0 * a2 * r + 4.0 * a4 * r * r * r};
    };
    auto rhs = [&](const State& y, State& dy, double r) {
        dy[0] = y[1];
        dy[1] = -(dn - 1.0) / r * y[1] - std::pow(std::abs(y[0]), p);
    };

    const double length_scale = std::pow(v_center, -(p - 1.0) / 2.0);
    const double r0 = std::min(1e-3 * length_scale, 0.25 * grid.h);
    const double radius = grid.x_hi;

    auto stepper = odeint::make_dense_output(options.abs_tol, options.rel_tol, odeint::runge_kutta_dopri5<State>());
    stepper.initialize(series(r0), r0, std::min(1e-3 * length_scale, 0.1 * grid.h));

    std::size_t next = 0;
    while (next < grid.node_count && grid.nodes[next] <= r0) {
        s.values[next] = series(grid.nodes[next])[0];
        ++next;
    }
    try {
        while (next < grid.node_count) {
            const auto [t0, t1] = stepper.do_step(rhs);
            (void)t0;
            while (next < grid.node_count && grid.nodes[next] <= t1) {
                State y;
                stepper.calc_state(grid.nodes[next], y);
                s.values[next] = y[0];
                ++next;
            }
            const State& y = stepper.current_state();
            if (!(y[0] > 0.0)) {
                char msg[128];
                std::snprintf(msg, sizeof msg, "profile crosses zero near r = %.6g before R = %.6g", t1, radius);
                throw std::invalid_argument(msg);
            }
            if (stepper.current_time_step() < 1e-14) throw ConvergenceError("integrator stall", y[0]);
        }
    } catch (const odeint::step_adjustment_error&) {
        throw ConvergenceError("integrator stall", std::numeric_limits<double>::quiet_NaN());
    } catch (const odeint::no_progress_error&) {
        throw ConvergenceError("integrator stall", std::numeric_limits<double>::quiet_NaN());
    }
    return s;
}

/// Pointwise residual A v - f(x, v) on interior nodes, boundary datum lifted.
inline std::vector<double> steady_residual(const SteadyState& s, const OperatorMatrix& op) {
    detail::require(op.dimension() == s.grid.interior_count(), "validate_steady: operator/grid mismatch");
    const auto v = s.interior();
    auto r = kaplab::apply(op, v, s.boundary_value());
    const auto x = s.grid.interior_nodes();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= s.nonlinearity.eval(x[i], v[i]);
    return r;
}

/// Max-norm residual over interior nodes, excluding the one next to the
/// truncation boundary; stored into s.residual_norm.
inline double validate_steady(SteadyState& s, const OperatorMatrix& op) {
    const auto r = steady_residual(s, op);
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) m = std::max(m, std::abs(r[i]));
    s.residual_norm = m;
    return m;
}

inline void write_steady_csv(std::ostream& os, const SteadyState& s) {
    os << (s.grid.kind == GridKind::radial ? "r,v\n" : "x,v\n");
    char line[64];
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", s.grid.nodes[i], s.values[i]);
        os << line;
    }
}

}  // namespace kaplab
