#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "kaplab/error.hpp"

namespace kaplab {

enum class GridKind { interval, radial };

inline const char* to_string(GridKind kind) {
    return kind == GridKind::interval ? "interval" : "radial";
}

/// Surface area of the unit (n-1)-sphere in R^n: 2 pi^{n/2} / Gamma(n/2).
inline double unit_sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/**
 * Uniform 1D grid, either an interval (x_lo, x_hi) with Dirichlet ends or the
 * radial coordinate r in [0, R] of a ball in R^n with Dirichlet data at r = R.
 *
 * Fields handed to operators live on the interior nodes only; boundary nodes
 * carry implicit Dirichlet values. For the interval kind the interior is
 * nodes[1 .. N-2]; for the radial kind r = 0 is a regular interior node and
 * the interior is nodes[0 .. N-2].
 *
 * Quadrature weights are dual-cell measures: h on interval interior nodes and
 * h/2 at the ends (the trapezoid rule); for radial grids the weight of node i
 * is the n-volume of the shell [r_i - h/2, r_i + h/2] clipped to [0, R].
 */
struct Grid {
    GridKind kind = GridKind::interval;
    int dimension = 1;
    double x_lo = 0.0;
    double x_hi = 1.0;
    std::size_t node_count = 0;
    double h = 0.0;
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t interior_begin() const { return kind == GridKind::interval ? 1 : 0; }
    std::size_t interior_count() const { return node_count - 1 - interior_begin(); }

    std::span<const double> interior_nodes() const {
        return std::span<const double>(nodes).subspan(interior_begin(), interior_count());
    }
    std::span<const double> interior_weights() const {
        return std::span<const double>(weights).subspan(interior_begin(), interior_count());
    }

    /// Exact measure of the discretized domain.
    double measure() const {
        if (kind == GridKind::interval) return x_hi - x_lo;
        return unit_sphere_area(dimension) * std::pow(x_hi, dimension) / dimension;
    }

    /// Pads an interior field with the given boundary values to full length.
    std::vector<double> embed(std::span<const double> interior, double boundary_value = 0.0) const {
        detail::require(interior.size() == interior_count(), "embed: field length does not match interior node count");
        std::vector<double> full(node_count, boundary_value);
        for (std::size_t i = 0; i < interior.size(); ++i) full[interior_begin() + i] = interior[i];
        return full;
    }
};

inline Grid build_interval_grid(double x_lo, double x_hi, std::size_t node_count) {
    detail::require(std::isfinite(x_lo) && std::isfinite(x_hi) && x_lo < x_hi, "invalid interval: need x_lo < x_hi");
    detail::require(node_count >= 3, "invalid node_count: need at least 3 nodes");

    Grid g;
    g.kind = GridKind::interval;
    g.dimension = 1;
    g.x_lo = x_lo;
    g.x_hi = x_hi;
    g.node_count = node_count;
    g.h = (x_hi - x_lo) / static_cast<double>(node_count - 1);
    g.nodes.resize(node_count);
    g.weights.assign(node_count, g.h);
    for (std::size_t i = 0; i < node_count; ++i) g.nodes[i] = x_lo + g.h * static_cast<double>(i);
    g.nodes.back() = x_hi;
    g.weights.front() = 0.5 * g.h;
    g.weights.back() = 0.5 * g.h;
    return g;
}

inline Grid build_radial_grid(int dimension, double radius, std::size_t node_count) {
    detail::require(dimension >= 1, "invalid dimension: need n >= 1");
    detail::require(std::isfinite(radius) && radius > 0.0, "invalid radius: need R > 0");
    detail::require(node_count >= 3, "invalid node_count: need at least 3 nodes");

    Grid g;
    g.kind = GridKind::radial;
    g.dimension = dimension;
    g.x_lo = 0.0;
    g.x_hi = radius;
    g.node_count = node_count;
    g.h = radius / static_cast<double>(node_count - 1);
    g.nodes.resize(node_count);
    g.weights.resize(node_count);
    const double omega = unit_sphere_area(dimension);
    const double n = dimension;
    for (std::size_t i = 0; i < node_count; ++i) {
        g.nodes[i] = g.h * static_cast<double>(i);
    }
    g.nodes.back() = radius;
    for (std::size_t i = 0; i < node_count; ++i) {
        const double outer = std::min(g.nodes[i] + 0.5 * g.h, radius);
        const double inner = std::max(g.nodes[i] - 0.5 * g.h, 0.0);
        g.weights[i] = omega / n * (std::pow(outer, n) - std::pow(inner, n));
    }
    return g;
}

/// Integral of a full-length nodal field (boundary nodes included).
inline double quadrature(const Grid& grid, std::span<const double> field) {
    detail::require(field.size() == grid.node_count, "quadrature: field length does not match node count");
    double sum = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) sum += grid.weights[i] * field[i];
    return sum;
}

/// Grid inner product of two interior fields.
inline double inner(const Grid& grid, std::span<const double> x, std::span<const double> y) {
    detail::require(x.size() == grid.interior_count() && y.size() == x.size(), "inner: field length mismatch");
    const auto w = grid.interior_weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += w[i] * x[i] * y[i];
    return sum;
}

inline double l2_norm(const Grid& grid, std::span<const double> x) { return std::sqrt(inner(grid, x, x)); }

inline double l1_norm(const Grid& grid, std::span<const double> x) {
    detail::require(x.size() == grid.interior_count(), "l1_norm: field length mismatch");
    const auto w = grid.interior_weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += w[i] * std::abs(x[i]);
    return sum;
}

inline double sup_norm(std::span<const double> x) {
    double m = 0.0;
    for (double xi : x) {
        if (!std::isfinite(xi)) return xi;
        m = std::max(m, std::abs(xi));
    }
    return m;
}

}  // namespace kaplab
