#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "kaplab/grid.hpp"

namespace kaplab {

/// Symmetric tridiagonal matrix: diag[i] = T(i,i), off[i] = T(i,i+1) = T(i+1,i).
struct SymTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const { return diag.size(); }

    double entry(std::size_t i, std::size_t j) const {
        if (i == j) return diag[i];
        if (i + 1 == j) return off[i];
        if (j + 1 == i) return off[j];
        return 0.0;
    }

    void multiply(std::span<const double> x, std::span<double> y) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += off[i - 1] * x[i - 1];
            if (i + 1 < n) s += off[i] * x[i + 1];
            y[i] = s;
        }
    }
};

/**
 * Discrete operator on interior nodes, stored as the generalized symmetric
 * pencil  A = M^{-1} K + diag(shift).
 *
 * K is the symmetric stiffness (one off-diagonal serves both triangles), M the
 * diagonal mass (the grid's interior quadrature weights) and shift a pointwise
 * term (potential, or -d_u f(x,v) after linearization). A is self-adjoint in
 * the grid inner product. boundary_coupling is K(last, boundary node), used to
 * lift nonzero Dirichlet data.
 */
struct OperatorMatrix {
    SymTridiagonal stiffness;
    std::vector<double> mass;
    std::vector<double> shift;
    double boundary_coupling = 0.0;
    double spacing = 0.0;

    std::size_t dimension() const { return mass.size(); }

    /// Entry (i,j) of the assembled symmetric form K + M diag(shift).
    double entry(std::size_t i, std::size_t j) const {
        double e = stiffness.entry(i, j);
        if (i == j) e += mass[i] * shift[i];
        return e;
    }

    /// The similar symmetric matrix M^{-1/2} K M^{-1/2} + diag(shift).
    SymTridiagonal symmetric_form() const {
        const std::size_t n = dimension();
        SymTridiagonal s;
        s.diag.resize(n);
        s.off.resize(n > 0 ? n - 1 : 0);
        for (std::size_t i = 0; i < n; ++i) s.diag[i] = stiffness.diag[i] / mass[i] + shift[i];
        for (std::size_t i = 0; i + 1 < n; ++i) s.off[i] = stiffness.off[i] / std::sqrt(mass[i] * mass[i + 1]);
        return s;
    }

    /// The adjoint in the grid inner product. Every assembly here is
    /// self-adjoint, so this is a copy; kept as the single place a
    /// non-symmetric L would have to be transposed.
    OperatorMatrix adjoint() const { return *this; }
};

/// Bounded potential V sampled at interior nodes.
struct PotentialField {
    std::vector<double> values;
    double sup_norm = 0.0;

    PotentialField() = default;
    explicit PotentialField(std::vector<double> v) : values(std::move(v)) {
        for (double x : values) {
            detail::require(std::isfinite(x), "potential must be finite");
            sup_norm = std::max(sup_norm, std::abs(x));
        }
    }

    static PotentialField constant(std::size_t n, double value) {
        return PotentialField(std::vector<double>(n, value));
    }
};

/**
 * Dirichlet -Laplacian. Interval grids get the standard (-1, 2, -1)/h^2
 * stencil. Radial grids use the flux form -r^{1-n} (r^{n-1} u')' with face
 * areas omega (r_i +- h/2)^{n-1}; at r = 0 this is 2n (u_0 - u_1)/h^2, the
 * symmetric limit of -n u''(0).
 */
inline OperatorMatrix assemble_dirichlet_laplacian(const Grid& grid) {
    detail::require(grid.node_count >= 3 && grid.nodes.size() == grid.node_count, "invalid grid");
    const std::size_t n = grid.interior_count();
    const auto w = grid.interior_weights();
    const auto x = grid.interior_nodes();
    const double h = grid.h;

    OperatorMatrix op;
    op.spacing = h;
    op.mass.assign(w.begin(), w.end());
    op.shift.assign(n, 0.0);
    op.stiffness.diag.assign(n, 0.0);
    op.stiffness.off.assign(n - 1, 0.0);

    // conductance across the face between interior node i and node i+1
    std::vector<double> face(n);
    if (grid.kind == GridKind::interval) {
        std::fill(face.begin(), face.end(), 1.0 / h);
    } else {
        const double omega = unit_sphere_area(grid.dimension);
        for (std::size_t i = 0; i < n; ++i) face[i] = omega * std::pow(x[i] + 0.5 * h, grid.dimension - 1) / h;
    }
    // interval grids also have a face to the left boundary node
    const double left_face = grid.kind == GridKind::interval ? 1.0 / h : 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const double left = i == 0 ? left_face : face[i - 1];
        op.stiffness.diag[i] = left + face[i];
        if (i + 1 < n) op.stiffness.off[i] = -face[i];
    }
    op.boundary_coupling = -face[n - 1];
    return op;
}

inline OperatorMatrix add_potential(const OperatorMatrix& op, const PotentialField& potential) {
    detail::require(potential.values.size() == op.dimension(), "add_potential: dimension mismatch");
    OperatorMatrix out = op;
    for (std::size_t i = 0; i < out.shift.size(); ++i) out.shift[i] += potential.values[i];
    return out;
}

/// Adds a pointwise term: returns op + diag(values).
inline OperatorMatrix add_diagonal(const OperatorMatrix& op, std::span<const double> values) {
    detail::require(values.size() == op.dimension(), "add_diagonal: dimension mismatch");
    OperatorMatrix out = op;
    for (std::size_t i = 0; i < out.shift.size(); ++i) out.shift[i] += values[i];
    return out;
}

/// y = A x with Dirichlet value `boundary_value` at the truncation boundary.
inline void apply_into(const OperatorMatrix& op, std::span<const double> field, std::span<double> out,
                       double boundary_value = 0.0) {
    const std::size_t n = op.dimension();
    const auto& k = op.stiffness;
    for (std::size_t i = 0; i < n; ++i) {
        double s = k.diag[i] * field[i];
        if (i > 0) s += k.off[i - 1] * field[i - 1];
        if (i + 1 < n) s += k.off[i] * field[i + 1];
        out[i] = s / op.mass[i] + op.shift[i] * field[i];
    }
    if (boundary_value != 0.0) out[n - 1] += op.boundary_coupling * boundary_value / op.mass[n - 1];
}

inline std::vector<double> apply(const OperatorMatrix& op, std::span<const double> field, double boundary_value = 0.0) {
    detail::require(field.size() == op.dimension(), "apply: dimension mismatch");
    std::vector<double> out(field.size());
    apply_into(op, field, out, boundary_value);
    return out;
}

}  // namespace kaplab
