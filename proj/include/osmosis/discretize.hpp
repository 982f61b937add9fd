#pragma once

// Drift construction and finite-difference assembly of the osmosis operator
//   A u = Lap(u) - div(d u)
// on the staggered grid. Each interior half-edge with drift value d
// contributes, with s = d/(2h):
//   toward increasing index:  off-diagonal  1/h^2 - s,  diagonal  -1/h^2 - s
//   toward decreasing index:  off-diagonal  1/h^2 + s,  diagonal  -1/h^2 + s
// so every matrix column sums to zero edge by edge (exact average-gray
// conservation) and absent boundary edges contribute nothing at all.

#include <cmath>
#include <limits>
#include <utility>

#include "osmosis/core.hpp"

namespace osmosis {

// Canonical drift of a positive reference image, d = grad(ln v) sampled at
// half-edges as a finite difference over the adjacent pixel mean:
//   d1(i+1/2,j) = 2 (v(i+1,j) - v(i,j)) / (h (v(i+1,j) + v(i,j)))
// This form makes v an exact discrete steady state: A(d) v = 0 to rounding.
inline DriftField drift_from_reference(const PositiveImage& v) {
    const int W = v.width(), H = v.height();
    const double h = v.h();
    DriftField d(W, H, h);
    for (int j = 0; j < H; ++j)
        for (int i = 0; i + 1 < W; ++i)
            d.d1(i, j) = 2.0 * (v(i + 1, j) - v(i, j)) / (h * (v(i + 1, j) + v(i, j)));
    for (int j = 0; j + 1 < H; ++j)
        for (int i = 0; i < W; ++i)
            d.d2(i, j) = 2.0 * (v(i, j + 1) - v(i, j)) / (h * (v(i, j + 1) + v(i, j)));
    return d;
}

// Copy of d with the drift forced to exactly zero on masked edges.
inline DriftField zero_drift_on_mask(const DriftField& d, const EdgeMask& m) {
    if (!m.shape_matches(d))
        throw ShapeError("zero_drift_on_mask: mask " + std::to_string(m.width()) + "x" +
                         std::to_string(m.height()) + " does not match drift field " +
                         std::to_string(d.width()) + "x" + std::to_string(d.height()));
    DriftField out = d;
    for (int j = 0; j < d.height(); ++j)
        for (int i = 0; i + 1 < d.width(); ++i)
            if (m.m1(i, j)) out.d1(i, j) = 0.0;
    for (int j = 0; j + 1 < d.height(); ++j)
        for (int i = 0; i < d.width(); ++i)
            if (m.m2(i, j)) out.d2(i, j) = 0.0;
    return out;
}

// Directional parts A1 (horizontal edges) and A2 (vertical edges).
// A1 + A2 equals the full operator entrywise; each part keeps only the
// diagonal contributions of its own edges.
inline std::pair<StencilOperator, StencilOperator> assemble_split(const DriftField& d) {
    if (!d.all_finite())
        throw ShapeError("assemble_split: drift field contains non-finite entries");
    const int W = d.width(), H = d.height();
    const double h = d.h();
    const double inv_h2 = 1.0 / (h * h);
    const double inv_2h = 1.0 / (2.0 * h);
    StencilOperator a1(W, H, h, StencilKind::horizontal);
    StencilOperator a2(W, H, h, StencilKind::vertical);
    for (int j = 0; j < H; ++j) {
        for (int i = 0; i + 1 < W; ++i) {
            const double s = d.d1(i, j) * inv_2h;
            a1.wE(i, j) = inv_h2 - s;
            a1.wC(i, j) += -inv_h2 - s;
            a1.wW(i + 1, j) = inv_h2 + s;
            a1.wC(i + 1, j) += -inv_h2 + s;
        }
    }
    for (int j = 0; j + 1 < H; ++j) {
        for (int i = 0; i < W; ++i) {
            const double s = d.d2(i, j) * inv_2h;
            a2.wS(i, j) = inv_h2 - s;
            a2.wC(i, j) += -inv_h2 - s;
            a2.wN(i, j + 1) = inv_h2 + s;
            a2.wC(i, j + 1) += -inv_h2 + s;
        }
    }
    return {std::move(a1), std::move(a2)};
}

// Full 5-point operator, built as the entrywise sum of the split parts.
inline StencilOperator assemble_full(const DriftField& d) {
    auto [a1, a2] = assemble_split(d);
    const int W = d.width(), H = d.height();
    StencilOperator a(W, H, d.h(), StencilKind::full);
    for (int j = 0; j < H; ++j) {
        for (int i = 0; i < W; ++i) {
            a.wC(i, j) = a1.wC(i, j) + a2.wC(i, j);
            a.wE(i, j) = a1.wE(i, j);
            a.wW(i, j) = a1.wW(i, j);
            a.wN(i, j) = a2.wN(i, j);
            a.wS(i, j) = a2.wS(i, j);
        }
    }
    return a;
}

// Largest Peaceman-Rachford step preserving the conservation properties:
//   tau_max = 2 / max( max|diag A1|, max|diag A2| ).
// Returns +inf for operators with empty diagonals (degenerate 1x1 grids).
inline double pr_stability_bound(const StencilOperator& a1, const StencilOperator& a2) {
    const double m = std::max(a1.max_abs_diag(), a2.max_abs_diag());
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 / m;
}

}  // namespace osmosis
