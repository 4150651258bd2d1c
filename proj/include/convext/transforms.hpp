#pragma once

#include <utility>
#include <vector>

#include "convext/affine.hpp"
#include "convext/grid.hpp"

namespace convext {

/// Discrete convex conjugate g(xi_j) = max_i (x_i . xi_j - f(x_i)) over grid
/// nodes. Runs one linear-time upper-hull sweep per axis.
GridFunction legendre_transform(const GridFunction& f, const GridSpec& dual_spec);

/// Same definition evaluated as the O(N*M) double loop. Reference path for
/// the sweep.
GridFunction legendre_transform_direct(const GridFunction& f, const GridSpec& dual_spec);

/// Per-axis (min, max) of one-sided difference quotients between adjacent
/// finite nodes.
std::vector<std::pair<double, double>> slope_range(const GridFunction& f);

/// Dual grid used by biconjugate: the slope range padded by one step on each
/// side, laid on a power-of-two lattice so that nodes of nested ranges
/// coincide.
GridSpec envelope_dual_spec(const GridFunction& f);

/// Conjugate twice through envelope_dual_spec(f); the discrete convex
/// envelope of f, never above f.
GridFunction biconjugate(const GridFunction& f);
GridFunction biconjugate(const GridFunction& f, const GridSpec& dual_spec);

}  // namespace convext
