#pragma once

#include <cstdint>

#include "convext/grid.hpp"

namespace convext {

struct ExtremalResult {
  GridFunction E;       // on the x grid
  GridFunction logZ;    // on the dual grid
  double feasibility_residual = 0.0;  // log integral exp(E - phi), recorded only
};

struct HatPhi {
  ProductGridFunction values;
  ConvexityReport joint_convexity;
};

/// logZ(a) = log integral exp(a.x - phi(x)) dx at every dual node.
GridFunction log_laplace(const GridFunction& phi, const GridSpec& dual_spec);

/// Default dual grid for extremal_function: the slope range of phi padded by
/// at least 16 / width on each side, on a power-of-two lattice finer than
/// 0.025 / width where possible. Leftover room widens the padding toward
/// 8 / step. At most max_count^(1/dim) nodes per axis.
GridSpec extremal_dual_spec(const GridFunction& phi, std::size_t max_count = 32769);

/// E(phi) as the conjugate of logZ, evaluated back on phi's grid.
ExtremalResult extremal_function(const GridFunction& phi, const GridSpec& dual_spec);

/// Direct maximization of psi(x0) over node values psi that are discretely
/// convex along axis and diagonal lines and satisfy
/// log sum w_i exp(psi_i - phi_i) + log(cell_volume) <= 0. Log-barrier Newton
/// from a strictly feasible start; returns the best feasible value reached
/// within `iterations` Newton steps.
double extremal_oracle(const GridFunction& phi, std::size_t x0_index, std::size_t iterations);

/// E taken in x for every fixed t, with the joint convexity check attached.
HatPhi hat_phi(const ProductGridFunction& phi, const GridSpec& dual_spec,
               std::size_t samples = 1000, std::uint64_t seed = 0);

}  // namespace convext
