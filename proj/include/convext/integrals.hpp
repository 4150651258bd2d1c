#pragma once

#include <vector>

#include "convext/affine.hpp"
#include "convext/grid.hpp"

namespace convext {

struct LogIntegralResult {
  double value = 0.0;  // nats
  /// Fraction of nodes whose exponent lies more than 745 nats below the max.
  double underflow_fraction = 0.0;
};

/// log of the trapezoid-rule integral of exp(g) over the box, computed with
/// a max shift so exp(g) is never formed directly. g must be finite.
LogIntegralResult log_integral(const GridFunction& g);

/// log integral of exp(psi - phi0). Zero when the normalization holds;
/// callers renormalize with psi - gap.
double normalization_gap(const GridFunction& psi, const GridFunction& phi0);

/// -log integral exp(-phi(t, .)) for every t node.
GridFunction prekopa_marginal(const ProductGridFunction& phi);

/// -log integral exp(-(phi(t, x) - a.x - b)) dx, shifted to vanish at t = 0.
GridFunction tilted_marginal(const ProductGridFunction& phi, const AffineFunction& a);

/// log integral exp(Psi(t, .) - phi(t, .)) for every t node.
std::vector<double> constraint_residuals(const ProductGridFunction& Psi,
                                         const ProductGridFunction& phi);

namespace detail {

/// log of the trapezoid weights of every node of `spec`.
std::vector<double> log_trapezoid_weights(const GridSpec& spec);

/// log sum_i w_i exp(e_i) + log(cell_volume); -inf exponents are skipped,
/// +inf yields +inf, and -inf comes back when nothing contributes.
double log_trapezoid(std::span<const double> exponents, std::span<const double> log_weights,
                     double cell_volume);

}  // namespace detail

}  // namespace convext
