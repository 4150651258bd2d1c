#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "convext/affine.hpp"
#include "convext/grid.hpp"

namespace convext {

/// Finite positive measure over affine atoms: the function
/// log sum_i exp(log_weights[i] + nodes[i](x)).
class MixtureSpec {
 public:
  MixtureSpec(std::vector<AffineFunction> nodes, std::vector<double> log_weights);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t dim() const noexcept { return nodes_.front().dim(); }
  const std::vector<AffineFunction>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& log_weights() const noexcept { return log_weights_; }

  /// The mixture's log-sum-exp sampled on `x_spec`.
  GridFunction evaluate(const GridSpec& x_spec) const;
  /// Every weight multiplied by exp(c).
  MixtureSpec shifted(double c) const;
  /// Slopes stored dimension-major: table[k*size() + i].
  std::vector<double> slope_table() const;

 private:
  std::vector<AffineFunction> nodes_;
  std::vector<double> log_weights_;
};

struct SofteningParams {
  double lambda = 1.0;
  GridSpec dual_spec;
};

/// Bounds log A_k = max_t residual_k(t) of the Hoelder iteration, next to
/// the envelope (1 - 1/lambda)^k log A_0.
struct IterationTrace {
  std::vector<double> log_A;
  std::vector<double> theoretical;
  std::size_t iterations = 0;
  bool converged = false;
};

struct ExtensionReport {
  ProductGridFunction Psi;
  std::vector<double> residuals;  // per t node, nats
  double max_residual = 0.0;
  double restriction_error = 0.0;
  ConvexityReport joint_convexity;
  std::optional<IterationTrace> trace;
  double normalization_shift = 0.0;  // c subtracted from psi
  double softening_shift = 0.0;      // c_lambda subtracted from psi_lambda / lambda
};

/// Controls the joint-convexity diagnostic attached to a report.
struct ReportOptions {
  bool check_convexity = true;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
};

inline constexpr double kNormalizationTolerance = 1e-9;
inline constexpr double kRestrictionTolerance = 1e-6;
inline constexpr double kConvexityTolerance = 1e-6;

/// Extension of psi = 0: the anchored Prekopa marginal, constant in x.
ExtensionReport extend_zero(const ProductGridFunction& phi, const ReportOptions& opts = {});

/// Extension of psi = a.x + b: a.x + b plus the tilted marginal.
ExtensionReport extend_affine(const AffineFunction& a, const ProductGridFunction& phi,
                              const ReportOptions& opts = {});

/// Extension of the mixture's log-sum-exp: every atom is extended through its
/// own tilted marginal and the results are recombined with the same weights.
ExtensionReport extend_mixture(const MixtureSpec& mix, const ProductGridFunction& phi,
                               const ReportOptions& opts = {});

struct SoftLegendreResult {
  GridFunction psi_lambda;  // unscaled, on psi's grid
  MixtureSpec mixture;      // atoms x -> lambda xi.x - lambda psi*(xi)
  GridFunction conjugate;   // psi* on the dual grid
  double sup_gap = 0.0;     // max |psi_lambda / lambda - psi| over finite nodes
};

/// exp(psi_lambda(x)) = sum_j w_j exp(lambda (x.xi_j - psi*(xi_j))) with
/// trapezoid weights on the dual grid.
SoftLegendreResult soft_legendre(const GridFunction& psi, const SofteningParams& p);

/// Extends a fixed source against any supplied weight (restriction = source).
using ExtenderOracle = std::function<ExtensionReport(const ProductGridFunction& weight)>;

/// Extends source / lambda by the Hoelder contraction: each round extends
/// source against phi + (1 - 1/lambda) * (lambda * Psi) and divides by
/// lambda. Non-convergence within max_iter is reported, not thrown.
ExtensionReport holder_extend(const GridFunction& source, const ExtenderOracle& extender,
                              double lambda, const ProductGridFunction& phi, double tol,
                              std::size_t max_iter, const ReportOptions& opts = {});

/// Renormalization and softening stages of extend_convex.
struct SoftenedSource {
  double normalization_shift = 0.0;  // c
  GridFunction target;               // psi - c
  double softening_shift = 0.0;      // c_lambda
  MixtureSpec mixture;               // atoms of psi_lambda - lambda c_lambda
  GridFunction source;               // psi_lambda - lambda c_lambda
  double restriction_gap = 0.0;      // sup |source / lambda - target|
};

SoftenedSource soften_source(const GridFunction& psi, const GridFunction& phi0,
                             const SofteningParams& p);

/// Full pipeline: renormalize, soften, run the Hoelder loop with the mixture
/// extender. restriction_error measures |Psi(0, .) - (psi - c)|.
ExtensionReport extend_convex(const GridFunction& psi, const ProductGridFunction& phi,
                              const SofteningParams& p, double tol, std::size_t max_iter = 200,
                              const ReportOptions& opts = {});

}  // namespace convext
