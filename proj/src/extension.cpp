#include "convext/extension.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convext/error.hpp"
#include "convext/integrals.hpp"
#include "convext/transforms.hpp"
#include "kernels.hpp"
#include "parallel.hpp"

namespace convext {
namespace {

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

void require_normalized(double gap, const char* what) {
  if (!(std::abs(gap) <= kNormalizationTolerance)) {
    std::ostringstream msg;
    msg << what << ": normalization integral is exp(" << gap
        << ") at t = 0; renormalize the source first";
    fail(ErrorKind::Domain, msg.str());
  }
}

double lse_value(const detail::ExpSum& s) {
  return s.max <= 0.5 * detail::kExcluded ? -kInf : s.max + std::log(s.sum);
}

ExtensionReport make_report(ProductGridFunction Psi, const ProductGridFunction& phi,
                            double restriction_error, const ReportOptions& opts) {
  std::vector<double> residuals = constraint_residuals(Psi, phi);
  const double max_residual = max_of(residuals);
  ConvexityReport convexity;
  if (opts.check_convexity) convexity = joint_check(Psi, opts.samples, opts.seed);
  return ExtensionReport{std::move(Psi), std::move(residuals), max_residual, restriction_error,
                         std::move(convexity), std::nullopt, 0.0, 0.0};
}

// Psi(t, x) = f(x) + g(t).
ProductGridFunction outer_sum(const GridSpec& t_spec, const GridFunction& f,
                              std::span<const double> g) {
  std::vector<double> values(t_spec.size() * f.size());
  for (std::size_t j = 0; j < t_spec.size(); ++j) {
    for (std::size_t i = 0; i < f.size(); ++i) values[j * f.size() + i] = f[i] + g[j];
  }
  return ProductGridFunction(t_spec, f.spec(), std::move(values));
}

double restriction_distance(const ProductGridFunction& Psi, std::size_t anchor,
                            const GridFunction& target) {
  return sup_distance(Psi.slice(anchor), target);
}

}  // namespace

MixtureSpec::MixtureSpec(std::vector<AffineFunction> nodes, std::vector<double> log_weights)
    : nodes_(std::move(nodes)), log_weights_(std::move(log_weights)) {
  if (nodes_.empty()) fail(ErrorKind::Domain, "mixture has no components");
  if (nodes_.size() != log_weights_.size()) {
    fail(ErrorKind::Shape, "mixture nodes and log-weights differ in length");
  }
  for (const AffineFunction& a : nodes_) {
    if (a.dim() != nodes_.front().dim()) fail(ErrorKind::Shape, "mixture slopes differ in dimension");
  }
  for (double w : log_weights_) {
    if (!std::isfinite(w)) fail(ErrorKind::Domain, "mixture log-weights must be finite");
  }
}

std::vector<double> MixtureSpec::slope_table() const {
  const std::size_t n = size();
  std::vector<double> table(dim() * n);
  for (std::size_t k = 0; k < dim(); ++k) {
    for (std::size_t i = 0; i < n; ++i) table[k * n + i] = nodes_[i].slope[k];
  }
  return table;
}

GridFunction MixtureSpec::evaluate(const GridSpec& x_spec) const {
  if (x_spec.dim() != dim()) fail(ErrorKind::Shape, "mixture dimension differs from the grid");
  const std::vector<double> slopes = slope_table();
  std::vector<double> base(size());
  for (std::size_t i = 0; i < size(); ++i) base[i] = log_weights_[i] + nodes_[i].offset;
  std::vector<double> values(x_spec.size());
  detail::parallel_for(x_spec.size(), [&](std::size_t flat) {
    thread_local std::vector<double> scratch;
    const std::vector<double> x = x_spec.point(flat);
    values[flat] = lse_value(detail::exp_sum_affine(base, slopes, x, scratch));
  });
  return GridFunction(x_spec, std::move(values));
}

MixtureSpec MixtureSpec::shifted(double c) const {
  std::vector<double> w = log_weights_;
  for (double& v : w) v += c;
  return MixtureSpec(nodes_, std::move(w));
}

ExtensionReport extend_zero(const ProductGridFunction& phi, const ReportOptions& opts) {
  const std::size_t anchor = phi.anchor_index();
  const GridFunction phi0 = phi.slice(anchor);
  require_normalized(normalization_gap(GridFunction::constant(phi.x_spec(), 0.0), phi0),
                     "extend_zero");
  const GridFunction marginal = prekopa_marginal(phi);
  std::vector<double> g(marginal.values().begin(), marginal.values().end());
  const double g0 = g[anchor];
  for (double& v : g) v = v - g0;
  ProductGridFunction Psi = outer_sum(phi.t_spec(), GridFunction::constant(phi.x_spec(), 0.0), g);
  const double restriction = restriction_distance(Psi, anchor, GridFunction::constant(phi.x_spec(), 0.0));
  return make_report(std::move(Psi), phi, restriction, opts);
}

ExtensionReport extend_affine(const AffineFunction& a, const ProductGridFunction& phi,
                              const ReportOptions& opts) {
  if (a.dim() != phi.x_spec().dim()) fail(ErrorKind::Shape, "extend_affine: slope dimension");
  const std::size_t anchor = phi.anchor_index();
  const GridFunction source = GridFunction::sample(phi.x_spec(), [&](auto x) { return a(x); });
  require_normalized(normalization_gap(source, phi.slice(anchor)), "extend_affine");
  const GridFunction tilted = tilted_marginal(phi, a);
  ProductGridFunction Psi = outer_sum(phi.t_spec(), source, tilted.values());
  const double restriction = restriction_distance(Psi, anchor, source);
  return make_report(std::move(Psi), phi, restriction, opts);
}

ExtensionReport extend_mixture(const MixtureSpec& mix, const ProductGridFunction& phi,
                               const ReportOptions& opts) {
  const GridSpec& xs = phi.x_spec();
  if (mix.dim() != xs.dim()) fail(ErrorKind::Shape, "extend_mixture: component dimension");
  const std::size_t anchor = phi.anchor_index();
  const std::size_t K = mix.size();
  const std::size_t T = phi.t_size();
  const std::size_t X = xs.size();

  const std::vector<double> logw = detail::log_trapezoid_weights(xs);
  const std::vector<double> x_table = xs.coordinate_table();
  const std::vector<double> slopes = mix.slope_table();

  // L[j*K + i] = log sum_x w_x exp(a_i.x - phi(t_j, x)), the log-partition of
  // atom i's tilted weight. Cell volume and atom offsets cancel once anchored.
  std::vector<double> L(T * K);
  detail::parallel_for(T, [&](std::size_t j) {
    thread_local std::vector<double> scratch;
    auto F = phi.slice_values(j);
    std::vector<double> base(X);
    for (std::size_t x = 0; x < X; ++x) base[x] = F[x] == kInf ? detail::kExcluded : logw[x] - F[x];
    std::vector<double> slope(xs.dim());
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t k = 0; k < xs.dim(); ++k) slope[k] = slopes[k * K + i];
      L[j * K + i] = lse_value(detail::exp_sum_affine(base, x_table, slope, scratch));
    }
  });

  // Atom i extends to log_w_i + a_i.x + b_i - (L_i(t) - L_i(0)).
  std::vector<double> values(T * X);
  detail::parallel_for(T, [&](std::size_t j) {
    thread_local std::vector<double> scratch;
    std::vector<double> rho(K);
    for (std::size_t i = 0; i < K; ++i) {
      rho[i] = (mix.log_weights()[i] + mix.nodes()[i].offset) - (L[j * K + i] - L[anchor * K + i]);
    }
    std::vector<double> x(xs.dim());
    for (std::size_t flat = 0; flat < X; ++flat) {
      xs.coordinates(flat, x);
      values[j * X + flat] = lse_value(detail::exp_sum_affine(rho, slopes, x, scratch));
    }
  });
  ProductGridFunction Psi(phi.t_spec(), xs, std::move(values));
  const double restriction = restriction_distance(Psi, anchor, mix.evaluate(xs));
  return make_report(std::move(Psi), phi, restriction, opts);
}

SoftLegendreResult soft_legendre(const GridFunction& psi, const SofteningParams& p) {
  if (!(p.lambda >= 1.0) || !std::isfinite(p.lambda)) fail(ErrorKind::Parameter, "lambda must be >= 1");
  const GridSpec& dual = p.dual_spec;
  if (dual.dim() != psi.spec().dim()) fail(ErrorKind::Shape, "dual grid dimension differs from psi");
  const auto ranges = slope_range(psi);
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    if (ranges[k].first < dual.axis(k).lo || ranges[k].second > dual.axis(k).hi) {
      std::ostringstream msg;
      msg << "dual grid axis " << k << " [" << dual.axis(k).lo << ", " << dual.axis(k).hi
          << "] does not cover the slope range [" << ranges[k].first << ", " << ranges[k].second
          << "] of psi";
      fail(ErrorKind::Configuration, msg.str());
    }
  }
  GridFunction conjugate = legendre_transform(psi, dual);
  const double lambda = p.lambda;
  const std::vector<double> w = dual.trapezoid_weights();
  const double log_cell = std::log(dual.cell_volume());
  std::vector<AffineFunction> nodes;
  std::vector<double> log_weights;
  nodes.reserve(dual.size());
  log_weights.reserve(dual.size());
  for (std::size_t j = 0; j < dual.size(); ++j) {
    std::vector<double> slope = dual.point(j);
    for (double& s : slope) s *= lambda;
    nodes.emplace_back(std::move(slope), -lambda * conjugate[j]);
    log_weights.push_back(std::log(w[j]) + log_cell);
  }
  MixtureSpec mixture(std::move(nodes), std::move(log_weights));
  GridFunction psi_lambda = mixture.evaluate(psi.spec());
  double gap = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (psi[i] < kInf) gap = std::max(gap, std::abs(psi_lambda[i] / lambda - psi[i]));
  }
  return SoftLegendreResult{std::move(psi_lambda), std::move(mixture), std::move(conjugate), gap};
}

ExtensionReport holder_extend(const GridFunction& source, const ExtenderOracle& extender,
                              double lambda, const ProductGridFunction& phi, double tol,
                              std::size_t max_iter, const ReportOptions& opts) {
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) fail(ErrorKind::Parameter, "lambda must be >= 1");
  if (!(tol > 0.0)) fail(ErrorKind::Parameter, "tol must be > 0");
  if (!(source.spec() == phi.x_spec())) fail(ErrorKind::Shape, "holder_extend: source grid differs from phi's x grid");
  const std::size_t anchor = phi.anchor_index();
  const std::size_t T = phi.t_size();
  const std::size_t X = phi.x_size();

  std::vector<double> scaled(X);
  for (std::size_t i = 0; i < X; ++i) scaled[i] = source[i] / lambda;
  const GridFunction target(source.spec(), scaled);
  require_normalized(normalization_gap(target, phi.slice(anchor)), "holder_extend");

  // Psi_0 is constant in t.
  std::vector<double> unscaled(T * X), current(T * X);
  for (std::size_t j = 0; j < T; ++j) {
    std::copy(source.values().begin(), source.values().end(), unscaled.begin() + j * X);
    std::copy(scaled.begin(), scaled.end(), current.begin() + j * X);
  }
  ProductGridFunction Psi(phi.t_spec(), phi.x_spec(), current);
  std::vector<double> residuals = constraint_residuals(Psi, phi);

  IterationTrace trace;
  const double log_A0 = max_of(residuals);
  trace.log_A.push_back(log_A0);
  trace.theoretical.push_back(log_A0);
  trace.converged = log_A0 <= tol;
  const double rate = 1.0 - 1.0 / lambda;

  auto F = phi.values();
  while (!trace.converged && trace.iterations < max_iter) {
    ++trace.iterations;
    std::vector<double> weight(T * X);
    for (std::size_t n = 0; n < T * X; ++n) weight[n] = F[n] == kInf ? kInf : F[n] + rate * unscaled[n];
    // Re-anchor so that exp(source - W(0, .)) integrates to exactly one.
    const double anchor_gap = normalization_gap(
        source, GridFunction(phi.x_spec(), std::vector<double>(weight.begin() + anchor * X,
                                                               weight.begin() + (anchor + 1) * X)));
    for (double& w : weight) w += anchor_gap;
    const ExtensionReport step = extender(ProductGridFunction(phi.t_spec(), phi.x_spec(), std::move(weight)));

    const double mismatch = sup_distance(step.Psi.slice(anchor), source);
    if (!(mismatch <= kRestrictionTolerance)) {
      std::ostringstream msg;
      msg << "extender changed the restriction to t = 0 by " << mismatch;
      fail(ErrorKind::Contract, msg.str());
    }
    auto next = step.Psi.values();
    for (std::size_t n = 0; n < T * X; ++n) {
      unscaled[n] = next[n];
      current[n] = next[n] / lambda;
    }
    Psi = ProductGridFunction(phi.t_spec(), phi.x_spec(), current);
    residuals = constraint_residuals(Psi, phi);
    const double log_A = max_of(residuals);
    trace.log_A.push_back(log_A);
    trace.theoretical.push_back(std::pow(rate, static_cast<double>(trace.iterations)) * log_A0);
    trace.converged = log_A <= tol;
  }

  const double restriction = restriction_distance(Psi, anchor, target);
  ExtensionReport report = make_report(std::move(Psi), phi, restriction, opts);
  report.trace = std::move(trace);
  return report;
}

SoftenedSource soften_source(const GridFunction& psi, const GridFunction& phi0,
                             const SofteningParams& p) {
  const double c = normalization_gap(psi, phi0);
  GridFunction target = shift(psi, -c);
  SoftLegendreResult soft = soft_legendre(target, p);
  const double lambda = p.lambda;
  std::vector<double> scaled(soft.psi_lambda.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = soft.psi_lambda[i] / lambda;
  const double c_lambda = normalization_gap(GridFunction(psi.spec(), std::move(scaled)), phi0);
  MixtureSpec mixture = soft.mixture.shifted(-lambda * c_lambda);
  GridFunction source = mixture.evaluate(psi.spec());
  double gap = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (target[i] < kInf) gap = std::max(gap, std::abs(source[i] / lambda - target[i]));
  }
  return SoftenedSource{c, std::move(target), c_lambda, std::move(mixture), std::move(source), gap};
}

ExtensionReport extend_convex(const GridFunction& psi, const ProductGridFunction& phi,
                              const SofteningParams& p, double tol, std::size_t max_iter,
                              const ReportOptions& opts) {
  if (!(psi.spec() == phi.x_spec())) fail(ErrorKind::Shape, "extend_convex: psi grid differs from phi's x grid");
  const std::size_t anchor = phi.anchor_index();
  const double input_tol = 1e-9 * (1.0 + std::max(std::abs(psi.max_finite()), std::abs(psi.min_value())));
  const ConvexityReport psi_check = check_midpoint_convexity(psi, opts.samples, opts.seed);
  if (psi_check.worst_violation > input_tol) {
    std::ostringstream msg;
    msg << "psi fails the midpoint convexity check (worst violation " << psi_check.worst_violation << ")";
    fail(ErrorKind::Input, msg.str());
  }
  const GridFunction joint = phi.joined();
  const double phi_tol =
      1e-9 * (1.0 + std::max(std::abs(joint.max_finite()), std::abs(joint.min_value())));
  const ConvexityReport phi_check = joint_check(phi, opts.samples, opts.seed);
  if (phi_check.worst_violation > phi_tol) {
    std::ostringstream msg;
    msg << "phi fails the joint midpoint convexity check (worst violation "
        << phi_check.worst_violation << ")";
    fail(ErrorKind::Input, msg.str());
  }
  const GridFunction phi0 = phi.slice(anchor);

  if (phi.t_size() == 1) {
    // No t variables: the renormalized source is its own extension.
    const double c = normalization_gap(psi, phi0);
    GridFunction target = shift(psi, -c);
    ExtensionReport report =
        make_report(ProductGridFunction(phi.t_spec(), phi.x_spec(),
                                        std::vector<double>(target.values().begin(), target.values().end())),
                    phi, 0.0, opts);
    report.normalization_shift = c;
    return report;
  }

  SoftenedSource soft = soften_source(psi, phi0, p);
  const MixtureSpec& mixture = soft.mixture;
  ReportOptions quiet = opts;
  quiet.check_convexity = false;
  ExtenderOracle extender = [&](const ProductGridFunction& weight) {
    return extend_mixture(mixture, weight, quiet);
  };
  ExtensionReport report = holder_extend(soft.source, extender, p.lambda, phi, tol, max_iter, opts);
  report.restriction_error = restriction_distance(report.Psi, anchor, soft.target);
  report.normalization_shift = soft.normalization_shift;
  report.softening_shift = soft.softening_shift;
  return report;
}

}  // namespace convext
