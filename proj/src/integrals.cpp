#include "convext/integrals.hpp"

#include <cmath>
#include <string>

#include "convext/error.hpp"
#include "kernels.hpp"
#include "parallel.hpp"

namespace convext {
namespace detail {

std::vector<double> log_trapezoid_weights(const GridSpec& spec) {
  std::vector<double> w = spec.trapezoid_weights();
  for (double& v : w) v = std::log(v);
  return w;
}

double log_trapezoid(std::span<const double> exponents, std::span<const double> log_weights,
                     double cell_volume) {
  thread_local std::vector<double> base;
  base.resize(exponents.size());
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    const double e = exponents[i];
    if (e == kInf) return kInf;
    base[i] = e == -kInf ? kExcluded : e + log_weights[i];
  }
  const ExpSum s = exp_sum(base);
  if (s.max <= 0.5 * kExcluded) return -kInf;
  return s.max + std::log(s.sum) + std::log(cell_volume);
}

}  // namespace detail

namespace {

void require_same_product(const ProductGridFunction& a, const ProductGridFunction& b) {
  if (!(a.t_spec() == b.t_spec()) || !(a.x_spec() == b.x_spec())) {
    fail(ErrorKind::Shape, "product grid functions live on different grids");
  }
}

// log integral exp(sign * phi_t + affine) for every slice, with +inf in phi
// treated as zero density.
std::vector<double> slice_log_integrals(const ProductGridFunction& phi, const AffineFunction* a,
                                        const char* what) {
  const GridSpec& xs = phi.x_spec();
  const std::vector<double> logw = detail::log_trapezoid_weights(xs);
  std::vector<double> tilt(xs.size(), 0.0);
  if (a != nullptr) {
    std::vector<double> p(xs.dim());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xs.coordinates(i, p);
      tilt[i] = (*a)(p);
    }
  }
  std::vector<double> out(phi.t_size());
  detail::parallel_for(phi.t_size(), [&](std::size_t j) {
    auto v = phi.slice_values(j);
    std::vector<double> e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e[i] = v[i] == kInf ? -kInf : tilt[i] - v[i];
    out[j] = detail::log_trapezoid(e, logw, xs.cell_volume());
    if (out[j] == -kInf) {
      fail(ErrorKind::Domain, std::string(what) + ": t-slice " + std::to_string(j) +
                                  " is +inf everywhere");
    }
  });
  return out;
}

}  // namespace

LogIntegralResult log_integral(const GridFunction& g) {
  const GridSpec& spec = g.spec();
  for (double v : g.values()) {
    if (v == kInf) fail(ErrorKind::Domain, "log_integral: exponent is +inf at a grid node");
  }
  const std::vector<double> logw = detail::log_trapezoid_weights(spec);
  LogIntegralResult r;
  r.value = detail::log_trapezoid(g.values(), logw, spec.cell_volume());
  const double m = g.max_finite();
  std::size_t low = 0;
  for (double v : g.values()) low += (v < m - 745.0) ? 1 : 0;
  r.underflow_fraction = static_cast<double>(low) / static_cast<double>(g.size());
  return r;
}

double normalization_gap(const GridFunction& psi, const GridFunction& phi0) {
  if (!(psi.spec() == phi0.spec())) fail(ErrorKind::Shape, "normalization_gap: grid specs differ");
  std::vector<double> e(psi.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (phi0[i] == kInf) {
      e[i] = -kInf;
    } else if (psi[i] == kInf) {
      fail(ErrorKind::Domain, "normalization_gap: psi is +inf where phi is finite");
    } else {
      e[i] = psi[i] - phi0[i];
    }
  }
  const double v = detail::log_trapezoid(e, detail::log_trapezoid_weights(psi.spec()),
                                         psi.spec().cell_volume());
  if (v == -kInf) fail(ErrorKind::Domain, "normalization_gap: no node where phi is finite");
  return v;
}

GridFunction prekopa_marginal(const ProductGridFunction& phi) {
  std::vector<double> L = slice_log_integrals(phi, nullptr, "prekopa_marginal");
  for (double& v : L) v = -v;
  return GridFunction(phi.t_spec(), std::move(L));
}

GridFunction tilted_marginal(const ProductGridFunction& phi, const AffineFunction& a) {
  if (a.dim() != phi.x_spec().dim()) fail(ErrorKind::Shape, "tilted_marginal: slope dimension");
  const std::size_t anchor = phi.anchor_index();
  std::vector<double> L = slice_log_integrals(phi, &a, "tilted_marginal");
  const double L0 = L[anchor];
  for (double& v : L) v = -v + L0;
  return GridFunction(phi.t_spec(), std::move(L));
}

std::vector<double> constraint_residuals(const ProductGridFunction& Psi,
                                         const ProductGridFunction& phi) {
  require_same_product(Psi, phi);
  const GridSpec& xs = phi.x_spec();
  const std::vector<double> logw = detail::log_trapezoid_weights(xs);
  std::vector<double> out(phi.t_size());
  detail::parallel_for(phi.t_size(), [&](std::size_t j) {
    auto P = Psi.slice_values(j);
    auto F = phi.slice_values(j);
    std::vector<double> e(P.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      e[i] = F[i] == kInf ? -kInf : P[i] - F[i];
    }
    out[j] = detail::log_trapezoid(e, logw, xs.cell_volume());
  });
  return out;
}

}  // namespace convext
