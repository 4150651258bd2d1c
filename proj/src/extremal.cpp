#include "convext/extremal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "convext/error.hpp"
#include "convext/integrals.hpp"
#include "convext/transforms.hpp"
#include "kernels.hpp"
#include "lattice.hpp"
#include "parallel.hpp"

namespace convext {
namespace {

struct Triple {
  std::size_t lo, mid, hi;
};

// Every (p, m, q) with m the midpoint of p and q one lattice step apart
// along an axis or diagonal direction.
std::vector<Triple> convexity_triples(const GridSpec& spec) {
  std::vector<Triple> out;
  const std::size_t d = spec.dim();
  for (const auto& dir : detail::half_directions(d)) {
    for (std::size_t mid = 0; mid < spec.size(); ++mid) {
      bool inside = true;
      std::ptrdiff_t offset = 0;
      for (std::size_t k = 0; k < d && inside; ++k) {
        const std::size_t i = spec.index_along(mid, k);
        if (dir[k] != 0 && (i == 0 || i + 1 == spec.axis(k).count)) inside = false;
        offset += dir[k] * static_cast<std::ptrdiff_t>(spec.stride(k));
      }
      if (!inside) continue;
      const auto m = static_cast<std::ptrdiff_t>(mid);
      out.push_back({static_cast<std::size_t>(m - offset), mid, static_cast<std::size_t>(m + offset)});
    }
  }
  return out;
}

struct BarrierProblem {
  const std::vector<Triple>& triples;
  Eigen::VectorXd log_w;  // log trapezoid weight - phi + log cell volume
  std::size_t x0;

  // Second differences; false when any is not strictly positive.
  bool slacks(const Eigen::VectorXd& psi, Eigen::VectorXd& c) const {
    c.resize(static_cast<Eigen::Index>(triples.size()));
    for (std::size_t r = 0; r < triples.size(); ++r) {
      const Triple& t = triples[r];
      c[r] = psi[t.lo] - 2.0 * psi[t.mid] + psi[t.hi];
      if (!(c[r] > 0.0)) return false;
    }
    return true;
  }

  // g = log sum exp(psi + log_w); p = softmax.
  double constraint(const Eigen::VectorXd& psi, Eigen::VectorXd& p) const {
    p = psi + log_w;
    const double m = p.maxCoeff();
    p = (p.array() - m).exp();
    const double s = p.sum();
    p /= s;
    return m + std::log(s);
  }

  double value(const Eigen::VectorXd& psi, double scale) const {
    Eigen::VectorXd c, p;
    if (!slacks(psi, c)) return kInf;
    const double g = constraint(psi, p);
    if (!(g < 0.0)) return kInf;
    return -scale * psi[x0] - c.array().log().sum() - std::log(-g);
  }
};

}  // namespace

GridFunction log_laplace(const GridFunction& phi, const GridSpec& dual_spec) {
  const GridSpec& xs = phi.spec();
  if (dual_spec.dim() != xs.dim()) fail(ErrorKind::Shape, "log_laplace: dual grid dimension");
  const std::vector<double> logw = detail::log_trapezoid_weights(xs);
  const std::vector<double> table = xs.coordinate_table();
  std::vector<double> base(xs.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    base[i] = phi[i] == kInf ? detail::kExcluded : logw[i] - phi[i];
  }
  const double log_cell = std::log(xs.cell_volume());
  std::vector<double> out(dual_spec.size());
  detail::parallel_for(dual_spec.size(), [&](std::size_t j) {
    thread_local std::vector<double> scratch;
    const std::vector<double> a = dual_spec.point(j);
    const detail::ExpSum s = detail::exp_sum_affine(base, table, a, scratch);
    out[j] = s.max + std::log(s.sum) + log_cell;
  });
  return GridFunction(dual_spec, std::move(out));
}

GridSpec extremal_dual_spec(const GridFunction& phi, std::size_t max_count) {
  if (max_count < 3) fail(ErrorKind::Parameter, "extremal_dual_spec: max_count must be >= 3");
  const auto ranges = slope_range(phi);
  const double d = static_cast<double>(ranges.size());
  const double cap = std::max(3.0, std::floor(std::pow(static_cast<double>(max_count), 1.0 / d) + 1e-9));
  std::vector<Axis> axes;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const double width = phi.spec().axis(k).hi - phi.spec().axis(k).lo;
    const double core = 16.0 / width;
    const double span = ranges[k].second - ranges[k].first + 2.0 * core;
    double delta = std::ldexp(1.0, std::ilogb(0.025 / width));
    while (span / delta + 3.0 > cap) delta *= 2.0;
    // Widen toward 8 / step with whatever room the lattice has left.
    const double room = std::max(0.0, (cap - 3.0) * delta - span);
    const double pad = core + std::min(std::max(0.0, 8.0 / phi.spec().axis(k).step() - core), 0.5 * room);
    const double lo = std::floor((ranges[k].first - pad) / delta) * delta;
    const double hi = std::ceil((ranges[k].second + pad) / delta) * delta;
    axes.push_back({lo, hi, static_cast<std::size_t>(std::llround((hi - lo) / delta)) + 1});
  }
  return GridSpec(std::move(axes));
}

ExtremalResult extremal_function(const GridFunction& phi, const GridSpec& dual_spec) {
  GridFunction logZ = log_laplace(phi, dual_spec);
  GridFunction E = legendre_transform(logZ, phi.spec());
  const double residual = normalization_gap(E, phi);
  return ExtremalResult{std::move(E), std::move(logZ), residual};
}

double extremal_oracle(const GridFunction& phi, std::size_t x0_index, std::size_t iterations) {
  const GridSpec& spec = phi.spec();
  if (iterations < 1) fail(ErrorKind::Parameter, "extremal_oracle: iterations must be >= 1");
  if (x0_index >= spec.size()) fail(ErrorKind::Parameter, "extremal_oracle: x0 index out of range");
  for (double v : phi.values()) {
    if (v == kInf) fail(ErrorKind::Domain, "extremal_oracle: phi must be finite at every node");
  }
  const std::vector<double> w = spec.trapezoid_weights();
  const double log_cell = std::log(spec.cell_volume());
  if (spec.dim() == 0) return phi[0] - std::log(w[0]) - log_cell;

  const auto n = static_cast<Eigen::Index>(spec.size());
  const std::vector<Triple> triples = convexity_triples(spec);
  BarrierProblem prob{triples, Eigen::VectorXd(n), x0_index};
  for (Eigen::Index i = 0; i < n; ++i) prob.log_w[i] = std::log(w[i]) - phi[i] + log_cell;

  // phi - log V - 1 + 0.1 q with q a strictly convex bowl, q <= 1 on the box.
  Eigen::VectorXd psi(n);
  const double log_volume = std::log(spec.volume());
  std::vector<double> x(spec.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    spec.coordinates(static_cast<std::size_t>(i), x);
    double q = 0.0;
    for (std::size_t k = 0; k < spec.dim(); ++k) {
      const Axis& a = spec.axis(k);
      const double u = (2.0 * x[k] - a.lo - a.hi) / (a.hi - a.lo);
      q += u * u;
    }
    psi[i] = phi[i] - log_volume - 1.0 + 0.1 * q / static_cast<double>(spec.dim());
  }
  Eigen::VectorXd c, p;
  if (!prob.slacks(psi, c)) {
    fail(ErrorKind::Input, "extremal_oracle: phi is not discretely convex along grid lines");
  }
  if (!(prob.constraint(psi, p) < 0.0)) fail(ErrorKind::Contract, "extremal_oracle: start is infeasible");

  double best = psi[static_cast<Eigen::Index>(x0_index)];
  const double barrier_count = static_cast<double>(triples.size() + 1);
  double scale = 1.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    prob.slacks(psi, c);
    const double g = prob.constraint(psi, p);
    const Eigen::VectorXd inv = c.cwiseInverse();
    Eigen::VectorXd grad = p / (-g);
    grad[static_cast<Eigen::Index>(x0_index)] -= scale;
    Eigen::MatrixXd H = (p.asDiagonal().toDenseMatrix() - p * p.transpose()) / (-g) +
                        p * p.transpose() / (g * g);
    for (std::size_t r = 0; r < triples.size(); ++r) {
      const Triple& t = triples[r];
      const std::size_t idx[3] = {t.lo, t.mid, t.hi};
      const double coef[3] = {1.0, -2.0, 1.0};
      const double ir = inv[static_cast<Eigen::Index>(r)];
      for (int a = 0; a < 3; ++a) {
        grad[idx[a]] -= coef[a] * ir;
        for (int b = 0; b < 3; ++b) H(idx[a], idx[b]) += coef[a] * coef[b] * ir * ir;
      }
    }
    H.diagonal().array() += 1e-14 * H.diagonal().cwiseAbs().maxCoeff();
    const Eigen::VectorXd step = -H.llt().solve(grad);
    const double decrement = -grad.dot(step);
    if (decrement <= 1e-10) {
      if (barrier_count / scale < 1e-9) break;
      scale *= 10.0;
      continue;
    }
    const double f0 = prob.value(psi, scale);
    double alpha = 1.0;
    Eigen::VectorXd trial = psi + step;
    while (!(prob.value(trial, scale) <= f0 - 0.25 * alpha * decrement) && alpha > 1e-12) {
      alpha *= 0.5;
      trial = psi + alpha * step;
    }
    if (alpha <= 1e-12) {
      scale *= 10.0;
      continue;
    }
    psi = trial;
    best = std::max(best, psi[static_cast<Eigen::Index>(x0_index)]);
  }
  return best;
}

HatPhi hat_phi(const ProductGridFunction& phi, const GridSpec& dual_spec, std::size_t samples,
               std::uint64_t seed) {
  std::vector<GridFunction> slices;
  slices.reserve(phi.t_size());
  for (std::size_t j = 0; j < phi.t_size(); ++j) {
    try {
      slices.push_back(extremal_function(phi.slice(j), dual_spec).E);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "hat_phi: t-slice " << j << ": " << e.what();
      fail(e.kind(), msg.str());
    }
  }
  ProductGridFunction values = ProductGridFunction::from_slices(phi.t_spec(), slices);
  ConvexityReport report = joint_check(values, samples, seed);
  return HatPhi{std::move(values), std::move(report)};
}

}  // namespace convext
