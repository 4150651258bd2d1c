#include "convext/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convext/error.hpp"
#include "parallel.hpp"

namespace convext {
namespace {

void require_conjugable(const GridFunction& f, const GridSpec& dual_spec) {
  if (dual_spec.dim() != f.spec().dim()) {
    fail(ErrorKind::Shape, "dual grid dimension differs from the primal grid");
  }
}

// Replaces axis k of `u` (shape `shape`, -inf meaning "absent") by the dual
// axis: out(.., y_j, ..) = max_i (x_i * y_j + u(.., x_i, ..)).
std::vector<double> sweep_axis(const std::vector<double>& u, std::vector<std::size_t>& shape,
                               std::size_t k, const Axis& primal, const Axis& dual) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < k; ++a) outer *= shape[a];
  for (std::size_t a = k + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t n = primal.count;
  const std::size_t m = dual.count;

  std::vector<double> xs(n), ys(m);
  for (std::size_t i = 0; i < n; ++i) xs[i] = primal.coordinate(i);
  for (std::size_t j = 0; j < m; ++j) ys[j] = dual.coordinate(j);

  std::vector<double> out(outer * m * inner);
  detail::parallel_for(outer * inner, [&](std::size_t line) {
    const std::size_t o = line / inner;
    const std::size_t in = line % inner;
    // Upper hull of the points (x_i, u_i); x is already ascending.
    std::vector<double> hx, hw;
    hx.reserve(n);
    hw.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = u[(o * n + i) * inner + in];
      if (w == -kInf) continue;
      while (hx.size() >= 2) {
        const std::size_t b = hx.size() - 1, a = b - 1;
        const double cross = (hx[b] - hx[a]) * (w - hw[a]) - (hw[b] - hw[a]) * (xs[i] - hx[a]);
        if (cross < 0.0) break;
        hx.pop_back();
        hw.pop_back();
      }
      hx.push_back(xs[i]);
      hw.push_back(w);
    }
    double* dst = out.data() + o * m * inner + in;
    if (hx.empty()) {
      for (std::size_t j = 0; j < m; ++j) dst[j * inner] = -kInf;
      return;
    }
    // The maximizing hull vertex moves right as y increases.
    std::size_t p = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double y = ys[j];
      while (p + 1 < hx.size() && hx[p + 1] * y + hw[p + 1] > hx[p] * y + hw[p]) ++p;
      dst[j * inner] = hx[p] * y + hw[p];
    }
  });
  shape[k] = m;
  return out;
}

}  // namespace

GridFunction legendre_transform(const GridFunction& f, const GridSpec& dual_spec) {
  require_conjugable(f, dual_spec);
  const GridSpec& spec = f.spec();
  std::vector<double> u(f.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = f[i] == kInf ? -kInf : -f[i];

  std::vector<std::size_t> shape(spec.dim());
  for (std::size_t k = 0; k < spec.dim(); ++k) shape[k] = spec.axis(k).count;
  for (std::size_t k = 0; k < spec.dim(); ++k) {
    u = sweep_axis(u, shape, k, spec.axis(k), dual_spec.axis(k));
  }
  return GridFunction(dual_spec, std::move(u));
}

GridFunction legendre_transform_direct(const GridFunction& f, const GridSpec& dual_spec) {
  require_conjugable(f, dual_spec);
  const GridSpec& spec = f.spec();
  const std::size_t d = spec.dim();
  const std::size_t n = spec.size();
  const std::vector<double> xs = spec.coordinate_table();
  std::vector<double> g(dual_spec.size());
  detail::parallel_for(dual_spec.size(), [&](std::size_t j) {
    const std::vector<double> xi = dual_spec.point(j);
    double best = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (f[i] == kInf) continue;
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += xs[k * n + i] * xi[k];
      best = std::max(best, dot - f[i]);
    }
    g[j] = best;
  });
  return GridFunction(dual_spec, std::move(g));
}

std::vector<std::pair<double, double>> slope_range(const GridFunction& f) {
  const GridSpec& spec = f.spec();
  std::vector<std::pair<double, double>> ranges;
  for (std::size_t k = 0; k < spec.dim(); ++k) {
    const double h = spec.axis(k).step();
    const std::size_t stride = spec.stride(k);
    double lo = kInf, hi = -kInf;
    for (std::size_t flat = 0; flat < spec.size(); ++flat) {
      if (spec.index_along(flat, k) + 1 == spec.axis(k).count) continue;
      const double a = f[flat], b = f[flat + stride];
      if (a == kInf || b == kInf) continue;
      const double q = (b - a) / h;
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    if (lo > hi) {
      std::ostringstream msg;
      msg << "slope_range: axis " << k << " has fewer than 2 adjacent finite nodes";
      fail(ErrorKind::Domain, msg.str());
    }
    ranges.emplace_back(lo, hi);
  }
  return ranges;
}

GridSpec envelope_dual_spec(const GridFunction& f) {
  const auto ranges = slope_range(f);
  const GridSpec& spec = f.spec();
  std::vector<Axis> axes;
  for (std::size_t k = 0; k < spec.dim(); ++k) {
    const auto [smin, smax] = ranges[k];
    const Axis& a = spec.axis(k);
    const double floor_step =
        std::ldexp(1.0, -40) * std::max({1.0, std::abs(smin), std::abs(smax)});
    const double raw = std::max((smax - smin) * a.step() / (a.hi - a.lo), floor_step);
    const double delta = std::ldexp(1.0, std::ilogb(raw));
    const double lo = (std::floor(smin / delta) - 1.0) * delta;
    const double hi = (std::ceil(smax / delta) + 1.0) * delta;
    const auto count = static_cast<std::size_t>(std::llround((hi - lo) / delta)) + 1;
    axes.push_back({lo, hi, count});
  }
  return GridSpec(std::move(axes));
}

GridFunction biconjugate(const GridFunction& f, const GridSpec& dual_spec) {
  return legendre_transform(legendre_transform(f, dual_spec), f.spec());
}

GridFunction biconjugate(const GridFunction& f) { return biconjugate(f, envelope_dual_spec(f)); }

}  // namespace convext
