#include "convext/grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "convext/error.hpp"
#include "lattice.hpp"

namespace convext {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Contract: return "contract violation";
    case ErrorKind::Input: return "input error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

AffineFunction::AffineFunction(std::vector<double> s, double b) : slope(std::move(s)), offset(b) {
  for (double v : slope) {
    if (!std::isfinite(v)) fail(ErrorKind::Domain, "affine slope must be finite");
  }
  if (!std::isfinite(offset)) fail(ErrorKind::Domain, "affine offset must be finite");
}

double AffineFunction::operator()(std::span<const double> x) const {
  if (x.size() != slope.size()) fail(ErrorKind::Shape, "affine function dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += slope[k] * x[k];
  return acc + offset;
}

GridSpec::GridSpec(std::vector<Axis> axes) : axes_(std::move(axes)) {
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const Axis& a = axes_[k];
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || !(a.lo < a.hi)) {
      std::ostringstream msg;
      msg << "axis " << k << ": need finite lo < hi (got " << a.lo << ", " << a.hi << ")";
      fail(ErrorKind::Domain, msg.str());
    }
    if (a.count < 2) {
      std::ostringstream msg;
      msg << "axis " << k << ": count must be >= 2 (got " << a.count << ")";
      fail(ErrorKind::Domain, msg.str());
    }
  }
  strides_.assign(axes_.size(), 1);
  size_ = 1;
  for (std::size_t k = axes_.size(); k-- > 0;) {
    strides_[k] = size_;
    size_ *= axes_[k].count;
  }
}

double GridSpec::cell_volume() const noexcept {
  double v = 1.0;
  for (const Axis& a : axes_) v *= a.step();
  return v;
}

double GridSpec::volume() const noexcept {
  double v = 1.0;
  for (const Axis& a : axes_) v *= a.hi - a.lo;
  return v;
}

void GridSpec::coordinates(std::size_t flat, std::span<double> out) const {
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    out[k] = axes_[k].coordinate(index_along(flat, k));
  }
}

std::vector<double> GridSpec::point(std::size_t flat) const {
  std::vector<double> p(axes_.size());
  coordinates(flat, p);
  return p;
}

bool GridSpec::contains(std::span<const double> p) const {
  if (p.size() != axes_.size()) return false;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const double slack = 1e-12 * (axes_[k].hi - axes_[k].lo);
    if (!(p[k] >= axes_[k].lo - slack && p[k] <= axes_[k].hi + slack)) return false;
  }
  return true;
}

std::vector<double> GridSpec::trapezoid_weights() const {
  std::vector<double> w(size_, 1.0);
  for (std::size_t flat = 0; flat < size_; ++flat) {
    for (std::size_t k = 0; k < axes_.size(); ++k) {
      const std::size_t i = index_along(flat, k);
      if (i == 0 || i + 1 == axes_[k].count) w[flat] *= 0.5;
    }
  }
  return w;
}

std::vector<double> GridSpec::coordinate_table() const {
  std::vector<double> table(axes_.size() * size_);
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    for (std::size_t flat = 0; flat < size_; ++flat) {
      table[k * size_ + flat] = axes_[k].coordinate(index_along(flat, k));
    }
  }
  return table;
}

std::optional<std::size_t> GridSpec::origin_index() const {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const Axis& a = axes_[k];
    const double tol = 1e-9 * (a.hi - a.lo);
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < a.count; ++i) {
      if (std::abs(a.coordinate(i)) <= tol) {
        hit = i;
        break;
      }
    }
    if (!hit) return std::nullopt;
    flat += *hit * strides_[k];
  }
  return flat;
}

GridSpec GridSpec::concat(const GridSpec& a, const GridSpec& b) {
  std::vector<Axis> axes = a.axes_;
  axes.insert(axes.end(), b.axes_.begin(), b.axes_.end());
  return GridSpec(std::move(axes));
}

namespace {

void validate_values(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (std::isnan(v)) fail(ErrorKind::Domain, std::string(what) + " contains NaN");
    if (v == -kInf) fail(ErrorKind::Domain, std::string(what) + " contains -inf");
  }
}

bool any_finite(std::span<const double> values) {
  return std::any_of(values.begin(), values.end(), [](double v) { return v < kInf; });
}

}  // namespace

GridFunction::GridFunction(GridSpec spec, std::vector<double> values)
    : spec_(std::move(spec)), values_(std::move(values)) {
  if (values_.size() != spec_.size()) {
    std::ostringstream msg;
    msg << "grid function has " << values_.size() << " values, grid has " << spec_.size()
        << " nodes";
    fail(ErrorKind::Shape, msg.str());
  }
  validate_values(values_, "grid function");
  if (!any_finite(values_)) fail(ErrorKind::Domain, "grid function is +inf everywhere");
}

GridFunction GridFunction::sample(const GridSpec& spec,
                                  const std::function<double(std::span<const double>)>& fn) {
  std::vector<double> values(spec.size());
  std::vector<double> p(spec.dim());
  for (std::size_t flat = 0; flat < spec.size(); ++flat) {
    spec.coordinates(flat, p);
    values[flat] = fn(p);
  }
  return GridFunction(spec, std::move(values));
}

GridFunction GridFunction::constant(const GridSpec& spec, double c) {
  return GridFunction(spec, std::vector<double>(spec.size(), c));
}

double GridFunction::max_finite() const {
  double m = -kInf;
  for (double v : values_) {
    if (v < kInf) m = std::max(m, v);
  }
  return m;
}

double GridFunction::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}

ProductGridFunction::ProductGridFunction(GridSpec t_spec, GridSpec x_spec, std::vector<double> values)
    : t_spec_(std::move(t_spec)), x_spec_(std::move(x_spec)), values_(std::move(values)) {
  if (values_.size() != t_spec_.size() * x_spec_.size()) {
    fail(ErrorKind::Shape, "product grid function size does not match t_spec x x_spec");
  }
  validate_values(values_, "product grid function");
  for (std::size_t j = 0; j < t_size(); ++j) {
    if (!any_finite(slice_values(j))) {
      fail(ErrorKind::Domain, "t-slice " + std::to_string(j) + " is +inf everywhere");
    }
  }
}

ProductGridFunction ProductGridFunction::from_slices(const GridSpec& t_spec,
                                                     const std::vector<GridFunction>& slices) {
  if (slices.size() != t_spec.size()) fail(ErrorKind::Shape, "need one slice per t node");
  if (slices.empty()) fail(ErrorKind::Shape, "no slices");
  const GridSpec& x_spec = slices.front().spec();
  std::vector<double> values;
  values.reserve(t_spec.size() * x_spec.size());
  for (const GridFunction& s : slices) {
    if (!(s.spec() == x_spec)) fail(ErrorKind::Shape, "slices live on different x grids");
    values.insert(values.end(), s.values().begin(), s.values().end());
  }
  return ProductGridFunction(t_spec, x_spec, std::move(values));
}

ProductGridFunction ProductGridFunction::sample(
    const GridSpec& t_spec, const GridSpec& x_spec,
    const std::function<double(std::span<const double>, std::span<const double>)>& fn) {
  std::vector<double> values(t_spec.size() * x_spec.size());
  std::vector<double> t(t_spec.dim()), x(x_spec.dim());
  for (std::size_t j = 0; j < t_spec.size(); ++j) {
    t_spec.coordinates(j, t);
    for (std::size_t i = 0; i < x_spec.size(); ++i) {
      x_spec.coordinates(i, x);
      values[j * x_spec.size() + i] = fn(t, x);
    }
  }
  return ProductGridFunction(t_spec, x_spec, std::move(values));
}

GridFunction ProductGridFunction::slice(std::size_t t_index) const {
  if (t_index >= t_size()) fail(ErrorKind::Domain, "t index out of range");
  auto s = slice_values(t_index);
  return GridFunction(x_spec_, std::vector<double>(s.begin(), s.end()));
}

GridFunction ProductGridFunction::joined() const {
  return GridFunction(GridSpec::concat(t_spec_, x_spec_), values_);
}

std::size_t ProductGridFunction::anchor_index() const {
  auto idx = t_spec_.origin_index();
  if (!idx) fail(ErrorKind::Configuration, "t grid has no node at t = 0");
  return *idx;
}

double eval(const GridFunction& f, std::span<const double> point) {
  const GridSpec& spec = f.spec();
  if (point.size() != spec.dim()) fail(ErrorKind::Shape, "evaluation point dimension differs from the grid");
  if (!spec.contains(point)) fail(ErrorKind::Domain, "evaluation point outside the grid box");
  const std::size_t d = spec.dim();
  if (d == 0) return f[0];

  std::vector<std::size_t> base(d);
  std::vector<double> frac(d);
  for (std::size_t k = 0; k < d; ++k) {
    const Axis& a = spec.axis(k);
    const double n1 = static_cast<double>(a.count - 1);
    double u = std::clamp((point[k] - a.lo) / (a.hi - a.lo) * n1, 0.0, n1);
    const double r = std::round(u);
    if (std::abs(u - r) < 1e-9) u = r;
    auto i0 = static_cast<std::size_t>(std::floor(u));
    if (i0 + 1 >= a.count) i0 = a.count - 2;
    base[k] = i0;
    frac[k] = u - static_cast<double>(i0);
  }

  // Gather the corners, then lerp one axis at a time so constant data stays exact.
  const std::size_t corners = std::size_t{1} << d;
  std::vector<double> v(corners);
  for (std::size_t corner = 0; corner < corners; ++corner) {
    bool weighted = true;
    std::size_t flat = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const bool upper = (corner >> k) & 1U;
      if (upper ? frac[k] == 0.0 : frac[k] == 1.0) weighted = false;
      flat += (base[k] + (upper ? 1 : 0)) * spec.stride(k);
    }
    v[corner] = f[flat];
    if (v[corner] == kInf) {
      if (weighted) return kInf;
      v[corner] = 0.0;
    }
  }
  for (std::size_t k = 0, width = corners; k < d; ++k) {
    width >>= 1;
    for (std::size_t c = 0; c < width; ++c) {
      const double a = v[2 * c], b = v[2 * c + 1];
      v[c] = frac[k] == 0.0 ? a : frac[k] == 1.0 ? b : a + frac[k] * (b - a);
    }
  }
  return v[0];
}

namespace detail {

std::vector<std::vector<int>> half_directions(std::size_t d) {
  std::vector<std::vector<int>> dirs;
  std::vector<int> v(d, -1);
  while (true) {
    auto first = std::find_if(v.begin(), v.end(), [](int c) { return c != 0; });
    if (first != v.end() && *first == 1) dirs.push_back(v);
    std::size_t k = 0;
    while (k < d && v[k] == 1) v[k++] = -1;
    if (k == d) break;
    ++v[k];
  }
  return dirs;
}

}  // namespace detail

namespace {

// Half of the nonzero directions in {-1,0,1}^d: first nonzero entry is +1.
struct DefectTracker {
  const GridFunction& f;
  ConvexityReport report;

  void consider(std::size_t p, std::size_t q, std::size_t mid) {
    ++report.checked_count;
    const double fm = f[mid];
    const double defect = fm == kInf ? kInf : fm - 0.5 * (f[p] + f[q]);
    if (defect > report.worst_violation) {
      report.worst_violation = defect;
      const GridSpec& s = f.spec();
      report.witness = {s.point(p), s.point(q), s.point(mid)};
    }
  }
};

}  // namespace

ConvexityReport check_midpoint_convexity(const GridFunction& f, std::size_t samples,
                                         std::uint64_t seed) {
  if (samples < 1) fail(ErrorKind::Parameter, "samples must be >= 1");
  const GridSpec& spec = f.spec();
  const std::size_t d = spec.dim();
  DefectTracker tracker{f, {}};
  if (d == 0) return tracker.report;

  // Exhaustive pass over adjacent triples along axis and diagonal directions.
  std::vector<std::size_t> idx(d);
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
      const std::size_t p = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(mid) - offset);
      const std::size_t q = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(mid) + offset);
      if (f[p] == kInf || f[q] == kInf) continue;
      tracker.consider(p, q, mid);
    }
  }

  // Random pairs whose index difference is even on every axis, so the
  // midpoint is itself a node and no interpolation enters the defect.
  std::vector<std::size_t> finite;
  for (std::size_t flat = 0; flat < spec.size(); ++flat) {
    if (f[flat] < kInf) finite.push_back(flat);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, finite.size() - 1);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t p = finite[pick(rng)];
    std::size_t q = 0;
    std::size_t mid = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t ip = spec.index_along(p, k);
      const std::size_t parity = ip % 2;
      const std::size_t slots = (spec.axis(k).count - 1 - parity) / 2;
      std::uniform_int_distribution<std::size_t> step(0, slots);
      const std::size_t iq = parity + 2 * step(rng);
      q += iq * spec.stride(k);
      mid += ((ip + iq) / 2) * spec.stride(k);
    }
    if (f[q] == kInf) continue;
    tracker.consider(p, q, mid);
  }
  return tracker.report;
}

ConvexityReport joint_check(const ProductGridFunction& F, std::size_t samples, std::uint64_t seed) {
  return check_midpoint_convexity(F.joined(), samples, seed);
}

GridFunction shift(const GridFunction& f, double c) {
  if (!std::isfinite(c)) fail(ErrorKind::Domain, "shift constant must be finite");
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x += c;
  return GridFunction(f.spec(), std::move(v));
}

GridFunction add(const GridFunction& f, const GridFunction& g) {
  if (!(f.spec() == g.spec())) fail(ErrorKind::Shape, "add: grid specs differ");
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] + g[i];
  return GridFunction(f.spec(), std::move(v));
}

GridFunction scale(const GridFunction& f, double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) fail(ErrorKind::Parameter, "scale factor must be finite and >= 0");
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = s == 0.0 ? 0.0 : s * f[i];
  return GridFunction(f.spec(), std::move(v));
}

GridFunction tilt(const GridFunction& f, const AffineFunction& a) {
  const GridSpec& spec = f.spec();
  if (a.dim() != spec.dim()) fail(ErrorKind::Shape, "tilt: slope dimension differs from grid");
  std::vector<double> v(f.size());
  std::vector<double> p(spec.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    spec.coordinates(i, p);
    v[i] = f[i] - a(p);
  }
  return GridFunction(spec, std::move(v));
}

double sup_distance(const GridFunction& f, const GridFunction& g) {
  if (!(f.spec() == g.spec())) fail(ErrorKind::Shape, "sup_distance: grid specs differ");
  double d = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const bool fi = f[i] < kInf, gi = g[i] < kInf;
    if (fi != gi) return kInf;
    if (fi) d = std::max(d, std::abs(f[i] - g[i]));
  }
  return d;
}

}  // namespace convext
