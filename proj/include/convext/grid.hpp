#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "convext/affine.hpp"

namespace convext {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One axis of a tensor grid. Node i sits at lo + i*(hi-lo)/(count-1).
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 2;

  double step() const noexcept { return (hi - lo) / static_cast<double>(count - 1); }
  double coordinate(std::size_t i) const noexcept {
    return lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(count - 1);
  }

  friend bool operator==(const Axis&, const Axis&) = default;
};

/// Tensor grid over a box. Flat indices are row-major with the last axis
/// fastest. A zero-dimensional spec has exactly one node (the origin of R^0)
/// and unit cell volume; it stands in for "no t variables".
class GridSpec {
 public:
  GridSpec() = default;
  explicit GridSpec(std::vector<Axis> axes);

  std::size_t dim() const noexcept { return axes_.size(); }
  const std::vector<Axis>& axes() const noexcept { return axes_; }
  const Axis& axis(std::size_t k) const { return axes_.at(k); }

  std::size_t size() const noexcept { return size_; }
  std::size_t stride(std::size_t k) const { return strides_.at(k); }
  double cell_volume() const noexcept;
  double volume() const noexcept;

  void coordinates(std::size_t flat, std::span<double> out) const;
  std::vector<double> point(std::size_t flat) const;
  std::size_t index_along(std::size_t flat, std::size_t k) const {
    return (flat / strides_[k]) % axes_[k].count;
  }

  bool contains(std::span<const double> p) const;

  /// Product-rule trapezoid weights per node (1/2 per boundary axis).
  std::vector<double> trapezoid_weights() const;
  /// Node coordinates stored dimension-major: coords[k*size() + flat].
  std::vector<double> coordinate_table() const;

  /// Index of the node at the origin, if the grid has one.
  std::optional<std::size_t> origin_index() const;

  static GridSpec concat(const GridSpec& a, const GridSpec& b);

  friend bool operator==(const GridSpec& a, const GridSpec& b) { return a.axes_ == b.axes_; }

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

/// Extended-real function sampled on a grid. Values are finite or +inf
/// (outside the effective domain); never NaN or -inf, never all +inf.
class GridFunction {
 public:
  GridFunction(GridSpec spec, std::vector<double> values);

  static GridFunction sample(const GridSpec& spec,
                             const std::function<double(std::span<const double>)>& fn);
  static GridFunction constant(const GridSpec& spec, double c);

  const GridSpec& spec() const noexcept { return spec_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t flat) const { return values_[flat]; }
  std::size_t size() const noexcept { return values_.size(); }

  double max_finite() const;
  double min_value() const;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

/// Function of (t, x) on the product of a t grid and an x grid; values are
/// t-major, so slice j occupies values[j*x_size, (j+1)*x_size).
class ProductGridFunction {
 public:
  ProductGridFunction(GridSpec t_spec, GridSpec x_spec, std::vector<double> values);

  static ProductGridFunction from_slices(const GridSpec& t_spec,
                                         const std::vector<GridFunction>& slices);
  static ProductGridFunction sample(
      const GridSpec& t_spec, const GridSpec& x_spec,
      const std::function<double(std::span<const double>, std::span<const double>)>& fn);

  const GridSpec& t_spec() const noexcept { return t_spec_; }
  const GridSpec& x_spec() const noexcept { return x_spec_; }
  std::size_t t_size() const noexcept { return t_spec_.size(); }
  std::size_t x_size() const noexcept { return x_spec_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> slice_values(std::size_t t_index) const {
    return std::span<const double>(values_).subspan(t_index * x_size(), x_size());
  }

  GridFunction slice(std::size_t t_index) const;
  /// The same values viewed on the joint (t, x) grid.
  GridFunction joined() const;
  /// Index of the t = 0 slice; Configuration error when the t grid has no
  /// node at the origin.
  std::size_t anchor_index() const;

 private:
  GridSpec t_spec_;
  GridSpec x_spec_;
  std::vector<double> values_;
};

struct ConvexityReport {
  double worst_violation = 0.0;
  /// (p, q, midpoint) coordinates of the worst triple; empty when nothing
  /// violated.
  std::array<std::vector<double>, 3> witness;
  std::size_t checked_count = 0;
};

/// Multilinear interpolation. Throws Domain when the point is outside the
/// box; returns +inf when a node with nonzero weight is +inf.
double eval(const GridFunction& f, std::span<const double> point);

/// Midpoint defect f((p+q)/2) - (f(p)+f(q))/2 maximized over seeded random
/// node pairs with a node midpoint plus every adjacent axis and diagonal
/// triple.
ConvexityReport check_midpoint_convexity(const GridFunction& f, std::size_t samples,
                                         std::uint64_t seed);
ConvexityReport joint_check(const ProductGridFunction& F, std::size_t samples,
                            std::uint64_t seed);

GridFunction shift(const GridFunction& f, double c);
GridFunction add(const GridFunction& f, const GridFunction& g);
GridFunction scale(const GridFunction& f, double s);
/// f(x) - (a.x + b).
GridFunction tilt(const GridFunction& f, const AffineFunction& a);

/// Largest |f - g| over nodes where both are finite; +inf when the finite
/// domains differ.
double sup_distance(const GridFunction& f, const GridFunction& g);

}  // namespace convext
