#pragma once

#include <span>
#include <vector>

namespace convext {

/// x -> slope . x + offset. Used for tilts, mixture atoms and supporting
/// hyperplanes.
struct AffineFunction {
  std::vector<double> slope;
  double offset = 0.0;

  AffineFunction() = default;
  AffineFunction(std::vector<double> slope, double offset);

  std::size_t dim() const noexcept { return slope.size(); }
  double operator()(std::span<const double> x) const;
};

}  // namespace convext
