#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Exponential-sum kernels. kernels.cpp is compiled with relaxed floating-point
// flags so the exp loops vectorize; every input must therefore be finite.
// Cells that must not contribute carry kExcluded.
namespace convext::detail {

inline constexpr double kExcluded = -1e300;

struct ExpSum {
  double max = kExcluded;  // largest exponent
  double sum = 0.0;        // sum of exp(e_i - max)
};

/// Exponents e_i = base[i]; pairwise-summed.
ExpSum exp_sum(std::span<const double> base);

/// Exponents e_i = base[i] + sum_k coords[k*n + i] * point[k], with
/// n = base.size(). `scratch` is resized to n.
ExpSum exp_sum_affine(std::span<const double> base, std::span<const double> coords,
                      std::span<const double> point, std::vector<double>& scratch);

}  // namespace convext::detail
