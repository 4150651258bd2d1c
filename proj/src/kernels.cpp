#include "kernels.hpp"

#include <algorithm>
#include <cmath>

namespace convext::detail {
namespace {

double pairwise_exp_sum(const double* e, std::size_t n, double shift) {
  if (n <= 256) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::exp(e[i] - shift);
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_exp_sum(e, half, shift) + pairwise_exp_sum(e + half, n - half, shift);
}

ExpSum finish(const double* e, std::size_t n) {
  ExpSum out;
  if (n == 0) return out;
  double m = e[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, e[i]);
  out.max = m;
  if (m <= 0.5 * kExcluded) return out;
  out.sum = pairwise_exp_sum(e, n, m);
  return out;
}

}  // namespace

ExpSum exp_sum(std::span<const double> base) { return finish(base.data(), base.size()); }

ExpSum exp_sum_affine(std::span<const double> base, std::span<const double> coords,
                      std::span<const double> point, std::vector<double>& scratch) {
  const std::size_t n = base.size();
  scratch.resize(n);
  double* e = scratch.data();
  const double* b = base.data();
  for (std::size_t i = 0; i < n; ++i) e[i] = b[i];
  for (std::size_t k = 0; k < point.size(); ++k) {
    const double pk = point[k];
    const double* c = coords.data() + k * n;
    for (std::size_t i = 0; i < n; ++i) e[i] += c[i] * pk;
  }
  return finish(e, n);
}

}  // namespace convext::detail
