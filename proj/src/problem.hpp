#pragma once

#include <cstdint>
#include <optional>

#include "convext/grid.hpp"
#include "io.hpp"

namespace convext {

struct RunParams {
  double lambda = 20.0;
  std::optional<GridSpec> dual;  // default: the slope range of psi on a dual_step lattice
  double dual_step = 0.05;
  double tol = 1e-9;
  std::size_t max_iter = 200;
  std::uint64_t seed = 0;
  std::size_t samples = 1000;
};

/// Problem file contents before expansion onto grids.
struct ProblemSpec {
  GridSpec t_grid;
  GridSpec x_grid;
  io::json phi;  // descriptor over (t, x)
  io::json psi;  // descriptor over x
  bool normalize_phi = false;
  RunParams params;
};

struct Problem {
  ProductGridFunction phi;
  GridFunction psi;
  RunParams params;
};

ProblemSpec parse_problem(const io::json& j);
/// Samples the descriptors; with normalize_phi, phi is shifted so that
/// integral exp(-phi(0, .)) = 1.
Problem expand(const ProblemSpec& spec);

io::json to_json(const RunParams& p);

/// Slope range of psi padded by one step on each side of a `step` lattice.
GridSpec lattice_dual_spec(const GridFunction& psi, double step);

}  // namespace convext
