#include "problem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "convext/error.hpp"
#include "convext/integrals.hpp"
#include "convext/transforms.hpp"

namespace convext {
namespace {

using io::json;

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorKind::Input, message);
}

double number(const json& j, const char* key, const std::string& where, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return io::double_from_json(*it, where + "." + key);
}

std::vector<double> vector_of(const json& j, std::size_t dim, const std::string& where) {
  require(j.is_array() && j.size() == dim,
          where + ": expected an array of " + std::to_string(dim) + " numbers");
  std::vector<double> out;
  for (const json& v : j) out.push_back(io::double_from_json(v, where));
  return out;
}

struct Affine {
  std::vector<double> slope;
  double offset;
};

std::vector<Affine> pieces_of(const json& d, std::size_t dim, const std::string& where) {
  auto it = d.find("pieces");
  require(it != d.end() && it->is_array() && !it->empty(), where + ": needs a non-empty \"pieces\" array");
  std::vector<Affine> out;
  for (const json& p : *it) {
    require(p.is_object() && p.contains("slope"), where + ": every piece needs \"slope\"");
    out.push_back({vector_of(p["slope"], dim, where + ".slope"), number(p, "offset", where, 0.0)});
  }
  return out;
}

double dot(const std::vector<double>& a, std::span<const double> z) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * z[k];
  return s;
}

// Values of descriptor `d` at every node of `spec`; `t_dim` leading
// coordinates are t (zero for psi).
std::vector<double> sample_descriptor(const json& d, const GridSpec& spec, std::size_t t_dim,
                                      const std::string& where) {
  require(d.is_object() && d.contains("type") && d["type"].is_string(),
          where + ": descriptor needs a string \"type\"");
  const std::string type = d["type"].get<std::string>();
  const std::size_t dim = spec.dim();
  const std::size_t x_dim = dim - t_dim;

  std::function<double(std::span<const double>)> fn;
  if (type == "zero") {
    fn = [](std::span<const double>) { return 0.0; };
  } else if (type == "gaussian_shift") {
    require(t_dim == 0 || t_dim == 1 || t_dim == x_dim,
            where + ": gaussian_shift needs t of dimension 0, 1 or that of x");
    const double scale = number(d, "scale", where, 1.0);
    const double log_norm = 0.5 * static_cast<double>(x_dim) * std::log(2.0 * std::numbers::pi);
    fn = [=](std::span<const double> z) {
      double s = 0.0;
      for (std::size_t k = 0; k < x_dim; ++k) {
        const double t = t_dim == 0 ? 0.0 : z[t_dim == 1 ? 0 : k];
        const double u = z[t_dim + k] - scale * t;
        s += 0.5 * u * u;
      }
      return s + log_norm;
    };
  } else if (type == "quadratic") {
    require(d.contains("matrix") && d["matrix"].is_array() && d["matrix"].size() == dim,
            where + ": quadratic needs a " + std::to_string(dim) + "x" + std::to_string(dim) + " \"matrix\"");
    std::vector<std::vector<double>> M;
    for (const json& row : d["matrix"]) M.push_back(vector_of(row, dim, where + ".matrix"));
    std::vector<double> lin(dim, 0.0);
    if (d.contains("linear")) lin = vector_of(d["linear"], dim, where + ".linear");
    const double offset = number(d, "offset", where, 0.0);
    fn = [=](std::span<const double> z) {
      double s = offset + dot(lin, z);
      for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = 0; b < dim; ++b) s += 0.5 * z[a] * M[a][b] * z[b];
      }
      return s;
    };
  } else if (type == "max_affine") {
    const auto pieces = pieces_of(d, dim, where);
    fn = [=](std::span<const double> z) {
      double m = -kInf;
      for (const Affine& p : pieces) m = std::max(m, dot(p.slope, z) + p.offset);
      return m;
    };
  } else if (type == "log_sum_exp") {
    const auto pieces = pieces_of(d, dim, where);
    fn = [=](std::span<const double> z) {
      std::vector<double> e;
      for (const Affine& p : pieces) e.push_back(dot(p.slope, z) + p.offset);
      const double m = *std::max_element(e.begin(), e.end());
      double s = 0.0;
      for (double v : e) s += std::exp(v - m);
      return m + std::log(s);
    };
  } else if (type == "sum") {
    require(d.contains("terms") && d["terms"].is_array() && !d["terms"].empty(),
            where + ": sum needs a non-empty \"terms\" array");
    std::vector<double> total(spec.size(), 0.0);
    for (const json& term : d["terms"]) {
      const std::vector<double> v = sample_descriptor(term, spec, t_dim, where + ".terms[]");
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += v[i];
    }
    return total;
  } else if (type == "grid") {
    require(d.contains("values") && d["values"].is_array() && d["values"].size() == spec.size(),
            where + ": grid needs " + std::to_string(spec.size()) + " \"values\"");
    std::vector<double> out;
    for (const json& v : d["values"]) out.push_back(io::double_from_json(v, where + ".values"));
    return out;
  } else {
    fail(ErrorKind::Input, where + ": unknown descriptor type \"" + type + "\"");
  }
  std::vector<double> out(spec.size());
  std::vector<double> z(dim);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    spec.coordinates(i, z);
    out[i] = fn(z);
  }
  return out;
}

}  // namespace

ProblemSpec parse_problem(const json& j) {
  require(j.is_object(), "problem: expected a JSON object");
  for (const char* key : {"t_grid", "x_grid", "phi", "psi"}) {
    require(j.contains(key), std::string("problem: missing field \"") + key + "\"");
  }
  ProblemSpec spec;
  spec.t_grid = io::grid_spec_from_json(j["t_grid"]);
  spec.x_grid = io::grid_spec_from_json(j["x_grid"]);
  spec.phi = j["phi"];
  spec.psi = j["psi"];
  if (j.contains("normalize_phi")) {
    require(j["normalize_phi"].is_boolean(), "problem: normalize_phi must be a boolean");
    spec.normalize_phi = j["normalize_phi"].get<bool>();
  }
  if (j.contains("params")) {
    const json& p = j["params"];
    require(p.is_object(), "params: expected an object");
    RunParams& r = spec.params;
    r.lambda = number(p, "lambda", "params", r.lambda);
    r.dual_step = number(p, "dual_step", "params", r.dual_step);
    r.tol = number(p, "tol", "params", r.tol);
    if (p.contains("dual")) r.dual = io::grid_spec_from_json(p["dual"]);
    for (const char* key : {"max_iter", "seed", "samples"}) {
      if (!p.contains(key)) continue;
      require(p[key].is_number_unsigned(), std::string("params.") + key + " must be a non-negative integer");
    }
    if (p.contains("max_iter")) r.max_iter = p["max_iter"].get<std::size_t>();
    if (p.contains("seed")) r.seed = p["seed"].get<std::uint64_t>();
    if (p.contains("samples")) r.samples = p["samples"].get<std::size_t>();
  }
  return spec;
}

Problem expand(const ProblemSpec& spec) {
  const GridSpec joint = GridSpec::concat(spec.t_grid, spec.x_grid);
  std::vector<double> phi_values = sample_descriptor(spec.phi, joint, spec.t_grid.dim(), "phi");
  ProductGridFunction phi(spec.t_grid, spec.x_grid, std::move(phi_values));
  if (spec.normalize_phi) {
    const GridFunction phi0 = phi.slice(phi.anchor_index());
    const double gap = normalization_gap(GridFunction::constant(spec.x_grid, 0.0), phi0);
    std::vector<double> v(phi.values().begin(), phi.values().end());
    for (double& x : v) x += gap;
    phi = ProductGridFunction(spec.t_grid, spec.x_grid, std::move(v));
  }
  GridFunction psi(spec.x_grid, sample_descriptor(spec.psi, spec.x_grid, 0, "psi"));
  return Problem{std::move(phi), std::move(psi), spec.params};
}

io::json to_json(const RunParams& p) {
  io::json j = {{"lambda", p.lambda}, {"dual_step", p.dual_step}, {"tol", p.tol},
                {"max_iter", p.max_iter}, {"seed", p.seed}, {"samples", p.samples}};
  if (p.dual) j["dual"] = io::to_json(*p.dual);
  return j;
}

GridSpec lattice_dual_spec(const GridFunction& psi, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) fail(ErrorKind::Parameter, "dual_step must be > 0");
  const auto ranges = slope_range(psi);
  std::vector<Axis> axes;
  for (const auto& [smin, smax] : ranges) {
    const double lo = (std::floor(smin / step) - 1.0) * step;
    const double hi = (std::ceil(smax / step) + 1.0) * step;
    axes.push_back({lo, hi, static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1});
  }
  return GridSpec(std::move(axes));
}

}  // namespace convext
