#include "convext/convext.h"

#include <cstring>
#include <iostream>
#include <string>

#include "commands.hpp"
#include "convext/error.hpp"
#include "convext/extremal.hpp"
#include "convext/integrals.hpp"
#include "convext/transforms.hpp"
#include "convext/version.hpp"
#include "io.hpp"

struct convext_grid_function {
  convext::GridFunction f;
};

namespace {

using convext::ErrorKind;

thread_local std::string last_error;

convext_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return CONVEXT_ERR_DOMAIN;
    case ErrorKind::Shape: return CONVEXT_ERR_SHAPE;
    case ErrorKind::Configuration: return CONVEXT_ERR_CONFIGURATION;
    case ErrorKind::Parameter: return CONVEXT_ERR_PARAMETER;
    case ErrorKind::Contract: return CONVEXT_ERR_CONTRACT;
    case ErrorKind::Input: return CONVEXT_ERR_INPUT;
    case ErrorKind::Io: return CONVEXT_ERR_IO;
  }
  return CONVEXT_ERR_INTERNAL;
}

template <class Body>
convext_status guarded(Body&& body) {
  last_error.clear();
  try {
    body();
    return CONVEXT_OK;
  } catch (const convext::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    last_error = e.what();
    return CONVEXT_ERR_INTERNAL;
  }
}

void require_arg(bool ok, const char* what) {
  if (!ok) convext::fail(ErrorKind::Parameter, std::string("null or invalid argument: ") + what);
}

convext::GridSpec spec_of(const convext_axis* axes, size_t dim) {
  std::vector<convext::Axis> out;
  for (size_t k = 0; k < dim; ++k) out.push_back({axes[k].lo, axes[k].hi, axes[k].count});
  return convext::GridSpec(std::move(out));
}

convext_grid_function* wrap(convext::GridFunction f) { return new convext_grid_function{std::move(f)}; }

convext::Overrides overrides_of(const convext_overrides* o) {
  convext::Overrides out;
  if (o == nullptr) return out;
  if (o->has_lambda) out.lambda = o->lambda;
  if (o->has_tol) out.tol = o->tol;
  if (o->has_max_iter) out.max_iter = o->max_iter;
  if (o->has_seed) out.seed = o->seed;
  for (size_t k = 0; o->dual_axes != nullptr && k < o->dual_dim; ++k) {
    out.dual.push_back({o->dual_axes[k].lo, o->dual_axes[k].hi, o->dual_axes[k].count});
  }
  out.oracle_iterations = o->oracle_iterations;
  return out;
}

template <class Cmd>
int run_command(Cmd&& cmd) {
  last_error.clear();
  try {
    return cmd();
  } catch (const std::exception& e) {
    last_error = e.what();
    std::cerr << "error: " << e.what() << "\n";
    return convext::kExitInput;
  }
}

}  // namespace

extern "C" {

const char* convext_version(void) { return convext::kVersion; }

const char* convext_last_error(void) { return last_error.c_str(); }

convext_status convext_grid_function_create(const convext_axis* axes, size_t dim, const double* values,
                                            size_t count, convext_grid_function** out) {
  return guarded([&] {
    require_arg(out != nullptr && (axes != nullptr || dim == 0) && values != nullptr, "create");
    *out = wrap(convext::GridFunction(spec_of(axes, dim), std::vector<double>(values, values + count)));
  });
}

convext_status convext_grid_function_from_json(const char* text, convext_grid_function** out) {
  return guarded([&] {
    require_arg(text != nullptr && out != nullptr, "from_json");
    *out = wrap(convext::io::grid_function_from_json(convext::io::parse_json(text, "<string>")));
  });
}

convext_status convext_grid_function_load(const char* path, convext_grid_function** out) {
  return guarded([&] {
    require_arg(path != nullptr && out != nullptr, "load");
    *out = wrap(convext::io::grid_function_from_json(convext::io::load_json(path)));
  });
}

convext_status convext_grid_function_to_json(const convext_grid_function* f, char** out) {
  return guarded([&] {
    require_arg(f != nullptr && out != nullptr, "to_json");
    const std::string s = convext::io::to_json(f->f).dump();
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
  });
}

void convext_grid_function_free(convext_grid_function* f) { delete f; }

void convext_string_free(char* s) { delete[] s; }

size_t convext_grid_function_dim(const convext_grid_function* f) { return f ? f->f.spec().dim() : 0; }

size_t convext_grid_function_size(const convext_grid_function* f) { return f ? f->f.size() : 0; }

convext_status convext_grid_function_values(const convext_grid_function* f, double* out, size_t count) {
  return guarded([&] {
    require_arg(f != nullptr && out != nullptr, "values");
    if (count != f->f.size()) convext::fail(ErrorKind::Shape, "values: buffer length differs from the grid size");
    std::copy(f->f.values().begin(), f->f.values().end(), out);
  });
}

convext_status convext_grid_function_eval(const convext_grid_function* f, const double* point, size_t dim,
                                          double* out) {
  return guarded([&] {
    require_arg(f != nullptr && out != nullptr && (point != nullptr || dim == 0), "eval");
    if (dim != f->f.spec().dim()) convext::fail(ErrorKind::Shape, "eval: point dimension differs from the grid");
    *out = convext::eval(f->f, std::span<const double>(point, dim));
  });
}

convext_status convext_log_integral(const convext_grid_function* g, double* value, double* underflow_fraction) {
  return guarded([&] {
    require_arg(g != nullptr && value != nullptr, "log_integral");
    const convext::LogIntegralResult r = convext::log_integral(g->f);
    *value = r.value;
    if (underflow_fraction != nullptr) *underflow_fraction = r.underflow_fraction;
  });
}

convext_status convext_legendre(const convext_grid_function* f, const convext_axis* dual_axes, size_t dual_dim,
                                convext_grid_function** out) {
  return guarded([&] {
    require_arg(f != nullptr && out != nullptr, "legendre");
    const convext::GridSpec dual =
        dual_axes != nullptr ? spec_of(dual_axes, dual_dim) : convext::envelope_dual_spec(f->f);
    *out = wrap(convext::legendre_transform(f->f, dual));
  });
}

convext_status convext_biconjugate(const convext_grid_function* f, convext_grid_function** out) {
  return guarded([&] {
    require_arg(f != nullptr && out != nullptr, "biconjugate");
    *out = wrap(convext::biconjugate(f->f));
  });
}

convext_status convext_convexity(const convext_grid_function* f, size_t samples, uint64_t seed,
                                 double* worst_violation) {
  return guarded([&] {
    require_arg(f != nullptr && worst_violation != nullptr, "convexity");
    *worst_violation = convext::check_midpoint_convexity(f->f, samples, seed).worst_violation;
  });
}

convext_status convext_extremal(const convext_grid_function* phi, const convext_axis* dual_axes, size_t dual_dim,
                                convext_grid_function** E, double* feasibility_residual) {
  return guarded([&] {
    require_arg(phi != nullptr && E != nullptr, "extremal");
    const convext::GridSpec dual =
        dual_axes != nullptr ? spec_of(dual_axes, dual_dim) : convext::extremal_dual_spec(phi->f);
    convext::ExtremalResult r = convext::extremal_function(phi->f, dual);
    if (feasibility_residual != nullptr) *feasibility_residual = r.feasibility_residual;
    *E = wrap(std::move(r.E));
  });
}

convext_status convext_extremal_oracle(const convext_grid_function* phi, size_t x0_index, size_t iterations,
                                       double* value) {
  return guarded([&] {
    require_arg(phi != nullptr && value != nullptr, "extremal_oracle");
    *value = convext::extremal_oracle(phi->f, x0_index, iterations);
  });
}

int convext_cmd_extend(const char* problem_path, const char* out_dir, const convext_overrides* overrides) {
  return run_command([&] {
    require_arg(problem_path != nullptr && out_dir != nullptr, "extend");
    return convext::cmd_extend(problem_path, out_dir, overrides_of(overrides), std::cout, std::cerr);
  });
}

int convext_cmd_prekopa(const char* problem_path, const char* out_dir, const convext_overrides* overrides) {
  return run_command([&] {
    require_arg(problem_path != nullptr && out_dir != nullptr, "prekopa");
    return convext::cmd_prekopa(problem_path, out_dir, overrides_of(overrides), std::cout, std::cerr);
  });
}

int convext_cmd_legendre(const char* function_path, const char* out_dir, const convext_overrides* overrides) {
  return run_command([&] {
    require_arg(function_path != nullptr && out_dir != nullptr, "legendre");
    return convext::cmd_legendre(function_path, out_dir, overrides_of(overrides), std::cout, std::cerr);
  });
}

int convext_cmd_extremal(const char* function_path, const char* out_dir, const convext_overrides* overrides) {
  return run_command([&] {
    require_arg(function_path != nullptr && out_dir != nullptr, "extremal");
    return convext::cmd_extremal(function_path, out_dir, overrides_of(overrides), std::cout, std::cerr);
  });
}

int convext_cmd_verify(const char* report_path, const char* out_dir) {
  return run_command([&] {
    require_arg(report_path != nullptr, "verify");
    return convext::cmd_verify(report_path, out_dir != nullptr ? out_dir : "", std::cout, std::cerr);
  });
}

}  // extern "C"
