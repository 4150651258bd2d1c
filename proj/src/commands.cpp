#include "commands.hpp"

#include <Eigen/Core>
#include <chrono>
#include <ostream>

#include "convext/error.hpp"
#include "convext/extension.hpp"
#include "convext/extremal.hpp"
#include "convext/integrals.hpp"
#include "convext/transforms.hpp"
#include "convext/version.hpp"
#include "io.hpp"
#include "problem.hpp"

namespace convext {
namespace {

namespace fs = std::filesystem;
using io::json;
using Clock = std::chrono::steady_clock;

// One command invocation: input hash, outputs, and the manifest written last.
class Run {
 public:
  Run(std::string command, fs::path out) : command_(std::move(command)), out_(std::move(out)) {}

  std::string load_input(const fs::path& path) {
    std::string text = io::read_file(path);
    input_path_ = path.string();
    input_hash_ = io::sha256_hex(text);
    return text;
  }

  void write(const std::string& name, const std::string& contents) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + out_.string() + ": " + ec.message());
    io::write_atomic(out_ / name, contents);
    outputs_.push_back(name);
  }

  void finish(const json& params, int exit_code) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + out_.string() + ": " + ec.message());
    const double wall = std::chrono::duration<double>(Clock::now() - start_).count();
    json versions = {
        {"convext", kVersion},
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    json manifest = {{"command", command_},
                     {"input", {{"path", input_path_}, {"sha256", input_hash_}}},
                     {"params", params},
                     {"versions", versions},
                     {"wall_time_seconds", wall},
                     {"exit_code", exit_code},
                     {"outputs", outputs_}};
    io::write_atomic(out_ / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path out_;
  std::string input_path_;
  std::string input_hash_;
  std::vector<std::string> outputs_;
  Clock::time_point start_ = Clock::now();
};

template <class Body>
int guarded(Run& run, const char* command, std::ostream& err, Body&& body) {
  int code = kExitInput;
  std::string message;
  try {
    return body();
  } catch (const Error& e) {
    message = std::string(to_string(e.kind())) + ": " + e.what();
    code = e.kind() == ErrorKind::Contract ? kExitConstraint : kExitInput;
  } catch (const std::exception& e) {
    message = std::string("error: ") + e.what();
  }
  err << command << ": " << message << "\n";
  try {
    run.finish({{"error", message}}, code);
  } catch (const std::exception& e) {
    err << command << ": manifest not written: " << e.what() << "\n";
  }
  return code;
}

void apply(const Overrides& o, RunParams& p) {
  if (o.lambda) p.lambda = *o.lambda;
  if (o.tol) p.tol = *o.tol;
  if (o.max_iter) p.max_iter = *o.max_iter;
  if (o.seed) p.seed = *o.seed;
  if (!o.dual.empty()) p.dual = GridSpec(o.dual);
}

std::vector<std::string> coordinate_header(const char* name, std::size_t dim) {
  if (dim <= 1) return {name};
  std::vector<std::string> out;
  for (std::size_t k = 0; k < dim; ++k) out.push_back(std::string(name) + "_" + std::to_string(k));
  return out;
}

std::vector<std::string> coordinate_cells(const GridSpec& spec, std::size_t flat) {
  if (spec.dim() == 0) return {"0"};
  std::vector<std::string> out;
  for (double v : spec.point(flat)) out.push_back(io::format_double(v));
  return out;
}

std::string residual_csv(const GridSpec& t_spec, const std::vector<double>& residuals) {
  std::vector<std::string> header = {"t_index"};
  for (auto& h : coordinate_header("t_value", t_spec.dim())) header.push_back(h);
  header.push_back("residual_nats");
  io::CsvWriter csv(header);
  for (std::size_t j = 0; j < residuals.size(); ++j) {
    std::vector<std::string> row = {std::to_string(j)};
    for (auto& c : coordinate_cells(t_spec, j)) row.push_back(c);
    row.push_back(io::format_double(residuals[j]));
    csv.row(row);
  }
  return csv.str();
}

std::string trace_csv(const ExtensionReport& r) {
  io::CsvWriter csv({"k", "log_A", "theoretical"});
  if (r.trace) {
    for (std::size_t k = 0; k < r.trace->log_A.size(); ++k) {
      csv.row({std::to_string(k), io::format_double(r.trace->log_A[k]),
               io::format_double(r.trace->theoretical[k])});
    }
  } else {
    csv.row({"0", io::format_double(r.max_residual), io::format_double(r.max_residual)});
  }
  return csv.str();
}

Problem load_problem(Run& run, const fs::path& path, const Overrides& o) {
  const std::string text = run.load_input(path);
  Problem p = expand(parse_problem(io::parse_json(text, path.string())));
  apply(o, p.params);
  return p;
}

GridSpec dual_for(const Overrides& o, const GridFunction& f) {
  if (!o.dual.empty()) return GridSpec(o.dual);
  return envelope_dual_spec(f);
}

}  // namespace

int cmd_extend(const fs::path& problem, const fs::path& out, const Overrides& o, std::ostream& log,
               std::ostream& err) {
  Run run("extend", out);
  return guarded(run, "extend", err, [&] {
    Problem p = load_problem(run, problem, o);
    const RunParams& prm = p.params;
    SofteningParams soft{prm.lambda, GridSpec()};
    if (p.phi.t_spec().dim() > 0) {
      soft.dual_spec = prm.dual ? *prm.dual : lattice_dual_spec(p.psi, prm.dual_step);
    }
    const ReportOptions opts{true, prm.samples, prm.seed};
    const ExtensionReport r = extend_convex(p.psi, p.phi, soft, prm.tol, prm.max_iter, opts);

    const bool converged = !r.trace || r.trace->converged;
    const double joint = r.joint_convexity.worst_violation;
    const bool pass = converged && r.max_residual <= prm.tol && joint <= kConvexityTolerance;

    json params = to_json(prm);
    if (soft.dual_spec.dim() > 0) params["dual"] = io::to_json(soft.dual_spec);
    json report = {{"Psi", io::to_json(r.Psi)},
                   {"phi", io::to_json(p.phi)},
                   {"psi", io::to_json(p.psi)},
                   {"residuals", r.residuals},
                   {"max_residual", r.max_residual},
                   {"restriction_error", r.restriction_error},
                   {"joint_convexity", io::to_json(r.joint_convexity)},
                   {"trace", r.trace ? io::to_json(*r.trace) : json(nullptr)},
                   {"converged", converged},
                   {"normalization_shift", r.normalization_shift},
                   {"softening_shift", r.softening_shift},
                   {"params", params}};
    run.write("report.json", report.dump(1) + "\n");
    run.write("residuals.csv", residual_csv(p.phi.t_spec(), r.residuals));
    run.write("trace.csv", trace_csv(r));
    const int code = pass ? kExitOk : kExitConstraint;
    run.finish(params, code);
    log << "extend: " << (pass ? "ok" : "constraint failure")
        << " max_residual=" << io::format_double(r.max_residual)
        << " joint_convexity=" << io::format_double(joint)
        << " restriction_error=" << io::format_double(r.restriction_error)
        << " iterations=" << (r.trace ? r.trace->iterations : 0)
        << " converged=" << (converged ? "true" : "false") << "\n";
    return code;
  });
}

int cmd_prekopa(const fs::path& problem, const fs::path& out, const Overrides& o, std::ostream& log,
                std::ostream& err) {
  Run run("prekopa", out);
  return guarded(run, "prekopa", err, [&] {
    Problem p = load_problem(run, problem, o);
    const GridFunction marginal = prekopa_marginal(p.phi);
    ConvexityReport convexity;
    if (marginal.spec().dim() > 0) convexity = check_midpoint_convexity(marginal, p.params.samples, p.params.seed);

    const GridSpec& ts = p.phi.t_spec();
    std::vector<std::string> header = {"t_index"};
    for (auto& h : coordinate_header("t_value", ts.dim())) header.push_back(h);
    header.push_back("marginal");
    io::CsvWriter csv(header);
    for (std::size_t j = 0; j < marginal.size(); ++j) {
      std::vector<std::string> row = {std::to_string(j)};
      for (auto& c : coordinate_cells(ts, j)) row.push_back(c);
      row.push_back(io::format_double(marginal[j]));
      csv.row(row);
    }
    json result = {{"marginal", io::to_json(marginal)}, {"convexity", io::to_json(convexity)}};
    run.write("marginal.json", result.dump(1) + "\n");
    run.write("marginal.csv", csv.str());
    const bool pass = convexity.worst_violation <= kConvexityTolerance;
    const int code = pass ? kExitOk : kExitConstraint;
    run.finish(to_json(p.params), code);
    log << "prekopa: " << (pass ? "ok" : "convexity failure")
        << " convexity=" << io::format_double(convexity.worst_violation) << "\n";
    return code;
  });
}

int cmd_legendre(const fs::path& function, const fs::path& out, const Overrides& o, std::ostream& log,
                 std::ostream& err) {
  Run run("legendre", out);
  return guarded(run, "legendre", err, [&] {
    const std::string text = run.load_input(function);
    const GridFunction f = io::grid_function_from_json(io::parse_json(text, function.string()));
    const GridSpec dual = dual_for(o, f);
    const GridFunction g = legendre_transform(f, dual);
    run.write("conjugate.json", io::to_json(g).dump(1) + "\n");
    run.finish({{"dual", io::to_json(dual)}}, kExitOk);
    log << "legendre: ok nodes=" << g.size() << "\n";
    return kExitOk;
  });
}

int cmd_extremal(const fs::path& function, const fs::path& out, const Overrides& o, std::ostream& log,
                 std::ostream& err) {
  Run run("extremal", out);
  return guarded(run, "extremal", err, [&] {
    const std::string text = run.load_input(function);
    const GridFunction phi = io::grid_function_from_json(io::parse_json(text, function.string()));
    const GridSpec dual = o.dual.empty() ? extremal_dual_spec(phi) : GridSpec(o.dual);
    const ExtremalResult r = extremal_function(phi, dual);
    json result = {{"E", io::to_json(r.E)},
                   {"logZ", io::to_json(r.logZ)},
                   {"feasibility_residual", r.feasibility_residual}};
    run.write("extremal.json", result.dump(1) + "\n");
    run.write("E.json", io::to_json(r.E).dump(1) + "\n");
    double worst_gap = 0.0;
    if (o.oracle_iterations > 0) {
      std::vector<std::string> header = coordinate_header("x0", phi.spec().dim());
      for (const char* h : {"dual_path_value", "oracle_value", "gap"}) header.push_back(h);
      io::CsvWriter csv(header);
      for (std::size_t i = 0; i < phi.size(); ++i) {
        const double oracle = extremal_oracle(phi, i, o.oracle_iterations);
        const double gap = r.E[i] - oracle;
        worst_gap = std::max(worst_gap, std::abs(gap));
        std::vector<std::string> row = coordinate_cells(phi.spec(), i);
        for (double v : {r.E[i], oracle, gap}) row.push_back(io::format_double(v));
        csv.row(row);
      }
      run.write("oracle.csv", csv.str());
    }
    run.finish({{"dual", io::to_json(dual)}, {"oracle_iterations", o.oracle_iterations}}, kExitOk);
    log << "extremal: ok feasibility_residual=" << io::format_double(r.feasibility_residual);
    if (o.oracle_iterations > 0) log << " max_oracle_gap=" << io::format_double(worst_gap);
    log << "\n";
    return kExitOk;
  });
}

int cmd_verify(const fs::path& report, const fs::path& out, std::ostream& log, std::ostream& err) {
  const fs::path dir = out.empty() ? report.parent_path() / "verify" : out;
  Run run("verify", dir);
  return guarded(run, "verify", err, [&] {
    const std::string text = run.load_input(report);
    const json j = io::parse_json(text, report.string());
    if (!j.is_object() || !j.contains("Psi") || !j.contains("phi") || !j.contains("params")) {
      fail(ErrorKind::Input, "verify: report needs \"Psi\", \"phi\" and \"params\"");
    }
    const ProductGridFunction Psi = io::product_from_json(j["Psi"]);
    const ProductGridFunction phi = io::product_from_json(j["phi"]);
    const json& prm = j["params"];
    const double tol = io::double_from_json(prm.value("tol", json(1e-6)), "params.tol");
    const auto samples = prm.value("samples", std::size_t{1000});
    const auto seed = prm.value("seed", std::uint64_t{0});

    const std::vector<double> residuals = constraint_residuals(Psi, phi);
    const double max_residual = *std::max_element(residuals.begin(), residuals.end());
    const ConvexityReport convexity = joint_check(Psi, samples, seed);
    const bool pass = max_residual <= tol && convexity.worst_violation <= kConvexityTolerance;

    json result = {{"residuals", residuals},
                   {"max_residual", max_residual},
                   {"joint_convexity", io::to_json(convexity)},
                   {"tol", tol},
                   {"pass", pass}};
    run.write("verify.json", result.dump(1) + "\n");
    run.write("residuals.csv", residual_csv(phi.t_spec(), residuals));
    const int code = pass ? kExitOk : kExitConstraint;
    run.finish({{"tol", tol}, {"samples", samples}, {"seed", seed}}, code);
    log << "verify: " << (pass ? "ok" : "constraint failure")
        << " max_residual=" << io::format_double(max_residual)
        << " joint_convexity=" << io::format_double(convexity.worst_violation) << "\n";
    return code;
  });
}

}  // namespace convext
