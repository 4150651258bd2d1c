#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "convext/convext.h"

namespace {

struct Flags {
  std::string input;
  std::string out;
  double lambda = 0;
  double tol = 0;
  std::size_t max_iter = 0;
  std::uint64_t seed = 0;
  std::vector<double> dual_lo, dual_hi;
  std::vector<std::size_t> dual_count;
  std::size_t oracle_iterations = 0;
};

void add_dual(CLI::App* cmd, Flags& f) {
  cmd->add_option("--dual-lo", f.dual_lo, "Dual grid lower bound, once per axis");
  cmd->add_option("--dual-hi", f.dual_hi, "Dual grid upper bound, once per axis");
  cmd->add_option("--dual-count", f.dual_count, "Dual grid node count, once per axis");
}

void add_run(CLI::App* cmd, Flags& f) {
  cmd->add_option("--lambda", f.lambda, "Softening parameter, >= 1");
  cmd->add_option("--tol", f.tol, "Residual tolerance in nats");
  cmd->add_option("--max-iter", f.max_iter, "Iteration cap");
  cmd->add_option("--seed", f.seed, "Seed for convexity sampling");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex extensions under log-integral constraints"};
  app.set_version_flag("--version", std::string(convext_version()));
  app.require_subcommand(1);
  Flags f;

  auto* extend = app.add_subcommand("extend", "Extend psi to a jointly convex Psi(t, x)");
  auto* prekopa = app.add_subcommand("prekopa", "Marginal -log integral exp(-phi(t, x)) dx");
  auto* legendre = app.add_subcommand("legendre", "Discrete convex conjugate of a grid function");
  auto* extremal = app.add_subcommand("extremal", "Extremal convex function E(phi)");
  auto* verify = app.add_subcommand("verify", "Recheck a stored extension report");

  for (auto* cmd : {extend, prekopa}) {
    cmd->add_option("--problem", f.input, "Problem JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "Output directory")->required();
    add_run(cmd, f);
    add_dual(cmd, f);
  }
  for (auto* cmd : {legendre, extremal}) {
    cmd->add_option("--problem,--function", f.input, "Grid function JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "Output directory")->required();
    add_dual(cmd, f);
  }
  extremal->add_option("--oracle-iterations", f.oracle_iterations,
                       "Newton steps per node for the direct oracle; 0 skips it");
  verify->add_option("report,--report", f.input, "report.json written by extend")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--out", f.out, "Output directory (default: <report dir>/verify)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (f.dual_lo.size() != f.dual_hi.size() || f.dual_lo.size() != f.dual_count.size()) {
    std::fprintf(stderr, "error: --dual-lo, --dual-hi and --dual-count must be given once per axis\n");
    return 1;
  }
  std::vector<convext_axis> axes;
  for (std::size_t k = 0; k < f.dual_lo.size(); ++k) axes.push_back({f.dual_lo[k], f.dual_hi[k], f.dual_count[k]});

  auto given = [&](const char* name) {
    CLI::App* cmd = app.get_subcommands().front();
    return cmd->get_option_no_throw(name) != nullptr && cmd->count(name) > 0;
  };
  convext_overrides o{};
  o.has_lambda = given("--lambda");
  o.lambda = f.lambda;
  o.has_tol = given("--tol");
  o.tol = f.tol;
  o.has_max_iter = given("--max-iter");
  o.max_iter = f.max_iter;
  o.has_seed = given("--seed");
  o.seed = f.seed;
  o.dual_axes = axes.empty() ? nullptr : axes.data();
  o.dual_dim = axes.size();
  o.oracle_iterations = f.oracle_iterations;

  if (*extend) return convext_cmd_extend(f.input.c_str(), f.out.c_str(), &o);
  if (*prekopa) return convext_cmd_prekopa(f.input.c_str(), f.out.c_str(), &o);
  if (*legendre) return convext_cmd_legendre(f.input.c_str(), f.out.c_str(), &o);
  if (*extremal) return convext_cmd_extremal(f.input.c_str(), f.out.c_str(), &o);
  return convext_cmd_verify(f.input.c_str(), f.out.c_str());
}
