#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "convext/extension.hpp"
#include "convext/extremal.hpp"
#include "convext/integrals.hpp"
#include "convext/transforms.hpp"
#include "generators.hpp"
#include "io.hpp"

using namespace convext;
namespace fs = std::filesystem;
using io::json;

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

int failed = 0;
bool quiet = false;

void report(int criterion, bool pass, const std::string& what) {
  if (!pass) ++failed;
  if (quiet) return;
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int run_quiet(const std::function<int(std::ostream&, std::ostream&)>& cmd, std::string* err_text = nullptr) {
  std::ostringstream log, err;
  const int code = cmd(log, err);
  if (err_text != nullptr) *err_text = err.str();
  return code;
}

fs::path write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << j.dump(2) << "\n";
  return p;
}

json affine_pieces(const std::vector<std::vector<double>>& slopes, const std::vector<double>& offsets) {
  json pieces = json::array();
  for (std::size_t i = 0; i < slopes.size(); ++i) pieces.push_back({{"slope", slopes[i]}, {"offset", offsets[i]}});
  return pieces;
}

// PSD quadratic in (t, x) plus a max of three affines for phi; max of three
// affines with quarter-lattice slopes for psi.
json random_extension_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double a11 = 0.5 + std::abs(U(rng)), a22 = 0.5 + std::abs(U(rng));
  const double a12 = 0.4 * U(rng) * std::sqrt(a11 * a22);
  std::vector<std::vector<double>> phi_slopes, psi_slopes;
  std::vector<double> phi_offsets, psi_offsets;
  for (int i = 0; i < 3; ++i) {
    const double sx = U(rng), off = 0.5 * U(rng), st = 0.5 * U(rng);
    phi_slopes.push_back({st, sx});
    phi_offsets.push_back(off);
  }
  for (int i = 0; i < 3; ++i) {
    psi_slopes.push_back({0.25 * std::round(6.0 * U(rng))});
    psi_offsets.push_back(0.5 * U(rng));
  }
  return {{"t_grid", {{"axes", {{{"lo", -0.5}, {"hi", 0.5}, {"count", 5}}}}}},
          {"x_grid", {{"axes", {{{"lo", -4.0}, {"hi", 4.0}, {"count", 801}}}}}},
          {"phi",
           {{"type", "sum"},
            {"terms",
             {{{"type", "quadratic"}, {"matrix", {{a11, a12}, {a12, a22}}}},
              {{"type", "max_affine"}, {"pieces", affine_pieces(phi_slopes, phi_offsets)}}}}}},
          {"psi", {{"type", "max_affine"}, {"pieces", affine_pieces(psi_slopes, psi_offsets)}}},
          {"normalize_phi", true},
          {"params", {{"lambda", 100.0}, {"tol", 1e-6}, {"max_iter", 20000}, {"dual_step", 0.05}, {"seed", seed}}}};
}

struct TraceCheck {
  double worst_excess = -kInf;   // max over runs and k of log_A[k] - envelope[k]
  std::vector<double> ratios;    // per run, mean log_A[k] / log_A[k-1] over k = 2..10
  std::vector<double> lambdas;
};

void record_trace(TraceCheck& tc, const json& trace, double lambda) {
  const auto log_A = trace["log_A"].get<std::vector<double>>();
  const double rate = 1.0 - 1.0 / lambda;
  for (std::size_t k = 0; k < log_A.size(); ++k) {
    tc.worst_excess = std::max(tc.worst_excess, log_A[k] - std::pow(rate, static_cast<double>(k)) * log_A[0]);
  }
  if (log_A.size() > 10 && log_A[0] > 0.0) {
    double sum = 0.0;
    for (std::size_t k = 2; k <= 10; ++k) sum += log_A[k] / log_A[k - 1];
    tc.ratios.push_back(sum / 9.0);
    tc.lambdas.push_back(lambda);
  }
}

// Criterion 1; every run also feeds the trace check.
void theorem_suite(const fs::path& root, TraceCheck& tc) {
  int bad = 0;
  double worst_res = 0.0, worst_joint = 0.0, worst_restr = 0.0, worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const fs::path dir = root / ("theorem_" + std::to_string(seed));
    const fs::path problem = write_json(dir / "problem.json", random_extension_problem(seed));
    double restr[2] = {0.0, 0.0};
    const double lambdas[2] = {100.0, 400.0};
    for (int r = 0; r < 2; ++r) {
      Overrides o;
      o.lambda = lambdas[r];
      const fs::path out = dir / (r == 0 ? "lambda100" : "lambda400");
      std::string err;
      const int code = run_quiet([&](auto& log, auto& e) { return cmd_extend(problem, out, o, log, e); }, &err);
      if (code != kExitOk) {
        ++bad;
        if (!quiet) std::printf("  seed %llu lambda %g: exit %d %s", static_cast<unsigned long long>(seed), lambdas[r], code,
                    err.c_str());
        continue;
      }
      const json rep = io::load_json(out / "report.json");
      restr[r] = rep["restriction_error"].get<double>();
      record_trace(tc, rep["trace"], lambdas[r]);
      if (r == 0) {
        worst_res = std::max(worst_res, rep["max_residual"].get<double>());
        worst_joint = std::max(worst_joint, rep["joint_convexity"]["worst_violation"].get<double>());
        worst_restr = std::max(worst_restr, restr[0]);
      }
    }
    if (!(restr[1] < restr[0])) ++bad;
    if (restr[0] > 0.0) worst_ratio = std::max(worst_ratio, restr[1] / restr[0]);
  }
  const bool pass = bad == 0 && worst_res <= 1e-6 && worst_joint <= 1e-6 && worst_restr <= 0.1;
  report(1, pass,
         "20 random extensions at lambda 100: max_residual " + fmt(worst_res) + " <= 1e-6, joint violation " +
             fmt(worst_joint) + " <= 1e-6, restriction " + fmt(worst_restr) +
             " <= 0.1; lambda 400 restriction strictly smaller (worst ratio " + fmt(worst_ratio) + ")");
}

void prekopa_suite(const fs::path& root) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t m = 1 + seed % 2, n = 1 + (seed / 2) % 2;
    const testing::SmoothJointWeight w(m, n, 1000 + seed);
    const GridSpec ts(std::vector<Axis>(m, Axis{-1.0, 1.0, m == 1 ? std::size_t{17} : std::size_t{9}}));
    const GridSpec xs(std::vector<Axis>(n, Axis{-6.0, 6.0, n == 1 ? std::size_t{481} : std::size_t{97}}));
    const auto phi = ProductGridFunction::sample(ts, xs, [&](auto t, auto x) { return w(t, x); });
    worst = std::max(worst, check_midpoint_convexity(prekopa_marginal(phi), 1000, seed).worst_violation);
  }

  const json gauss = {{"t_grid", {{"axes", {{{"lo", -1.0}, {"hi", 1.0}, {"count", 9}}}}}},
                      {"x_grid", {{"axes", {{{"lo", -10.0}, {"hi", 10.0}, {"count", 2001}}}}}},
                      {"phi", {{"type", "gaussian_shift"}, {"scale", 1.0}}},
                      {"psi", {{"type", "zero"}}}};
  const fs::path problem = write_json(root / "prekopa" / "problem.json", gauss);
  const int code = run_quiet([&](auto& log, auto& e) { return cmd_prekopa(problem, root / "prekopa" / "out", {}, log, e); });
  double gauss_err = kInf;
  if (code == kExitOk) {
    const GridFunction m = io::grid_function_from_json(io::load_json(root / "prekopa" / "out" / "marginal.json")["marginal"]);
    gauss_err = 0.0;
    for (double v : m.values()) gauss_err = std::max(gauss_err, std::abs(v));
  }
  report(2, worst <= 1e-6 && gauss_err <= 1e-6,
         "50 jointly convex weights give convex marginals (worst violation " + fmt(worst) +
             " <= 1e-6); gaussian family marginal within " + fmt(gauss_err) + " of 0 (<= 1e-6)");
}

void holder_suite(TraceCheck& tc) {
  // Small lambdas make the decay visible within ten rounds.
  const GridSpec ts({{-0.5, 0.5, 5}}), xs({{-4.0, 4.0, 401}});
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const testing::SmoothJointWeight w(1, 1, 500 + seed);
    auto phi = ProductGridFunction::sample(ts, xs, [&](auto t, auto x) { return 2.0 * w(t, x); });
    const double g = normalization_gap(GridFunction::constant(xs, 0.0), phi.slice(2));
    std::vector<double> v(phi.values().begin(), phi.values().end());
    for (double& x : v) x += g;
    phi = ProductGridFunction(ts, xs, std::move(v));
    const GridFunction psi = GridFunction::sample(xs, [](auto x) { return std::abs(x[0] - 0.5); });
    for (double lambda : {2.0, 5.0, 20.0}) {
      const ExtensionReport r = extend_convex(psi, phi, {lambda, GridSpec({{-1.25, 1.25, 51}})}, 1e-12, 400);
      record_trace(tc, io::to_json(*r.trace), lambda);
    }
  }
  double lo = kInf, hi = -kInf;
  bool in_band = !tc.ratios.empty();
  for (std::size_t i = 0; i < tc.ratios.size(); ++i) {
    const double rel = tc.ratios[i] / (1.0 - 1.0 / tc.lambdas[i]);
    lo = std::min(lo, rel);
    hi = std::max(hi, rel);
    in_band = in_band && rel >= 0.8 && rel <= 1.0;
  }
  report(3, tc.worst_excess <= 1e-9 && in_band,
         "log_A[k] - (1-1/lambda)^k log_A[0] <= " + fmt(tc.worst_excess) + " (<= 1e-9) on every run; decay ratio over " +
             "rounds 2..10 in [" + fmt(lo) + ", " + fmt(hi) + "] x (1-1/lambda) over " +
             std::to_string(tc.ratios.size()) + " runs (band [0.8, 1.0])");
}

void legendre_suite() {
  double worst_excess = -kInf, worst_fast = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t d = 1 + seed % 2;
    testing::RandomConvex g(d, 2000 + seed, 2.0);
    const GridSpec s(std::vector<Axis>(d, Axis{-2.0, 2.0, d == 1 ? std::size_t{201} : std::size_t{41}}));
    const GridFunction f = GridFunction::sample(s, [&](auto z) { return g(z); });
    const auto ranges = slope_range(f);
    double bound = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      bound = std::max(bound, 2.0 * s.axis(k).step() * (ranges[k].second - ranges[k].first));
    }
    double scale = 1.0;
    for (std::size_t i = 0; i < f.size(); ++i) scale = std::max(scale, std::abs(f[i]));
    worst_excess = std::max(worst_excess, (sup_distance(biconjugate(f), f) - bound) / scale);
    const GridSpec dual = envelope_dual_spec(f);
    const GridFunction a = legendre_transform(f, dual), b = legendre_transform_direct(f, dual);
    for (std::size_t j = 0; j < a.size(); ++j) worst_fast = std::max(worst_fast, std::abs(a[j] - b[j]));
  }
  const GridFunction q = GridFunction::sample(GridSpec({{-4.0, 4.0, 401}}), [](auto x) { return 0.5 * x[0] * x[0]; });
  const GridSpec dual({{-3.0, 3.0, 121}});
  const GridFunction c = legendre_transform(q, dual);
  double self = 0.0;
  for (std::size_t j = 0; j < dual.size(); ++j) {
    const double y = dual.point(j)[0];
    self = std::max(self, std::abs(c[j] - 0.5 * y * y));
  }
  report(4, worst_excess <= 1e-12 && worst_fast <= 1e-12 && self <= 1e-3,
         "50 random convex functions: (biconjugate gap minus 2 h (slope range)) / max(1, sup|f|) = " +
             fmt(worst_excess) + " (<= 1e-12 roundoff); sweep vs direct " + fmt(worst_fast) + " <= 1e-12; x^2/2 self-duality " +
             fmt(self) + " <= 1e-3");
}

struct OracleProblem {
  double lo, hi;
  std::size_t n;
  double (*phi)(double);
};

void extremal_suite(const fs::path& root) {
  const GridFunction q = GridFunction::sample(GridSpec({{-8.0, 8.0, 641}}), [](auto x) { return 0.5 * x[0] * x[0]; });
  const ExtremalResult r = extremal_function(q, extremal_dual_spec(q));
  double gauss = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double x = q.spec().point(i)[0];
    if (std::abs(x) <= 4.0) gauss = std::max(gauss, std::abs(r.E[i] - (0.5 * x * x - kHalfLog2Pi)));
  }

  const OracleProblem problems[10] = {
      {-6, 6, 25, [](double x) { return 0.5 * x * x; }},
      {0, 1, 11, [](double) { return 0.0; }},
      {-3, 3, 25, [](double x) { return std::abs(x); }},
      {-2, 3, 21, [](double x) { return std::max({-x, 0.5 * x + 0.3, 2 * x - 1}); }},
      {-3, 3, 25, [](double x) { return std::log(std::exp(x) + std::exp(-2 * x)); }},
      {-2, 4, 25, [](double x) { return (x - 1) * (x - 1) + 0.3 * x; }},
      {-2, 2, 21, [](double x) { return x * x * x * x / 4; }},
      {-3, 2, 21, [](double x) { return std::exp(x); }},
      {-2, 3, 26, [](double x) { return 2 * std::abs(x - 0.5) + x * x / 4; }},
      {-2, 2, 21, [](double x) { return std::log(std::exp(2 * x) + std::exp(-x) + 1); }},
  };
  double worst_gap = 0.0, worst_lower = 0.0;
  bool cmd_ok = true;
  for (int p = 0; p < 10; ++p) {
    const GridFunction f = GridFunction::sample(GridSpec({{problems[p].lo, problems[p].hi, problems[p].n}}),
                                                [&](auto x) { return problems[p].phi(x[0]); });
    const fs::path dir = root / ("oracle_" + std::to_string(p));
    const fs::path fn = write_json(dir / "phi.json", io::to_json(f));
    Overrides o;
    o.oracle_iterations = 500;
    cmd_ok = cmd_ok && run_quiet([&](auto& log, auto& e) { return cmd_extremal(fn, dir / "out", o, log, e); }) == kExitOk;
    std::istringstream csv(io::read_file(dir / "out" / "oracle.csv"));
    std::string line;
    std::getline(csv, line);
    // End nodes: the supremum is approached only as the slope diverges, so
    // the oracle is a lower bound there and only E >= oracle - tol is checked.
    for (std::size_t i = 0; std::getline(csv, line); ++i) {
      const double gap = std::stod(line.substr(line.rfind(',') + 1));
      worst_lower = std::max(worst_lower, -gap);
      if (i > 0 && i + 1 < problems[p].n) worst_gap = std::max(worst_gap, std::abs(gap));
    }
  }

  double worst_joint = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t m = 1 + seed % 2;
    const testing::SmoothJointWeight w(m, 1, 3000 + seed);
    const GridSpec ts(std::vector<Axis>(m, Axis{-1.0, 1.0, m == 1 ? std::size_t{9} : std::size_t{5}}));
    const GridSpec xs({{-6.0, 6.0, 241}});
    const auto phi = ProductGridFunction::sample(ts, xs, [&](auto t, auto x) { return w(t, x); });
    GridFunction joined = phi.joined();
    const GridSpec dual = extremal_dual_spec(phi.slice(0));
    std::vector<Axis> axes = dual.axes();
    for (std::size_t j = 1; j < phi.t_size(); ++j) {
      const Axis a = extremal_dual_spec(phi.slice(j)).axis(0);
      axes[0].lo = std::min(axes[0].lo, a.lo);
      axes[0].hi = std::max(axes[0].hi, a.hi);
    }
    axes[0].count = static_cast<std::size_t>(std::llround((axes[0].hi - axes[0].lo) / dual.axis(0).step())) + 1;
    worst_joint = std::max(worst_joint, hat_phi(phi, GridSpec(axes), 1000, seed).joint_convexity.worst_violation);
  }
  report(5, gauss <= 1e-3 && cmd_ok && worst_gap <= 5e-2 && worst_lower <= 5e-2 && worst_joint <= 1e-6,
         "gaussian E within " + fmt(gauss) + " (<= 1e-3); dual path vs oracle on 10 problems, interior nodes " +
             fmt(worst_gap) + " <= 5e-2, oracle - E at all nodes " + fmt(worst_lower) + " <= 5e-2; hat phi joint violation " + fmt(worst_joint) + " <= 1e-6 on 10 weights");
}

void metamorphic_suite() {
  std::vector<std::string> notes;
  bool pass = true;
  auto note = [&](const std::string& name, double v) {
    pass = pass && v <= 1e-9;
    notes.push_back(name + " " + fmt(v));
  };

  {
    const GridFunction f = GridFunction::sample(GridSpec({{-3.0, 3.0, 121}}), [](auto x) {
      return std::log(std::exp(x[0]) + std::exp(-2 * x[0])) + 0.1 * x[0] * x[0];
    });
    const GridSpec dual = extremal_dual_spec(f);
    const ExtremalResult a = extremal_function(f, dual), b = extremal_function(shift(f, 0.75), dual);
    double d = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) d = std::max(d, std::abs(b.E[i] - a.E[i] - 0.75));
    note("cash", d);
  }

  {
    const double v = 0.5;
    const testing::SmoothJointWeight w(1, 1, 77);
    const GridSpec ts({{-0.5, 0.5, 5}});
    const GridSpec xs({{-4.0, 4.0, 161}}), xv({{-4.0 + v, 4.0 + v, 161}});
    auto psi_of = [](double x) { return std::max(0.5 * x, -x + 0.2) + 0.1 * x * x; };
    const auto phi = ProductGridFunction::sample(ts, xs, [&](auto t, auto x) { return w(t, x); });
    const auto phv = ProductGridFunction::sample(ts, xv, [&](auto t, auto x) {
      const double y = x[0] - v;
      return w(t, std::span<const double>(&y, 1));
    });
    const GridFunction psi = GridFunction::sample(xs, [&](auto x) { return psi_of(x[0]); });
    const GridFunction psv = GridFunction::sample(xv, [&](auto x) { return psi_of(x[0] - v); });
    const SofteningParams p{10.0, GridSpec({{-2.0, 2.0, 41}})};
    const ExtensionReport a = extend_convex(psi, phi, p, 1e-9, 2000);
    const ExtensionReport b = extend_convex(psv, phv, p, 1e-9, 2000);
    double d = 0.0;
    for (std::size_t n = 0; n < a.Psi.values().size(); ++n) d = std::max(d, std::abs(a.Psi.values()[n] - b.Psi.values()[n]));
    note("translation", d);
  }

  {
    const GridSpec ts({{-0.5, 0.5, 5}}), xs({{-6.0, 6.0, 241}});
    const auto phi = ProductGridFunction::sample(ts, xs, [](auto t, auto x) {
      return 0.5 * (x[0] - t[0]) * (x[0] - t[0]) + kHalfLog2Pi;
    });
    const GridFunction psi = GridFunction::sample(xs, [](auto x) { return std::abs(x[0]); });
    const ExtensionReport r = extend_convex(psi, phi, {1.0, GridSpec({{-1.25, 1.25, 51}})}, 1e-9, 50);
    const double last = r.trace->log_A.size() > 1 ? r.trace->log_A[1] : r.trace->log_A[0];
    note("lambda-one log_A[1]", std::max(0.0, last));
    pass = pass && r.trace->iterations <= 1;
  }

  {
    const GridSpec xs({{-4.0, 4.0, 81}});
    const GridFunction phi0 = GridFunction::sample(xs, [](auto x) { return 0.5 * x[0] * x[0]; });
    const ProductGridFunction phi(GridSpec(), xs, std::vector<double>(phi0.values().begin(), phi0.values().end()));
    const GridFunction psi = GridFunction::sample(xs, [](auto x) { return std::abs(x[0] - 1.0); });
    const ExtensionReport r = extend_convex(psi, phi, {20.0, GridSpec()}, 1e-9);
    note("m=0", sup_distance(r.Psi.slice(0), shift(psi, -r.normalization_shift)));
  }

  {
    const GridSpec ts({{-1.0, 1.0, 5}}), xs({{-3.0, 3.0, 61}});
    const testing::SmoothJointWeight w(1, 1, 78);
    const auto phi = ProductGridFunction::sample(ts, xs, [&](auto t, auto x) { return w(t, x); });
    const MixtureSpec mix({AffineFunction({0.7}, 0.1), AffineFunction({-0.2}, 0.4), AffineFunction({1.5}, -1.0)},
                          {-0.3, 0.2, -1.1});
    const double s = 2.5;
    const ExtensionReport a = extend_mixture(mix, phi), b = extend_mixture(mix.shifted(std::log(s)), phi);
    double d = 0.0;
    for (std::size_t n = 0; n < a.Psi.values().size(); ++n) {
      d = std::max(d, std::abs(b.Psi.values()[n] - a.Psi.values()[n] - std::log(s)));
    }
    note("rescaling", d);
  }

  std::string text = "metamorphic properties within 1e-9:";
  for (const auto& n : notes) text += " " + n;
  report(6, pass, text);
}

// CSV artifacts of every command run, keyed by path relative to the run root.
std::vector<std::pair<std::string, std::string>> csv_artifacts(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      out.emplace_back(fs::relative(e.path(), root).string(), io::read_file(e.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main() {
  const fs::path tmp = CONVEXT_ACCEPTANCE_TMP;
  fs::remove_all(tmp);

  TraceCheck tc;
  theorem_suite(tmp / "run_a", tc);
  prekopa_suite(tmp / "run_a");
  holder_suite(tc);
  legendre_suite();
  extremal_suite(tmp / "run_a");
  metamorphic_suite();

  // Second run of every command-producing suite with the same seeds.
  TraceCheck unused;
  const int first_failed = failed;
  quiet = true;
  theorem_suite(tmp / "run_b", unused);
  prekopa_suite(tmp / "run_b");
  extremal_suite(tmp / "run_b");
  quiet = false;
  failed = first_failed;
  const auto a = csv_artifacts(tmp / "run_a"), b = csv_artifacts(tmp / "run_b");
  std::size_t differing = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) differing += a[i] != b[i];
  report(7, !a.empty() && a.size() == b.size() && differing == 0,
         std::to_string(a.size()) + " CSV artifacts from two runs with the same seeds, " + std::to_string(differing) +
             " differ");

  std::printf("%s: %d criterion failure(s)\n", failed == 0 ? "acceptance passed" : "acceptance failed", failed);
  return failed == 0 ? 0 : 1;
}
