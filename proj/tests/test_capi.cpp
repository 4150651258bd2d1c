#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "convext/convext.h"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const char* what, int line) {
  if (!ok) {
    ++failures;
    std::printf("FAIL line %d: %s (last error: %s)\n", line, what, convext_last_error());
  }
}

#define CHECK(cond) check((cond), #cond, __LINE__)

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CONVEXT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* kProblem = R"({
  "t_grid": {"axes": [{"lo": -0.5, "hi": 0.5, "count": 5}]},
  "x_grid": {"axes": [{"lo": -9.0, "hi": 9.0, "count": 361}]},
  "phi": {"type": "gaussian_shift", "scale": 1.0},
  "psi": {"type": "zero"},
  "params": {"lambda": 20, "max_iter": 500}
})";

void handles() {
  CHECK(std::strcmp(convext_version(), "1.0.0") == 0);

  const convext_axis ax = {-2.0, 2.0, 5};
  const double v[5] = {2.0, 0.5, 0.0, 0.5, 2.0};
  convext_grid_function* f = nullptr;
  CHECK(convext_grid_function_create(&ax, 1, v, 5, &f) == CONVEXT_OK);
  CHECK(convext_grid_function_dim(f) == 1);
  CHECK(convext_grid_function_size(f) == 5);
  double out[5] = {};
  CHECK(convext_grid_function_values(f, out, 5) == CONVEXT_OK);
  CHECK(out[4] == 2.0);
  CHECK(convext_grid_function_values(f, out, 4) == CONVEXT_ERR_SHAPE);

  double y = 0.0;
  const double p = 1.5;
  CHECK(convext_grid_function_eval(f, &p, 1, &y) == CONVEXT_OK);
  CHECK(y == 1.25);
  const double far = 3.0;
  CHECK(convext_grid_function_eval(f, &far, 1, &y) == CONVEXT_ERR_DOMAIN);
  CHECK(std::strlen(convext_last_error()) > 0);

  double worst = 1.0;
  CHECK(convext_convexity(f, 100, 0, &worst) == CONVEXT_OK);
  CHECK(worst <= 0.0);

  convext_grid_function* g = nullptr;
  const convext_axis dual = {-1.0, 1.0, 3};
  CHECK(convext_legendre(f, &dual, 1, &g) == CONVEXT_OK);
  double gv[3] = {};
  CHECK(convext_grid_function_values(g, gv, 3) == CONVEXT_OK);
  CHECK(std::abs(gv[2] - 0.5) <= 1e-15);
  convext_grid_function_free(g);

  convext_grid_function* b = nullptr;
  CHECK(convext_biconjugate(f, &b) == CONVEXT_OK);
  convext_grid_function_free(b);

  char* text = nullptr;
  CHECK(convext_grid_function_to_json(f, &text) == CONVEXT_OK);
  convext_grid_function* back = nullptr;
  CHECK(convext_grid_function_from_json(text, &back) == CONVEXT_OK);
  CHECK(convext_grid_function_size(back) == 5);
  convext_string_free(text);
  convext_grid_function_free(back);

  CHECK(convext_grid_function_from_json("{\"spec\": ", &back) == CONVEXT_ERR_INPUT);
  CHECK(convext_grid_function_load("/nonexistent/f.json", &back) != CONVEXT_OK);

  const double bad[5] = {0.0, NAN, 0.0, 0.0, 0.0};
  convext_grid_function* h = nullptr;
  CHECK(convext_grid_function_create(&ax, 1, bad, 5, &h) == CONVEXT_ERR_DOMAIN);
  CHECK(convext_grid_function_create(&ax, 1, v, 4, &h) == CONVEXT_ERR_SHAPE);
  CHECK(convext_grid_function_create(nullptr, 1, v, 5, &h) == CONVEXT_ERR_PARAMETER);

  double lz = 0.0, under = 1.0;
  const convext_axis unit = {0.0, 2.0, 3};
  const double zeros[3] = {0.0, 0.0, 0.0};
  convext_grid_function* z = nullptr;
  CHECK(convext_grid_function_create(&unit, 1, zeros, 3, &z) == CONVEXT_OK);
  CHECK(convext_log_integral(z, &lz, &under) == CONVEXT_OK);
  CHECK(std::abs(lz - std::log(2.0)) <= 1e-15);
  CHECK(under == 0.0);

  double oracle = 0.0;
  CHECK(convext_extremal_oracle(z, 1, 200, &oracle) == CONVEXT_OK);
  CHECK(convext_extremal_oracle(z, 7, 200, &oracle) == CONVEXT_ERR_PARAMETER);
  convext_grid_function* E = nullptr;
  double residual = 0.0;
  CHECK(convext_extremal(z, nullptr, 0, &E, &residual) == CONVEXT_OK);
  CHECK(convext_grid_function_size(E) == 3);
  convext_grid_function_free(E);
  convext_grid_function_free(z);
  convext_grid_function_free(f);
  convext_grid_function_free(nullptr);
}

void commands(const fs::path& tmp) {
  const fs::path problem = tmp / "problem.json";
  write_text(problem, kProblem);
  CHECK(convext_cmd_extend(problem.c_str(), (tmp / "api").c_str(), nullptr) == 0);
  CHECK(fs::exists(tmp / "api" / "report.json"));
  CHECK(convext_cmd_verify((tmp / "api" / "report.json").c_str(), nullptr) == 0);
  CHECK(fs::exists(tmp / "api" / "verify" / "verify.json"));

  convext_overrides o = {};
  o.has_max_iter = 1;
  o.max_iter = 0;
  CHECK(convext_cmd_extend(problem.c_str(), (tmp / "capped").c_str(), &o) == 2);
  CHECK(convext_cmd_prekopa(problem.c_str(), (tmp / "prekopa").c_str(), nullptr) == 0);
  CHECK(convext_cmd_extend(nullptr, (tmp / "null").c_str(), nullptr) == 1);
}

void cli(const fs::path& tmp) {
  const fs::path problem = tmp / "problem.json";
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("extend --problem " + problem.string() + " --out " + (tmp / "cli").string()) == 0);
  CHECK(run_cli("verify " + (tmp / "cli" / "report.json").string()) == 0);
  CHECK(run_cli("extend --problem " + problem.string() + " --out " + (tmp / "cli2").string() +
                " --lambda 20 --max-iter 1 --tol 1e-30") == 2);
  CHECK(run_cli("prekopa --problem " + problem.string() + " --out " + (tmp / "cli_p").string()) == 0);

  write_text(tmp / "broken.json", "{\n \"t_grid\": [,\n}");
  CHECK(run_cli("extend --problem " + (tmp / "broken.json").string() + " --out " + (tmp / "cli_b").string()) == 1);
  CHECK(fs::exists(tmp / "cli_b" / "manifest.json"));
  CHECK(run_cli("extend --out " + (tmp / "cli_m").string()) == 1);
  CHECK(run_cli("extend --problem " + problem.string() + " --out " + (tmp / "cli_d").string() +
                " --dual-lo -1 --dual-hi 1") == 1);

  const fs::path fn = tmp / "f.json";
  write_text(fn, R"({"spec": {"axes": [{"lo": -2, "hi": 2, "count": 9}]}, "values": [2, 1.125, 0.5, 0.125, 0, 0.125, 0.5, 1.125, 2]})");
  CHECK(run_cli("legendre --function " + fn.string() + " --out " + (tmp / "cli_l").string() +
                " --dual-lo -1 --dual-hi 1 --dual-count 5") == 0);
  CHECK(fs::exists(tmp / "cli_l" / "conjugate.json"));
  CHECK(run_cli("extremal --function " + fn.string() + " --out " + (tmp / "cli_e").string() +
                " --oracle-iterations 20") == 0);
  CHECK(fs::exists(tmp / "cli_e" / "oracle.csv"));
}

}  // namespace

int main() {
  const fs::path tmp = CONVEXT_TEST_TMP;
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  handles();
  commands(tmp);
  cli(tmp);
  std::printf("%s: %d failure(s)\n", failures == 0 ? "capi ok" : "capi failed", failures);
  return failures == 0 ? 0 : 1;
}
