#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "app.hpp"
#include "coneflow/types.hpp"

using namespace coneflow::app;
namespace fs = std::filesystem;

namespace {
Config config_from(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in, "test");
}

int run_text(const std::string& text, const fs::path& out) {
  std::ostringstream log, err;
  return guarded(err, [&] { return run_experiment(config_from(text), out, log); });
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallFlow = R"(
# small shrinker
pipeline = "flow"
[initial]
case = "shrinking-cross-section"
r0 = 1.0
nodes = 32
[flow]
theta_T = "auto"
)";
}  // namespace

TEST_CASE("config parsing") {
  const auto c = config_from(kSmallFlow);
  CHECK(c.pipeline() == "flow");
  CHECK(c.integer("initial.nodes", 0) == 32);
  CHECK(c.text("flow.theta_T", "") == "auto");
  CHECK(c.seed() == 42);
  CHECK(c.number("flow.t_max", 7.0) == 7.0);
  CHECK_THROWS_AS(config_from("pipeline = flow\nbogus = 1\n"), coneflow::ValidationError);
  CHECK_THROWS_AS(config_from("pipeline = flow\n[flow]\nstep = 1\n"), coneflow::ValidationError);
  CHECK_THROWS_AS(config_from("pipeline = flow\n[nope]\nx = 1\n"), coneflow::ValidationError);
  CHECK_THROWS_AS(config_from("pipeline = dance\n"), coneflow::ValidationError);
  CHECK_THROWS_AS(config_from("pipeline = flow\npipeline = slag\n"), coneflow::ValidationError);
  const auto l = config_from("pipeline = \"rescale-verify\"\n[rescale]\nlambdas = \"[2, 3, 10]\"\n");
  CHECK(l.numbers("rescale.lambdas", {}) == std::vector<double>{2, 3, 10});
  const auto bad = config_from("pipeline = flow\n[initial]\nnodes = 3.5\n");
  CHECK_THROWS_AS(bad.integer("initial.nodes", 0), coneflow::ValidationError);
}

TEST_CASE("exit codes") {
  const fs::path base = fs::temp_directory_path() / "coneflow_cli_test";
  fs::remove_all(base);
  CHECK(run_text("pipeline = flow\n[initial]\ncase = \"no-such-case\"\n", base / "a") == kValidation);
  CHECK(run_text("pipeline = flow\n[initial]\nnodes = 32\n[flow]\ntheta_T = off\n[classifier]\nmin_rows = 1000000\n",
                 base / "b") == kNumerical);
  CHECK(fs::exists(base / "b" / "trace.csv"));  // partial artifacts
  CHECK(run_text("pipeline = slag\n[slag]\nn = 3\nc = \"0, 0, 0\"\n", base / "c") == kValidation);
  CHECK(run_text("pipeline = spectrum\n[spectrum]\nsigma = \"circle:L=1\"\n", base / "d") == kValidation);
}

TEST_CASE("flow pipeline artifacts and reproducibility") {
  const fs::path base = fs::temp_directory_path() / "coneflow_cli_repro";
  fs::remove_all(base);
  REQUIRE(run_text(kSmallFlow, base / "one") == kOk);
  REQUIRE(run_text(kSmallFlow, base / "two") == kOk);
  const std::string a = slurp(base / "one" / "summary.json");
  CHECK(a == slurp(base / "two" / "summary.json"));
  CHECK(a.find("\"typeIc\": true") != std::string::npos);
  for (const char* f : {"trace.csv", "plot_theta.csv", "plot_sup_II2_tau.csv", "plot_min_r2_over_tau.csv",
                        "plot_self_similar_residual.csv", "monotonicity.csv", "initial_state.csv", "final_state.csv"}) {
    CHECK(fs::exists(base / "one" / f));
  }
  std::ifstream trace(base / "one" / "trace.csv");
  std::string header;
  std::getline(trace, header);
  CHECK(header == "t,volume,sup_II2,min_r2,max_r2,theta,lemma1_resid,lemma2_resid");
}

TEST_CASE("slag and spectrum pipelines") {
  const fs::path base = fs::temp_directory_path() / "coneflow_cli_slag";
  fs::remove_all(base);
  const std::string slag = "pipeline = slag\nseed = 7\n[slag]\nn = 2\nc = 0\ncprime = 1\ncount = 50\n";
  REQUIRE(run_text(slag, base / "one") == kOk);
  REQUIRE(run_text(slag, base / "two") == kOk);
  CHECK(slurp(base / "one" / "slag_summary.json") == slurp(base / "two" / "slag_summary.json"));
  CHECK(slurp(base / "one" / "slag.csv") == slurp(base / "two" / "slag.csv"));
  REQUIRE(run_text("pipeline = spectrum\n[spectrum]\nsigma = \"circle:L=6.2831853:nodes=512\"\nn = 2\n", base / "s") ==
          kOk);
  CHECK(slurp(base / "s" / "spectrum.json").find("\"deformation_dim\": 2") != std::string::npos);
}

TEST_CASE("output directory override") {
  const fs::path env = fs::temp_directory_path() / "coneflow_env_out";
  ::setenv("CONEFLOW_OUT", env.c_str(), 1);
  CHECK(resolve_output("elsewhere") == env);
  ::unsetenv("CONEFLOW_OUT");
  CHECK(resolve_output("elsewhere") == fs::path("elsewhere"));
}

TEST_CASE("verify cases") {
  std::ostringstream log;
  const fs::path out = fs::temp_directory_path() / "coneflow_cli_verify";
  CHECK(run_verify("rescale-identities", 3.0, out, log) == kOk);
  CHECK(run_verify("reeb-exclusion", 0.0, out, log) == kOk);
  std::ostringstream err;
  CHECK(guarded(err, [&] { return run_verify("nope", 1.0, out, log); }) == kValidation);
  CHECK(guarded(err, [&] { return run_verify("rescale-identities", -1.0, out, log); }) == kValidation);
}
