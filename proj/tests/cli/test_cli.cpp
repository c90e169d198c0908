#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::path(RATEMIX_TEST_WORK);

void write(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  std::ofstream(kWork / name) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(kWork / p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(const std::string& args) {
  fs::create_directories(kWork);
  const std::string line = "cd '" + kWork.string() + "' && '" RATEMIX_CLI "' " + args + " > cli.log 2>&1";
  const int status = std::system(line.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void simulate_once() {
  static bool done = false;
  if (done) return;
  write("sim.ini", "[simulate]\nd = 6\nn = 10\nn_predict = 1\nseed = 5\n");
  REQUIRE(run("simulate --config sim.ini --out sim") == 0);
  done = true;
}

const char* kFit =
    "[fit]\nsites = sim/sites.csv\ndata = sim/data.csv\nchains = 2\n"
    "[sampler]\nn_iter = 2000\nburnin1 = 500\nburnin2 = 500\nthin = 10\nseed = 3\ncheckpoint_interval = 500\n";

}  // namespace

TEST_CASE("validation failures exit with code 2") {
  simulate_once();
  write("nokey.ini", "[simulate]\nd = 6\n");
  CHECK(run("simulate --config nokey.ini --out x") == 2);
  CHECK(slurp("cli.log").find("missing config key 'simulate.n'") != std::string::npos);
  write("badvariant.ini", "[fit]\nsites = sim/sites.csv\ndata = sim/data.csv\nvariant = D7\n"
                          "[sampler]\nn_iter = 100\nburnin1 = 10\nburnin2 = 10\n");
  CHECK(run("fit --config badvariant.ini --out x") == 2);
  write("nofile.ini", "[events]\nsites = sim/sites.csv\ndata = missing.csv\n");
  CHECK(run("extract-events --config nofile.ini --out x") == 2);
  CHECK(run("simulate --config sim.ini --bogus") == 2);
  CHECK(run("simulate") == 2);
  write("broken.ini", "[simulate]\nd = 6\nthis line is broken\n");
  CHECK(run("simulate --config broken.ini --out x") == 2);
  CHECK(slurp("cli.log").find("broken.ini:3") != std::string::npos);
}

TEST_CASE("numeric failures exit with code 3") {
  write("overflow.ini", "[simulate]\nd = 6\nn = 10\nn_predict = 1\nseed = 5\nalpha1 = 5000\n");
  CHECK(run("simulate --config overflow.ini --out x") == 3);
}

TEST_CASE("seed override changes the output and is recorded") {
  simulate_once();
  REQUIRE(run("simulate --config sim.ini --seed 6 --out sim6") == 0);
  CHECK(slurp("sim6/data.csv") != slurp("sim/data.csv"));
  REQUIRE(run("simulate --config sim6/manifest.json --out sim6b") == 0);
  CHECK(slurp("sim6/data.csv") == slurp("sim6b/data.csv"));
}

TEST_CASE("an interrupted fit resumes to the same result") {
  simulate_once();
  write("fit.ini", kFit);
  REQUIRE(run("fit --config fit.ini --out full") == 0);
  fs::remove_all(kWork / "part");
  REQUIRE(run("fit --config fit.ini --out part --halt-after 5") == 0);
  CHECK(fs::exists(kWork / "part" / "checkpoint_chain1.cbor"));
  CHECK(fs::exists(kWork / "part" / "chain0.cbor"));
  CHECK_FALSE(fs::exists(kWork / "part" / "fit.cbor"));
  REQUIRE(run("fit --config fit.ini --out part --resume") == 0);
  for (const char* f : {"fit.cbor", "trace.csv", "latent_trace.csv", "history.csv", "summary.json", "manifest.json"})
    CHECK(slurp(fs::path("full") / f) == slurp(fs::path("part") / f));
  CHECK_FALSE(fs::exists(kWork / "part" / "checkpoint_chain1.cbor"));

  // a checkpoint from a different configuration is refused
  fs::remove_all(kWork / "part2");
  REQUIRE(run("fit --config fit.ini --out part2 --halt-after 2") == 0);
  CHECK(run("fit --config fit.ini --seed 9 --out part2 --resume") == 2);
  CHECK(slurp("cli.log").find("resume refused") != std::string::npos);
}

TEST_CASE("predict, score and chi run end to end") {
  simulate_once();
  write("fit.ini", kFit);
  if (!fs::exists(kWork / "full" / "fit.cbor")) REQUIRE(run("fit --config fit.ini --out full") == 0);
  write("predict.ini", "[predict]\nfit = full/fit.cbor\nseed = 2\n");
  REQUIRE(run("predict --config predict.ini --out pred") == 0);
  CHECK(slurp("pred/predictive.csv").rfind("site_id,draw,", 0) == 0);
  write("score.ini", "[score]\nsites = sim/sites.csv\ndata = sim/data.csv\npredictive = D1=pred/predictive.csv\n");
  REQUIRE(run("score --config score.ini --out score") == 0);
  CHECK(slurp("score/score.csv").rfind("model,crps,twcrps,cells,best_crps,best_twcrps", 0) == 0);
  write("chi.ini", "[chi]\nbeta1 = 5\nn_mc = 20000\nu_grid = 0.9\n");
  REQUIRE(run("chi --config chi.ini --out chi") == 0);
  CHECK(slurp("chi/chi.csv").rfind("u,chi,se,n_mc", 0) == 0);
}
