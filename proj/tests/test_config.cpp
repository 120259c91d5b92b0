#include "sddelab/config.hpp"
#include "sddelab/error.hpp"
#include "sddelab/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sddelab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sddelab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kPointDelay = R"(# point-delay jump diffusion
mu.alpha = 1
mu.atoms = -1:-1.5, 0:-0.25
F.kind = point_delay
F.f = clamp
F.f.lo = 0.5
F.f.hi = 2
F.lags = 0.5
F.weights = 1
levy.sigma2 = 1
levy.jump.family = exponential
levy.jump.lambda = 0.5
levy.jump.mean = 0.3
phi.kind = linear
phi.intercept = 1
phi.slope = 0.5
T = 4
h = 0.01
)";

}  // namespace

TEST_CASE("grammar") {
  auto c = Config::parse("# header\nT = 2   # trailing comment\n\nh=0.01\nverify.h_list = 0.01, 0.005 0.0025\n");
  CHECK(c.number("T") == 2.0);
  CHECK(c.number("h") == 0.01);
  CHECK(c.number("levy.b", 0.5) == 0.5);
  CHECK(c.numbers("verify.h_list", {}) == std::vector<double>{0.01, 0.005, 0.0025});
  CHECK_FALSE(c.has("seed"));
  CHECK_THROWS_AS(c.number("seed"), Error);

  auto expect_config_error = [](const char* text, const char* fragment) {
    try {
      Config::parse(text);
      FAIL("expected a config error for: " << text);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect_config_error("T = 1\nnot.a.key = 3\n", "line 2");
  expect_config_error("T = 1\nT = 2\n", "line 2");
  expect_config_error("T 1\n", "line 1");
  CHECK_THROWS_AS(Config::parse("T = abc\n").number("T"), Error);
  CHECK_THROWS_AS(Config::load("/nonexistent/dir/x.cfg"), Error);
}

TEST_CASE("relative file paths resolve against the config directory") {
  auto c = Config::parse("mu.density_file = kernel.csv\n", "/some/dir");
  CHECK(c.path("mu.density_file").value() == fs::path("/some/dir/kernel.csv"));
  CHECK(c.format().find("/some/dir/kernel.csv") != std::string::npos);
}

TEST_CASE("build_problem assembles every block") {
  auto p = build_problem(Config::parse(kPointDelay), 1);
  CHECK(p.alpha() == 1.0);
  CHECK(p.mu.atoms().size() == 2);
  CHECK(p.mu.total_mass() == doctest::Approx(-1.75));
  CHECK(p.F.kind() == DiffusionFunctional::Kind::PointDelay);
  CHECK(p.F.sup_bound().value() == 2.0);
  CHECK(p.levy.sigma2 == 1.0);
  REQUIRE(p.levy.jump.has_value());
  CHECK(p.levy.jump->family == JumpFamily::Exponential);
  CHECK(p.phi.values.back() == doctest::Approx(1.0));
  CHECK(p.phi.values.front() == doctest::Approx(0.5));
  CHECK(p.T == 4.0);
  CHECK_NOTHROW(p.validate());

  auto bad = Config::parse(kPointDelay);
  bad.set("F.kind", "wiggly");
  CHECK_THROWS_AS(build_problem(bad, 1), Error);
  bad = Config::parse(kPointDelay);
  bad.set("mu.atoms", "-2:1");
  CHECK_THROWS_AS(build_problem(bad, 1), Error);
}

TEST_CASE("pathwise drift form") {
  auto c = Config::parse(kPointDelay);
  c.set("levy.drift_form", "pathwise");
  c.set("levy.b", "0.2");
  CHECK(build_levy(c).pathwise_drift() == doctest::Approx(0.2));
  c.set("levy.drift_form", "triplet");
  CHECK(build_levy(c).b == doctest::Approx(0.2));
}

TEST_CASE("manifest reproduces the run byte for byte") {
  auto dir1 = scratch("manifest1"), dir2 = scratch("manifest2");
  auto cfg = Config::parse(kPointDelay);
  cfg.set("simulate.replicates", "2");
  RunRequest req{"simulate", cfg, 17, 1, dir1};
  auto out1 = run_experiment(req);
  REQUIRE(out1.status == kExitOk);

  RunRequest again{"simulate", Config::load(dir1 / "manifest.txt"), std::nullopt, 1, dir2};
  auto out2 = run_experiment(again);
  REQUIRE(out2.status == kExitOk);
  CHECK(slurp(dir1 / "manifest.txt") == slurp(dir2 / "manifest.txt"));
  for (const auto& f : out1.files) CHECK(slurp(f) == slurp(dir2 / f.filename()));
  CHECK(out1.summary == out2.summary);
}

TEST_CASE("output does not depend on the thread count") {
  auto cfg = Config::parse(kPointDelay);
  cfg.set("kb.burn_in", "10");
  cfg.set("kb.horizon", "200");
  cfg.set("kb.spacing", "0.5");
  cfg.set("kb.replicates", "3");
  cfg.set("covariance.lags", "0 0.5 1");
  auto d1 = scratch("threads1"), d3 = scratch("threads3");
  auto a = run_experiment(RunRequest{"covariance", cfg, 5, 1, d1});
  auto b = run_experiment(RunRequest{"covariance", cfg, 5, 3, d3});
  REQUIRE(a.status == kExitOk);
  REQUIRE(b.status == kExitOk);
  REQUIRE(a.files.size() == b.files.size());
  for (const auto& f : a.files) {
    if (f.filename() == "manifest.txt") continue;  // records the thread count
    CHECK(slurp(f) == slurp(d3 / f.filename()));
  }
}

TEST_CASE("run_experiment reports failures through the status") {
  auto dir = scratch("failures");
  auto unknown = run_experiment(RunRequest{"dance", Config::parse("T = 1\n"), 1, 1, dir});
  CHECK(unknown.status == kExitConfig);
  CHECK_FALSE(unknown.error.empty());

  auto unstable = Config::parse("mu.alpha = 1\nmu.atoms = 0:0.5\nlevy.sigma2 = 1\nF.kind = constant\nF.m = 1\nh = 0.01\nkb.horizon = 100\n");
  auto r = run_experiment(RunRequest{"covariance", unstable, 1, 1, dir});
  CHECK(r.status == kExitNumerical);

  CHECK(exit_code_for(ErrorKind::Io) == kExitIo);
  CHECK(exit_code_for(ErrorKind::InvalidArgument) == kExitConfig);
}
