#include "sddelab/error.hpp"
#include "sddelab/fundamental.hpp"
#include "sddelab/random.hpp"
#include "sddelab/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace sddelab;

namespace {

SddeProblem base_problem(DelayMeasure mu, double T, double h) {
  SddeProblem p;
  p.mu = mu;
  p.T = T;
  p.h = h;
  p.phi = constant_segment(mu.alpha(), h, 1.0);
  return p;
}

}  // namespace

TEST_CASE("without noise Euler approaches the deterministic solution at first order") {
  auto mu = DelayMeasure::point(1.0, -1.0, -1.5);
  double prev = 0.0;
  for (double h : {0.01, 0.005, 0.0025}) {
    auto p = base_problem(mu, 5.0, h);
    auto x = solve_euler(p, 1);
    auto ref = deterministic_solution(mu, p.phi, 5.0, h);
    double d = 0.0;
    for (std::size_t k = 0; k < x.values.size(); ++k) d = std::max(d, std::abs(x.values[k] - ref.values[k]));
    CHECK(d < 5.0 * h);
    if (prev > 0) CHECK(prev / d == doctest::Approx(2.0).epsilon(0.15));
    prev = d;
  }
}

TEST_CASE("pure-jump OU is solved exactly between jumps") {
  const double a = 0.7, h = 0.01;
  auto p = base_problem(DelayMeasure::point(1.0, 0.0, -a), 10.0, h);
  p.F = DiffusionFunctional::constant(1.5);
  p.levy = LevyTriplet::from_pathwise(0.0, 0.0, JumpSpec::exponential(2.0, 1.0));
  auto noise = sample_path(p.levy, p.T, h, 3);
  auto x = solve_euler(p, noise);
  REQUIRE(!noise.jumps.empty());
  for (double t : {1.0, 4.5, 10.0}) {
    double expected = std::exp(-a * t);
    for (const auto& j : noise.jumps) {
      if (j.time <= t) expected += 1.5 * j.size * std::exp(-a * (t - j.time));
    }
    CHECK(x.values[x.index_of(t)] == doctest::Approx(expected).epsilon(1e-11));
  }
}

TEST_CASE("with mu = 0 and F = 1 the path is phi(0) plus the noise") {
  const double h = 0.01;
  auto p = base_problem(DelayMeasure(1.0), 5.0, h);
  p.F = DiffusionFunctional::constant(1.0);
  p.levy = LevyTriplet::from_pathwise(0.2, 0.0, JumpSpec::constant(3.0, 0.5));
  auto noise = sample_path(p.levy, p.T, h, 5);
  auto x = solve_euler(p, noise);
  const double expected = 1.0 + 0.2 * 5.0 + 0.5 * static_cast<double>(noise.jumps.size());
  CHECK(x.values.back() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("variation of constants") {
  auto mu = DelayMeasure::point(1.0, -1.0, -1.0);
  SUBCASE("F = 0 reproduces the deterministic solution") {
    auto p = base_problem(mu, 4.0, 0.01);
    p.levy = LevyTriplet{0.0, 1.0, JumpSpec::constant(1.0, 1.0)};
    auto fs = compute_r(mu, 4.0, 0.01);
    auto x = solve_voc(p, sample_path(p.levy, 4.0, 0.01, 1), fs);
    auto ref = deterministic_solution(mu, p.phi, 4.0, 0.01);
    for (std::size_t k = 0; k < x.values.size(); ++k) CHECK(x.values[k] == doctest::Approx(ref.values[k]).epsilon(1e-12));
  }
  SUBCASE("Euler and variation of constants converge together on a fixed noise path") {
    const double T = 5.0;
    DelayMeasure mu2(1.0);
    mu2.add_atom(0.0, -0.5).add_atom(-1.0, -0.7);
    auto levy = LevyTriplet::from_pathwise(0.0, 0.5, JumpSpec::constant(1.5, 0.4));
    auto fine_noise = sample_path(levy, T, 0.0025, 12);
    auto gap = [&](double h) {
      auto p = base_problem(mu2, T, h);
      p.F = DiffusionFunctional::constant(0.8);
      p.levy = levy;
      auto noise = fine_noise.coarsen(static_cast<std::size_t>(std::llround(h / 0.0025)));
      auto e = solve_euler(p, noise);
      auto v = solve_voc(p, noise, compute_r(mu2, T, h));
      double d = 0.0;
      for (std::size_t k = 0; k < e.values.size(); ++k) d = std::max(d, std::abs(e.values[k] - v.values[k]));
      return d;
    };
    const double g1 = gap(0.01), g2 = gap(0.005), g3 = gap(0.0025);
    CHECK(g1 / g2 > 1.5);
    CHECK(g1 / g2 < 3.0);
    CHECK(g2 / g3 > 1.5);
    CHECK(g2 / g3 < 3.0);
  }
  SUBCASE("mismatched inputs are rejected") {
    auto p = base_problem(mu, 4.0, 0.01);
    auto noise = sample_path(p.levy, 4.0, 0.01, 1);
    CHECK_THROWS_AS(solve_voc(p, noise, compute_r(mu, 2.0, 0.01)), Error);
    CHECK_THROWS_AS(solve_voc(p, noise, compute_r(DelayMeasure::point(1.0, 0.0, -1.0), 4.0, 0.01)), Error);
  }
}

TEST_CASE("coupled pairs") {
  auto mu = DelayMeasure::point(1.0, -1.0, -1.0);
  auto p = base_problem(mu, 5.0, 0.01);
  p.levy = LevyTriplet::from_pathwise(0.0, 1.0, JumpSpec::two_sided(1.0, 1.0, 1.0, 0.5));
  SUBCASE("identical starts give identical paths") {
    p.F = DiffusionFunctional::no_delay(InnerMap::tanh_scaled(1.0, 0.5, 1.0));
    auto [x, y] = coupled_pair(p, p.phi, p.phi, 4);
    CHECK(x.values == y.values);
  }
  SUBCASE("with constant F the difference solves the deterministic equation") {
    p.F = DiffusionFunctional::constant(0.8);
    auto phi2 = linear_segment(1.0, 0.01, -0.5, 1.0);
    auto [x, y] = coupled_pair(p, p.phi, phi2, 4);
    Segment diff = p.phi;
    for (std::size_t j = 0; j < diff.values.size(); ++j) diff.values[j] -= phi2.values[j];
    auto ref = solve_euler([&] {
      auto q = p;
      q.phi = diff;
      q.F = DiffusionFunctional::constant(0.0);
      return q;
    }(), 99);
    for (std::size_t k = 0; k < x.values.size(); ++k) {
      CHECK(x.values[k] - y.values[k] == doctest::Approx(ref.values[k]).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("one step from a segment has the Euler mean and variance") {
  auto mu = DelayMeasure::point(1.0, -0.5, -2.0);
  const double h = 0.01, sigma2 = 2.0, Fc = 1.5;
  auto p = base_problem(mu, 0.01, h);
  p.phi = linear_segment(1.0, h, 1.0, 1.0);  // phi(-0.5) = 0.5
  p.F = DiffusionFunctional::constant(Fc);
  p.levy = LevyTriplet{0.0, sigma2, {}};
  const int n = 40000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    EulerRun run(p, derive_seed(6, i));
    run.step();
    s += run.value();
    s2 += run.value() * run.value();
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  const double v = Fc * Fc * sigma2 * h;
  CHECK(std::abs(mean - (1.0 - 2.0 * 0.5 * h)) < 4.0 * std::sqrt(v / n));
  CHECK(var == doctest::Approx(v).epsilon(4.0 * std::sqrt(2.0 / n)));
}

TEST_CASE("fraction of steps containing a jump is about lambda h") {
  const double h = 0.01, lambda = 3.0;
  auto p = base_problem(DelayMeasure::point(1.0, 0.0, -1.0), 2000.0, h);
  p.F = DiffusionFunctional::constant(1.0);
  p.levy = LevyTriplet::from_pathwise(0.0, 0.0, JumpSpec::constant(lambda, 1.0));
  auto x = solve_euler(p, 2);
  std::size_t cells = 0;
  double last = -1.0;
  for (const auto& j : x.jumps) {
    const double cell = std::ceil(j.time / h - 1e-9);
    if (cell != last) ++cells;
    last = cell;
  }
  const double n = p.T / h, q = 1.0 - std::exp(-lambda * h);
  CHECK(std::abs(cells / n - q) < 4.0 * std::sqrt(q * (1 - q) / n));
}

TEST_CASE("runs are reproducible and validate their input") {
  auto p = base_problem(DelayMeasure::point(1.0, -1.0, -1.0), 3.0, 0.01);
  p.F = DiffusionFunctional::running_sup(InnerMap::clamp(0.0, 2.0), 0.5);
  p.levy = LevyTriplet::from_pathwise(0.0, 1.0, JumpSpec::pareto(2.0, 0.5, 2.5));
  auto a = solve_euler(p, 42), b = solve_euler(p, 42), c = solve_euler(p, 43);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);

  auto bad = p;
  bad.T = 0.0;
  CHECK_THROWS_AS(solve_euler(bad, 1), Error);
  bad = p;
  bad.phi = constant_segment(2.0, 0.01, 1.0);
  CHECK_THROWS_AS(solve_euler(bad, 1), Error);
}

TEST_CASE("stationary OU segment has the stationary variance") {
  Rng rng(10);
  const double a = 2.0, sigma = 1.0;
  const int n = 20000;
  double s2 = 0, cross = 0;
  for (int i = 0; i < n; ++i) {
    auto seg = stationary_ou_segment(1.0, 0.1, a, sigma, rng);
    s2 += seg.values.back() * seg.values.back();
    cross += seg.values.back() * seg.values.front();
  }
  const double v = sigma * sigma / (2 * a);
  CHECK(s2 / n == doctest::Approx(v).epsilon(0.05));
  CHECK(cross / n == doctest::Approx(v * std::exp(-a)).epsilon(0.25));
}
