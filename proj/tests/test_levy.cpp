#include "sddelab/delay_measure.hpp"
#include "sddelab/error.hpp"
#include "sddelab/functional.hpp"
#include "sddelab/levy.hpp"
#include "sddelab/random.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

using namespace sddelab;

namespace {

// Density of |J| on (0, inf) for the continuous families.
std::function<double(double)> abs_density(const JumpSpec& j) {
  switch (j.family) {
    case JumpFamily::Exponential:
      return [m = j.mean](double x) { return std::exp(-x / m) / m; };
    case JumpFamily::TwoSidedExponential:
      return [j](double x) {
        return j.p_up * std::exp(-x / j.mean_up) / j.mean_up + (1 - j.p_up) * std::exp(-x / j.mean_down) / j.mean_down;
      };
    case JumpFamily::Pareto:
      return [j](double x) {
        return x < j.x_min ? 0.0 : j.tail_index * std::pow(j.x_min, j.tail_index) / std::pow(x, j.tail_index + 1);
      };
    case JumpFamily::LogHeavy:
      return [](double x) {
        const double l = std::log(x);
        return x <= std::numbers::e ? 0.0 : 1.0 / (x * l * l);
      };
    default:
      return {};
  }
}

// int_1^X log x f(x) dx with x = e^y: int_0^{log X} y f(e^y) e^y dy, composite Simpson.
double log_moment_upto(const std::function<double(double)>& f, double X) {
  const double Y = std::log(X);
  const int n = 200000;
  const double dy = Y / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = i * dy;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * y * f(std::exp(y)) * std::exp(y);
  }
  return acc * dy / 3.0;
}

bool oracle_log_moment_finite(const JumpSpec& j) {
  if (j.family == JumpFamily::Constant) return true;
  const auto f = abs_density(j);
  return log_moment_upto(f, 1e32) - log_moment_upto(f, 1e16) < 1e-3;
}

double total_L1(const LevyIncrements& inc) {
  double s = 0.0;
  for (double c : inc.continuous) s += c;
  for (const auto& j : inc.jumps) s += j.size;
  return s;
}

}  // namespace

TEST_CASE("increments: Var L(1) = sigma2 + lambda E J^2") {
  auto trip = LevyTriplet::from_pathwise(0.0, 1.0, JumpSpec::constant(2.0, 1.0));
  const int n = 20000;
  double s = 0, s2 = 0, count = 0;
  for (int i = 0; i < n; ++i) {
    auto inc = sample_path(trip, 1.0, 0.01, derive_seed(77, i));
    const double x = total_L1(inc);
    s += x;
    s2 += x * x;
    count += static_cast<double>(inc.jumps.size());
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean - 2.0) < 4.0 * std::sqrt(3.0 / n));
  CHECK(std::abs(var - 3.0) < 4.0 * 3.0 * std::sqrt(2.0 / n) * 1.5);
  CHECK(std::abs(count / n - 2.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(trip.second_moment_rate() == 3.0);
}

TEST_CASE("jump times are ordered, in range and independent of the step") {
  auto trip = LevyTriplet::from_pathwise(0.0, 0.5, JumpSpec::exponential(5.0, 0.3));
  auto a = sample_path(trip, 10.0, 0.01, 9);
  auto b = sample_path(trip, 10.0, 0.001, 9);
  REQUIRE(a.jumps.size() == b.jumps.size());
  for (std::size_t i = 0; i < a.jumps.size(); ++i) {
    CHECK(a.jumps[i].time == b.jumps[i].time);
    CHECK(a.jumps[i].size == b.jumps[i].size);
    if (i) CHECK(a.jumps[i - 1].time < a.jumps[i].time);
    CHECK(a.jumps[i].time >= 0.0);
    CHECK(a.jumps[i].time < 10.0);
  }
  auto c = sample_path(trip, 10.0, 0.01, 9);
  CHECK(c.continuous == a.continuous);
}

TEST_CASE("coarsen sums increments and keeps jumps") {
  auto trip = LevyTriplet::from_pathwise(0.3, 1.0, JumpSpec::constant(1.0, 2.0));
  auto fine = sample_path(trip, 2.0, 0.001, 5);
  auto coarse = fine.coarsen(10);
  CHECK(coarse.h == doctest::Approx(0.01));
  REQUIRE(coarse.steps() == 200);
  double sf = 0, sc = 0;
  for (double v : fine.continuous) sf += v;
  for (double v : coarse.continuous) sc += v;
  CHECK(sc == doctest::Approx(sf).epsilon(1e-12));
  CHECK(coarse.jumps.size() == fine.jumps.size());
  CHECK_THROWS_AS(fine.coarsen(7), Error);
}

TEST_CASE("moment rates") {
  SUBCASE("exponential") {
    LevyTriplet t{0.5, 0.0, JumpSpec::exponential(2.0, 1.0)};
    // E[J 1{J > 1}] = 2 / e for unit mean
    CHECK(t.mean_rate() == doctest::Approx(0.5 + 2.0 * 2.0 / std::numbers::e));
    CHECK(t.second_moment_rate() == doctest::Approx(4.0));
    CHECK(t.pathwise_drift() == doctest::Approx(0.5 - 2.0 * (1.0 - 2.0 / std::numbers::e)));
  }
  SUBCASE("pareto") {
    CHECK(std::isinf(JumpSpec::pareto(1.0, 1.0, 1.5).second_moment()));
    CHECK(JumpSpec::pareto(1.0, 1.0, 3.0).second_moment() == doctest::Approx(3.0));
    CHECK(JumpSpec::pareto(1.0, 2.0, 3.0).large_jump_mean() == doctest::Approx(3.0));
  }
  SUBCASE("from_pathwise inverts pathwise_drift") {
    auto t = LevyTriplet::from_pathwise(0.25, 1.0, JumpSpec::two_sided(3.0, 0.4, 0.7, 0.3));
    CHECK(t.pathwise_drift() == doctest::Approx(0.25).epsilon(1e-14));
  }
  CHECK(std::isinf(JumpSpec::log_heavy(1.0).second_moment()));
}

TEST_CASE("sample moments match the closed forms") {
  for (auto spec : {JumpSpec::exponential(1, 0.8), JumpSpec::two_sided(1, 0.5, 1.5, 0.4), JumpSpec::pareto(1, 1.2, 4.5)}) {
    Rng rng(13);
    const int n = 200000;
    double s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double j = spec.draw(rng);
      s2 += j * j;
    }
    CHECK(s2 / n == doctest::Approx(spec.second_moment()).epsilon(0.05));
  }
}

TEST_CASE("log-moment flag agrees with quadrature") {
  const JumpSpec specs[] = {JumpSpec::constant(1, 3.0), JumpSpec::exponential(1, 2.0),
                            JumpSpec::two_sided(1, 1.0, 2.0, 0.5), JumpSpec::pareto(1, 1.0, 0.5),
                            JumpSpec::log_heavy(1)};
  for (const auto& s : specs) {
    INFO(family_name(s.family));
    CHECK(s.log_moment_finite() == oracle_log_moment_finite(s));
  }
  CHECK_FALSE(JumpSpec::log_heavy(1).log_moment_finite());
}

TEST_CASE("validation and assumption report") {
  CHECK_THROWS_AS(JumpSpec::exponential(1.0, -1.0).validate(), Error);
  CHECK_THROWS_AS(JumpSpec::pareto(1.0, 1.0, 0.0).validate(), Error);
  CHECK_THROWS_AS((LevyTriplet{0.0, -1.0, {}}.validate()), Error);
  CHECK_THROWS_AS(parse_family("gamma"), Error);

  auto ok = check_assumptions(DelayMeasure::point(1.0, 0.0, -1.0), LevyTriplet{0, 1, JumpSpec::constant(1, 1)},
                              DiffusionFunctional::constant(1.0));
  CHECK(ok.passed());
  auto heavy = check_assumptions(DelayMeasure::point(1.0, 0.0, -1.0), LevyTriplet{0, 0, JumpSpec::log_heavy(1)},
                                 DiffusionFunctional::constant(1.0));
  CHECK(heavy.log_moment == Tri::False);
  auto unstable = check_assumptions(DelayMeasure::point(1.0, 0.0, 0.5), LevyTriplet{}, DiffusionFunctional::constant(1.0));
  CHECK(unstable.stable == Tri::False);
  CHECK(unstable.v0 == doctest::Approx(0.5).epsilon(1e-6));
  auto unbounded = check_assumptions(DelayMeasure::point(1.0, 0.0, -1.0), LevyTriplet{},
                                     DiffusionFunctional::no_delay(InnerMap::identity()));
  CHECK(unbounded.bounded == Tri::False);
}
