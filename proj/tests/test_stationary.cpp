#include "sddelab/error.hpp"
#include "sddelab/fundamental.hpp"
#include "sddelab/stationary.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sddelab;

namespace {

SddeProblem ou_problem(double a, double sigma2, double T, double h) {
  SddeProblem p;
  p.mu = DelayMeasure::point(1.0, 0.0, -a);
  p.F = DiffusionFunctional::constant(1.0);
  p.levy = LevyTriplet{0.0, sigma2, {}};
  p.T = T;
  p.h = h;
  p.phi = constant_segment(1.0, h, 0.0);
  return p;
}

SddeProblem cp_problem(double a, double lambda, double J, double T, double h) {
  SddeProblem p = ou_problem(a, 0.0, T, h);
  p.levy = LevyTriplet::from_pathwise(0.0, 0.0, JumpSpec::constant(lambda, J));
  return p;
}

void check_duality(const DelayMeasure& mu, double h) {
  const double v0 = stability_abscissa(mu, 1e-10).v0;
  auto fs = compute_r(mu, default_horizon(mu, v0, h), h);
  const double var0 = analytic_variance(fs, LevyTriplet{0.0, 1.0, {}}, 1.0);
  std::vector<double> lags;
  for (double l = 0.0; l <= 3.0 * mu.alpha() + 1e-12; l += 0.25 * mu.alpha()) lags.push_back(l);
  auto spectral = spectral_inverse(fs, mu, var0, lags);
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double c = analytic_covariance(fs, var0, lags[i]);
    INFO("lag " << lags[i]);
    if (std::abs(c) > 0.05 * var0) {
      CHECK(std::abs(spectral[i] - c) <= 0.02 * std::abs(c));
    } else {
      CHECK(std::abs(spectral[i] - c) <= 0.02 * 0.05 * var0);
    }
  }
}

}  // namespace

TEST_CASE("OU closed forms") {
  auto mu = DelayMeasure::point(1.0, 0.0, -1.0);
  auto fs = compute_r(mu, 40.0, 1e-3);
  const double var0 = analytic_variance(fs, LevyTriplet{0.0, 1.0, {}}, 1.0);
  CHECK(var0 == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(analytic_covariance(fs, var0, 1.0) == doctest::Approx(0.18394).epsilon(1e-4));
  CHECK(analytic_spectral_density(fs, mu, var0, 0.0) == doctest::Approx(1.0).epsilon(1e-5));
  const double xi = 1e3;
  CHECK(xi * xi * analytic_spectral_density(fs, mu, var0, xi) == doctest::Approx(var0 / 0.5).epsilon(1e-4));
  CHECK(analytic_variance(fs, LevyTriplet{0.0, 1.0, {}}, 0.0) == 0.0);
  CHECK(analytic_variance(fs, LevyTriplet{0.0, 0.5, JumpSpec::exponential(2.0, 0.5)}, 4.0) ==
        doctest::Approx(4.0 * (0.5 + 2.0 * 0.5) * 0.5).epsilon(1e-5));
  CHECK(analytic_mean(mu, LevyTriplet{0.3, 1.0, {}}, 2.0) == doctest::Approx(0.6));
  CHECK_THROWS_AS(analytic_variance(fs, LevyTriplet{0.0, 0.0, JumpSpec::pareto(1.0, 1.0, 1.5)}, 1.0), Error);
}

TEST_CASE("spectral inverse agrees with the direct covariance") {
  check_duality(DelayMeasure::point(1.0, 0.0, -1.0), 1e-3);
  check_duality(DelayMeasure::point(1.0, -1.0, -1.5), 1e-3);
}

TEST_CASE("Krylov-Bogoliubov on OU matches the stationary law") {
  auto p = ou_problem(1.0, 1.0, 2000.0, 0.01);
  KbOptions o;
  o.burn_in = 20.0;
  o.horizon = 2000.0;
  o.spacing = 0.5;
  o.replicates = 4;
  o.seed = 3;
  auto em = krylov_bogoliubov(p, o);
  CHECK(em.warning.empty());
  CHECK(em.count() == 4 * 4000);
  const auto v = em.variance();
  // Euler transition variance: sigma^2 h / (1 - (1 - a h)^2)
  const double expected = 0.01 / (1.0 - 0.99 * 0.99);
  CHECK(std::abs(v.value - expected) <= 3.0 * v.se);
  CHECK(std::abs(em.mean().value) <= 3.0 * em.mean().se);
  CHECK(em.ef2 == 1.0);

  SUBCASE("doubling the burn-in leaves the estimate within its error") {
    o.burn_in = 40.0;
    auto em2 = krylov_bogoliubov(p, o);
    const auto v2 = em2.variance();
    CHECK(std::abs(v2.value - v.value) <= 3.0 * std::hypot(v.se, v2.se));
  }
}

TEST_CASE("Krylov-Bogoliubov flags an unstable drift") {
  auto p = ou_problem(-0.1, 1.0, 10.0, 0.01);
  KbOptions o;
  o.burn_in = 1.0;
  o.horizon = 10.0;
  o.spacing = 1.0;
  auto em = krylov_bogoliubov(p, o);
  CHECK_FALSE(em.warning.empty());
  CHECK(em.gate.stable == Tri::False);
}

TEST_CASE("power-law exponent is invariant under rescaling J and the window together") {
  KbOptions o;
  o.burn_in = 20.0;
  o.horizon = 5000.0;
  o.spacing = 0.05;
  o.seed = 11;
  auto p1 = cp_problem(1.0, 2.0, 1.0, 5000.0, 0.01);
  auto p2 = cp_problem(1.0, 2.0, 2.0, 5000.0, 0.01);
  auto r1 = cp_power_law_fit(p1, krylov_bogoliubov(p1, o), 0.5);
  auto r2 = cp_power_law_fit(p2, krylov_bogoliubov(p2, o), 1.0);
  CHECK(r1.fit.exponent == doctest::Approx(r2.fit.exponent).epsilon(1e-12));
  CHECK(r1.predicted == 2.0);
}

TEST_CASE("compound-Poisson form is enforced") {
  auto p = cp_problem(1.0, 2.0, 1.0, 10.0, 0.01);
  CHECK(check_cp_form(p, 0.5).floor == 1.0);
  CHECK_THROWS_AS(check_cp_form(p, 1.5), Error);
  auto q = p;
  q.levy.sigma2 = 1.0;
  CHECK_THROWS_AS(check_cp_form(q, 0.5), Error);
  q = p;
  q.mu = DelayMeasure::point(1.0, -1.0, -1.0);
  CHECK_THROWS_AS(check_cp_form(q, 0.5), Error);
  q = p;
  q.levy = LevyTriplet{0.0, 0.0, JumpSpec::exponential(2.0, 1.0)};
  CHECK_THROWS_AS(check_cp_form(q, 0.5), Error);
}

TEST_CASE("tightness diagnostic") {
  TightnessOptions o;
  o.K = {1.0, 2.0, 5.0, 10.0};
  o.replicates = 100;
  o.seed = 5;
  SUBCASE("stable OU stays tight") {
    o.checkpoints = {10.0, 20.0, 40.0};
    auto t = tightness_diagnostic(ou_problem(1.0, 1.0, 40.0, 0.01), o);
    CHECK(t.monotone);
    CHECK_FALSE(t.growth);
    for (const auto& row : t.segment) CHECK(row.back() < 1e-3);
  }
  SUBCASE("unstable drift shows growth") {
    o.checkpoints = {5.0, 30.0};
    auto t = tightness_diagnostic(ou_problem(-0.3, 1.0, 30.0, 0.01), o);
    CHECK(t.monotone);
    CHECK(t.growth);
    CHECK(t.segment.back().back() > 0.5);
  }
}
