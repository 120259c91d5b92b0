#include "sddelab/error.hpp"
#include "sddelab/estimators.hpp"
#include "sddelab/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sddelab;

TEST_CASE("batch mean of i.i.d. normals") {
  Rng rng(1);
  std::vector<double> x(30000);
  for (auto& v : x) v = 2.0 + rng.normal();
  auto m = batch_mean(x);
  CHECK(std::abs(m.value - 2.0) < 4.0 * m.se);
  CHECK(m.se == doctest::Approx(1.0 / std::sqrt(30000.0)).epsilon(0.4));
}

TEST_CASE("autocovariance of white noise") {
  Rng rng(2);
  std::vector<std::vector<double>> series(4, std::vector<double>(20000));
  for (auto& s : series) {
    for (auto& v : s) v = rng.normal();
  }
  const std::size_t lags[] = {0, 1, 5};
  auto c = autocovariance(series, lags);
  REQUIRE(c.size() == 3);
  CHECK(std::abs(c[0].value - 1.0) < 4.0 * c[0].se);
  CHECK(std::abs(c[1].value) < 4.0 * c[1].se);
  CHECK(std::abs(c[2].value) < 4.0 * c[2].se);
  CHECK(c[0].se == doctest::Approx(std::sqrt(2.0 / 80000.0)).epsilon(0.4));
}

TEST_CASE("autocovariance of a moving average") {
  // x_k = e_k + e_{k-1}: gamma(0) = 2, gamma(1) = 1, gamma(2) = 0
  Rng rng(3);
  std::vector<std::vector<double>> series(1);
  double prev = rng.normal();
  for (int k = 0; k < 100000; ++k) {
    const double e = rng.normal();
    series[0].push_back(e + prev);
    prev = e;
  }
  const std::size_t lags[] = {0, 1, 2};
  auto c = autocovariance(series, lags);
  CHECK(std::abs(c[0].value - 2.0) < 4.0 * c[0].se);
  CHECK(std::abs(c[1].value - 1.0) < 4.0 * c[1].se);
  CHECK(std::abs(c[2].value) < 4.0 * c[2].se);
}

TEST_CASE("periodogram locates a cosine and integrates to the variance") {
  const double dt = 0.1, omega = 2.0;
  std::vector<std::vector<double>> series(1);
  for (int k = 0; k < 8192; ++k) series[0].push_back(std::cos(omega * k * dt));
  auto S = periodogram(series, dt, 1024);
  std::size_t best = 0;
  for (std::size_t i = 1; i < S.size(); ++i) {
    if (S[i].value > S[best].value) best = i;
  }
  const double dxi = S[1].xi - S[0].xi;
  CHECK(std::abs(S[best].xi - omega) <= dxi);
  // c(0) = (1/pi) int_0^inf S = 1/2 for a unit cosine
  double area = 0.0;
  for (const auto& p : S) area += p.value * dxi;
  CHECK(area / std::numbers::pi == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("white-noise periodogram is flat at dt * variance") {
  Rng rng(4);
  const double dt = 0.5;
  std::vector<std::vector<double>> series(2, std::vector<double>(1 << 16));
  for (auto& s : series) {
    for (auto& v : s) v = rng.normal();
  }
  auto S = periodogram(series, dt, 256, 2);
  double mean = 0.0;
  for (std::size_t i = 1; i < S.size(); ++i) mean += S[i].value;
  mean /= static_cast<double>(S.size() - 1);
  CHECK(mean == doctest::Approx(dt).epsilon(0.03));
}

TEST_CASE("power-law fit recovers the exponent of a uniform power") {
  // P(X <= x) = x^2 on [0, 1]: X = sqrt(U)
  Rng rng(5);
  std::vector<double> x(200000);
  for (auto& v : x) v = std::sqrt(rng.uniform());
  auto fit = power_law_fit(x, 0.5);
  CHECK(fit.exponent == doctest::Approx(2.0).epsilon(0.03));
  CHECK(fit.points > 5);
  CHECK(fit.x_hi == doctest::Approx(0.5));
}
