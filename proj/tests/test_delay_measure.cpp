#include "sddelab/delay_measure.hpp"
#include "sddelab/error.hpp"
#include "sddelab/random.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace sddelab;
using cd = std::complex<double>;

namespace {

// Largest real part among zeros of z - sum w e^{zu}, found by Newton from a dense grid of
// starting points (independent of the contour-integral search).
double newton_scan_v0(const DelayMeasure& mu, double re_lo, double re_hi, double im_hi) {
  double best = -1e300;
  for (double x = re_lo; x <= re_hi; x += 0.05) {
    for (double y = 0.0; y <= im_hi; y += 0.05) {
      cd z{x, y};
      for (int it = 0; it < 60; ++it) {
        cd f = z, df = 1.0;
        for (const auto& a : mu.spectral_atoms()) {
          const cd e = a.weight * std::exp(z * a.location);
          f -= e;
          df -= a.location * e;
        }
        const cd step = f / df;
        z -= step;
        if (std::abs(step) < 1e-14) break;
      }
      cd f = z;
      for (const auto& a : mu.spectral_atoms()) f -= a.weight * std::exp(z * a.location);
      if (std::abs(f) < 1e-10 && z.real() > best) best = z.real();
    }
  }
  return best;
}

DelayMeasure random_measure(Rng& rng) {
  const double alpha = 0.5 + rng.uniform();
  DelayMeasure mu(alpha);
  const int n = 1 + static_cast<int>(rng.uniform() * 3);
  for (int i = 0; i < n; ++i) mu.add_atom(-alpha * rng.uniform(), 2.0 * rng.uniform() - 1.5);
  return mu;
}

}  // namespace

TEST_CASE("apply: point evaluations and density quadrature") {
  SUBCASE("-a delta_0 picks -a phi(0)") {
    auto mu = DelayMeasure::point(1.0, 0.0, -1.0);
    auto seg = linear_segment(1.0, 0.01, 3.0, 1.0);
    CHECK(apply(mu, seg) == doctest::Approx(-3.0).epsilon(1e-14));
  }
  SUBCASE("delta_{-alpha} picks the left endpoint") {
    auto mu = DelayMeasure::point(2.0, -2.0, 1.0);
    auto seg = constant_segment(2.0, 0.1, 0.0);
    seg.values.front() = 7.0;
    CHECK(apply(mu, seg) == doctest::Approx(7.0).epsilon(1e-14));
  }
  SUBCASE("density b = 1 against phi(s) = s converges to -1/2") {
    DelayMeasure mu(1.0, {}, std::vector<double>(101, 1.0));
    double prev = 1.0;
    for (double h : {0.1, 0.05, 0.01}) {
      const double err = std::abs(apply(mu, linear_segment(1.0, h, 0.0, 1.0)) + 0.5);
      CHECK(err <= prev + 1e-15);
      prev = err;
    }
    CHECK(prev < 1e-12);
  }
  SUBCASE("off-grid atoms interpolate linearly") {
    auto mu = DelayMeasure::point(1.0, -0.25, 1.0);
    CHECK(apply(mu, linear_segment(1.0, 0.1, 1.0, 2.0)) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("span mismatch and non-finite values are rejected") {
    auto mu = DelayMeasure::point(1.0, 0.0, -1.0);
    CHECK_THROWS_AS(apply(mu, constant_segment(2.0, 0.1, 0.0)), Error);
    auto seg = constant_segment(1.0, 0.1, 0.0);
    seg.values[3] = std::nan("");
    CHECK_THROWS_AS(apply(mu, seg), Error);
  }
}

TEST_CASE("apply is linear and bounded by the total variation") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = 1.0;
    DelayMeasure m1(alpha), m2(alpha);
    for (int i = 0; i < 3; ++i) {
      m1.add_atom(-rng.uniform(), rng.normal());
      m2.add_atom(-rng.uniform(), rng.normal());
    }
    std::vector<double> d1(80), d2(80);
    for (auto& v : d1) v = rng.normal();
    for (auto& v : d2) v = rng.normal();
    m1.set_density(d1);
    m2.set_density(d2);
    const double c1 = rng.normal(), c2 = rng.normal();
    DelayMeasure combo(alpha);
    for (const auto& a : m1.atoms()) combo.add_atom(a.location, c1 * a.weight);
    for (const auto& a : m2.atoms()) combo.add_atom(a.location, c2 * a.weight);
    std::vector<double> dc(80);
    for (std::size_t i = 0; i < 80; ++i) dc[i] = c1 * d1[i] + c2 * d2[i];
    combo.set_density(dc);

    Segment seg = constant_segment(alpha, 0.01, 0.0);
    for (auto& v : seg.values) v = rng.normal();
    const double lhs = apply(combo, seg);
    const double rhs = c1 * apply(m1, seg) + c2 * apply(m2, seg);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    CHECK(std::abs(apply(m1, seg)) <= m1.total_variation() * seg.sup_abs() * (1 + 1e-12));
  }
}

TEST_CASE("characteristic function examples") {
  auto ou = DelayMeasure::point(1.0, 0.0, -2.0);
  CHECK(std::abs(char_function(ou, {0.3, 0.7}) - cd(2.3, 0.7)) < 1e-14);
  CHECK(char_function(ou, 0.0).real() == doctest::Approx(2.0));

  Rng rng(9);
  for (int i = 0; i < 10; ++i) {
    auto mu = random_measure(rng);
    CHECK(char_function(mu, 0.0).real() == doctest::Approx(-mu.total_mass()).epsilon(1e-12));
  }

  const double alpha = 1.3;
  auto pd = DelayMeasure::point(alpha, -alpha, -std::numbers::pi / (2 * alpha));
  CHECK(std::abs(char_function(pd, {0.0, std::numbers::pi / (2 * alpha)})) < 1e-14);
}

TEST_CASE("stability abscissa examples") {
  SUBCASE("-2 delta_0 gives -2") {
    auto r = stability_abscissa(DelayMeasure::point(1.0, 0.0, -2.0), 1e-10);
    CHECK(std::abs(r.v0 + 2.0) <= 1e-8);
  }
  SUBCASE("b alpha = -pi/2 sits on the boundary") {
    const double alpha = 1.0;
    auto r = stability_abscissa(DelayMeasure::point(alpha, -alpha, -std::numbers::pi / 2), 1e-8);
    CHECK(std::abs(r.v0) <= 1e-6);
  }
  SUBCASE("-1.5 delta_{-1} is stable; agrees with a Newton scan") {
    auto mu = DelayMeasure::point(1.0, -1.0, -1.5);
    auto r = stability_abscissa(mu, 1e-10);
    CHECK(r.v0 < 0.0);
    CHECK(std::abs(r.v0 - newton_scan_v0(mu, -3.0, 2.0, 8.0)) < 1e-6);
  }
  SUBCASE("random measures agree with a Newton scan") {
    Rng rng(21);
    for (int i = 0; i < 6; ++i) {
      auto mu = random_measure(rng);
      auto r = stability_abscissa(mu, 1e-10);
      if (r.below_search_floor) continue;
      // any zero to the right of the reported one would show up in this window
      const double lo = r.v0 - 1.0;
      const double oracle = newton_scan_v0(mu, lo, mu.total_variation() + 0.5, root_modulus_bound(mu, lo) + 0.5);
      CHECK(std::abs(r.v0 - oracle) < 1e-6);
    }
  }
}

TEST_CASE("v0 is unchanged by a zero-weight atom") {
  auto mu = DelayMeasure::point(1.0, -1.0, -1.2);
  auto mu0 = mu;
  mu0.add_atom(-0.37, 0.0);
  CHECK(stability_abscissa(mu, 1e-10).v0 == doctest::Approx(stability_abscissa(mu0, 1e-10).v0).epsilon(1e-9));
}

TEST_CASE("no zeros outside the modulus bound") {
  Rng rng(5);
  for (int i = 0; i < 8; ++i) {
    auto mu = random_measure(rng);
    const double tv = mu.total_variation();
    // Re >= 0 and |Im| beyond the bound
    auto above = count_roots(mu, Rect{0.0, tv + 1.0, tv + 0.1, 3.0 * tv + 5.0});
    REQUIRE(above.has_value());
    CHECK(*above == 0);
    // Re in [-1, 0): |lambda| <= tv e^{alpha}
    const double bound = tv * std::exp(mu.alpha());
    auto left = count_roots(mu, Rect{-1.0, -0.01, bound + 0.1, bound + 6.0});
    REQUIRE(left.has_value());
    CHECK(*left == 0);
    CHECK(root_modulus_bound(mu, -1.0) >= tv * std::exp(mu.alpha()) * (1 - 1e-12));
  }
}

TEST_CASE("text format round trip") {
  auto mu = parse_measure("alpha=1.5\natom=-1.5,-0.25\natom=0,-1\n");
  CHECK(mu.alpha() == 1.5);
  REQUIRE(mu.atoms().size() == 2);
  auto again = parse_measure(format_measure(mu));
  CHECK(again == mu);
  CHECK_THROWS_AS(parse_measure("atom=0,1\n"), Error);
  CHECK_THROWS_AS(parse_measure("alpha=1\natom=-2,1\n"), Error);
}
