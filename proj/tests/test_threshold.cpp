#include <doctest.h>

#include <cmath>
#include <vector>

#include "geodetect/error.hpp"
#include "geodetect/numeric.hpp"
#include "geodetect/threshold.hpp"

using namespace geodetect;

namespace {

AlphaSpectrum iso(std::size_t d) { return spectrum_family(SpectrumKind::isotropic, d); }

}  // namespace

TEST_CASE("survival function against closed forms") {
  // d=2: <X1,X2> is Laplace(1). d=4: a sum of two Laplace(1) variables.
  for (double t : {0.0, 0.3, 1.0, 2.5, 6.0}) {
    CHECK(inner_product_survival(iso(2), t).value == doctest::Approx(0.5 * std::exp(-t)).epsilon(1e-9));
    CHECK(inner_product_survival(iso(4), t).value ==
          doctest::Approx(0.25 * std::exp(-t) * (2 + t)).epsilon(1e-9));
  }
  CHECK(inner_product_survival(iso(2), -1.0).value ==
        doctest::Approx(1 - 0.5 * std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("charfun threshold inverts the survival function") {
  const auto t = threshold_charfun(iso(2), 0.1);
  CHECK(t.method == ThresholdMethod::charfun_inversion);
  CHECK(t.t == doctest::Approx(std::log(5.0)).epsilon(1e-8));
  REQUIRE(t.error_bound.has_value());
  CHECK(*t.error_bound < 1e-7);
  CHECK(std::abs(t.t - std::log(5.0)) <= *t.error_bound);
  CHECK(threshold_charfun(iso(2), 0.5).t == 0.0);
  CHECK(threshold_charfun(iso(7), 0.2).t > threshold_charfun(iso(7), 0.3).t);
  CHECK_THROWS_AS(threshold_charfun(iso(2), 1.0), InvalidParameter);
}

TEST_CASE("normal approximation") {
  const auto t = threshold_normal(iso(100), normal_sf(1.0));
  CHECK(t.t == doctest::Approx(10.0).epsilon(1e-12));
  REQUIRE(t.prob_error_bound.has_value());
  CHECK(*t.prob_error_bound == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(threshold_normal(iso(3), 0.5).t == 0.0);
}

TEST_CASE("Monte Carlo threshold agrees with inversion") {
  const auto a = spectrum_family(SpectrumKind::power_law, 30, {0.5, 0, 0});
  const auto exact = threshold_charfun(a, 0.2);
  const auto mc = threshold_mc(a, 0.2, 400000, {3, 0});
  REQUIRE(mc.std_error.has_value());
  CHECK(std::abs(mc.t - exact.t) <= 4 * *mc.std_error);

  const auto one = threshold_mc(a, 0.2, 200000, {4, 0}, ExecContext{1});
  const auto four = threshold_mc(a, 0.2, 200000, {4, 0}, ExecContext{4});
  CHECK(one.t == four.t);
}

TEST_CASE("inner product sampler variance") {
  const auto a = AlphaSpectrum::from_values({1, 0.5, 0.5, 0.5, 0.1});
  const auto xs = sample_inner_products(a, 300000, {9, 0});
  MomentAccumulator m;
  for (double x : xs) m.add(x * x);
  CHECK(std::abs(m.mean - a.power_sum(2)) <= 4 * m.std_error());
}

TEST_CASE("Berry-Esseen gap respects the bound") {
  for (std::size_t d : {1u, 5u, 50u}) {
    const auto g = berry_esseen_gap(iso(d), 200000, {d, 0});
    CHECK(g.gap <= g.bound + 3 * g.std_error);
    CHECK(g.bound == doctest::Approx(3.0 / std::sqrt(static_cast<double>(d))).epsilon(1e-12));
  }
}
