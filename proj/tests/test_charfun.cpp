#include <doctest.h>

#include <cmath>
#include <complex>

#include "geodetect/charfun.hpp"
#include "geodetect/threshold.hpp"

using namespace geodetect;

namespace {

AlphaSpectrum spec(std::vector<double> v) { return AlphaSpectrum::from_values(std::move(v)); }

QuadratureParams loose(double rel) {
  QuadratureParams q;
  q.rel_tol = rel;
  return q;
}

}  // namespace

TEST_CASE("characteristic functions") {
  const auto a = spec({1, 0.7, 0.2});
  CHECK(std::abs(phi(a, 0, 0, 0) - 1.0) < 1e-15);
  // On the axes both laws coincide.
  CHECK(psi(a, 0, 1.3, 0) == doctest::Approx(std::abs(phi(a, 0, 1.3, 0))).epsilon(1e-14));
  // With a single zero argument they do not: the two remaining products are
  // uncorrelated but not independent.
  CHECK(std::abs(psi(a, 0.4, 1.3, 0) - std::abs(phi(a, 0.4, 1.3, 0))) > 1e-2);

  // Direct product for a small spectrum.
  const double x = 0.3, y = -0.5, z = 0.8;
  std::complex<double> want = 1.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double s = a[i];
    want *= std::pow(std::complex<double>(1 + s * s * (x * x + y * y + z * z), 2 * s * s * s * x * y * z), -0.5);
  }
  CHECK(std::abs(phi(a, x, y, z) - want) < 1e-14);

  // Large isotropic dimension neither underflows nor loses the phase.
  const auto big = spectrum_family(SpectrumKind::isotropic, 1'000'000);
  const auto v = phi(big, 1e-3, 1e-3, 1e-3);
  CHECK(std::isfinite(v.real()));
  CHECK(std::abs(v) > 0.0);
  CHECK(integrand_half(a, 0.3, 0.8, 1.1) == integrand_half(a, -0.3, 0.8, 1.1));
}

TEST_CASE("half-probability inversion") {
  const auto r1 = triangle_prob_half(spec({1}), loose(1e-6));
  CHECK(std::abs(r1.value - 0.25) <= std::max(1e-6, r1.error_bound));
  CHECK(r1.error_bound <= 1e-6);

  for (std::size_t d : {2u, 8u, 64u}) {
    const auto a = spectrum_family(SpectrumKind::isotropic, d);
    const auto c = triangle_prob_half(a);
    const auto m = triangle_prob_mc(a, 0.5, 0.0, 1'000'000, {d, 0});
    CHECK(std::abs(c.value - m.value) <= c.error_bound + m.error_bound);
    CHECK(c.value > 0.125);
  }
  CHECK(triangle_prob_half(spectrum_family(SpectrumKind::isotropic, 2)).value ==
        doctest::Approx(3.0 / 16.0).epsilon(1e-6));
}

TEST_CASE("general inversion reduces to the half case at t=0") {
  const auto a = spec({1, 0.5});
  const auto h = triangle_prob_half(a, loose(1e-8));
  const auto g = triangle_prob_general(a, 0.5, 0.0, loose(1e-8));
  CHECK(std::abs(g.value - h.value) <= 1e-10);
}

TEST_CASE("independent model returns p cubed") {
  const auto a = spec({1, 0.5});
  const double p = 0.3;
  const double t = threshold_charfun(a, p).t;
  const auto r = triangle_prob_general(a, p, t, loose(1e-5), {}, CharModel::independent);
  CHECK(std::abs(r.value - p * p * p) <= std::max(r.error_bound, 1e-7));
  const Estimate pp = pair_prob(a, p, t, loose(1e-6), CharModel::independent);
  CHECK(std::abs(pp.value - p * p) <= std::max(pp.error, 1e-7));
}

TEST_CASE("general inversion agrees with Monte Carlo") {
  const auto a = spec({1, 0.5});
  const double p = 0.3;
  const double t = threshold_charfun(a, p).t;
  CHECK(t == doctest::Approx(0.377923575).epsilon(1e-8));
  const auto c = triangle_prob_general(a, p, t, loose(1e-4));
  const auto m = triangle_prob_mc(a, p, t, 2'000'000, {12, 0});
  CHECK(std::abs(c.value - m.value) <= c.error_bound + m.error_bound);
  CHECK(c.value > p * p * p);
}

TEST_CASE("Monte Carlo probability is thread-count independent") {
  const auto a = spectrum_family(SpectrumKind::isotropic, 5);
  const auto one = triangle_prob_mc(a, 0.5, 0.0, 300000, {1, 0}, ExecContext{1});
  const auto many = triangle_prob_mc(a, 0.5, 0.0, 300000, {1, 0}, ExecContext{4});
  CHECK(one.value == many.value);
}

TEST_CASE("coordinate-free gap shrinks with dimension") {
  const double g4 = coordinate_free_gap(spectrum_family(SpectrumKind::isotropic, 4)).value;
  const double g64 = coordinate_free_gap(spectrum_family(SpectrumKind::isotropic, 64)).value;
  CHECK(g4 > 0.0);
  CHECK(g64 < g4);
}
