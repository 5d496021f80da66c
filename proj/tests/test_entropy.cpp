#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <Eigen/LU>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <vector>

#include "geodetect/entropy.hpp"
#include "geodetect/error.hpp"

using namespace geodetect;
using boost::math::digamma;

namespace {

AlphaSpectrum iso(std::size_t d) { return spectrum_family(SpectrumKind::isotropic, d); }

}  // namespace

TEST_CASE("Gaussian relative entropy") {
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK(gaussian_rel_entropy(2 * i2, i2) == doctest::Approx(1 - std::log(2.0)).epsilon(1e-14));
  CHECK(gaussian_rel_entropy(i2, i2) == 0.0);

  Eigen::MatrixXd s1(3, 3), s2(3, 3);
  s1 << 2, 0.3, 0.1, 0.3, 1, -0.2, 0.1, -0.2, 1.5;
  s2 << 1, 0.5, 0, 0.5, 1.2, 0.1, 0, 0.1, 0.9;
  const double want = 0.5 * ((s2.inverse() * s1).trace() - 3 +
                             std::log(s2.determinant() / s1.determinant()));
  CHECK(gaussian_rel_entropy(s1, s2) == doctest::Approx(want).epsilon(1e-12));

  Eigen::MatrixXd bad = i2;
  bad(0, 1) = 0.4;
  CHECK_THROWS_AS(gaussian_rel_entropy(bad, i2), DomainError);
  CHECK_THROWS_AS(gaussian_rel_entropy(-i2, i2), DomainError);
  CHECK_THROWS_AS(gaussian_rel_entropy(i2, Eigen::MatrixXd::Identity(3, 3)), ShapeError);
}

TEST_CASE("Bernoulli relative entropy") {
  CHECK(bernoulli_rel_entropy(0.5, 0.25) == doctest::Approx(std::log(2.0) - 0.5 * std::log(3.0)).epsilon(1e-14));
  CHECK(bernoulli_rel_entropy(0.3, 0.3) == 0.0);
  for (double p : {0.1, 0.5, 0.8}) {
    const double d = 1e-4;
    CHECK(bernoulli_rel_entropy(p, p + d) == doctest::Approx(d * d / (2 * p * (1 - p))).epsilon(1e-3));
  }
  CHECK_THROWS_AS(bernoulli_rel_entropy(0.0, 0.5), InvalidParameter);
}

TEST_CASE("log-determinant against digamma closed forms") {
  // k = 1: chi2_d / d. k = 2: det of a 2x2 Wishart with d degrees of freedom.
  CHECK(-(digamma(0.5) + std::log(2.0)) == doctest::Approx(1.27036).epsilon(1e-5));
  for (std::size_t d : {1u, 5u, 40u}) {
    const auto e = logdet_gram_mc(1, iso(d), 100000, {d, 0});
    const double want = -(digamma(d / 2.0) + std::log(2.0) - std::log(static_cast<double>(d)));
    CHECK(std::abs(e.mean_neg_logdet - want) <= 4 * e.std_error);
  }
  for (std::size_t d : {3u, 12u}) {
    const auto e = logdet_gram_mc(2, iso(d), 100000, {d, 1});
    const double dd = static_cast<double>(d);
    const double want = -(digamma(dd / 2) + digamma((dd - 1) / 2) + 2 * std::log(2.0) - 2 * std::log(dd));
    CHECK(std::abs(e.mean_neg_logdet - want) <= 4 * e.std_error);
  }
}

TEST_CASE("log-determinant uses the squared spectrum") {
  // alpha = (1, 0.5): the k=1 Gram is (z1^2 + z2^2/4) / (1 + 1/4).
  const auto a = AlphaSpectrum::from_values({1, 0.5});
  const auto e = logdet_gram_mc(1, a, 200000, {3, 3});
  RandomStream rng({99, 0});
  double s = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z1 = rng.normal(), z2 = rng.normal();
    s += -std::log((z1 * z1 + z2 * z2 / 4) / 1.25);
  }
  CHECK(std::abs(e.mean_neg_logdet - s / n) <= 6 * e.std_error);
}

TEST_CASE("Gram entropy bound") {
  CHECK(gram_entropy_bound(1, iso(3), {}).bound == 0.0);

  EntropyParams ep;
  ep.replicas = 4000;
  ep.stream = {5, 0};
  const auto small = gram_entropy_bound(6, iso(50), ep);
  REQUIRE(small.steps.size() == 5);
  double sum = 0;
  for (double s : small.steps) sum += s;
  CHECK(small.estimate == doctest::Approx(sum).epsilon(1e-12));
  CHECK(small.bound == doctest::Approx(small.estimate + 3 * small.std_error).epsilon(1e-12));
  for (std::size_t k = 1; k < small.steps.size(); ++k) CHECK(small.steps[k] > small.steps[k - 1]);

  const auto large = gram_entropy_bound(6, iso(5000), ep);
  CHECK(large.estimate < small.estimate);

  EntropyParams an;
  an.method = EntropyMethod::analytic;
  const auto a = gram_entropy_bound(10, iso(1000), an);
  CHECK(a.method == EntropyMethod::analytic);
  CHECK(a.remainder == doctest::Approx(10 * std::exp(-1000.0 / 16)));
  double env = 0;
  for (int k = 1; k < 10; ++k) env += 1.5 * (k * k * 1e-3 + std::sqrt(k * 1e-3));
  CHECK(a.bound == doctest::Approx(env).epsilon(1e-12));
  CHECK_THROWS_AS(gram_entropy_bound(10, iso(99), an), DomainError);
}

TEST_CASE("TV upper bound assembly") {
  EntropyParams ep;
  ep.replicas = 1000;
  const auto r = tv_upper_bound(8, iso(200), 0.5, ep);
  CHECK(r.p_prime == 0.5);
  CHECK(r.ent_bernoulli == 0.0);
  CHECK(r.tv_gram == doctest::Approx(std::sqrt(r.ent_gram / 2)));
  CHECK(r.tv_upper == doctest::Approx(r.tv_gram + r.tv_bernoulli));

  const auto q = tv_upper_bound(8, iso(200), 0.2, ep);
  CHECK(q.p_prime > 0.0);
  CHECK(std::abs(q.p_prime - 0.2) < 0.02);
  CHECK(q.ent_bernoulli == doctest::Approx(64 * bernoulli_rel_entropy(0.2, q.p_prime)));
  CHECK(tv_upper_bound(12, iso(11), 0.5, ep).tv_upper <= 1.5);
  CHECK_THROWS_AS(tv_upper_bound(200, iso(3), 0.5, ep), DomainError);
}

TEST_CASE("chi-square tail") {
  const std::vector<double> one{1.0};
  CHECK(chi2_tail_bound(one, 10.0) == doctest::Approx(2 * std::exp(-5.0)));
  const boost::math::chi_squared_distribution<double> c1(1.0);
  for (double t : {0.5, 2.0}) {
    const double exact = boost::math::cdf(boost::math::complement(c1, 1 + t)) +
                         (t < 1 ? boost::math::cdf(c1, 1 - t) : 0.0);
    const auto f = chi2_tail_mc(one, t, 400000, {7, 0});
    CHECK(std::abs(f.value - exact) <= 4 * f.std_error);
  }
  // Pooled equal weights: sum of 10 unit chi-squares is chi2_10.
  const std::vector<double> ten(10, 1.0);
  const boost::math::chi_squared_distribution<double> c10(10.0);
  const double exact = boost::math::cdf(boost::math::complement(c10, 16.0)) + boost::math::cdf(c10, 4.0);
  const auto f = chi2_tail_mc(ten, 6.0, 400000, {7, 1});
  CHECK(std::abs(f.value - exact) <= 4 * f.std_error);
}
