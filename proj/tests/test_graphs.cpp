#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "geodetect/error.hpp"
#include "geodetect/graphs.hpp"
#include "geodetect/numeric.hpp"

using namespace geodetect;

namespace {

double tau_reference(const AdjacencyMatrix& a, double p) {
  double s = 0;
  const std::size_t n = a.n();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        s += (a(i, j) - p) * (a(i, k) - p) * (a(j, k) - p);
  return s;
}

AdjacencyMatrix random_graph(std::size_t n, double p, std::uint64_t id) {
  RandomStream rng({101, id});
  return er_graph_direct(n, p, rng);
}

}  // namespace

TEST_CASE("all graphs on four vertices") {
  const std::size_t pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (unsigned mask = 0; mask < 64; ++mask) {
    AdjacencyMatrix a(4);
    for (unsigned e = 0; e < 6; ++e) a.set(pairs[e][0], pairs[e][1], (mask >> e) & 1u);
    std::uint64_t tri = 0;
    for (auto [i, j, k] : {std::array<int, 3>{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}})
      tri += a(i, j) && a(i, k) && a(j, k);
    CHECK(triangle_count(a) == tri);
    for (double p : {0.1, 0.5, 0.77}) {
      const double want = tau_reference(a, p);
      CHECK(signed_triangles(a, p, TauPath::direct) == doctest::Approx(want).epsilon(1e-12));
      CHECK(signed_triangles(a, p, TauPath::trace) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("direct and trace paths agree") {
  for (std::size_t n : {32u, 65u, 130u}) {
    const auto a = random_graph(n, 0.3, n);
    const double d = signed_triangles(a, 0.3, TauPath::direct);
    const double t = signed_triangles(a, 0.3, TauPath::trace);
    CHECK(t == doctest::Approx(d).epsilon(1e-9).scale(std::sqrt(er_tau_variance(n, 0.3))));
  }
}

TEST_CASE("adjacency basics") {
  const auto k = AdjacencyMatrix::complete(70);
  CHECK(k.edge_count() == 70 * 69 / 2);
  CHECK(k.degree(69) == 69);
  CHECK(triangle_count(k) == binomial_coefficient(70, 3));
  const auto r = triangle_report(k, 0.5);
  CHECK(r.tau == doctest::Approx(binomial_coefficient(70, 3) * 0.125));

  std::stringstream ss;
  const auto a = random_graph(77, 0.4, 1);
  write_adjacency(ss, a);
  CHECK(read_adjacency(ss) == a);
}

TEST_CASE("threshold graphs") {
  const auto alpha = AlphaSpectrum::from_values({1, 1, 1});
  const GramSample w = gram_ensemble(sample_points(20, alpha, {5, 0}), alpha);
  const GramSample m = goe_ensemble(20, {5, 1});
  CHECK_THROWS_AS(geometric_graph(m, 0.0), UsageError);
  CHECK_THROWS_AS(er_graph(w, 0.0), UsageError);
  const auto g = geometric_graph(w, 0.2);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j) CHECK(g(i, j) == (i != j && w(i, j) >= 0.2));
  CHECK(er_graph(m, -std::numeric_limits<double>::infinity()) == AdjacencyMatrix::complete(20));
}

TEST_CASE("tau under G(n,p) is centred with the exact variance") {
  for (double p : {0.5, 0.2}) {
    const auto src = GraphSource::er(12, p);
    const TauMoments m = tau_moments_mc(src, 200000, {17, 0});
    CHECK(std::abs(m.mean) <= 4 * m.mean_std_error);
    CHECK(std::abs(m.variance - er_tau_variance(12, p)) <= 4 * m.variance_std_error);
  }
  CHECK(er_tau_variance(10, 0.5) == doctest::Approx(120.0 / 64.0));
}

TEST_CASE("tau samples do not depend on the thread count") {
  const auto alpha = spectrum_family(SpectrumKind::isotropic, 4);
  const auto src = GraphSource::geometric(30, 0.5, alpha, 0.0);
  CHECK(tau_samples(src, 300, {2, 0}, ExecContext{1}) == tau_samples(src, 300, {2, 0}, ExecContext{3}));
}

TEST_CASE("geometric edge probability matches p") {
  // Isotropic d=2: <X1,X2> is Laplace(1), so P(W >= t) = exp(-t sqrt 2) / 2.
  const auto alpha = spectrum_family(SpectrumKind::isotropic, 2);
  const double p = 0.2;
  const double t_scaled = std::log(0.5 / p) / std::sqrt(2.0);
  const auto src = GraphSource::geometric(10, p, alpha, t_scaled);
  std::size_t edges = 0, total = 0;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    edges += src.draw({8, 0}, r).edge_count();
    total += 45;
  }
  const Proportion q = proportion(edges, total);
  CHECK(std::abs(q.value - p) <= 4 * q.std_error * std::sqrt(10.0));
}
