#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "geodetect/ensembles.hpp"
#include "geodetect/error.hpp"
#include "geodetect/numeric.hpp"
#include "geodetect/spectrum.hpp"

using namespace geodetect;

namespace {

AlphaSpectrum spec(std::vector<double> v) {
  return AlphaSpectrum::from_values(std::move(v));
}

bool within(const MomentAccumulator& m, double want, double k = 3.0) {
  return std::abs(m.mean - want) <= k * m.std_error();
}

}  // namespace

TEST_CASE("point cloud coordinates") {
  const PointCloud c = sample_points(500000, spec({1}), {11, 0});
  MomentAccumulator m;
  for (double x : c.values) m.add(x);
  CHECK(std::abs(m.mean) < 3e-3);

  const PointCloud z = sample_points(1, spec({1, 0}), {3, 0});
  CHECK(z(0, 1) == 0.0);

  // Coordinate j has variance alpha_j: compare E x^2 with 3 s.e.
  const auto a = spec({1, 0.25, 0.04});
  const PointCloud cloud = sample_points(1000000, a, {12, 0});
  for (std::size_t j = 0; j < 3; ++j) {
    MomentAccumulator sq;
    for (std::size_t i = 0; i < cloud.n; ++i) sq.add(cloud(i, j) * cloud(i, j));
    CHECK(within(sq, a[j]));
  }
}

TEST_CASE("gram entries have unit variance") {
  const auto a = spec({1, 0.5});
  MomentAccumulator w2;
  for (std::uint64_t r = 0; r < 1000000 / 6; ++r) {
    // n = 4 gives six independent-in-law (pairwise uncorrelated) entries.
    const GramSample g = gram_ensemble(sample_points(4, a, {21, r}), a);
    for (double v : g.upper()) w2.add(v * v);
  }
  CHECK(within(w2, 1.0, 4.0));
}

TEST_CASE("d=1 gram entry is a product of normals") {
  const auto a = spec({1});
  MomentAccumulator absw;
  for (std::uint64_t r = 0; r < 1000000; ++r) {
    const GramSample g = gram_ensemble(sample_points(2, a, {5, r}), a);
    absw.add(std::abs(g(0, 1)));
  }
  CHECK(within(absw, 2.0 / M_PI));
}

TEST_CASE("gram structure and errors") {
  const auto a = spec({1, 2, 3});
  const GramSample g = gram_ensemble(sample_points(6, a, {1, 0}), a);
  CHECK(g.kind() == GramKind::geometric);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(g(i, i) == 0.0);
    for (std::size_t j = 0; j < 6; ++j) CHECK(g(i, j) == g(j, i));
  }
  CHECK_THROWS_AS(gram_ensemble(sample_points(3, spec({1, 1}), {1, 0}), a), ShapeError);
}

TEST_CASE("streaming gram is bit-identical") {
  const auto a = spectrum_family(SpectrumKind::power_law, 3000, {0.5, 0, 0.0});
  const SeededStream s{77, 3};
  const GramSample direct = gram_ensemble(sample_points(9, a, s), a);
  for (std::size_t block : {1u, 7u, 512u, 4096u}) {
    const GramSample streamed = gram_ensemble_streaming(9, a, s, block);
    CHECK(std::equal(direct.upper().begin(), direct.upper().end(), streamed.upper().begin()));
  }
  const GramSample budgeted = gram_ensemble_budgeted(9, a, s, 100);
  CHECK(std::equal(direct.upper().begin(), direct.upper().end(), budgeted.upper().begin()));
}

TEST_CASE("goe ensemble") {
  CHECK(goe_ensemble(1, {1, 0}).upper().empty());
  MomentAccumulator e12, e12sq;
  for (std::uint64_t r = 0; r < 1000000; ++r) {
    const GramSample g = goe_ensemble(2, {8, r});
    CHECK(g.kind() == GramKind::goe);
    e12.add(g(0, 1));
    e12sq.add(g(1, 0) * g(1, 0));
  }
  CHECK(within(e12, 0.0));
  CHECK(within(e12sq, 1.0));
}

TEST_CASE("gram moment identities") {
  // A_j = row j of the cloud times sqrt(D_alpha), entries alpha_i z.
  const auto a = spectrum_family(SpectrumKind::power_law, 12, {0.7, 0, 0.0});
  const double s2 = a.power_sum(2), s4 = a.power_sum(4);
  MomentAccumulator norm2, inner2, norm4;
  for (std::uint64_t r = 0; r < 200000; ++r) {
    const PointCloud c = sample_points(2, a, {31, r});
    double n0 = 0, ip = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
      const double x = c(0, i) * std::sqrt(a[i]);
      const double y = c(1, i) * std::sqrt(a[i]);
      n0 += x * x;
      ip += x * y;
    }
    norm2.add(n0);
    inner2.add(ip * ip);
    norm4.add(n0 * n0);
  }
  CHECK(within(norm2, s2));
  CHECK(within(inner2, s4));
  CHECK(norm4.mean <= 3 * s4 + s2 * s2 + 3 * norm4.std_error());
}

TEST_CASE("GramSampler matches the explicit product in law") {
  // Mixed spectrum: one repeated value (Bartlett block) and singletons.
  std::vector<double> v(20, 0.5);
  v.push_back(1.0);
  v.push_back(0.2);
  const auto a = spec(v);
  const double scale = 1.0 / a.norm2();
  for (bool diag : {true, false}) {
    GramSampler sampler(a, 3, scale, diag);
    std::vector<double> g(9);
    MomentAccumulator d0, off2, prod;
    RandomStream rng({40, diag ? 1u : 0u});
    for (int r = 0; r < 200000; ++r) {
      sampler.sample(rng, g);
      d0.add(g[0]);
      off2.add(g[1] * g[1]);
      prod.add(g[1] * g[2] * g[5]);
      CHECK(g[3] == g[1]);
    }
    // E W12^2 = 1; E W12 W13 W23 = sum alpha^3 / ||alpha||_2^3.
    CHECK(within(off2, 1.0, 4.0));
    CHECK(within(prod, a.power_sum(3) * scale * scale * scale, 4.0));
    if (diag) {
      CHECK(within(d0, a.power_sum(1) * scale, 4.0));
    } else {
      CHECK(d0.mean == 0.0);
    }
  }
}

TEST_CASE("gram text format round trip") {
  const GramSample g = goe_ensemble(5, {2, 0});
  std::stringstream ss;
  write_gram(ss, g);
  CHECK(ss.str().rfind("5 goe\n", 0) == 0);
  const GramSample h = read_gram(ss);
  CHECK(h.kind() == GramKind::goe);
  REQUIRE(h.n() == 5);
  for (std::size_t k = 0; k < g.upper().size(); ++k) CHECK(h.upper()[k] == g.upper()[k]);
}
