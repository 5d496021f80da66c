#include "geodetect/selftest.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "geodetect/charfun.hpp"
#include "geodetect/detect.hpp"
#include "geodetect/ensembles.hpp"
#include "geodetect/entropy.hpp"
#include "geodetect/error.hpp"
#include "geodetect/graphs.hpp"
#include "geodetect/spectrum.hpp"
#include "geodetect/threshold.hpp"

namespace geodetect {

namespace {

using Check = std::function<std::string()>;  // empty string on success

AlphaSpectrum spec(std::vector<double> v) {
  return AlphaSpectrum::from_values(std::move(v));
}

std::string near(double got, double want, double tol) {
  if (std::abs(got - want) <= tol) return {};
  std::ostringstream os;
  os.precision(12);
  os << "got " << got << ", want " << want << " +- " << tol;
  return os.str();
}

std::string expect(bool ok, const std::string& what) { return ok ? "" : what; }

std::string spectra_equal(const AlphaSpectrum& a, const std::vector<double>& b) {
  if (a.dim() != b.size()) return "dimension mismatch";
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-15) return "entry " + std::to_string(i) + " differs";
  }
  return {};
}

AdjacencyMatrix empty_graph(std::size_t n) { return AdjacencyMatrix(n); }

}  // namespace

std::vector<SelfTestResult> run_selftest(const ExecContext& exec) {
  const double inf = std::numeric_limits<double>::infinity();
  const SeededStream s{20240611, 0};
  std::vector<std::pair<std::string, Check>> checks = {
      {"normalize (2,1,0.5)",
       [] { return spectra_equal(normalize(spec({2, 1, 0.5})), {1, 0.5, 0.25}); }},
      {"normalize (1,1,1)",
       [] { return spectra_equal(normalize(spec({1, 1, 1})), {1, 1, 1}); }},
      {"normalize rejects (0,0)",
       [] {
         try {
           (void)spec({0, 0});
         } catch (const InvalidSpectrum&) {
           return std::string();
         }
         return std::string("no InvalidSpectrum");
       }},
      {"q_norm (3,4) q=2", [] { return near(q_norm(spec({3, 4}), 2), 5, 1e-12); }},
      {"q_norm isotropic", [] { return near(q_norm(spec(std::vector<double>(7, 1.0)), 3), std::cbrt(7.0), 1e-12); }},
      {"eff3 single coordinate", [] { return near(effective_dim_3(spec({1, 0, 0})), 1, 1e-12); }},
      {"eff4 isotropic 16",
       [] { return near(effective_dim_4(spectrum_family(SpectrumKind::isotropic, 16)), 16, 1e-9); }},
      {"eff4 single coordinate", [] { return near(effective_dim_4(spec({1, 0, 0, 0})), 1, 1e-12); }},
      {"family isotropic 3",
       [] { return spectra_equal(spectrum_family(SpectrumKind::isotropic, 3), {1, 1, 1}); }},
      {"family powerlaw 3",
       [] {
         return spectra_equal(spectrum_family(SpectrumKind::power_law, 3, {1.0 / 3.0, 0, 0}),
                              {1, std::pow(2.0, -1.0 / 3.0), std::pow(3.0, -1.0 / 3.0)});
       }},
      {"family spiked 4",
       [] {
         return spectra_equal(spectrum_family(SpectrumKind::spiked, 4, {0, 2, 0.1}),
                              {1, 1, 0.1, 0.1});
       }},
      {"zero-variance coordinate",
       [&] {
         const PointCloud c = sample_points(1, spec({1, 0}), s);
         return expect(c(0, 1) == 0.0, "second coordinate not 0");
       }},
      {"gram diagonal zero",
       [&] {
         const GramSample g = gram_ensemble(sample_points(5, spec({1, 2, 3}), s), spec({1, 2, 3}));
         for (std::size_t i = 0; i < 5; ++i) {
           if (g(i, i) != 0.0) return std::string("nonzero diagonal");
         }
         return std::string();
       }},
      {"goe n=1", [&] { return expect(goe_ensemble(1, s).upper().empty(), "not 1x1 zero"); }},
      {"goe symmetric",
       [&] {
         const GramSample g = goe_ensemble(6, s);
         return expect(g(1, 4) == g(4, 1), "asymmetric");
       }},
      {"threshold p=0.5",
       [] {
         const auto a = spectrum_family(SpectrumKind::power_law, 50, {0.5, 0, 0});
         return expect(threshold_charfun(a, 0.5).t == 0.0 && threshold_normal(a, 0.5).t == 0.0,
                       "t != 0");
       }},
      {"threshold isotropic 100 z=1",
       [] {
         const auto a = spectrum_family(SpectrumKind::isotropic, 100);
         return near(threshold_normal(a, normal_sf(1.0)).t, 10.0, 1e-9);
       }},
      {"survival t=0",
       [] { return near(inner_product_survival(spec({1, 0.3, 0.2}), 0.0).value, 0.5, 0.0); }},
      {"graph at -inf threshold complete",
       [&] {
         const GramSample g = goe_ensemble(7, s);
         return expect(er_graph(g, -inf) == AdjacencyMatrix::complete(7), "not complete");
       }},
      {"graph at +inf threshold empty",
       [&] {
         const auto a = spec({1, 1});
         const GramSample g = gram_ensemble(sample_points(7, a, s), a);
         return expect(geometric_graph(g, inf).edge_count() == 0, "edges present");
       }},
      {"triangles complete n=4",
       [] { return expect(triangle_count(AdjacencyMatrix::complete(4)) == 4, "count != 4"); }},
      {"triangles empty", [] { return expect(triangle_count(empty_graph(9)) == 0, "count != 0"); }},
      {"tau empty n=3", [] { return near(signed_triangles(empty_graph(3), 0.3), -0.027, 1e-15); }},
      {"tau complete n=3",
       [] { return near(signed_triangles(AdjacencyMatrix::complete(3), 0.3), 0.343, 1e-15); }},
      {"phi origin",
       [] { return near(std::abs(phi(spec({1, 0.5}), 0, 0, 0) - 1.0), 0.0, 1e-15); }},
      {"psi origin", [] { return near(psi(spec({1, 0.5}), 0, 0, 0), 1.0, 1e-15); }},
      {"psi equals |phi| on the axes",
       [] {
         const auto a = spec({1, 0.7, 0.2});
         return near(psi(a, 0, 1.3, 0), std::abs(phi(a, 0, 1.3, 0)), 1e-14);
       }},
      {"integrand_half even",
       [] {
         const auto a = spec({1, 0.7});
         return near(integrand_half(a, 0.3, 0.8, 1.1), integrand_half(a, -0.3, 0.8, 1.1), 1e-15);
       }},
      {"triangle probability d=1 inversion",
       [&] {
         QuadratureParams q;
         q.rel_tol = 1e-6;
         const auto r = triangle_prob_half(spec({1}), q, exec);
         return near(r.value, 0.25, std::max(1e-6, r.error_bound));
       }},
      {"triangle probability at -inf",
       [&] {
         return near(triangle_prob_mc(spec({1, 1}), 0.5, -inf, 10000, s, exec).value, 1.0, 0.0);
       }},
      {"gaussian entropy (I,I)",
       [] {
         return near(gaussian_rel_entropy(Eigen::MatrixXd::Identity(3, 3),
                                          Eigen::MatrixXd::Identity(3, 3)),
                     0.0, 1e-15);
       }},
      {"bernoulli entropy (p,p)", [] { return near(bernoulli_rel_entropy(0.3, 0.3), 0.0, 0.0); }},
      {"gram entropy n=1",
       [&] { return near(gram_entropy_bound(1, spec({1}), {}, exec).bound, 0.0, 0.0); }},
      {"bernoulli term vanishes at p=0.5",
       [&] {
         EntropyParams ep;
         ep.replicas = 200;
         const auto r = tv_upper_bound(3, spectrum_family(SpectrumKind::isotropic, 50), 0.5, ep, exec);
         return expect(r.p_prime == 0.5 && r.ent_bernoulli == 0.0, "nonzero Bernoulli term");
       }},
      {"chi2 tail bound weights=(1) t=10",
       [] {
         const std::vector<double> w{1.0};
         return near(chi2_tail_bound(w, 10.0), 2.0 * std::exp(-5.0), 1e-15);
       }},
      {"tau test complete n=10",
       [] {
         const auto r = tau_test(AdjacencyMatrix::complete(10), 0.5, 1.0);
         return expect(r.decision == Decision::geometry && r.tau_observed == 15.0, "not geometry");
       }},
      {"tau test empty n=10",
       [] {
         const auto r = tau_test(empty_graph(10), 0.5, 1.0);
         return expect(r.decision == Decision::no_geometry && r.tau_observed == -15.0,
                       "not no_geometry");
       }},
      {"empirical tv identical",
       [] {
         const std::vector<double> a{1, 2, 3, 4, 5};
         return near(empirical_tv(a, a), 0.0, 0.0);
       }},
      {"empirical tv disjoint",
       [] {
         const std::vector<double> a{0, 0.1, 0.2}, b{5, 5.5, 6};
         return near(empirical_tv(a, b), 1.0, 0.0);
       }},
  };

  std::vector<SelfTestResult> out;
  out.reserve(checks.size());
  for (auto& [name, fn] : checks) {
    SelfTestResult r{name, false, {}};
    try {
      r.detail = fn();
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace geodetect
