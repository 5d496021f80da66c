// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion N   run criterion N only (exit 1 on failure)

#include <array>
#include <boost/math/special_functions/digamma.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geodetect/charfun.hpp"
#include "geodetect/detect.hpp"
#include "geodetect/entropy.hpp"
#include "geodetect/graphs.hpp"
#include "geodetect/numeric.hpp"
#include "geodetect/threshold.hpp"

using namespace geodetect;

namespace {

constexpr std::uint64_t kSeed = 20240611;

AlphaSpectrum iso(std::size_t d) { return spectrum_family(SpectrumKind::isotropic, d); }
AlphaSpectrum power(std::size_t d, double beta) {
  return spectrum_family(SpectrumKind::power_law, d, {beta, 0, 0.0});
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Collects sub-checks; the criterion passes when all of them do.
class Verdict {
 public:
  void check(bool ok, const std::string& what) {
    ok_ = ok_ && ok;
    if (!notes_.empty()) notes_ += "; ";
    notes_ += (ok ? "" : "FAILED ") + what;
  }
  bool ok() const { return ok_; }
  const std::string& notes() const { return notes_; }

 private:
  bool ok_ = true;
  std::string notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict exact_small_cases(const ExecContext& exec) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = iso(1);
  QuadratureParams q;
  q.rel_tol = 8e-6;  // absolute 1e-6 on the 1/8 scale
  const auto half = triangle_prob_half(a, q, exec);
  v.check(half.error_bound <= 1e-6 && std::abs(half.value - 0.25) <= half.error_bound,
          "half " + fmt(half.value) + " +- " + fmt(half.error_bound));
  const auto mc = triangle_prob_mc(a, 0.5, 0.0, 1'000'000, {kSeed, 0}, exec);
  v.check(std::abs(mc.value - 0.25) <= 3 * mc.std_error,
          "mc " + fmt(mc.value) + " se " + fmt(mc.std_error));
  bool zero = true;
  for (const auto& s : {iso(1), iso(7), power(50, 0.5)}) {
    zero = zero && threshold_normal(s, 0.5).t == 0.0 && threshold_charfun(s, 0.5).t == 0.0 &&
           threshold_mc(s, 0.5, 100'000, {kSeed, 1}, exec).t == 0.0;
  }
  v.check(zero, "t_{0.5} = 0 for mc, normal and charfun");
  const double secs = seconds_since(t0);
  v.check(secs < 1.0, "elapsed " + fmt(secs) + " s");
  return v;
}

Verdict inversion_oracle(const ExecContext& exec) {
  Verdict v;
  std::vector<std::pair<std::string, AlphaSpectrum>> cases;
  for (std::size_t d : {2u, 8u, 64u, 256u}) cases.emplace_back("iso " + std::to_string(d), iso(d));
  cases.emplace_back("powerlaw 1/3", power(256, 1.0 / 3.0));
  cases.emplace_back("powerlaw 1/2", power(256, 0.5));
  std::uint64_t id = 10;
  for (const auto& [name, a] : cases) {
    const auto c = triangle_prob_half(a, {}, exec);
    const auto m = triangle_prob_mc(a, 0.5, 0.0, 10'000'000, {kSeed, id++}, exec);
    const double tol = std::max(3 * m.std_error, c.error_bound);
    v.check(std::abs(c.value - m.value) <= tol,
            name + ": " + fmt(c.value) + " vs " + fmt(m.value) + " (tol " + fmt(tol) + ")");
  }
  return v;
}

Verdict general_inversion(const ExecContext& exec) {
  Verdict v;
  const auto a = AlphaSpectrum::from_values({1, 0.5});
  std::uint64_t id = 20;
  for (double p : {0.3, 0.7}) {
    const double t = threshold_charfun(a, p).t;
    QuadratureParams q;
    q.rel_tol = 1e-4;
    const auto c = triangle_prob_general(a, p, t, q, exec);
    const auto m = triangle_prob_mc(a, p, t, 10'000'000, {kSeed, id++}, exec);
    const double tol = c.error_bound + 3 * m.std_error;
    v.check(std::abs(c.value - m.value) <= tol,
            "p=" + fmt(p) + ": " + fmt(c.value) + " vs " + fmt(m.value) + " (tol " + fmt(tol) + ")");

    QuadratureParams qi;
    qi.rel_tol = 1e-6 / (p * p * p);
    const auto ind = triangle_prob_general(a, p, t, qi, exec, CharModel::independent);
    v.check(std::abs(ind.value - p * p * p) <= 1e-6,
            "psi model p=" + fmt(p) + ": |P - p^3| = " + fmt(std::abs(ind.value - p * p * p)));
  }
  return v;
}

Verdict excess_scaling(const ExecContext& exec) {
  Verdict v;
  double lo = INFINITY, hi = 0;
  std::string ratios;
  std::uint64_t id = 30;
  for (std::size_t d : {16u, 64u, 256u}) {
    const auto a = iso(d);
    const auto m = triangle_prob_mc(a, 0.5, 0.0, 1'000'000, {kSeed, id++}, exec);
    const double r = std::pow(q_norm(a, 3) / a.norm2(), 3);
    const double ratio = (m.value - 0.125) / r;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    ratios += (ratios.empty() ? "" : ",") + fmt(ratio);
  }
  v.check(lo > 0 && hi / lo <= 4, "ratios " + ratios + ", max/min " + fmt(hi / lo));
  return v;
}

Verdict null_law(const ExecContext& exec) {
  Verdict v;
  const TauMoments m = tau_moments_mc(GraphSource::er(10, 0.5), 100'000, {kSeed, 40}, exec);
  v.check(std::abs(m.mean) <= 3 * m.mean_std_error,
          "mean " + fmt(m.mean) + " se " + fmt(m.mean_std_error));
  const double exact = er_tau_variance(10, 0.5);
  v.check(std::abs(m.variance / exact - 1) <= 0.05,
          "variance " + fmt(m.variance) + " vs " + fmt(exact));

  // Brute force at n = 4: every graph weighted by its G(4,p) probability.
  const double p = 0.5;
  const std::size_t pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  double mean = 0, second = 0;
  for (unsigned mask = 0; mask < 64; ++mask) {
    AdjacencyMatrix g(4);
    int e = 0;
    for (unsigned k = 0; k < 6; ++k) {
      const bool on = (mask >> k) & 1u;
      g.set(pairs[k][0], pairs[k][1], on);
      e += on;
    }
    const double w = std::pow(p, e) * std::pow(1 - p, 6 - e);
    const double tau = signed_triangles(g, p);
    mean += w * tau;
    second += w * tau * tau;
  }
  v.check(std::abs(mean) < 1e-15 && std::abs(second - er_tau_variance(4, p)) < 1e-15,
          "n=4 enumeration variance " + fmt(second));
  return v;
}

Verdict covariance_identity(const ExecContext& exec) {
  Verdict v;
  const auto c = covariance_identity_mc(iso(4), 0.5, 0.0, 1'000'000, {kSeed, 50}, exec);
  const double tol = 3 * std::hypot(c.lhs_std_error, c.rhs_std_error);
  v.check(std::abs(c.lhs - c.rhs) <= tol, "E[tau tau'] " + fmt(c.lhs) + " vs " + fmt(c.rhs) +
                                              " (tol " + fmt(tol) + ")");
  return v;
}

Verdict phase_transition(const ExecContext& exec) {
  Verdict v;
  const auto a = iso(16);
  const SeededStream s{kSeed, 60};
  const auto h0 = tau_samples(GraphSource::er(20, 0.5), 1000, s.derive(0), exec);
  const auto h1 = tau_samples(GraphSource::geometric(20, 0.5, a, 0.0), 1000, s.derive(1), exec);
  const double tv = empirical_tv(h0, h1);
  v.check(tv >= 0.9, "empirical TV at d=16: " + fmt(tv));

  EntropyParams ep;
  ep.replicas = 20000;
  ep.stream = s.derive(2);
  const auto r = tv_upper_bound(8, iso(1'000'000), 0.5, ep, exec);
  v.check(r.tv_upper <= 0.2, "tv_upper_bound at n=8, d=1e6: " + fmt(r.tv_upper));
  return v;
}

Verdict threshold_asymptotics(const ExecContext& exec) {
  Verdict v;
  const double z = normal_upper_quantile(0.3);
  double prev = INFINITY, prev_err = 0;
  bool monotone = true;
  std::string gaps;
  for (std::size_t d : {100u, 1000u, 10000u}) {
    const auto a = iso(d);
    const auto t = threshold_charfun(a, 0.3);
    const double gap = std::abs(t.t - a.norm2() * z);
    const double err = t.error_bound.value_or(0.0);
    monotone = monotone && gap <= prev + err + prev_err;
    prev = gap;
    prev_err = err;
    gaps += (gaps.empty() ? "" : ",") + fmt(gap);
  }
  v.check(monotone, "gaps " + gaps);
  const auto g = berry_esseen_gap(power(1000, 0.5), 1'000'000, {kSeed, 70}, exec);
  v.check(g.gap <= g.bound + 5 * g.std_error,
          "Kolmogorov gap " + fmt(g.gap) + " vs bound " + fmt(g.bound));
  return v;
}

Verdict entropy_components(const ExecContext& exec) {
  using boost::math::digamma;
  Verdict v;
  std::uint64_t id = 80;
  for (std::size_t d : {1u, 4u, 100u}) {
    const auto e = logdet_gram_mc(1, iso(d), 1'000'000, {kSeed, id++}, exec);
    const double dd = static_cast<double>(d);
    const double want = -(digamma(dd / 2) + std::log(2.0) - std::log(dd));
    v.check(std::abs(e.mean_neg_logdet - want) <= 3 * e.std_error,
            "logdet d=" + std::to_string(d) + " " + fmt(e.mean_neg_logdet) + " vs " + fmt(want));
  }
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  v.check(std::abs(gaussian_rel_entropy(2 * i2, i2) - (1 - std::log(2.0))) <= 1e-9,
          "Gaussian (2I, I)");
  v.check(std::abs(bernoulli_rel_entropy(0.5, 0.25) - (std::log(2.0) - 0.5 * std::log(3.0))) <= 1e-9,
          "Bernoulli (1/2, 1/4)");

  struct TailCase {
    std::vector<double> w;
    double t;
  };
  const std::vector<TailCase> tails = {
      {{1.0}, 2.0}, {{1.0}, 6.0}, {{1.0, 0.5, 0.25}, 4.0}, {std::vector<double>(100, 1.0), 30.0}};
  for (const auto& c : tails) {
    const double bound = chi2_tail_bound(c.w, c.t);
    const auto f = chi2_tail_mc(c.w, c.t, 1'000'000, {kSeed, id++}, exec);
    v.check(f.value <= bound + 5 * f.std_error, "chi2 tail d=" + std::to_string(c.w.size()) +
                                                    " t=" + fmt(c.t) + ": " + fmt(f.value) +
                                                    " vs bound " + fmt(bound));
  }
  return v;
}

/// Primary outputs of each criterion, reduced to doubles for comparison.
std::vector<double> fingerprint(const ExecContext& exec) {
  std::vector<double> out;
  const SeededStream s{kSeed, 90};
  out.push_back(triangle_prob_half(iso(8), {}, exec).value);
  out.push_back(triangle_prob_mc(iso(64), 0.5, 0.0, 300'000, s, exec).value);
  out.push_back(triangle_prob_mc(AlphaSpectrum::from_values({1, 0.5}), 0.3, 0.377923575, 300'000, s, exec).value);
  out.push_back(threshold_mc(power(50, 0.5), 0.3, 300'000, s, exec).t);
  for (double t : tau_samples(GraphSource::er(10, 0.5), 500, s, exec)) out.push_back(t);
  for (double t : tau_samples(GraphSource::geometric(20, 0.5, iso(16), 0.0), 500, s, exec)) out.push_back(t);
  const auto c = covariance_identity_mc(iso(4), 0.5, 0.0, 200'000, s, exec);
  out.push_back(c.lhs);
  out.push_back(c.rhs);
  EntropyParams ep;
  ep.replicas = 3000;
  ep.stream = s;
  out.push_back(tv_upper_bound(8, iso(1'000'000), 0.5, ep, exec).tv_upper);
  out.push_back(logdet_gram_mc(1, iso(4), 100'000, s, exec).mean_neg_logdet);
  out.push_back(berry_esseen_gap(power(1000, 0.5), 200'000, s, exec).gap);
  const std::vector<double> w(100, 1.0);
  out.push_back(chi2_tail_mc(w, 30.0, 200'000, s, exec).value);
  return out;
}

Verdict determinism(const ExecContext&) {
  Verdict v;
  const auto one = fingerprint(ExecContext{1});
  const auto three = fingerprint(ExecContext{3});
  std::size_t diff = 0;
  for (std::size_t i = 0; i < one.size(); ++i) diff += one[i] != three[i];
  v.check(one.size() == three.size() && diff == 0,
          std::to_string(one.size()) + " outputs compared, " + std::to_string(diff) + " differ");
  return v;
}

struct Criterion {
  const char* title;
  std::function<Verdict(const ExecContext&)> run;
};

const std::array<Criterion, 10> kCriteria = {{
    {"exact small cases", exact_small_cases},
    {"inversion vs Monte Carlo", inversion_oracle},
    {"general-p inversion", general_inversion},
    {"excess-probability scaling", excess_scaling},
    {"signed-triangle null law", null_law},
    {"covariance identity", covariance_identity},
    {"detection phase transition", phase_transition},
    {"threshold asymptotics", threshold_asymptotics},
    {"entropy components", entropy_components},
    {"determinism across thread counts", determinism},
}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run one criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const ExecContext exec = ExecContext::hardware();
  bool all_ok = true;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = kCriteria[i].run(exec);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    all_ok = all_ok && v.ok();
    std::cout << "criterion " << i + 1 << " " << (v.ok() ? "PASS" : "FAIL") << " ["
              << kCriteria[i].title << ", " << fmt(seconds_since(t0)) << " s] " << v.notes()
              << std::endl;
  }
  return all_ok ? 0 : 1;
}
