#pragma once

// The connection threshold t_{p,alpha}: the t with P(<X1,X2> >= t) = p.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "geodetect/parallel.hpp"
#include "geodetect/quadrature.hpp"
#include "geodetect/rng.hpp"
#include "geodetect/spectrum.hpp"

namespace geodetect {

enum class ThresholdMethod { mc_quantile, normal_approx, charfun_inversion };

std::string to_string(ThresholdMethod m);

struct ThresholdEstimate {
  double t = 0.0;
  ThresholdMethod method = ThresholdMethod::normal_approx;
  /// Monte Carlo standard error of t (mc_quantile).
  std::optional<double> std_error;
  /// Deterministic error bound on t (charfun_inversion).
  std::optional<double> error_bound;
  /// Bound on |P(<X1,X2> >= t) - p| (normal_approx: the Berry-Esseen term).
  std::optional<double> prob_error_bound;
};

/// Draws <X1,X2> exactly in law as sqrt(sum_i alpha_i^2 chi2_1) * Z, with
/// repeated spectrum values pooled into one chi-square.
class InnerProductSampler {
 public:
  explicit InnerProductSampler(const AlphaSpectrum& alpha);
  double operator()(RandomStream& rng) const;

 private:
  std::vector<double> weight_;  // value^2
  std::vector<double> dof_;
};

/// n_samples draws of <X1,X2>. Draws are produced in batches of 2^16; batch
/// b uses stream id b, so the result does not depend on exec.threads.
std::vector<double> sample_inner_products(const AlphaSpectrum& alpha,
                                          std::size_t n_samples,
                                          SeededStream stream,
                                          const ExecContext& exec = {});

ThresholdEstimate threshold_mc(const AlphaSpectrum& alpha, double p,
                               std::size_t n_samples, SeededStream stream,
                               const ExecContext& exec = {});

ThresholdEstimate threshold_normal(const AlphaSpectrum& alpha, double p);

struct SurvivalParams {
  double abs_tol = 1e-10;
  /// Upper end of the inversion integral in normalized frequency units
  /// (alpha / max alpha); 0 picks it from the tail bound.
  double truncation_radius = 0.0;
  std::size_t max_panels = 4'000'000;
  KronrodRule rule = KronrodRule::gk15;
};

/// P(<X1,X2> > t) by Gil-Pelaez inversion of prod (1 + alpha_i^2 u^2)^(-1/2).
/// Throws NumericError (carrying the partial value) when the requested
/// tolerance is not met.
Estimate inner_product_survival(const AlphaSpectrum& alpha, double t,
                                const SurvivalParams& params = {});

/// Bracketing plus bisection on inner_product_survival, seeded at the normal
/// approximation.
ThresholdEstimate threshold_charfun(const AlphaSpectrum& alpha, double p,
                                    double tol = 1e-9);

struct KolmogorovGap {
  double gap = 0.0;
  double std_error = 0.0;
  /// 3 (||alpha||_3 / ||alpha||_2)^3.
  double bound = 0.0;
};

/// sup_x |P(<X1,X2>/||alpha||_2 <= x) - Phi(x)| from n_samples draws.
KolmogorovGap berry_esseen_gap(const AlphaSpectrum& alpha,
                               std::size_t n_samples, SeededStream stream,
                               const ExecContext& exec = {});

}  // namespace geodetect
