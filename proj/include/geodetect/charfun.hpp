#pragma once

// Joint characteristic functions of the three pairwise inner products of
// X1, X2, X3 and the triangle probability P(E_p) by Fourier inversion.
//
//   phi(a,b,c) = prod_i (1 + alpha_i^2 (a^2+b^2+c^2) + 2 i alpha_i^3 abc)^(-1/2)
//   psi(a,b,c) = prod_i ((1+alpha_i^2 a^2)(1+alpha_i^2 b^2)(1+alpha_i^2 c^2))^(-1/2)
//
// psi is the characteristic function of three independent copies of
// <X1,X2>. Everything is computed in log-polar form, so d = 10^6 neither
// underflows nor costs more than d = 1 for repeated spectrum values.

#include <complex>
#include <cstddef>
#include <string>

#include "geodetect/parallel.hpp"
#include "geodetect/quadrature.hpp"
#include "geodetect/rng.hpp"
#include "geodetect/spectrum.hpp"

namespace geodetect {

struct QuadratureParams {
  /// Radial cut-off in units of 1/max(alpha); 0 selects it automatically.
  double truncation_radius = 0.0;
  /// Target error relative to the size of the probability (1/8, or p^3).
  double rel_tol = 1e-6;
  /// Bisections allowed per nested level and panel.
  std::size_t max_subdivisions = 400;
  KronrodRule octant_rule = KronrodRule::gk15;
};

enum class ProbMethod { charfun, mc };

/// How the radial tail beyond the truncation radius was accounted for.
enum class TailTreatment {
  none,            // Monte Carlo, or nothing was truncated
  decay_bound,     // analytic bound from the product decay, added to the error
  integrated,      // mapped [R, inf) integral, its error folded into quadrature
  shell_estimate,  // oscillatory case: |integral over R/2 < r < R| as a proxy
};

std::string to_string(TailTreatment t);

std::string to_string(ProbMethod m);

struct ProbabilityEstimate {
  double value = 0.0;
  /// Quadrature plus truncation error (charfun); three standard errors (mc).
  double error_bound = 0.0;
  ProbMethod method = ProbMethod::charfun;
  double std_error = 0.0;          // mc only
  double quadrature_error = 0.0;   // charfun only
  double truncation_error = 0.0;   // charfun only
  double truncation_radius = 0.0;  // charfun only, normalized units
  TailTreatment tail = TailTreatment::none;
};

std::complex<double> phi(const AlphaSpectrum& alpha, double a, double b,
                         double c);

double psi(const AlphaSpectrum& alpha, double a, double b, double c);

/// -Im phi(a,b,c) / (abc), continuous through abc = 0.
double integrand_half(const AlphaSpectrum& alpha, double a, double b,
                      double c);

/// P(E_{1/2}) = 1/8 + pi^-3 * int_{octant} integrand_half.
ProbabilityEstimate triangle_prob_half(const AlphaSpectrum& alpha,
                                       const QuadratureParams& q = {},
                                       const ExecContext& exec = {});

/// Which joint law the general inversion uses: the true one (phi), or three
/// independent inner products (psi in place of phi), for which the exact
/// answer is p^3.
enum class CharModel { joint, independent };

/// P(E_p) for the event that all three inner products are >= t, where t is
/// the threshold t_{p,alpha} in inner-product units:
///   P = p^3 + 1.5 K2 / pi^2 + (Kc - Ks) / pi^3
/// with K2 the quadrant integral of (phi2 - psi2) sin(ta) sin(tb) / (ab),
/// Kc the octant integral of integrand_half * cos(ta) cos(tb) cos(tc) and
/// Ks the octant integral of (Re phi - psi) sin(ta) sin(tb) sin(tc) / (abc).
/// Throws NumericError if the result leaves [0,1] by more than its error.
ProbabilityEstimate triangle_prob_general(const AlphaSpectrum& alpha,
                                          double p, double t,
                                          const QuadratureParams& q = {},
                                          const ExecContext& exec = {},
                                          CharModel model = CharModel::joint);

/// P(<X1,X2> >= t, <X1,X3> >= t) by the two-dimensional inversion alone.
Estimate pair_prob(const AlphaSpectrum& alpha, double p, double t,
                   const QuadratureParams& q = {},
                   CharModel model = CharModel::joint);

/// Fraction of n_samples independent triples with all three inner products
/// >= t. Batches of 2^16 triples use stream ids 0, 1, 2, ...
ProbabilityEstimate triangle_prob_mc(const AlphaSpectrum& alpha, double p,
                                     double t, std::size_t n_samples,
                                     SeededStream stream,
                                     const ExecContext& exec = {});

/// int |Re phi1 - psi1| over the ball of radius R' (truncation_radius,
/// default 8) in the rescaled coordinates a' = ||alpha||_2 a.
Estimate coordinate_free_gap(const AlphaSpectrum& alpha,
                             const QuadratureParams& q = {},
                             const ExecContext& exec = {});

}  // namespace geodetect
