#pragma once

// Relative entropies and the total-variation upper bound
//   TV(G(n,p), G(n,p,alpha)) <= sqrt(Ent[W||M] / 2) + sqrt(n^2 Ent[p||p'])
// assembled from the chain rule over Gram sizes k = 1 .. n-1.

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "geodetect/parallel.hpp"
#include "geodetect/rng.hpp"
#include "geodetect/spectrum.hpp"

namespace geodetect {

/// Ent[N(0,sigma1) || N(0,sigma2)] via Cholesky factors. Throws DomainError
/// when either matrix is not symmetric positive definite, ShapeError on a
/// size mismatch.
double gaussian_rel_entropy(const Eigen::MatrixXd& sigma1,
                            const Eigen::MatrixXd& sigma2);

/// p ln(p/q) + (1-p) ln((1-p)/(1-q)); both arguments in (0,1).
double bernoulli_rel_entropy(double p, double q);

struct LogDetEstimate {
  double mean_neg_logdet = 0.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
  std::size_t singular_draws = 0;  // failed factorizations, redrawn
};

/// Monte Carlo estimate of -E ln det(Y D_alpha Y^T / ||alpha||_2^2) for a
/// k x d cloud Y with rows drawn from N(0, D_alpha), so the normalized Gram
/// has unit mean diagonal. Replica r uses stream id r.
LogDetEstimate logdet_gram_mc(std::size_t k, const AlphaSpectrum& alpha,
                              std::size_t replicas, SeededStream stream,
                              const ExecContext& exec = {});

enum class EntropyMethod { analytic, mc };

std::string to_string(EntropyMethod m);

struct EntropyParams {
  EntropyMethod method = EntropyMethod::mc;
  std::size_t replicas = 20000;
  SeededStream stream{};
  /// Standard errors added to the Monte Carlo mean to make it an upper
  /// bound with high probability.
  double confidence_z = 3.0;
};

struct GramEntropyBound {
  /// Conservative value used downstream (mean + z s.e. for mc, envelope for
  /// analytic), never negative.
  double bound = 0.0;
  double estimate = 0.0;   // point estimate (mc) or envelope (analytic)
  double std_error = 0.0;  // mc only
  /// analytic only: the lambda_min < 1/2 remainder n exp(-||alpha||_2^2/16),
  /// reported separately and not included in `bound`.
  double remainder = 0.0;
  std::size_t singular_draws = 0;
  EntropyMethod method = EntropyMethod::mc;
  /// Chain-rule terms (1/2)(-E ln det) for k = 1 .. n-1, with their
  /// standard errors (zero for analytic).
  std::vector<double> steps;
  std::vector<double> step_std_errors;
};

/// sum_{k=1}^{n-1} (1/2)(-E ln det of the size-k Gram).
///
/// mc: each replica draws one (n-1) x (n-1) Gram and reads every k from the
/// leading minors of its Cholesky factor. analytic: the envelope
/// (3/2) sum_k (k^2 r + sqrt(k r)), r = (||alpha||_4/||alpha||_2)^4, which
/// is refused (DomainError) unless ||alpha||_2^2 >= 10 n after
/// normalization.
GramEntropyBound gram_entropy_bound(std::size_t n, const AlphaSpectrum& alpha,
                                    const EntropyParams& params,
                                    const ExecContext& exec = {});

struct TvBoundReport {
  double ent_gram = 0.0;
  double ent_gram_estimate = 0.0;
  double ent_gram_std_error = 0.0;
  double ent_gram_remainder = 0.0;
  double ent_bernoulli = 0.0;  // n^2 Ent[p || p']
  double p_prime = 0.0;
  double threshold = 0.0;      // t_{p,alpha} used for p'
  double tv_gram = 0.0;        // sqrt(ent_gram / 2)
  double tv_bernoulli = 0.0;   // sqrt(ent_bernoulli)
  double tv_upper = 0.0;       // sum, clipped to [0, 1.5]
  EntropyMethod method = EntropyMethod::mc;
  std::vector<double> steps;
  std::vector<double> step_std_errors;
};

/// Assembles the bound. p' = P(Z > t_{p,alpha} / ||alpha||_2) with t from
/// the charfun threshold (exactly 1/2 when p = 1/2).
TvBoundReport tv_upper_bound(std::size_t n, const AlphaSpectrum& alpha,
                             double p, const EntropyParams& params,
                             const ExecContext& exec = {});

/// 2 exp(-t / (2 max_i v_i)).
double chi2_tail_bound(std::span<const double> weights, double t);

/// Empirical P(|sum v_i chi2_i - sum v_i| >= t) from n_samples draws.
struct TailFrequency {
  double value = 0.0;
  double std_error = 0.0;
};
TailFrequency chi2_tail_mc(std::span<const double> weights, double t,
                           std::size_t n_samples, SeededStream stream,
                           const ExecContext& exec = {});

}  // namespace geodetect
