#include "geodetect/entropy.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "geodetect/ensembles.hpp"
#include "geodetect/error.hpp"
#include "geodetect/numeric.hpp"
#include "geodetect/threshold.hpp"

namespace geodetect {

double gaussian_rel_entropy(const Eigen::MatrixXd& sigma1,
                            const Eigen::MatrixXd& sigma2) {
  if (sigma1.rows() != sigma1.cols() || sigma2.rows() != sigma2.cols() ||
      sigma1.rows() != sigma2.rows()) {
    throw ShapeError("covariance matrices must be square and of equal size");
  }
  auto symmetric = [](const Eigen::MatrixXd& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <=
           1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  };
  if (!symmetric(sigma1) || !symmetric(sigma2)) {
    throw DomainError("covariance matrix is not symmetric");
  }
  const Eigen::LLT<Eigen::MatrixXd> l1(sigma1), l2(sigma2);
  if (l1.info() != Eigen::Success || l2.info() != Eigen::Success) {
    throw DomainError("covariance matrix is not positive definite");
  }
  const auto n = sigma1.rows();
  double logdet1 = 0.0, logdet2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d1 = l1.matrixLLT()(i, i), d2 = l2.matrixLLT()(i, i);
    if (!(d1 > 0.0) || !(d2 > 0.0)) {
      throw DomainError("covariance matrix is not positive definite");
    }
    logdet1 += 2.0 * std::log(d1);
    logdet2 += 2.0 * std::log(d2);
  }
  // tr(sigma2^-1 sigma1) = ||L2^-1 L1||_F^2.
  const Eigen::MatrixXd m = l2.matrixL().solve(Eigen::MatrixXd(l1.matrixL()));
  const double trace = m.squaredNorm();
  return std::max(0.0, 0.5 * (trace + logdet2 - logdet1 - static_cast<double>(n)));
}

double bernoulli_rel_entropy(double p, double q) {
  if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0)) {
    throw InvalidParameter("Bernoulli parameters must lie in (0,1)");
  }
  if (p == q) return 0.0;
  const double v = p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return std::max(0.0, v);
}

namespace {

// Lower Cholesky of a k x k row-major matrix in place; returns the number
// of leading pivots that were positive.
std::size_t cholesky_prefix(std::vector<double>& a, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j) {
    double d = a[j * k + j];
    for (std::size_t c = 0; c < j; ++c) d -= a[j * k + c] * a[j * k + c];
    if (!(d > 0.0) || !std::isfinite(d)) return j;
    const double ljj = std::sqrt(d);
    a[j * k + j] = ljj;
    for (std::size_t i = j + 1; i < k; ++i) {
      double s = a[i * k + j];
      for (std::size_t c = 0; c < j; ++c) s -= a[i * k + c] * a[j * k + c];
      a[i * k + j] = s / ljj;
    }
  }
  return k;
}

struct ReplicaResult {
  std::vector<double> neg_logdet;  // index k-1: size-k minor
  std::size_t singular = 0;
};

// One replica: redraw until the Gram factorizes (bounded attempts).
ReplicaResult logdet_replica(GramSampler& sampler, std::size_t k,
                             RandomStream& rng) {
  std::vector<double> g(k * k);
  ReplicaResult out;
  for (int attempt = 0; attempt < 64; ++attempt) {
    sampler.sample(rng, g);
    if (cholesky_prefix(g, k) == k) {
      out.neg_logdet.resize(k);
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        acc += 2.0 * std::log(g[i * k + i]);
        out.neg_logdet[i] = -acc;
      }
      return out;
    }
    ++out.singular;
  }
  throw NumericError("Gram matrix singular in 64 consecutive draws");
}

// A cloud row is sqrt(D_alpha) z, so Y D_alpha Y^T = Z D_alpha^2 Z^T: the
// sampler gets the squared spectrum and standard normal rows.
GramSampler logdet_sampler(const AlphaSpectrum& alpha, std::size_t k) {
  std::vector<double> sq(alpha.values().begin(), alpha.values().end());
  for (auto& v : sq) v *= v;
  const double n2 = alpha.norm2();
  return GramSampler(AlphaSpectrum::from_values(std::move(sq)), k,
                     1.0 / (n2 * n2), true);
}

void check_rank(std::size_t k, const AlphaSpectrum& alpha) {
  if (alpha.nonzero_count() < k) {
    throw DomainError("the size-" + std::to_string(k) +
                      " Gram is singular: spectrum has only " +
                      std::to_string(alpha.nonzero_count()) +
                      " nonzero entries");
  }
}

}  // namespace

LogDetEstimate logdet_gram_mc(std::size_t k, const AlphaSpectrum& alpha,
                              std::size_t replicas, SeededStream stream,
                              const ExecContext& exec) {
  if (k == 0) throw InvalidParameter("Gram size must be >= 1");
  if (replicas < 2) throw InvalidParameter("need at least 2 replicas");
  check_rank(k, alpha);
  const GramSampler proto = logdet_sampler(alpha, k);
  constexpr std::size_t kChunk = 1024;
  const std::size_t tasks = (replicas + kChunk - 1) / kChunk;
  struct Partial {
    MomentAccumulator acc;
    std::size_t singular = 0;
  };
  const auto parts = exec.map<Partial>(tasks, [&](std::size_t task) {
    Partial part;
    GramSampler sampler = proto;
    const std::size_t end = std::min(replicas, (task + 1) * kChunk);
    for (std::size_t r = task * kChunk; r < end; ++r) {
      RandomStream rng(stream.with_stream(r));
      const ReplicaResult res = logdet_replica(sampler, k, rng);
      part.acc.add(res.neg_logdet[k - 1]);
      part.singular += res.singular;
    }
    return part;
  });
  MomentAccumulator total;
  std::size_t singular = 0;
  for (const auto& p : parts) {
    total.merge(p.acc);
    singular += p.singular;
  }
  return {total.mean, total.std_error(), replicas, singular};
}

std::string to_string(EntropyMethod m) {
  return m == EntropyMethod::analytic ? "analytic" : "mc";
}

GramEntropyBound gram_entropy_bound(std::size_t n, const AlphaSpectrum& alpha,
                                    const EntropyParams& params,
                                    const ExecContext& exec) {
  if (n == 0) throw InvalidParameter("n must be >= 1");
  GramEntropyBound out;
  out.method = params.method;
  if (n == 1) return out;
  const std::size_t kmax = n - 1;

  if (params.method == EntropyMethod::analytic) {
    const AlphaSpectrum a = normalize(alpha);
    const double s2 = a.power_sum(2.0);
    if (s2 < 10.0 * static_cast<double>(n)) {
      throw DomainError(
          "analytic envelope needs ||alpha||_2^2 >= 10 n after normalization "
          "(have " + std::to_string(s2) + ", n = " + std::to_string(n) +
          "); use the mc method");
    }
    const double r = a.power_sum(4.0) / (s2 * s2);
    double sum = 0.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
      const double kd = static_cast<double>(k);
      const double term = 0.5 * 3.0 * (kd * kd * r + std::sqrt(kd * r));
      out.steps.push_back(term);
      out.step_std_errors.push_back(0.0);
      sum += term;
    }
    out.bound = sum;
    out.estimate = sum;
    out.remainder = static_cast<double>(n) * std::exp(-s2 / 16.0);
    return out;
  }

  if (params.replicas < 2) throw InvalidParameter("need at least 2 replicas");
  check_rank(kmax, alpha);
  const GramSampler proto = logdet_sampler(alpha, kmax);
  constexpr std::size_t kChunk = 1024;
  const std::size_t tasks = (params.replicas + kChunk - 1) / kChunk;
  struct Partial {
    MomentAccumulator acc;
    std::vector<MomentAccumulator> steps;
    std::size_t singular = 0;
  };
  const auto parts = exec.map<Partial>(tasks, [&](std::size_t task) {
    Partial part;
    part.steps.resize(kmax);
    GramSampler sampler = proto;
    const std::size_t end = std::min(params.replicas, (task + 1) * kChunk);
    for (std::size_t r = task * kChunk; r < end; ++r) {
      RandomStream rng(params.stream.with_stream(r));
      const ReplicaResult res = logdet_replica(sampler, kmax, rng);
      double s = 0.0;
      for (std::size_t k = 0; k < kmax; ++k) {
        s += 0.5 * res.neg_logdet[k];
        part.steps[k].add(0.5 * res.neg_logdet[k]);
      }
      part.acc.add(s);
      part.singular += res.singular;
    }
    return part;
  });
  MomentAccumulator total;
  std::vector<MomentAccumulator> steps(kmax);
  for (const auto& p : parts) {
    total.merge(p.acc);
    for (std::size_t k = 0; k < kmax; ++k) steps[k].merge(p.steps[k]);
    out.singular_draws += p.singular;
  }
  for (const auto& s : steps) {
    out.steps.push_back(s.mean);
    out.step_std_errors.push_back(s.std_error());
  }
  out.estimate = total.mean;
  out.std_error = total.std_error();
  out.bound = std::max(0.0, out.estimate + params.confidence_z * out.std_error);
  return out;
}

TvBoundReport tv_upper_bound(std::size_t n, const AlphaSpectrum& alpha,
                             double p, const EntropyParams& params,
                             const ExecContext& exec) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
  TvBoundReport rep;
  rep.method = params.method;
  const GramEntropyBound g = gram_entropy_bound(n, alpha, params, exec);
  rep.ent_gram = g.bound;
  rep.ent_gram_estimate = g.estimate;
  rep.ent_gram_std_error = g.std_error;
  rep.ent_gram_remainder = g.remainder;
  rep.steps = g.steps;
  rep.step_std_errors = g.step_std_errors;

  if (p == 0.5) {
    rep.threshold = 0.0;
    rep.p_prime = 0.5;
  } else {
    rep.threshold = threshold_charfun(alpha, p).t;
    rep.p_prime = normal_sf(rep.threshold / alpha.norm2());
  }
  const double nn = static_cast<double>(n);
  rep.ent_bernoulli = nn * nn * bernoulli_rel_entropy(p, rep.p_prime);
  rep.tv_gram = std::sqrt(0.5 * rep.ent_gram);
  rep.tv_bernoulli = std::sqrt(rep.ent_bernoulli);
  rep.tv_upper = std::clamp(rep.tv_gram + rep.tv_bernoulli, 0.0, 1.5);
  return rep;
}

double chi2_tail_bound(std::span<const double> weights, double t) {
  if (weights.empty()) throw InvalidParameter("weights must be nonempty");
  if (!(t > 0.0)) throw InvalidParameter("t must be positive");
  double vmax = 0.0;
  for (double v : weights) {
    if (!(v >= 0.0)) throw InvalidParameter("weights must be >= 0");
    vmax = std::max(vmax, v);
  }
  if (vmax == 0.0) return 0.0;
  return 2.0 * std::exp(-t / (2.0 * vmax));
}

TailFrequency chi2_tail_mc(std::span<const double> weights, double t,
                           std::size_t n_samples, SeededStream stream,
                           const ExecContext& exec) {
  if (weights.empty()) throw InvalidParameter("weights must be nonempty");
  // Pool equal weights into one chi-square of the summed degrees.
  std::map<double, double> pooled;
  for (double v : weights) pooled[v] += 1.0;
  double mean = 0.0;
  for (double v : weights) mean += v;
  constexpr std::size_t kBatch = std::size_t{1} << 16;
  const std::size_t batches = (n_samples + kBatch - 1) / kBatch;
  const auto hits = exec.map<std::size_t>(batches, [&](std::size_t b) {
    RandomStream rng(stream.with_stream(b));
    std::size_t count = 0;
    const std::size_t end = std::min(n_samples, (b + 1) * kBatch);
    for (std::size_t i = b * kBatch; i < end; ++i) {
      double s = 0.0;
      for (const auto& [v, m] : pooled) s += v * rng.chi_square(m);
      if (std::abs(s - mean) >= t) ++count;
    }
    return count;
  });
  std::size_t total = 0;
  for (auto h : hits) total += h;
  const Proportion pr = proportion(total, n_samples);
  return {pr.value, pr.std_error};
}

}  // namespace geodetect
