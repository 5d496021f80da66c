#include "geodetect/threshold.hpp"

#include <algorithm>
#include <cmath>

#include "geodetect/error.hpp"
#include "geodetect/numeric.hpp"

namespace geodetect {

namespace {

constexpr std::size_t kBatch = std::size_t{1} << 16;

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidParameter("p must lie strictly between 0 and 1");
  }
}

// Type-7 quantile at level q of the sorted-on-demand sample.
double type7(std::vector<double>& x, double q) {
  const double h = (static_cast<double>(x.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(lo),
                   x.end());
  const double xlo = x[lo];
  double xhi = xlo;
  if (hi != lo) {
    xhi = *std::min_element(x.begin() + static_cast<std::ptrdiff_t>(hi),
                            x.end());
  }
  return xlo + (h - static_cast<double>(lo)) * (xhi - xlo);
}

}  // namespace

std::string to_string(ThresholdMethod m) {
  switch (m) {
    case ThresholdMethod::mc_quantile:
      return "mc_quantile";
    case ThresholdMethod::normal_approx:
      return "normal_approx";
    case ThresholdMethod::charfun_inversion:
      return "charfun_inversion";
  }
  return "unknown";
}

InnerProductSampler::InnerProductSampler(const AlphaSpectrum& alpha) {
  const SpectrumGroups g = group_spectrum(alpha);
  for (std::size_t i = 0; i < g.size(); ++i) {
    weight_.push_back(g.value[i] * g.value[i]);
    dof_.push_back(g.count[i]);
  }
}

double InnerProductSampler::operator()(RandomStream& rng) const {
  double s = 0.0;
  for (std::size_t i = 0; i < weight_.size(); ++i) {
    double chi2;
    if (dof_[i] <= 4.0) {
      chi2 = 0.0;
      for (double c = 0; c < dof_[i]; c += 1.0) {
        const double z = rng.normal();
        chi2 += z * z;
      }
    } else {
      chi2 = rng.chi_square(dof_[i]);
    }
    s += weight_[i] * chi2;
  }
  return std::sqrt(s) * rng.normal();
}

std::vector<double> sample_inner_products(const AlphaSpectrum& alpha,
                                          std::size_t n_samples,
                                          SeededStream stream,
                                          const ExecContext& exec) {
  const InnerProductSampler sampler(alpha);
  std::vector<double> out(n_samples);
  const std::size_t batches = (n_samples + kBatch - 1) / kBatch;
  exec.for_each(batches, [&](std::size_t b) {
    RandomStream rng(stream.with_stream(b));
    const std::size_t end = std::min(n_samples, (b + 1) * kBatch);
    for (std::size_t i = b * kBatch; i < end; ++i) out[i] = sampler(rng);
  });
  return out;
}

ThresholdEstimate threshold_mc(const AlphaSpectrum& alpha, double p,
                               std::size_t n_samples, SeededStream stream,
                               const ExecContext& exec) {
  check_probability(p);
  if (n_samples < 10000) {
    throw InvalidParameter("threshold_mc needs at least 10^4 samples");
  }
  ThresholdEstimate est{0.0, ThresholdMethod::mc_quantile, 0.0, {}, {}};
  if (p == 0.5) return est;  // symmetric law

  std::vector<double> x = sample_inner_products(alpha, n_samples, stream, exec);
  const double q = 1.0 - p;
  est.t = type7(x, q);

  // Density at the quantile from a symmetric spacing of order statistics.
  const double n = static_cast<double>(n_samples);
  const double m = std::max(10.0, std::sqrt(n));
  const double qlo = std::max(0.0, q - m / n);
  const double qhi = std::min(1.0, q + m / n);
  const double xlo = type7(x, qlo);
  const double xhi = type7(x, qhi);
  const double density = (qhi - qlo) / std::max(xhi - xlo, 1e-300);
  est.std_error = std::sqrt(p * (1.0 - p) / n) / density;
  return est;
}

ThresholdEstimate threshold_normal(const AlphaSpectrum& alpha, double p) {
  check_probability(p);
  const double r = q_norm(alpha, 3.0) / alpha.norm2();
  ThresholdEstimate est{0.0, ThresholdMethod::normal_approx, {}, {},
                        std::min(1.0, 3.0 * r * r * r)};
  if (p != 0.5) est.t = alpha.norm2() * normal_upper_quantile(p);
  return est;
}

Estimate inner_product_survival(const AlphaSpectrum& alpha, double t,
                                const SurvivalParams& params) {
  if (!(params.abs_tol > 0.0)) {
    throw InvalidParameter("survival tolerance must be positive");
  }
  if (!std::isfinite(t)) {
    return {t > 0 ? 0.0 : 1.0, 0.0};
  }
  if (t == 0.0) return {0.5, 0.0};

  // Work with alpha / max alpha; the inner product scales linearly.
  const SpectrumGroups g = group_spectrum(alpha);
  const double scale = alpha.max();
  const double ts = t / scale;
  const double at = std::abs(ts);
  std::vector<double> a2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = g.value[i] / scale;
    a2[i] = a * a;
  }
  auto phi = [&](double u) {
    double s = 0.0;
    const double u2 = u * u;
    for (std::size_t i = 0; i < a2.size(); ++i) {
      s += g.count[i] * std::log1p(a2[i] * u2);
    }
    return std::exp(-0.5 * s);
  };
  auto integrand = [&](double u) {
    if (u == 0.0) return ts;
    return std::sin(u * ts) / u * phi(u);
  };

  // For decreasing phi(u)/u the tail past U is at most 2 phi(U) / (U |t|).
  const double tol = params.abs_tol;
  auto tail_bound = [&](double u) { return 2.0 * phi(u) / (u * at) / M_PI; };
  double upper = params.truncation_radius;
  if (upper <= 0.0) {
    upper = 1.0;
    while (tail_bound(upper) > 0.5 * tol && upper < 1e15) upper *= 2.0;
  }
  const double tail = tail_bound(upper);

  const double width = std::min(M_PI / at, upper);
  const double panels_d = std::ceil(upper / width);
  if (panels_d > static_cast<double>(params.max_panels)) {
    throw NumericError("survival inversion needs " +
                           std::to_string(static_cast<long long>(panels_d)) +
                           " panels, above the configured maximum",
                       0.5, 0.5);
  }
  const auto panels = static_cast<std::size_t>(panels_d);
  const double panel_tol = 0.5 * tol * M_PI / static_cast<double>(panels);
  CompensatedSum value, error;
  for (std::size_t k = 0; k < panels; ++k) {
    const double lo = static_cast<double>(k) * width;
    const double hi = std::min(upper, lo + width);
    const QuadResult r =
        integrate_adaptive(integrand, lo, hi, panel_tol, 100, params.rule);
    value.add(r.value);
    error.add(r.error);
  }
  const double s = std::clamp(0.5 - value.value() / M_PI, 0.0, 1.0);
  const double err = error.value() / M_PI + tail;
  if (err > tol) {
    throw NumericError("survival inversion did not reach tolerance", s, err);
  }
  return {s, err};
}

ThresholdEstimate threshold_charfun(const AlphaSpectrum& alpha, double p,
                                    double tol) {
  check_probability(p);
  if (!(tol > 0.0)) throw InvalidParameter("tolerance must be positive");
  ThresholdEstimate est{0.0, ThresholdMethod::charfun_inversion, {}, 0.0, {}};
  if (p == 0.5) return est;

  SurvivalParams sp;
  sp.abs_tol = 0.25 * tol;
  auto surv = [&](double t) { return inner_product_survival(alpha, t, sp).value; };

  const double t0 = threshold_normal(alpha, p).t;
  double step = 0.25 * alpha.norm2();
  double lo = t0 - step, hi = t0 + step;
  double slo = surv(lo), shi = surv(hi);
  int expansions = 0;
  while (!(slo >= p && shi <= p)) {
    if (++expansions > 60) {
      throw NumericError("could not bracket the threshold (S(lo)=" +
                             std::to_string(slo) +
                             ", S(hi)=" + std::to_string(shi) + ")",
                         t0, step);
    }
    step *= 2.0;
    if (slo < p) {
      lo = t0 - step;
      slo = surv(lo);
    }
    if (shi > p) {
      hi = t0 + step;
      shi = surv(hi);
    }
  }
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double smid = surv(mid);
    if (std::abs(smid - p) <= 0.75 * tol) {
      // Secant slope of the bracket gives the density for the t-error.
      const double density = (slo - shi) / (hi - lo);
      est.t = mid;
      est.error_bound = tol / std::max(density, 1e-300);
      est.prob_error_bound = tol;
      return est;
    }
    if (smid > p) {
      lo = mid;
      slo = smid;
    } else {
      hi = mid;
      shi = smid;
    }
  }
  est.t = mid;
  est.error_bound = 0.5 * (hi - lo);
  est.prob_error_bound = tol;
  return est;
}

KolmogorovGap berry_esseen_gap(const AlphaSpectrum& alpha,
                               std::size_t n_samples, SeededStream stream,
                               const ExecContext& exec) {
  if (n_samples < 100000) {
    throw InvalidParameter("berry_esseen_gap needs at least 10^5 samples");
  }
  std::vector<double> x = sample_inner_products(alpha, n_samples, stream, exec);
  const double norm = alpha.norm2();
  for (double& v : x) v /= norm;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(n_samples);
  double gap = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i]);
    gap = std::max({gap, static_cast<double>(i + 1) / n - f,
                    f - static_cast<double>(i) / n});
  }
  const double r = q_norm(alpha, 3.0) / norm;
  // 0.8687 / sqrt(n) is the mean of the Kolmogorov statistic under the null.
  return {gap, 0.8687 / std::sqrt(n), 3.0 * r * r * r};
}

}  // namespace geodetect
