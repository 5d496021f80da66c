#include "geodetect/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "geodetect/error.hpp"

namespace geodetect {

std::string to_string(GramKind kind) {
  return kind == GramKind::goe ? "goe" : "geometric";
}

PointCloud sample_points(std::size_t n, const AlphaSpectrum& alpha,
                         SeededStream stream) {
  if (n == 0) throw InvalidParameter("sample_points needs n >= 1");
  PointCloud cloud{n, alpha.dim(), std::vector<double>(n * alpha.dim())};
  RandomStream rng(stream);
  std::vector<double> sd(alpha.dim());
  for (std::size_t j = 0; j < sd.size(); ++j) sd[j] = std::sqrt(alpha[j]);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cloud.d; ++j) {
      cloud.values[i * cloud.d + j] = sd[j] * rng.normal();
    }
  }
  return cloud;
}

GramSample gram_ensemble(const PointCloud& cloud, const AlphaSpectrum& alpha) {
  if (cloud.d != alpha.dim()) {
    throw ShapeError("point cloud has dimension " + std::to_string(cloud.d) +
                     " but the spectrum has " + std::to_string(alpha.dim()));
  }
  GramSample g(cloud.n, GramKind::geometric);
  const double norm = alpha.norm2();
  for (std::size_t i = 0; i < cloud.n; ++i) {
    const auto xi = cloud.row(i);
    for (std::size_t l = i + 1; l < cloud.n; ++l) {
      const auto xl = cloud.row(l);
      double acc = 0.0;
      for (std::size_t j = 0; j < cloud.d; ++j) acc += xi[j] * xl[j];
      g.set(i, l, acc / norm);
    }
  }
  return g;
}

GramSample gram_ensemble_streaming(std::size_t n, const AlphaSpectrum& alpha,
                                   SeededStream stream, std::size_t block) {
  if (n == 0) throw InvalidParameter("gram ensemble needs n >= 1");
  block = std::max<std::size_t>(block, 1);
  const std::size_t d = alpha.dim();
  std::vector<double> sd(d);
  for (std::size_t j = 0; j < d; ++j) sd[j] = std::sqrt(alpha[j]);

  std::vector<double> acc(n * (n - 1) / 2, 0.0);
  std::vector<double> buf(n * block);
  RandomStream rng(stream);
  for (std::size_t j0 = 0; j0 < d; j0 += block) {
    const std::size_t w = std::min(block, d - j0);
    for (std::size_t i = 0; i < n; ++i) {
      rng.seek(i * d + j0);
      for (std::size_t j = 0; j < w; ++j) {
        buf[i * block + j] = sd[j0 + j] * rng.normal();
      }
    }
    // Same per-entry summation order as gram_ensemble, hence identical bits.
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = buf.data() + i * block;
      for (std::size_t l = i + 1; l < n; ++l, ++idx) {
        const double* xl = buf.data() + l * block;
        double a = acc[idx];
        for (std::size_t j = 0; j < w; ++j) a += xi[j] * xl[j];
        acc[idx] = a;
      }
    }
  }
  GramSample g(n, GramKind::geometric);
  const double norm = alpha.norm2();
  auto up = g.upper();
  for (std::size_t idx = 0; idx < acc.size(); ++idx) up[idx] = acc[idx] / norm;
  return g;
}

GramSample gram_ensemble_budgeted(std::size_t n, const AlphaSpectrum& alpha,
                                  SeededStream stream, std::size_t budget) {
  if (n * alpha.dim() <= budget) {
    return gram_ensemble(sample_points(n, alpha, stream), alpha);
  }
  return gram_ensemble_streaming(n, alpha, stream);
}

GramSample goe_ensemble(std::size_t n, SeededStream stream) {
  if (n == 0) throw InvalidParameter("goe ensemble needs n >= 1");
  GramSample g(n, GramKind::goe);
  RandomStream rng(stream);
  for (double& v : g.upper()) v = rng.normal();
  return g;
}

GramSampler::GramSampler(const AlphaSpectrum& alpha, std::size_t k,
                         double scale, bool with_diagonal)
    : k_(k), diagonal_(with_diagonal) {
  if (k == 0) throw InvalidParameter("Gram size must be >= 1");
  const SpectrumGroups groups = group_spectrum(alpha);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups.count[g] >= static_cast<double>(k)) {
      block_weight_.push_back(scale * groups.value[g]);
      block_dof_.push_back(groups.count[g]);
    } else {
      for (double c = 0; c < groups.count[g]; c += 1.0) {
        coord_weight_.push_back(scale * groups.value[g]);
      }
    }
  }
  y_.resize(k);
  lower_.resize(k * k);
  cond_.resize(k * k);
}

void GramSampler::sample(RandomStream& rng, std::span<double> out) {
  const std::size_t k = k_;
  std::fill(out.begin(), out.end(), 0.0);

  for (std::size_t g = 0; g < block_weight_.size(); ++g) {
    // Bartlett: W = L L^T, L_ii^2 ~ chi2(m - i), L_ij ~ N(0,1) below.
    std::fill(lower_.begin(), lower_.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      lower_[i * k + i] =
          std::sqrt(rng.chi_square(block_dof_[g] - static_cast<double>(i)));
      for (std::size_t j = 0; j < i; ++j) lower_[i * k + j] = rng.normal();
    }
    const double w = block_weight_[g];
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a; b < k; ++b) {
        if (a == b && !diagonal_) continue;
        double s = 0.0;
        for (std::size_t c = 0; c <= a; ++c) {
          s += lower_[a * k + c] * lower_[b * k + c];
        }
        out[a * k + b] += w * s;
      }
    }
  }

  const bool conditional =
      !diagonal_ && k >= 2 && !coord_weight_.empty();
  const std::size_t kk = conditional ? k - 1 : k;
  if (conditional) std::fill(cond_.begin(), cond_.end(), 0.0);
  for (double w : coord_weight_) {
    for (std::size_t a = 0; a < kk; ++a) y_[a] = rng.normal();
    for (std::size_t a = 0; a < kk; ++a) {
      const double wy = w * y_[a];
      for (std::size_t b = a; b < kk; ++b) {
        if (a == b && !diagonal_) continue;
        out[a * k + b] += wy * y_[b];
      }
    }
    if (conditional) {
      const double w2 = w * w;
      for (std::size_t a = 0; a < kk; ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
          cond_[a * k + b] += w2 * y_[a] * y_[b];
        }
      }
    }
  }

  if (conditional) {
    // Last row given the first k-1 points is N(0, cond). Semidefinite
    // Cholesky: a vanishing pivot zeroes its column.
    std::fill(lower_.begin(), lower_.end(), 0.0);
    for (std::size_t j = 0; j < kk; ++j) {
      double dj = cond_[j * k + j];
      for (std::size_t c = 0; c < j; ++c) dj -= lower_[j * k + c] * lower_[j * k + c];
      if (!(dj > 1e-12 * cond_[j * k + j])) continue;
      const double ljj = std::sqrt(dj);
      lower_[j * k + j] = ljj;
      for (std::size_t i = j + 1; i < kk; ++i) {
        double s = cond_[i * k + j];
        for (std::size_t c = 0; c < j; ++c) s -= lower_[i * k + c] * lower_[j * k + c];
        lower_[i * k + j] = s / ljj;
      }
    }
    for (std::size_t a = 0; a < kk; ++a) y_[a] = rng.normal();
    for (std::size_t a = 0; a < kk; ++a) {
      double x = 0.0;
      for (std::size_t c = 0; c <= a; ++c) x += lower_[a * k + c] * y_[c];
      out[a * k + (k - 1)] += x;
    }
  }

  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) out[b * k + a] = out[a * k + b];
  }
}

GramSample GramSampler::sample_gram(RandomStream& rng) {
  std::vector<double> full(k_ * k_);
  sample(rng, full);
  GramSample g(k_, GramKind::geometric);
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = i + 1; j < k_; ++j) g.set(i, j, full[i * k_ + j]);
  }
  return g;
}

void write_gram(std::ostream& os, const GramSample& g) {
  const auto old = os.precision(17);
  os << g.n() << ' ' << to_string(g.kind()) << '\n';
  for (std::size_t i = 0; i + 1 < g.n(); ++i) {
    for (std::size_t j = i + 1; j < g.n(); ++j) {
      if (j > i + 1) os << ' ';
      os << g(i, j);
    }
    os << '\n';
  }
  os.precision(old);
}

GramSample read_gram(std::istream& is) {
  std::size_t n = 0;
  std::string kind;
  if (!(is >> n >> kind)) throw UsageError("malformed Gram header");
  GramKind k;
  if (kind == "geometric") {
    k = GramKind::geometric;
  } else if (kind == "goe") {
    k = GramKind::goe;
  } else {
    throw UsageError("unknown Gram kind '" + kind + "'");
  }
  GramSample g(n, k);
  for (double& v : g.upper()) {
    if (!(is >> v)) throw UsageError("truncated Gram matrix");
  }
  return g;
}

}  // namespace geodetect
