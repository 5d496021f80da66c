#include "geodetect/graphs.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

#include "geodetect/error.hpp"
#include "geodetect/numeric.hpp"

namespace geodetect {

AdjacencyMatrix AdjacencyMatrix::complete(std::size_t n) {
  AdjacencyMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) a.set(i, j, true);
  }
  return a;
}

std::size_t AdjacencyMatrix::edge_count() const noexcept {
  std::size_t e = 0;
  for (auto w : bits_) e += static_cast<std::size_t>(std::popcount(w));
  return e;
}

std::size_t AdjacencyMatrix::degree(std::size_t v) const noexcept {
  std::size_t d = 0;
  for (std::size_t u = 0; u < n_; ++u) d += (*this)(u, v) ? 1 : 0;
  return d;
}

AdjacencyMatrix geometric_graph(const GramSample& w, double t_scaled) {
  if (w.kind() != GramKind::geometric) {
    throw UsageError("geometric_graph needs a geometric Gram sample");
  }
  AdjacencyMatrix a(w.n());
  for (std::size_t i = 0; i < w.n(); ++i) {
    for (std::size_t j = i + 1; j < w.n(); ++j) a.set(i, j, w(i, j) >= t_scaled);
  }
  return a;
}

AdjacencyMatrix er_graph(const GramSample& m, double z_p) {
  if (m.kind() != GramKind::goe) {
    throw UsageError("er_graph needs a GOE sample");
  }
  AdjacencyMatrix a(m.n());
  for (std::size_t i = 0; i < m.n(); ++i) {
    for (std::size_t j = i + 1; j < m.n(); ++j) a.set(i, j, m(i, j) >= z_p);
  }
  return a;
}

AdjacencyMatrix er_graph_direct(std::size_t n, double p, RandomStream& rng) {
  AdjacencyMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) a.set(i, j, rng.uniform() < p);
  }
  return a;
}

std::uint64_t triangle_count(const AdjacencyMatrix& a) {
  std::uint64_t t = 0;
  const std::size_t words = a.words();
  for (std::size_t i = 0; i < a.n(); ++i) {
    const std::uint64_t* ri = a.row(i);
    for (std::size_t j = i + 1; j < a.n(); ++j) {
      if (!a(i, j)) continue;
      // Row j only holds k > j, so each triangle i<j<k is counted once.
      const std::uint64_t* rj = a.row(j);
      for (std::size_t w = j / 64; w < words; ++w) {
        t += static_cast<std::uint64_t>(std::popcount(ri[w] & rj[w]));
      }
    }
  }
  return t;
}

namespace {

double tau_direct(const AdjacencyMatrix& a, double p) {
  const std::size_t n = a.n();
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      c[i * n + j] = (a(i, j) ? 1.0 : 0.0) - p;
    }
  }
  double tau = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double cij = c[i * n + j];
      double s = 0.0;
      for (std::size_t k = j + 1; k < n; ++k) s += c[i * n + k] * c[j * n + k];
      tau += cij * s;
    }
  }
  return tau;
}

double tau_trace(const AdjacencyMatrix& a, double p) {
  const auto n = static_cast<Eigen::Index>(a.n());
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (a(static_cast<std::size_t>(i),
                          static_cast<std::size_t>(j)) ? 1.0 : 0.0) - p;
      b(i, j) = v;
      b(j, i) = v;
    }
  }
  const Eigen::MatrixXd b2 = b * b;
  return b2.cwiseProduct(b).sum() / 6.0;
}

}  // namespace

double signed_triangles(const AdjacencyMatrix& a, double p, TauPath path) {
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidParameter("p must lie strictly between 0 and 1");
  }
  if (path == TauPath::automatic) {
    path = a.n() <= 64 ? TauPath::direct : TauPath::trace;
  }
  return path == TauPath::direct ? tau_direct(a, p) : tau_trace(a, p);
}

TriangleReport triangle_report(const AdjacencyMatrix& a, double p) {
  return {triangle_count(a), signed_triangles(a, p), a.n(), p};
}

GraphSource GraphSource::er(std::size_t n, double p) {
  if (n == 0) throw InvalidParameter("graph needs n >= 1");
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
  GraphSource s;
  s.model_ = GraphModel::er;
  s.n_ = n;
  s.p_ = p;
  return s;
}

GraphSource GraphSource::geometric(std::size_t n, double p,
                                   const AlphaSpectrum& alpha,
                                   double t_scaled) {
  GraphSource s = er(n, p);
  s.model_ = GraphModel::geometric;
  s.t_scaled_ = t_scaled;
  s.sampler_.emplace(alpha, n, 1.0 / alpha.norm2(), false);
  return s;
}

namespace {

AdjacencyMatrix draw_with(GraphModel model, std::size_t n, double p,
                          double t_scaled, GramSampler* sampler,
                          std::vector<double>& work, RandomStream& rng) {
  if (model == GraphModel::er) return er_graph_direct(n, p, rng);
  work.resize(n * n);
  sampler->sample(rng, work);
  AdjacencyMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      a.set(i, j, work[i * n + j] >= t_scaled);
    }
  }
  return a;
}

}  // namespace

AdjacencyMatrix GraphSource::draw(SeededStream stream,
                                  std::uint64_t replica) const {
  RandomStream rng(stream.with_stream(replica));
  std::optional<GramSampler> local = sampler_;
  std::vector<double> work;
  return draw_with(model_, n_, p_, t_scaled_, local ? &*local : nullptr, work,
                   rng);
}

std::vector<double> tau_samples(const GraphSource& source,
                                std::size_t replicas, SeededStream stream,
                                const ExecContext& exec) {
  constexpr std::size_t kChunk = 256;
  std::vector<double> taus(replicas);
  const std::size_t tasks = (replicas + kChunk - 1) / kChunk;
  exec.for_each(tasks, [&](std::size_t task) {
    std::optional<GramSampler> sampler = source.sampler_;
    std::vector<double> work;
    const std::size_t end = std::min(replicas, (task + 1) * kChunk);
    for (std::size_t r = task * kChunk; r < end; ++r) {
      RandomStream rng(stream.with_stream(r));
      const AdjacencyMatrix a =
          draw_with(source.model_, source.n_, source.p_, source.t_scaled_,
                    sampler ? &*sampler : nullptr, work, rng);
      taus[r] = signed_triangles(a, source.p_);
    }
  });
  return taus;
}

TauMoments moments_of(const std::vector<double>& taus) {
  TauMoments m;
  m.replicas = taus.size();
  if (taus.empty()) return m;
  MomentAccumulator acc;
  for (double t : taus) acc.add(t);
  m.mean = acc.mean;
  m.variance = acc.variance();
  m.mean_std_error = acc.std_error();
  const double n = static_cast<double>(taus.size());
  if (taus.size() > 3) {
    CompensatedSum m4;
    for (double t : taus) {
      const double d = t - acc.mean;
      m4.add(d * d * d * d);
    }
    const double mu4 = m4.value() / n;
    const double s4 = m.variance * m.variance;
    m.variance_std_error =
        std::sqrt(std::max(0.0, (mu4 - (n - 3.0) / (n - 1.0) * s4) / n));
  }
  return m;
}

TauMoments tau_moments_mc(const GraphSource& source, std::size_t replicas,
                          SeededStream stream, const ExecContext& exec) {
  if (replicas < 100) throw InvalidParameter("tau_moments_mc needs >= 100 replicas");
  return moments_of(tau_samples(source, replicas, stream, exec));
}

double er_tau_variance(std::size_t n, double p) {
  const double q = p * (1.0 - p);
  return binomial_coefficient(n, 3) * q * q * q;
}

CovarianceCheck covariance_identity_mc(const AlphaSpectrum& alpha, double p,
                                       double t_scaled, std::size_t samples,
                                       SeededStream stream,
                                       const ExecContext& exec) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
  if (samples < 2) throw InvalidParameter("need at least 2 samples");
  const GramSampler proto(alpha, 4, 1.0 / alpha.norm2(), false);
  constexpr std::size_t kBatch = std::size_t{1} << 16;
  const std::size_t batches = (samples + kBatch - 1) / kBatch;
  struct Partial {
    MomentAccumulator prod;
    MomentAccumulator tri;  // mean of the two triangle indicators
  };
  const auto parts = exec.map<Partial>(batches, [&](std::size_t b) {
    Partial part;
    GramSampler sampler = proto;
    RandomStream rng(stream.with_stream(b));
    std::array<double, 16> g{};
    const std::size_t end = std::min(samples, (b + 1) * kBatch);
    for (std::size_t i = b * kBatch; i < end; ++i) {
      sampler.sample(rng, g);
      auto e = [&](std::size_t u, std::size_t v) {
        return g[u * 4 + v] >= t_scaled ? 1.0 : 0.0;
      };
      const double a12 = e(0, 1), a13 = e(0, 2), a23 = e(1, 2), a14 = e(0, 3),
                   a24 = e(1, 3);
      const double t123 = (a12 - p) * (a13 - p) * (a23 - p);
      const double t124 = (a12 - p) * (a14 - p) * (a24 - p);
      part.prod.add(t123 * t124);
      part.tri.add(0.5 * (a12 * a13 * a23 + a12 * a14 * a24));
    }
    return part;
  });
  MomentAccumulator prod, tri;
  for (const auto& part : parts) {
    prod.merge(part.prod);
    tri.merge(part.tri);
  }
  CovarianceCheck c;
  c.samples = samples;
  c.lhs = prod.mean;
  c.lhs_std_error = prod.std_error();
  c.triangle_prob = tri.mean;
  c.triangle_prob_std_error = tri.std_error();
  const double factor = (1.0 - p) * (1.0 - p) / p + p * p / (1.0 - p);
  const double excess = tri.mean - p * p * p;
  c.rhs = factor * excess * excess;
  c.rhs_std_error = 2.0 * factor * std::abs(excess) * c.triangle_prob_std_error;
  return c;
}

void write_adjacency(std::ostream& os, const AdjacencyMatrix& a) {
  os << a.n() << " adjacency\n";
  for (std::size_t i = 0; i + 1 < a.n(); ++i) {
    for (std::size_t j = i + 1; j < a.n(); ++j) {
      if (j > i + 1) os << ' ';
      os << (a(i, j) ? '1' : '0');
    }
    os << '\n';
  }
}

AdjacencyMatrix read_adjacency(std::istream& is) {
  std::size_t n = 0;
  std::string kind;
  if (!(is >> n >> kind)) throw UsageError("malformed adjacency header");
  if (kind != "adjacency") {
    throw UsageError("expected an adjacency file, found kind '" + kind + "'");
  }
  AdjacencyMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      int v = -1;
      if (!(is >> v) || (v != 0 && v != 1)) {
        throw UsageError("adjacency entries must be 0 or 1");
      }
      a.set(i, j, v == 1);
    }
  }
  return a;
}

}  // namespace geodetect
