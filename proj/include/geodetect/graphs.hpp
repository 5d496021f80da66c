#pragma once

// Adjacency matrices from Gram samples, and triangle statistics.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "geodetect/ensembles.hpp"
#include "geodetect/parallel.hpp"
#include "geodetect/rng.hpp"
#include "geodetect/spectrum.hpp"

namespace geodetect {

/// Simple undirected graph on n vertices. Row i keeps the bits of the
/// neighbours j > i only (the upper triangle), packed 64 per word.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(std::size_t n)
      : n_(n), words_((n + 63) / 64), bits_(n * words_, 0) {}

  static AdjacencyMatrix complete(std::size_t n);

  std::size_t n() const noexcept { return n_; }
  bool operator()(std::size_t i, std::size_t j) const noexcept {
    if (i == j) return false;
    if (i > j) std::swap(i, j);
    return (bits_[i * words_ + j / 64] >> (j % 64)) & 1u;
  }
  void set(std::size_t i, std::size_t j, bool on) noexcept {
    if (i == j) return;
    if (i > j) std::swap(i, j);
    const std::uint64_t mask = std::uint64_t{1} << (j % 64);
    auto& w = bits_[i * words_ + j / 64];
    w = on ? (w | mask) : (w & ~mask);
  }
  std::size_t edge_count() const noexcept;
  std::size_t degree(std::size_t v) const noexcept;

  /// Upper-neighbour words of row i (bits j > i).
  const std::uint64_t* row(std::size_t i) const noexcept {
    return bits_.data() + i * words_;
  }
  std::size_t words() const noexcept { return words_; }

  friend bool operator==(const AdjacencyMatrix&,
                         const AdjacencyMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Edge iff w_ij >= t_scaled. Throws UsageError on a GOE sample.
AdjacencyMatrix geometric_graph(const GramSample& w, double t_scaled);

/// Edge iff m_ij >= z_p. Throws UsageError on a geometric sample.
AdjacencyMatrix er_graph(const GramSample& m, double z_p);

/// G(n,p) drawn edge by edge (edge iff uniform < p); same law as er_graph.
AdjacencyMatrix er_graph_direct(std::size_t n, double p, RandomStream& rng);

std::uint64_t triangle_count(const AdjacencyMatrix& a);

enum class TauPath { automatic, direct, trace };

/// Sum over unordered triples of (A_ij - p)(A_ik - p)(A_jk - p). The
/// automatic path is the triple loop for n <= 64 and tr(B^3)/6 with the
/// centred matrix B = A - p(J - I) otherwise.
double signed_triangles(const AdjacencyMatrix& a, double p,
                        TauPath path = TauPath::automatic);

struct TriangleReport {
  std::uint64_t t_count = 0;
  double tau = 0.0;
  std::size_t n = 0;
  double p = 0.0;
};

TriangleReport triangle_report(const AdjacencyMatrix& a, double p);

enum class GraphModel { er, geometric };

/// Replica r of either model, drawn from stream id r of `stream`. The
/// geometric model thresholds a Gram sample (GramSampler) at t_scaled.
class GraphSource {
 public:
  static GraphSource er(std::size_t n, double p);
  static GraphSource geometric(std::size_t n, double p,
                               const AlphaSpectrum& alpha, double t_scaled);

  AdjacencyMatrix draw(SeededStream stream, std::uint64_t replica) const;
  std::size_t n() const noexcept { return n_; }
  double p() const noexcept { return p_; }
  GraphModel model() const noexcept { return model_; }

 private:
  GraphModel model_ = GraphModel::er;
  std::size_t n_ = 0;
  double p_ = 0.5;
  double t_scaled_ = 0.0;
  std::optional<GramSampler> sampler_;

  friend std::vector<double> tau_samples(const GraphSource&, std::size_t,
                                         SeededStream, const ExecContext&);
};

/// tau of `replicas` independent graphs, in replica order.
std::vector<double> tau_samples(const GraphSource& source,
                                std::size_t replicas, SeededStream stream,
                                const ExecContext& exec = {});

struct TauMoments {
  double mean = 0.0;
  double variance = 0.0;
  double mean_std_error = 0.0;
  double variance_std_error = 0.0;
  std::size_t replicas = 0;
};

TauMoments moments_of(const std::vector<double>& taus);

TauMoments tau_moments_mc(const GraphSource& source, std::size_t replicas,
                          SeededStream stream, const ExecContext& exec = {});

/// C(n,3) (p(1-p))^3, the exact variance of tau under G(n,p).
double er_tau_variance(std::size_t n, double p);

/// Both sides of the conditional-independence covariance identity
///   E[tau(1,2,3) tau(1,2,4)] = ((1-p)^2/p + p^2/(1-p)) (P(E_p) - p^3)^2
/// estimated from `samples` independent 4-point geometric draws.
struct CovarianceCheck {
  double lhs = 0.0;
  double lhs_std_error = 0.0;
  double triangle_prob = 0.0;  // P(E_p), averaged over both triangles
  double triangle_prob_std_error = 0.0;
  double rhs = 0.0;
  double rhs_std_error = 0.0;  // delta method
  std::size_t samples = 0;
};

CovarianceCheck covariance_identity_mc(const AlphaSpectrum& alpha, double p,
                                       double t_scaled, std::size_t samples,
                                       SeededStream stream,
                                       const ExecContext& exec = {});

void write_adjacency(std::ostream& os, const AdjacencyMatrix& a);
AdjacencyMatrix read_adjacency(std::istream& is);

}  // namespace geodetect
