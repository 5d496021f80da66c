#pragma once

// Seeded sampling of Gaussian point clouds, the Gram ensemble W(n, alpha)
// and the GOE ensemble M(n).

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "geodetect/rng.hpp"
#include "geodetect/spectrum.hpp"

namespace geodetect {

/// n points in R^d, row-major. Coordinate j of point i is sqrt(alpha_j) times
/// normal number i*d + j of the sampling stream.
struct PointCloud {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const noexcept {
    return values[i * d + j];
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values.data() + i * d, d};
  }
};

enum class GramKind { geometric, goe };

std::string to_string(GramKind kind);

/// Symmetric n x n matrix with zero diagonal, stored as its strict upper
/// triangle in row-major order.
class GramSample {
 public:
  GramSample() = default;
  GramSample(std::size_t n, GramKind kind)
      : n_(n), kind_(kind), upper_(n * (n > 0 ? n - 1 : 0) / 2, 0.0) {}

  std::size_t n() const noexcept { return n_; }
  GramKind kind() const noexcept { return kind_; }

  double operator()(std::size_t i, std::size_t j) const noexcept {
    if (i == j) return 0.0;
    return upper_[index(i, j)];
  }
  /// Sets entries (i,j) and (j,i); i != j.
  void set(std::size_t i, std::size_t j, double v) noexcept {
    upper_[index(i, j)] = v;
  }
  std::span<const double> upper() const noexcept { return upper_; }
  std::span<double> upper() noexcept { return upper_; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const noexcept {
    if (i > j) std::swap(i, j);
    return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
  }

  std::size_t n_ = 0;
  GramKind kind_ = GramKind::geometric;
  std::vector<double> upper_;
};

PointCloud sample_points(std::size_t n, const AlphaSpectrum& alpha,
                         SeededStream stream);

/// W = Y D Y^T / ||alpha||_2 with the diagonal removed. Throws ShapeError if
/// the cloud dimension differs from alpha's.
GramSample gram_ensemble(const PointCloud& cloud, const AlphaSpectrum& alpha);

/// Same values as gram_ensemble(sample_points(n, alpha, stream), alpha), bit
/// for bit, without materializing the cloud: coordinates are generated in
/// blocks of `block` columns and reduced immediately.
GramSample gram_ensemble_streaming(std::size_t n, const AlphaSpectrum& alpha,
                                   SeededStream stream,
                                   std::size_t block = 4096);

/// sample_points + gram_ensemble when n*d <= budget, streaming otherwise.
GramSample gram_ensemble_budgeted(std::size_t n, const AlphaSpectrum& alpha,
                                  SeededStream stream,
                                  std::size_t budget = std::size_t{1} << 24);

GramSample goe_ensemble(std::size_t n, SeededStream stream);

/// Draws k x k matrices with the law of scale * Y D_alpha Y^T (Y a k x d
/// standard Gaussian matrix) at a cost independent of the multiplicity of
/// repeated spectrum values.
///
/// A value of multiplicity m >= k contributes a Bartlett-factored Wishart
/// block; the remaining coordinates are drawn explicitly. When the diagonal
/// is not requested, the last row is drawn from its conditional law given
/// the first k-1 points, which needs k-1 normals instead of one per
/// explicit coordinate. The result is equal in law to the explicit product
/// but uses a different draw order from sample_points.
class GramSampler {
 public:
  GramSampler(const AlphaSpectrum& alpha, std::size_t k, double scale,
              bool with_diagonal);

  std::size_t size() const noexcept { return k_; }

  /// Fills `out` (k*k, row-major, symmetric). The diagonal is left at 0
  /// unless it was requested.
  void sample(RandomStream& rng, std::span<double> out);

  /// Convenience: a geometric GramSample (scale 1/||alpha||_2).
  GramSample sample_gram(RandomStream& rng);

 private:
  std::size_t k_;
  bool diagonal_;
  std::vector<double> block_weight_;  // scale * value, Bartlett groups
  std::vector<double> block_dof_;     // multiplicity
  std::vector<double> coord_weight_;  // scale * alpha_i, explicit coordinates
  std::vector<double> y_;
  std::vector<double> lower_;
  std::vector<double> cond_;
};

/// "n kind" header, then the strict upper triangle row-major.
void write_gram(std::ostream& os, const GramSample& g);
GramSample read_gram(std::istream& is);

}  // namespace geodetect
