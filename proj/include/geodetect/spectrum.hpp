#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace geodetect {

/// Diagonal covariance spectrum alpha of the latent Gaussian. Entries are
/// non-negative, at least one is positive, and the order is whatever the
/// caller supplied (nothing here sorts).
class AlphaSpectrum {
 public:
  /// Throws InvalidSpectrum on empty, negative, non-finite or all-zero input.
  static AlphaSpectrum from_values(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double max() const noexcept { return max_; }
  /// ||alpha||_2, computed once at construction.
  double norm2() const noexcept { return norm2_; }
  /// Sum of alpha_i^q, compensated.
  double power_sum(double q) const noexcept;
  std::size_t nonzero_count() const noexcept { return nonzero_; }
  bool is_normalized() const noexcept { return max_ == 1.0; }

 private:
  explicit AlphaSpectrum(std::vector<double> values);

  std::vector<double> values_;
  double max_ = 0.0;
  double norm2_ = 0.0;
  std::size_t nonzero_ = 0;
};

/// alpha / max(alpha).
AlphaSpectrum normalize(const AlphaSpectrum& alpha);

/// (sum alpha_i^q)^(1/q); q >= 1.
double q_norm(const AlphaSpectrum& alpha, double q);

/// (||alpha||_2 / ||alpha||_3)^6, the detection-side dimension.
double effective_dim_3(const AlphaSpectrum& alpha);

/// (||alpha||_2 / ||alpha||_4)^4, the indistinguishability-side dimension.
double effective_dim_4(const AlphaSpectrum& alpha);

enum class SpectrumKind { isotropic, power_law, spiked };

struct FamilyParams {
  double beta = 0.0;     // power_law exponent
  std::size_t k = 0;     // spiked: number of unit coordinates
  double eps = 0.0;      // spiked: value of the remaining coordinates
};

/// Normalized member of a standard family:
/// isotropic (1,...,1); power_law alpha_i = i^(-beta); spiked k ones then eps.
AlphaSpectrum spectrum_family(SpectrumKind kind, std::size_t d,
                              const FamilyParams& params = {});

/// Parses "isotropic:d", "powerlaw:d:beta", "spiked:d:k:eps".
AlphaSpectrum parse_family_descriptor(const std::string& descriptor);

/// Either a family descriptor or the path of a one-value-per-line file.
AlphaSpectrum load_spectrum(const std::string& spec_or_path);

void write_spectrum(std::ostream& os, const AlphaSpectrum& alpha);
AlphaSpectrum read_spectrum(std::istream& is);

/// Distinct positive values with multiplicities. Charfun products and the
/// Wishart-block samplers work on this form so an isotropic spectrum of
/// dimension 10^6 costs the same as dimension 1.
struct SpectrumGroups {
  std::vector<double> value;
  std::vector<double> count;

  std::size_t size() const noexcept { return value.size(); }
};

SpectrumGroups group_spectrum(const AlphaSpectrum& alpha);

}  // namespace geodetect
