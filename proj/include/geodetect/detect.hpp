#pragma once

// The signed-triangle test, statistic-level total variation, and the phase
// diagram sweep.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geodetect/graphs.hpp"
#include "geodetect/numeric.hpp"
#include "geodetect/parallel.hpp"
#include "geodetect/rng.hpp"
#include "geodetect/spectrum.hpp"

namespace geodetect {

enum class Decision { geometry, no_geometry };

std::string to_string(Decision d);

struct DetectionReport {
  std::size_t n = 0;
  double p = 0.0;
  std::uint64_t t_count = 0;
  double tau_observed = 0.0;
  double tau_threshold = 0.0;
  Decision decision = Decision::no_geometry;
  /// Rejection rates under the alternative and the null, when estimated.
  std::optional<Proportion> power_estimate;
  std::optional<Proportion> type1_estimate;
};

/// decision = geometry iff tau(a) >= tau_threshold. Throws InvalidParameter
/// on a non-finite threshold.
DetectionReport tau_test(const AdjacencyMatrix& a, double p,
                         double tau_threshold);

/// z sqrt(C(n,3) (p(1-p))^3): the calibrated-null threshold.
double calibrated_threshold(std::size_t n, double p, double z);

/// Fraction of `replicas` graphs from `source` whose tau is >= threshold.
Proportion rejection_rate(const GraphSource& source, double tau_threshold,
                          std::size_t replicas, SeededStream stream,
                          const ExecContext& exec = {});

struct EmpiricalTv {
  /// (1/2) sum |pa - pb| over a common binning. Biased downward, and a
  /// lower bound on the TV between the graph laws.
  double value = 0.0;
  std::size_t bins = 0;
  double lo = 0.0;
  double width = 0.0;
};

/// bins = 0 picks the Freedman-Diaconis width on the pooled sample, with at
/// least 16 bins; otherwise bins must be >= 2.
EmpiricalTv empirical_tv_report(std::span<const double> a,
                                std::span<const double> b,
                                std::size_t bins = 0);

inline double empirical_tv(std::span<const double> a,
                           std::span<const double> b, std::size_t bins = 0) {
  return empirical_tv_report(a, b, bins).value;
}

/// Bootstrap standard error of empirical_tv with the binning held fixed.
double empirical_tv_std_error(std::span<const double> a,
                              std::span<const double> b, std::size_t bins,
                              std::size_t resamples, SeededStream stream);

struct MonteCarloParams {
  std::size_t replicas = 2000;
  SeededStream stream{};
};

struct ChebyshevBound {
  double value = 0.0;      // 0 when uninformative
  double std_error = 0.0;  // delta method on the measured moments
  bool informative = false;
  double mean_h1 = 0.0;
  double mean_h1_std_error = 0.0;
  double var_h1 = 0.0;
  double var_h0 = 0.0;
};

/// 1 - 4 Var_H1 / m^2 - 4 Var_H0 / m^2 with m the measured H1 mean, from
/// the two Chebyshev inequalities at the midpoint m/2. Returns 0 unless
/// m > 3 s.e.; clipped below at 0.
ChebyshevBound tv_lower_bound_chebyshev(std::size_t n, double p,
                                        const AlphaSpectrum& alpha,
                                        const MonteCarloParams& mc,
                                        const ExecContext& exec = {});

/// t_{p,alpha} / ||alpha||_2, the threshold on the normalized Gram scale
/// (0 at p = 1/2).
double scaled_threshold(const AlphaSpectrum& alpha, double p);

/// eps in (0,1) such that the spiked spectrum (k ones, d - k at eps) has
/// effective_dim_3 equal to target; needs k < target < d.
double tune_spiked_eps(std::size_t d, std::size_t k, double target_eff3);

struct SweepConfig {
  std::vector<std::size_t> n_list;
  double p = 0.5;
  /// "isotropic", "powerlaw:beta", "spiked:k:eps" or "matched:factor" (a
  /// spiked spectrum of dimension factor*d tuned to effective_dim_3 = d).
  std::vector<std::string> families;
  std::vector<std::size_t> d_list;
  std::size_t replicas = 1000;
  std::uint64_t seed = 0;
  std::string out;    // CSV path, empty for standard output
  std::string jsonl;  // optional JSON-lines mirror
  bool timing = false;
  std::size_t entropy_replicas = 2000;
  bool entropy = true;
  double z = 3.0;
  std::size_t bins = 0;
  std::size_t bootstrap = 200;
};

/// key = value lines, '#' comments, lists comma-separated. Throws
/// UsageError on unknown keys or malformed values.
SweepConfig parse_sweep_config(std::istream& is);

/// The spectrum a family template gives at dimension d.
AlphaSpectrum family_member(const std::string& family, std::size_t d);

struct SweepRow {
  std::size_t n = 0;
  double p = 0.0;
  std::string family;
  std::size_t d = 0;
  double eff3 = 0.0;
  double eff4 = 0.0;
  double mean_tau_h0 = 0.0;
  double mean_tau_h0_se = 0.0;
  double mean_tau_h1 = 0.0;
  double mean_tau_h1_se = 0.0;
  double tv_statistic_estimate = 0.0;
  double tv_statistic_se = 0.0;
  std::optional<double> tv_upper_bound;
  double power = 0.0;  // calibrated-null threshold
  double power_se = 0.0;
  double type1 = 0.0;
  double type1_se = 0.0;
  double power_oracle = 0.0;  // threshold at half the H1 mean
  double power_oracle_se = 0.0;
  std::optional<double> runtime;  // seconds, only with timing
  std::string error;              // empty when the cell succeeded
};

/// One row per (n, family, d) cell, in config order. Cell c draws from
/// SeededStream{seed}.derive(c); failures land in SweepRow::error.
std::vector<SweepRow> phase_sweep(const SweepConfig& config,
                                  const ExecContext& exec = {});

/// The fixed CSV header (SweepRow field names).
std::string sweep_csv_header();
std::string sweep_csv_line(const SweepRow& row);

}  // namespace geodetect
