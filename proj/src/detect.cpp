#include "geodetect/detect.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <sstream>

#include "geodetect/entropy.hpp"
#include "geodetect/error.hpp"
#include "geodetect/io.hpp"
#include "geodetect/threshold.hpp"

namespace geodetect {

std::string to_string(Decision d) {
  return d == Decision::geometry ? "geometry" : "no_geometry";
}

DetectionReport tau_test(const AdjacencyMatrix& a, double p,
                         double tau_threshold) {
  if (!std::isfinite(tau_threshold)) {
    throw InvalidParameter("tau threshold must be finite");
  }
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
  const TriangleReport tr = triangle_report(a, p);
  DetectionReport r;
  r.n = a.n();
  r.p = p;
  r.t_count = tr.t_count;
  r.tau_observed = tr.tau;
  r.tau_threshold = tau_threshold;
  r.decision = tr.tau >= tau_threshold ? Decision::geometry : Decision::no_geometry;
  return r;
}

double calibrated_threshold(std::size_t n, double p, double z) {
  return z * std::sqrt(er_tau_variance(n, p));
}

Proportion rejection_rate(const GraphSource& source, double tau_threshold,
                          std::size_t replicas, SeededStream stream,
                          const ExecContext& exec) {
  if (replicas == 0) throw InvalidParameter("replicas must be >= 1");
  const std::vector<double> taus = tau_samples(source, replicas, stream, exec);
  const auto hits = static_cast<std::size_t>(std::count_if(
      taus.begin(), taus.end(), [&](double t) { return t >= tau_threshold; }));
  return proportion(hits, replicas);
}

namespace {

double quantile7(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Binning {
  double lo = 0.0;
  double width = 0.0;
  std::size_t bins = 0;

  std::size_t index(double x) const {
    if (width <= 0.0) return 0;
    const double k = std::floor((x - lo) / width);
    if (k <= 0.0) return 0;
    return std::min(bins - 1, static_cast<std::size_t>(k));
  }
};

constexpr std::size_t kMinBins = 16;
constexpr std::size_t kMaxBins = 4096;

Binning make_binning(std::span<const double> a, std::span<const double> b,
                     std::size_t bins) {
  double lo = a[0], hi = a[0];
  for (auto s : {a, b}) {
    for (double x : s) {
      if (!std::isfinite(x)) throw InvalidParameter("samples must be finite");
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  Binning g;
  g.lo = lo;
  if (bins == 0) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const double iqr = quantile7(pooled, 0.75) - quantile7(pooled, 0.25);
    const double fd = 2.0 * iqr / std::cbrt(static_cast<double>(pooled.size()));
    bins = kMinBins;
    if (fd > 0.0 && hi > lo) {
      const double want = std::ceil((hi - lo) / fd);
      bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::min(want, 1e9)),
                                     kMinBins, kMaxBins);
    }
  } else if (bins < 2) {
    throw InvalidParameter("bins must be >= 2 (or 0 for automatic)");
  }
  g.bins = bins;
  g.width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 0.0;
  return g;
}

double tv_with(const Binning& g, std::span<const double> a,
               std::span<const double> b) {
  std::vector<double> ha(g.bins, 0.0), hb(g.bins, 0.0);
  for (double x : a) ha[g.index(x)] += 1.0;
  for (double x : b) hb[g.index(x)] += 1.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  CompensatedSum s;
  for (std::size_t k = 0; k < g.bins; ++k) s.add(std::abs(ha[k] / na - hb[k] / nb));
  return std::clamp(0.5 * s.value(), 0.0, 1.0);
}

void check_samples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidParameter("samples must be nonempty");
}

}  // namespace

EmpiricalTv empirical_tv_report(std::span<const double> a,
                                std::span<const double> b, std::size_t bins) {
  check_samples(a, b);
  const Binning g = make_binning(a, b, bins);
  return {tv_with(g, a, b), g.bins, g.lo, g.width};
}

double empirical_tv_std_error(std::span<const double> a,
                              std::span<const double> b, std::size_t bins,
                              std::size_t resamples, SeededStream stream) {
  check_samples(a, b);
  if (resamples < 2) return 0.0;
  const Binning g = make_binning(a, b, bins);
  RandomStream rng(stream);
  std::vector<double> ra(a.size()), rb(b.size());
  MomentAccumulator acc;
  for (std::size_t r = 0; r < resamples; ++r) {
    for (auto& x : ra) x = a[rng.below(a.size())];
    for (auto& x : rb) x = b[rng.below(b.size())];
    acc.add(tv_with(g, ra, rb));
  }
  return std::sqrt(acc.variance());
}

ChebyshevBound tv_lower_bound_chebyshev(std::size_t n, double p,
                                        const AlphaSpectrum& alpha,
                                        const MonteCarloParams& mc,
                                        const ExecContext& exec) {
  if (n < 3) throw InvalidParameter("n must be >= 3");
  if (mc.replicas < 100) throw InvalidParameter("need at least 100 replicas");
  const GraphSource h0 = GraphSource::er(n, p);
  const GraphSource h1 =
      GraphSource::geometric(n, p, alpha, scaled_threshold(alpha, p));
  const TauMoments m0 = tau_moments_mc(h0, mc.replicas, mc.stream.derive(0), exec);
  const TauMoments m1 = tau_moments_mc(h1, mc.replicas, mc.stream.derive(1), exec);
  ChebyshevBound b;
  b.mean_h1 = m1.mean;
  b.mean_h1_std_error = m1.mean_std_error;
  b.var_h1 = m1.variance;
  b.var_h0 = m0.variance;
  if (!(m1.mean > 3.0 * m1.mean_std_error)) return b;
  b.informative = true;
  const double m2 = m1.mean * m1.mean;
  const double v = m1.variance + m0.variance;
  const double raw = 1.0 - 4.0 * v / m2;
  // d/dm = 8v/m^3, d/dv_i = -4/m^2.
  const double g_m = 8.0 * v / (m2 * m1.mean);
  const double g_v = 4.0 / m2;
  const double se = std::sqrt(g_m * g_m * m1.mean_std_error * m1.mean_std_error +
                              g_v * g_v * (m1.variance_std_error * m1.variance_std_error +
                                           m0.variance_std_error * m0.variance_std_error));
  b.value = std::max(0.0, raw);
  b.std_error = se;
  return b;
}

double scaled_threshold(const AlphaSpectrum& alpha, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
  if (p == 0.5) return 0.0;
  return threshold_charfun(alpha, p).t / alpha.norm2();
}

double tune_spiked_eps(std::size_t d, std::size_t k, double target_eff3) {
  if (!(k >= 1 && k < d)) throw InvalidParameter("need 1 <= k < d");
  const double kd = static_cast<double>(k), rest = static_cast<double>(d - k);
  if (!(target_eff3 > kd && target_eff3 < static_cast<double>(d))) {
    throw InvalidParameter("target effective dimension must lie in (k, d)");
  }
  auto eff3 = [&](double e) {
    const double s2 = kd + rest * e * e, s3 = kd + rest * e * e * e;
    return s2 * s2 * s2 / (s3 * s3);
  };
  // eff3(0) = k < target < d = eff3(1): bisection on the sign change.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (eff3(mid) < target_eff3 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || !(x >= 0.0) || x != std::floor(x) || x > 1e15) {
    throw UsageError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(x);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || !std::isfinite(x)) {
    throw UsageError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_colon(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  return parts;
}

}  // namespace

SweepConfig parse_sweep_config(std::istream& is) {
  SweepConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "n_list") {
      c.n_list.clear();
      for (const auto& s : split_list(val)) c.n_list.push_back(parse_count(key, s));
    } else if (key == "d_list") {
      c.d_list.clear();
      for (const auto& s : split_list(val)) c.d_list.push_back(parse_count(key, s));
    } else if (key == "families") {
      c.families = split_list(val);
    } else if (key == "p") {
      c.p = parse_real(key, val);
    } else if (key == "replicas") {
      c.replicas = parse_count(key, val);
    } else if (key == "seed") {
      c.seed = parse_count(key, val);
    } else if (key == "out") {
      c.out = val;
    } else if (key == "jsonl") {
      c.jsonl = val;
    } else if (key == "timing") {
      c.timing = parse_bool(key, val);
    } else if (key == "entropy") {
      c.entropy = parse_bool(key, val);
    } else if (key == "entropy_replicas") {
      c.entropy_replicas = parse_count(key, val);
    } else if (key == "z") {
      c.z = parse_real(key, val);
    } else if (key == "bins") {
      c.bins = parse_count(key, val);
    } else if (key == "bootstrap") {
      c.bootstrap = parse_count(key, val);
    } else {
      throw UsageError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (c.n_list.empty()) throw UsageError("config: n_list is required");
  if (c.d_list.empty()) throw UsageError("config: d_list is required");
  if (c.families.empty()) c.families = {"isotropic"};
  if (!(c.p > 0.0 && c.p < 1.0)) throw UsageError("config: p must be in (0,1)");
  if (c.replicas < 100) throw UsageError("config: replicas must be >= 100");
  for (const auto& f : c.families) (void)family_member(f, 8);  // validate early
  return c;
}

AlphaSpectrum family_member(const std::string& family, std::size_t d) {
  const auto parts = split_colon(family);
  const std::string& kind = parts.at(0);
  auto bad = [&] { return UsageError("bad family template '" + family + "'"); };
  try {
    if (kind == "isotropic" && parts.size() == 1) {
      return spectrum_family(SpectrumKind::isotropic, d);
    }
    if (kind == "powerlaw" && parts.size() == 2) {
      return spectrum_family(SpectrumKind::power_law, d, {std::stod(parts[1]), 0, 0.0});
    }
    if (kind == "spiked" && parts.size() == 3) {
      return spectrum_family(SpectrumKind::spiked, d,
                             {0.0, static_cast<std::size_t>(std::stoul(parts[1])),
                              std::stod(parts[2])});
    }
    if (kind == "matched" && parts.size() == 2) {
      const std::size_t factor = std::stoul(parts[1]);
      if (factor < 2) throw bad();
      const std::size_t big = factor * d;
      const std::size_t k = std::max<std::size_t>(1, d / 4);
      if (d < 2) return spectrum_family(SpectrumKind::isotropic, d);
      const double eps = tune_spiked_eps(big, k, static_cast<double>(d));
      return spectrum_family(SpectrumKind::spiked, big, {0.0, k, eps});
    }
  } catch (const std::invalid_argument&) {
    throw bad();
  } catch (const std::out_of_range&) {
    throw bad();
  }
  throw bad();
}

namespace {

SweepRow run_cell(const SweepConfig& cfg, std::size_t n, const std::string& family,
                  std::size_t d, SeededStream cell, const ExecContext& exec) {
  const auto start = std::chrono::steady_clock::now();
  SweepRow row;
  row.n = n;
  row.p = cfg.p;
  row.family = family;
  row.d = d;
  try {
    const AlphaSpectrum alpha = family_member(family, d);
    row.eff3 = effective_dim_3(alpha);
    row.eff4 = effective_dim_4(alpha);
    const GraphSource h0 = GraphSource::er(n, cfg.p);
    const GraphSource h1 =
        GraphSource::geometric(n, cfg.p, alpha, scaled_threshold(alpha, cfg.p));
    const auto tau0 = tau_samples(h0, cfg.replicas, cell.derive(0), exec);
    const auto tau1 = tau_samples(h1, cfg.replicas, cell.derive(1), exec);
    const TauMoments m0 = moments_of(tau0), m1 = moments_of(tau1);
    row.mean_tau_h0 = m0.mean;
    row.mean_tau_h0_se = m0.mean_std_error;
    row.mean_tau_h1 = m1.mean;
    row.mean_tau_h1_se = m1.mean_std_error;
    row.tv_statistic_estimate = empirical_tv(tau0, tau1, cfg.bins);
    row.tv_statistic_se =
        empirical_tv_std_error(tau0, tau1, cfg.bins, cfg.bootstrap, cell.derive(3));

    auto rate = [](const std::vector<double>& taus, double thr) {
      const auto hits = static_cast<std::size_t>(std::count_if(
          taus.begin(), taus.end(), [&](double t) { return t >= thr; }));
      return proportion(hits, taus.size());
    };
    const double thr = calibrated_threshold(n, cfg.p, cfg.z);
    const Proportion pw = rate(tau1, thr), t1 = rate(tau0, thr);
    row.power = pw.value;
    row.power_se = pw.std_error;
    row.type1 = t1.value;
    row.type1_se = t1.std_error;
    const Proportion po = rate(tau1, 0.5 * m1.mean);
    row.power_oracle = po.value;
    row.power_oracle_se = po.std_error;

    if (cfg.entropy) {
      EntropyParams ep;
      ep.replicas = cfg.entropy_replicas;
      ep.stream = cell.derive(2);
      try {
        row.tv_upper_bound = tv_upper_bound(n, alpha, cfg.p, ep, exec).tv_upper;
      } catch (const Error& e) {
        row.error = std::string("tv_upper_bound: ") + e.what();
      }
    }
  } catch (const Error& e) {
    row.error = e.what();
  }
  if (cfg.timing) {
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

std::vector<SweepRow> phase_sweep(const SweepConfig& config,
                                  const ExecContext& exec) {
  std::vector<SweepRow> rows;
  const SeededStream root{config.seed, 0};
  std::uint64_t cell = 0;
  for (std::size_t n : config.n_list) {
    for (const auto& family : config.families) {
      for (std::size_t d : config.d_list) {
        rows.push_back(run_cell(config, n, family, d, root.derive(cell), exec));
        ++cell;
      }
    }
  }
  return rows;
}

std::string sweep_csv_header() {
  return "n,p,family,d,eff3,eff4,mean_tau_h0,mean_tau_h0_se,mean_tau_h1,"
         "mean_tau_h1_se,tv_statistic_estimate,tv_statistic_se,tv_upper_bound,"
         "power,power_se,type1,type1_se,power_oracle,power_oracle_se,runtime,"
         "error";
}

std::string sweep_csv_line(const SweepRow& r) {
  std::string s;
  auto num = [&](double v) { s += format_number(v); s += ','; };
  s += std::to_string(r.n) + ',';
  num(r.p);
  s += csv_field(r.family) + ',';
  s += std::to_string(r.d) + ',';
  num(r.eff3);
  num(r.eff4);
  num(r.mean_tau_h0);
  num(r.mean_tau_h0_se);
  num(r.mean_tau_h1);
  num(r.mean_tau_h1_se);
  num(r.tv_statistic_estimate);
  num(r.tv_statistic_se);
  s += (r.tv_upper_bound ? format_number(*r.tv_upper_bound) : "NA") + ',';
  num(r.power);
  num(r.power_se);
  num(r.type1);
  num(r.type1_se);
  num(r.power_oracle);
  num(r.power_oracle_se);
  s += (r.runtime ? format_number(*r.runtime) : "NA") + ',';
  s += csv_field(r.error);
  return s;
}

}  // namespace geodetect
