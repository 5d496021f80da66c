#include "geodetect/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "geodetect/error.hpp"
#include "geodetect/numeric.hpp"

namespace geodetect {

AlphaSpectrum::AlphaSpectrum(std::vector<double> values)
    : values_(std::move(values)) {
  CompensatedSum sq;
  for (double v : values_) {
    max_ = std::max(max_, v);
    sq.add(v * v);
    if (v > 0.0) ++nonzero_;
  }
  norm2_ = std::sqrt(sq.value());
}

AlphaSpectrum AlphaSpectrum::from_values(std::vector<double> values) {
  if (values.empty()) throw InvalidSpectrum("spectrum is empty");
  bool any_positive = false;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidSpectrum("spectrum entries must be finite and >= 0");
    }
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) throw InvalidSpectrum("spectrum has no positive entry");
  return AlphaSpectrum(std::move(values));
}

double AlphaSpectrum::power_sum(double q) const noexcept {
  CompensatedSum s;
  if (q == 2.0) {
    for (double v : values_) s.add(v * v);
  } else if (q == 3.0) {
    for (double v : values_) s.add(v * v * v);
  } else if (q == 4.0) {
    for (double v : values_) {
      const double v2 = v * v;
      s.add(v2 * v2);
    }
  } else {
    for (double v : values_) {
      if (v > 0.0) s.add(std::pow(v, q));
    }
  }
  return s.value();
}

AlphaSpectrum normalize(const AlphaSpectrum& alpha) {
  std::vector<double> out(alpha.values().begin(), alpha.values().end());
  const double m = alpha.max();
  for (double& v : out) v /= m;
  // Division by the max is exact for the max entry itself.
  return AlphaSpectrum::from_values(std::move(out));
}

double q_norm(const AlphaSpectrum& alpha, double q) {
  if (!(q >= 1.0)) throw InvalidParameter("q-norm requires q >= 1");
  if (q == 2.0) return alpha.norm2();
  return std::pow(alpha.power_sum(q), 1.0 / q);
}

double effective_dim_3(const AlphaSpectrum& alpha) {
  // (S2^(1/2) / S3^(1/3))^6 = S2^3 / S3^2, scaled by the max to stay in range.
  const AlphaSpectrum a = normalize(alpha);
  const double s2 = a.power_sum(2.0);
  const double s3 = a.power_sum(3.0);
  return (s2 / s3) * (s2 / s3) * s2;
}

double effective_dim_4(const AlphaSpectrum& alpha) {
  const AlphaSpectrum a = normalize(alpha);
  const double s2 = a.power_sum(2.0);
  const double s4 = a.power_sum(4.0);
  return s2 * (s2 / s4);
}

AlphaSpectrum spectrum_family(SpectrumKind kind, std::size_t d,
                              const FamilyParams& params) {
  if (d == 0) throw InvalidParameter("spectrum dimension must be >= 1");
  std::vector<double> v(d);
  switch (kind) {
    case SpectrumKind::isotropic:
      std::fill(v.begin(), v.end(), 1.0);
      break;
    case SpectrumKind::power_law:
      if (!(params.beta >= 0.0) || !std::isfinite(params.beta)) {
        throw InvalidParameter("power-law exponent must be finite and >= 0");
      }
      for (std::size_t i = 0; i < d; ++i) {
        v[i] = std::pow(static_cast<double>(i + 1), -params.beta);
      }
      break;
    case SpectrumKind::spiked:
      if (params.k < 1 || params.k > d) {
        throw InvalidParameter("spiked spectrum needs 1 <= k <= d");
      }
      if (!(params.eps >= 0.0 && params.eps <= 1.0)) {
        throw InvalidParameter("spiked spectrum needs eps in [0,1]");
      }
      for (std::size_t i = 0; i < d; ++i) v[i] = i < params.k ? 1.0 : params.eps;
      break;
  }
  return AlphaSpectrum::from_values(std::move(v));
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::size_t parse_size(const std::string& s, const char* what) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    // Accept scientific shorthand such as 1e6 for dimensions.
    char* e = nullptr;
    const double x = std::strtod(s.c_str(), &e);
    if (e == s.c_str() || *e != '\0' || !(x >= 0.0) || x != std::floor(x)) {
      throw InvalidParameter(std::string("cannot parse ") + what + ": '" + s +
                             "'");
    }
    return static_cast<std::size_t>(x);
  }
  return v;
}

double parse_real(const std::string& s, const char* what) {
  char* e = nullptr;
  const double x = std::strtod(s.c_str(), &e);
  if (s.empty() || e == s.c_str() || *e != '\0') {
    // Allow simple fractions such as 1/3.
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      return parse_real(s.substr(0, slash), what) /
             parse_real(s.substr(slash + 1), what);
    }
    throw InvalidParameter(std::string("cannot parse ") + what + ": '" + s +
                           "'");
  }
  return x;
}

}  // namespace

AlphaSpectrum parse_family_descriptor(const std::string& descriptor) {
  const auto parts = split(descriptor, ':');
  const std::string& kind = parts.front();
  if ((kind == "isotropic" || kind == "iso") && parts.size() == 2) {
    return spectrum_family(SpectrumKind::isotropic,
                           parse_size(parts[1], "dimension"));
  }
  if ((kind == "powerlaw" || kind == "power_law") && parts.size() == 3) {
    return spectrum_family(SpectrumKind::power_law,
                           parse_size(parts[1], "dimension"),
                           {.beta = parse_real(parts[2], "beta")});
  }
  if (kind == "spiked" && parts.size() == 4) {
    return spectrum_family(SpectrumKind::spiked,
                           parse_size(parts[1], "dimension"),
                           {.k = parse_size(parts[2], "k"),
                            .eps = parse_real(parts[3], "eps")});
  }
  throw InvalidParameter("unrecognized spectrum descriptor '" + descriptor +
                         "' (expected isotropic:d, powerlaw:d:beta or "
                         "spiked:d:k:eps)");
}

AlphaSpectrum load_spectrum(const std::string& spec_or_path) {
  std::ifstream in(spec_or_path);
  if (in) return read_spectrum(in);
  return parse_family_descriptor(spec_or_path);
}

void write_spectrum(std::ostream& os, const AlphaSpectrum& alpha) {
  const auto old = os.precision(17);
  for (double v : alpha.values()) os << v << '\n';
  os.precision(old);
}

AlphaSpectrum read_spectrum(std::istream& is) {
  std::vector<double> values;
  std::string line;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    values.push_back(
        parse_real(line.substr(first, last - first + 1), "spectrum value"));
  }
  return AlphaSpectrum::from_values(std::move(values));
}

SpectrumGroups group_spectrum(const AlphaSpectrum& alpha) {
  std::map<double, double> counts;
  for (double v : alpha.values()) {
    if (v > 0.0) counts[v] += 1.0;
  }
  SpectrumGroups g;
  g.value.reserve(counts.size());
  g.count.reserve(counts.size());
  for (auto it = counts.rbegin(); it != counts.rend(); ++it) {
    g.value.push_back(it->first);
    g.count.push_back(it->second);
  }
  return g;
}

}  // namespace geodetect
