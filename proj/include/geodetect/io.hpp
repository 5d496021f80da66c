#pragma once

// Output formatting and run manifests.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace geodetect {

/// 12 significant digits; integral values print without a fraction and
/// non-finite ones as NA.
std::string format_number(double v);

/// A JSON number rounded to 12 significant digits (an integer when the
/// value is integral). Non-finite values become null.
nlohmann::json json_number(double v);

inline nlohmann::json json_number(const std::optional<double>& v) {
  return v ? json_number(*v) : nlohmann::json(nullptr);
}

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string digest_hex(std::string_view data);

class RunManifest {
 public:
  RunManifest(std::vector<std::string> argv, std::uint64_t seed);

  void set_config_digest(std::string digest) { config_digest_ = std::move(digest); }
  void set_threads(unsigned threads) { threads_ = threads; }

  /// Appends (name, seconds since the previous mark or construction).
  void mark_stage(const std::string& name);

  nlohmann::json to_json() const;

  /// Writes to_json() to `path` (pretty-printed). Throws Error on failure.
  void write(const std::string& path) const;

 private:
  using Clock = std::chrono::steady_clock;
  std::vector<std::string> argv_;
  std::uint64_t seed_;
  std::string config_digest_;
  unsigned threads_ = 1;
  std::string started_;  // UTC wall-clock start
  Clock::time_point start_;
  Clock::time_point last_;
  std::vector<std::pair<std::string, double>> stages_;
};

}  // namespace geodetect
