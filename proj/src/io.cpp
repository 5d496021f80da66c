#include "geodetect/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include <Eigen/Core>

#include "geodetect/error.hpp"

#ifndef GEODETECT_VERSION
#define GEODETECT_VERSION "unknown"
#endif

namespace geodetect {

namespace {

double round_significant(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

bool is_integral(double v) {
  return std::abs(v) < 9.0e15 && v == std::trunc(v);
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) return "NA";
  const double r = round_significant(v);
  char buf[40];
  if (is_integral(r)) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(r));
  } else {
    std::snprintf(buf, sizeof buf, "%.12g", r);
  }
  return buf;
}

nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  const double r = round_significant(v);
  if (is_integral(r)) return static_cast<std::int64_t>(r);
  return r;
}

std::string digest_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunManifest::RunManifest(std::vector<std::string> argv, std::uint64_t seed)
    : argv_(std::move(argv)), seed_(seed), start_(Clock::now()), last_(start_) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  started_ = buf;
}

void RunManifest::mark_stage(const std::string& name) {
  const auto now = Clock::now();
  stages_.emplace_back(name, std::chrono::duration<double>(now - last_).count());
  last_ = now;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command_line"] = argv_;
  j["config_digest"] = config_digest_.empty() ? nlohmann::json(nullptr)
                                              : nlohmann::json(config_digest_);
  j["seed"] = seed_;
  j["threads"] = threads_;
  j["versions"] = {
      {"geodetect", GEODETECT_VERSION},
      {"compiler", __VERSION__},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
  };
  j["wall_clock_start"] = started_;
  j["wall_clock_seconds"] =
      json_number(std::chrono::duration<double>(Clock::now() - start_).count());
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& [name, secs] : stages_) {
    stages.push_back({{"stage", name}, {"seconds", json_number(secs)}});
  }
  j["stages"] = std::move(stages);
  return j;
}

void RunManifest::write(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot write manifest '" + path + "'");
  os << to_json().dump(2) << '\n';
}

}  // namespace geodetect
