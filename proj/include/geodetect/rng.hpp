#pragma once

// Counter-based random numbers.
//
// Every random quantity in the library is drawn from a Philox4x32-10 block
// cipher keyed by the 64-bit seed, with the 64-bit stream id and a 64-bit
// block counter forming the 128-bit counter. The k-th uniform of a stream is
// a pure function of (seed, stream_id, k), so sequential draws and random
// access agree and nothing depends on worker count or scheduling.
//
// Uniforms take 53 bits from two consecutive 32-bit words (two uniforms per
// Philox block) and lie strictly inside (0,1). Normals are the AS241 inverse
// CDF of one uniform each, so normal k and uniform k share an index.

#include <array>
#include <cstddef>
#include <cstdint>

#include "geodetect/numeric.hpp"

namespace geodetect {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  constexpr std::uint64_t kM0 = 0xD2511F53u;
  constexpr std::uint64_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = kM0 * ctr[0];
    const std::uint64_t p1 = kM1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// splitmix64 finalizer, used to derive child seeds from tags.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// (seed, stream_id) label of an independent random stream.
struct SeededStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  SeededStream with_stream(std::uint64_t id) const noexcept {
    return {seed, id};
  }
  /// A statistically unrelated seed for a named sub-experiment (H0 vs H1,
  /// sweep cell, ...). Stream ids are reset to 0.
  SeededStream derive(std::uint64_t tag) const noexcept {
    return {mix64(seed ^ mix64(tag + 0x51ED270B27A1F3C5ull)), 0};
  }

  friend bool operator==(const SeededStream&, const SeededStream&) = default;
};

class RandomStream {
 public:
  explicit RandomStream(SeededStream s) noexcept
      : key_{static_cast<std::uint32_t>(s.seed),
             static_cast<std::uint32_t>(s.seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(s.stream_id)),
        stream_hi_(static_cast<std::uint32_t>(s.stream_id >> 32)) {}

  /// Uniform number k of this stream, in (0,1).
  double uniform_at(std::uint64_t k) const noexcept {
    const PhiloxCounter out = block(k >> 1);
    return to_unit(out, static_cast<unsigned>(k & 1u));
  }
  double normal_at(std::uint64_t k) const noexcept {
    return normal_quantile(uniform_at(k));
  }

  double uniform() noexcept {
    const std::uint64_t b = next_ >> 1;
    if (b != cached_block_) {
      cache_ = block(b);
      cached_block_ = b;
    }
    const double u = to_unit(cache_, static_cast<unsigned>(next_ & 1u));
    ++next_;
    return u;
  }
  double normal() noexcept { return normal_quantile(uniform()); }

  /// Uniform index in [0, n), n >= 1.
  std::size_t below(std::size_t n) noexcept {
    const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang; consumes a variable number of draws.
  double gamma(double shape) noexcept;
  double chi_square(double dof) noexcept { return 2.0 * gamma(0.5 * dof); }

  /// Index of the next uniform to be consumed.
  std::uint64_t position() const noexcept { return next_; }
  void seek(std::uint64_t k) noexcept { next_ = k; }

 private:
  PhiloxCounter block(std::uint64_t b) const noexcept {
    return philox4x32_10({static_cast<std::uint32_t>(b),
                          static_cast<std::uint32_t>(b >> 32), stream_lo_,
                          stream_hi_},
                         key_);
  }
  static double to_unit(const PhiloxCounter& w, unsigned half) noexcept {
    const std::uint64_t hi = w[2 * half + 1];
    const std::uint64_t lo = w[2 * half];
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  PhiloxKey key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t next_ = 0;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  PhiloxCounter cache_{};
};

}  // namespace geodetect
