#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace iasim {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The nth
/// 128-bit block is a pure function of (key, stream, n), so independent
/// substreams are free and any draw can be reproduced from its index alone.
class Philox4x32 {
 public:
  using Block = std::array<uint32_t, 4>;

  Philox4x32(uint64_t key, uint64_t stream)
      : k0_(static_cast<uint32_t>(key)),
        k1_(static_cast<uint32_t>(key >> 32)),
        s0_(static_cast<uint32_t>(stream)),
        s1_(static_cast<uint32_t>(stream >> 32)) {}

  Block block(uint64_t n) const {
    uint32_t x0 = static_cast<uint32_t>(n);
    uint32_t x1 = static_cast<uint32_t>(n >> 32);
    uint32_t x2 = s0_;
    uint32_t x3 = s1_;
    uint32_t k0 = k0_;
    uint32_t k1 = k1_;
    for (int round = 0; round < 10; ++round) {
      uint64_t p0 = kMul0 * static_cast<uint64_t>(x0);
      uint64_t p1 = kMul1 * static_cast<uint64_t>(x2);
      uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
      uint32_t lo0 = static_cast<uint32_t>(p0);
      uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
      uint32_t lo1 = static_cast<uint32_t>(p1);
      uint32_t y0 = hi1 ^ x1 ^ k0;
      uint32_t y1 = lo1;
      uint32_t y2 = hi0 ^ x3 ^ k1;
      uint32_t y3 = lo0;
      x0 = y0;
      x1 = y1;
      x2 = y2;
      x3 = y3;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return {x0, x1, x2, x3};
  }

 private:
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

  uint32_t k0_, k1_, s0_, s1_;
};

/// SplitMix64 finalizer; used to derive substream ids from (seed, tag) pairs.
inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t substream(uint64_t seed, uint64_t tag) {
  return mix64(seed ^ mix64(tag));
}

/// Sequential scalar stream over Philox blocks: uniforms, Gaussians and
/// circularly symmetric complex Gaussians.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed, uint64_t stream = 0)
      : gen_(seed, stream) {}

  uint32_t next_u32() {
    if (pos_ == 4) {
      buf_ = gen_.block(counter_++);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  uint64_t next_u64() {
    uint64_t lo = next_u32();
    uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform in (0,1]; never exactly 0 so log() is safe.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs cached).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// CN(0,1): unit-variance circularly symmetric complex Gaussian.
  std::complex<double> next_cgaussian() {
    double re = next_gaussian();
    double im = next_gaussian();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

 private:
  Philox4x32 gen_;
  uint64_t counter_ = 0;
  Philox4x32::Block buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace iasim
