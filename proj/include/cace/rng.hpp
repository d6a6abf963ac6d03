// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace cace::rng {

/// Philox4x32-10 block function (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter c, Key k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t(M0) * c[0];
      const std::uint64_t p1 = std::uint64_t(M1) * c[2];
      c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ c[3] ^ k[1],
           std::uint32_t(p0)};
      k[0] += W0;
      k[1] += W1;
    }
    return c;
  }
};

// Stream tags keep independent uses of one trial apart.
enum class Stream : std::uint32_t { PhaseNoise = 1, Noise = 2, Data = 3, Channel = 4, Aux = 5 };

/// Per-(seed, trial, tag) generator. The Philox block function maps the triple
/// to the 256-bit state of a xoshiro256++ generator, so any stream can be
/// reproduced in isolation and results do not depend on how trials are spread
/// over threads.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  CounterEngine(std::uint64_t seed, std::uint64_t trial, Stream tag) {
    const Philox4x32::Key key{std::uint32_t(seed), std::uint32_t(seed >> 32)};
    const auto tg = static_cast<std::uint32_t>(tag);
    for (std::uint32_t h = 0; h < 2; ++h) {
      const auto b = Philox4x32::block({h, tg, std::uint32_t(trial), std::uint32_t(trial >> 32)}, key);
      s_[2 * h] = (std::uint64_t(b[0]) << 32) | b[1];
      s_[2 * h + 1] = (std::uint64_t(b[2]) << 32) | b[3];
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return r;
  }

  // 53-bit uniform on [0, 1).
  double uniform() { return double((*this)() >> 11) * (1.0 / 9007199254740992.0); }

  double normal() { return normal_(*this); }

  // Circularly symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance) {
    const double s = std::sqrt(variance / 2);
    const double re = normal();
    return {s * re, s * normal()};
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  boost::random::normal_distribution<double> normal_;
};

}  // namespace cace::rng
