// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cace/parallel.hpp"
#include "cace/rng.hpp"

using namespace cace;
using rng::CounterEngine;
using rng::Philox4x32;
using rng::Stream;

TEST_CASE("Philox4x32-10 known-answer vectors", "[rng]") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("engines are reproducible and streams are distinct", "[rng]") {
  CounterEngine a(7, 3, Stream::Noise), b(7, 3, Stream::Noise);
  for (int i = 0; i < 100; ++i) REQUIRE(a() == b());
  const auto first = [](std::uint64_t seed, std::uint64_t trial, Stream s) { return CounterEngine(seed, trial, s)(); };
  const auto x = first(7, 3, Stream::Noise);
  CHECK(x != first(7, 3, Stream::PhaseNoise));
  CHECK(x != first(7, 4, Stream::Noise));
  CHECK(x != first(8, 3, Stream::Noise));
  CHECK(first(7, std::uint64_t(1) << 40, Stream::Noise) != first(7, 0, Stream::Noise));
}

TEST_CASE("uniform and normal moments", "[rng]") {
  CounterEngine e(1, 0, Stream::Aux);
  const int n = 400000;
  double su = 0, sn = 0, sn2 = 0, sn4 = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    const double u = e.uniform();
    su += u;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    const double z = e.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(umin >= 0.0);
  CHECK(umax < 1.0);
  CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sn / n) < 5 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1) < 5 * std::sqrt(2.0 / n));
  CHECK(std::abs(sn4 / n - 3) < 5 * std::sqrt(96.0 / n));
}

TEST_CASE("complex normal is circular with the requested variance", "[rng]") {
  CounterEngine e(2, 0, Stream::Aux);
  const int n = 200000;
  const double var = 3.5;
  std::complex<double> pseudo = 0;
  double p = 0;
  for (int i = 0; i < n; ++i) {
    const auto z = e.complex_normal(var);
    p += std::norm(z);
    pseudo += z * z;
  }
  CHECK(std::abs(p / n - var) < 5 * var / std::sqrt(double(n)));
  CHECK(std::abs(pseudo / double(n)) < 5 * var / std::sqrt(double(n)));
}

TEST_CASE("successive trials are uncorrelated", "[rng]") {
  const int n = 100000;
  double s = 0;
  for (int t = 0; t < n; ++t) s += CounterEngine(5, t, Stream::Data).normal() * CounterEngine(5, t + 1, Stream::Data).normal();
  CHECK(std::abs(s / n) < 5 / std::sqrt(double(n)));
}

TEST_CASE("run_blocks result does not depend on the worker count", "[parallel]") {
  auto sum_with = [](unsigned workers) {
    auto parts = run_blocks(10007, 97, workers, [](std::int64_t b, std::int64_t e) {
      double s = 0;
      for (std::int64_t t = b; t < e; ++t) s += CounterEngine(11, t, Stream::Aux).normal() / 3.0;
      return s;
    });
    double total = 0;
    for (double p : parts) total += p;
    return total;
  };
  const double one = sum_with(1);
  CHECK(one == sum_with(2));
  CHECK(one == sum_with(7));
}

TEST_CASE("run_blocks covers the range once and propagates exceptions", "[parallel]") {
  auto parts = run_blocks(1000, 64, 4, [](std::int64_t b, std::int64_t e) { return std::vector<std::int64_t>{b, e}; });
  REQUIRE(parts.size() == 16);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    CHECK(parts[i][0] == std::int64_t(i) * 64);
    CHECK(parts[i][1] == std::min<std::int64_t>(1000, (i + 1) * 64));
  }
  CHECK(run_blocks(0, 8, 2, [](std::int64_t, std::int64_t) { return 1; }).empty());
  CHECK_THROWS_AS(run_blocks(100, 10, 3,
                             [](std::int64_t b, std::int64_t) {
                               if (b == 50) throw std::runtime_error("boom");
                               return 0;
                             }),
                  std::runtime_error);
}
