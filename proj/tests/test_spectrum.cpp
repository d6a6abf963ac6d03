// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cace/rng.hpp"
#include "cace/spectrum.hpp"

using namespace cace;
using spectrum::SubcarrierGrid;

namespace {

// O(K^2) reference with the 1/K forward normalisation.
CVec direct_ndft(const CVec& s) {
  const int K = static_cast<int>(s.size());
  CVec c = CVec::Zero(K);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < K; ++n) c[k] += s[n] * std::polar(1.0, -2 * kPi * double(k) * n / K);
  return c / double(K);
}

CVec direct_indft(const CVec& c) {
  const int K = static_cast<int>(c.size());
  CVec s = CVec::Zero(K);
  for (int n = 0; n < K; ++n)
    for (int k = 0; k < K; ++k) s[n] += c[k] * std::polar(1.0, 2 * kPi * double(k) * n / K);
  return s;
}

CVec random_vec(int K, std::uint64_t seed) {
  rng::CounterEngine e(seed, 0, rng::Stream::Aux);
  CVec v(K);
  for (int i = 0; i < K; ++i) v[i] = e.complex_normal(1.0);
  return v;
}

}  // namespace

TEST_CASE("ndft matches the direct sum for small K", "[spectrum]") {
  for (int K : {1, 2, 3, 5, 8, 16, 17, 31, 64}) {
    const CVec s = random_vec(K, 100 + K);
    const CVec ref = direct_ndft(s);
    const CVec got = spectrum::ndft(s);
    CHECK((got - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()));
    const CVec back = direct_indft(ref);
    CHECK((spectrum::indft(ref) - back).norm() <= 1e-12 * back.norm());
  }
}

TEST_CASE("indft inverts ndft", "[spectrum]") {
  for (int K : {7, 256, 1023, 1024}) {
    const CVec s = random_vec(K, K);
    CHECK((spectrum::indft(spectrum::ndft(s)) - s).norm() <= 1e-12 * s.norm());
  }
}

TEST_CASE("Parseval with the normalised transform", "[spectrum]") {
  const int K = 1024;
  const CVec s = random_vec(K, 9);
  const CVec c = spectrum::ndft(s);
  CHECK(s.squaredNorm() == Catch::Approx(K * c.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("circular shift multiplies by a linear phase", "[spectrum]") {
  const int K = 60, m = 7;
  const CVec s = random_vec(K, 3);
  CVec shifted(K);
  for (int n = 0; n < K; ++n) shifted[n] = s[spectrum::wrap(n - m, K)];
  const CVec c = spectrum::ndft(s), cs = spectrum::ndft(shifted);
  for (int k = 0; k < K; ++k) CHECK(std::abs(cs[k] - c[k] * std::polar(1.0, -2 * kPi * k * m / K)) < 1e-13);
}

TEST_CASE("tone at subcarrier k lands in its bin", "[spectrum]") {
  const SubcarrierGrid g{8, 7, 1e-6};
  const int K = g.size();
  for (int k : {-8, -3, 0, 5, 7}) {
    CVec s(K);
    for (int n = 0; n < K; ++n) s[n] = std::polar(1.0, 2 * kPi * k * n / K);
    const CVec c = spectrum::ndft(s);
    for (int b = 0; b < K; ++b) CHECK(std::abs(c[b] - (b == g.bin(k) ? 1.0 : 0.0)) < 1e-13);
  }
}

TEST_CASE("in-place and unaligned spans agree with the vector form", "[spectrum]") {
  const int K = 100;
  const CVec s = random_vec(K, 4);
  const CVec ref = spectrum::ndft(s);
  CVec inplace = s;
  spectrum::ndft(std::span<const cd>(inplace.data(), K), std::span<cd>(inplace.data(), K));
  CHECK((inplace - ref).norm() < 1e-14);
  // One element in from an aligned buffer is 16-byte but not 32-byte aligned; odd offsets test the scratch path.
  std::vector<cd> buf(K + 3);
  for (int off : {1, 3}) {
    std::copy(s.data(), s.data() + K, buf.begin() + off);
    spectrum::ndft(std::span<const cd>(buf.data() + off, K), std::span<cd>(buf.data() + off, K));
    for (int k = 0; k < K; ++k) CHECK(std::abs(buf[off + k] - ref[k]) < 1e-14);
  }
}

TEST_CASE("row transforms equal per-row transforms", "[spectrum]") {
  const int K = 32;
  CMat m(3, K);
  for (int r = 0; r < 3; ++r) m.row(r) = random_vec(K, 20 + r).transpose();
  CMat f = m;
  spectrum::ndft_rows(f);
  for (int r = 0; r < 3; ++r) CHECK((f.row(r).transpose() - spectrum::ndft(CVec(m.row(r).transpose()))).norm() < 1e-13);
  spectrum::indft_rows(f);
  CHECK((f - m).norm() < 1e-12 * m.norm());
}

TEST_CASE("subcarrier grid indexing", "[spectrum]") {
  const SubcarrierGrid g{512, 511, 1e-6};
  CHECK(g.size() == 1024);
  CHECK(g.bin(0) == 0);
  CHECK(g.bin(511) == 511);
  CHECK(g.bin(-1) == 1023);
  CHECK(g.bin(-512) == 512);
  for (int b = 0; b < g.size(); ++b) CHECK(g.bin(g.index(b)) == b);
  CHECK(g.frequency(3) == Catch::Approx(3e6));
  CHECK(g.sample_period() == Catch::Approx(1e-6 / 1024));
  CHECK_THROWS_AS(g.bin(512), ArgumentError);
  CHECK_THROWS_AS(g.bin(-513), ArgumentError);
  CHECK_THROWS_AS((SubcarrierGrid{0, 1, 1e-6}.validate()), ArgumentError);
  CHECK_THROWS_AS((SubcarrierGrid{4, 4, 0.0}.validate()), ArgumentError);
}

TEST_CASE("modular Kronecker delta", "[spectrum]") {
  CHECK(spectrum::mod_delta(3, 3, 8) == 1);
  CHECK(spectrum::mod_delta(11, 3, 8) == 1);
  CHECK(spectrum::mod_delta(-5, 3, 8) == 1);
  CHECK(spectrum::mod_delta(4, 3, 8) == 0);
  CHECK_THROWS_AS(spectrum::mod_delta(0, 0, 0), ArgumentError);
}

TEST_CASE("length mismatches are rejected", "[spectrum]") {
  CVec s(8);
  CHECK_THROWS_AS(spectrum::ndft(s, 16), ArgumentError);
  CHECK_THROWS_AS(spectrum::indft(s, 4), ArgumentError);
  CVec out(4);
  CHECK_THROWS_AS(spectrum::ndft(std::span<const cd>(s.data(), 8), std::span<cd>(out.data(), 4)), ArgumentError);
}
