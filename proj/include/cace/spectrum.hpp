// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "cace/error.hpp"

namespace cace {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
// Row-major so that each antenna's time series is contiguous.
using CMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kPi = 3.14159265358979323846;

namespace spectrum {

/// Subcarriers k = -k1..k2 with spacing 1/Ts. Storage is natural DFT bin order.
struct SubcarrierGrid {
  int k1 = 512;
  int k2 = 511;
  double symbol_duration = 1e-6;  // seconds

  int size() const { return k1 + k2 + 1; }

  void validate() const {
    require(k1 >= 0 && k2 >= 0, "subcarrier counts must be non-negative");
    require(size() >= 3, "grid needs at least 3 subcarriers");
    require(symbol_duration > 0, "symbol duration must be positive");
  }

  bool contains(int k) const { return k >= -k1 && k <= k2; }

  int bin(int k) const {
    require(contains(k), "subcarrier index " + std::to_string(k) + " outside grid");
    return k < 0 ? size() + k : k;
  }

  int index(int b) const {
    require(b >= 0 && b < size(), "bin out of range");
    return b <= k2 ? b : b - size();
  }

  double frequency(int k) const { return k / symbol_duration; }
  // Time spacing between the K samples of one symbol.
  double sample_period() const { return symbol_duration / size(); }
};

/// Wraps any integer onto 0..K-1.
inline int wrap(long long a, int K) {
  long long r = a % K;
  return static_cast<int>(r < 0 ? r + K : r);
}

inline int mod_delta(long long a, long long b, long long K) {
  require(K >= 1, "mod_delta needs K >= 1");
  long long d = (a - b) % K;
  return d == 0 ? 1 : 0;
}

namespace detail {

class FftPlans {
 public:
  explicit FftPlans(int n) : n_(n) {
    auto* a = fftw_alloc_complex(n);
    auto* b = fftw_alloc_complex(n);
    plans_[0] = fftw_plan_dft_1d(n, a, b, FFTW_FORWARD, FFTW_ESTIMATE);
    plans_[1] = fftw_plan_dft_1d(n, a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
    plans_[2] = fftw_plan_dft_1d(n, a, a, FFTW_FORWARD, FFTW_ESTIMATE);
    plans_[3] = fftw_plan_dft_1d(n, a, a, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(a);
    fftw_free(b);
    for (auto* p : plans_)
      if (!p) throw NumericError("fftw planning failed");
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    for (auto* p : plans_) fftw_destroy_plan(p);
  }

  // Unnormalized transform; sign -1 is forward. Buffers without SIMD alignment
  // go through a per-thread aligned scratch copy.
  void run(const cd* in, cd* out, int sign) const {
    auto* i = reinterpret_cast<fftw_complex*>(const_cast<cd*>(in));
    auto* o = reinterpret_cast<fftw_complex*>(out);
    const int dir = sign < 0 ? 0 : 1;
    if (aligned(i) && aligned(o)) {
      fftw_execute_dft(plans_[(in == out ? 2 : 0) + dir], i, o);
      return;
    }
    thread_local std::map<int, Buffer> scratch;
    auto& a = scratch[n_];
    if (!a) a.reset(fftw_alloc_complex(n_));
    std::copy(in, in + n_, reinterpret_cast<cd*>(a.get()));
    fftw_execute_dft(plans_[2 + dir], a.get(), a.get());
    std::copy(reinterpret_cast<const cd*>(a.get()), reinterpret_cast<const cd*>(a.get()) + n_, out);
  }

 private:
  struct Free {
    void operator()(fftw_complex* p) const { fftw_free(p); }
  };
  using Buffer = std::unique_ptr<fftw_complex, Free>;

  static bool aligned(fftw_complex* p) { return fftw_alignment_of(reinterpret_cast<double*>(p)) == 0; }

  int n_;
  // forward, backward, forward in place, backward in place
  fftw_plan plans_[4];
};

// fftw planning is not thread-safe; execution with new-array calls is.
inline const FftPlans& plans(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<FftPlans>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& p = cache[n];
  if (!p) p = std::make_unique<FftPlans>(n);
  return *p;
}

}  // namespace detail

/// C[k] = (1/K) sum_n s[n] exp(-j 2 pi k n / K). `out` may alias `in`.
inline void ndft(std::span<const cd> in, std::span<cd> out) {
  const int K = static_cast<int>(in.size());
  require(K > 0 && out.size() == in.size(), "ndft length mismatch");
  detail::plans(K).run(in.data(), out.data(), -1);
  const double s = 1.0 / K;
  for (auto& v : out) v *= s;
}

/// s[n] = sum_k C[k] exp(+j 2 pi k n / K). `out` may alias `in`.
inline void indft(std::span<const cd> in, std::span<cd> out) {
  const int K = static_cast<int>(in.size());
  require(K > 0 && out.size() == in.size(), "indft length mismatch");
  detail::plans(K).run(in.data(), out.data(), +1);
}

inline CVec ndft(const CVec& s, int K) {
  require(s.size() == K, "ndft: expected " + std::to_string(K) + " samples, got " + std::to_string(s.size()));
  CVec c(K);
  ndft(std::span<const cd>(s.data(), K), std::span<cd>(c.data(), K));
  return c;
}

inline CVec indft(const CVec& c, int K) {
  require(c.size() == K, "indft: expected " + std::to_string(K) + " coefficients, got " + std::to_string(c.size()));
  CVec s(K);
  indft(std::span<const cd>(c.data(), K), std::span<cd>(s.data(), K));
  return s;
}

inline CVec ndft(const CVec& s) { return ndft(s, static_cast<int>(s.size())); }
inline CVec indft(const CVec& c) { return indft(c, static_cast<int>(c.size())); }

// Row-wise transforms in place.
inline void ndft_rows(CMat& m) {
  const auto K = static_cast<std::size_t>(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::span<cd> row(m.row(r).data(), K);
    ndft(row, row);
  }
}

inline void indft_rows(CMat& m) {
  const auto K = static_cast<std::size_t>(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::span<cd> row(m.row(r).data(), K);
    indft(row, row);
  }
}

}  // namespace spectrum
}  // namespace cace
