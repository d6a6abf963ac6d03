// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cace/parallel.hpp"
#include "cace/rng.hpp"
#include "cace/spectrum.hpp"

namespace cace::phase_noise {

using spectrum::SubcarrierGrid;

enum class Kind { None, Wiener, OrnsteinUhlenbeck };

struct PhaseNoiseModel {
  Kind kind = Kind::None;
  double sigma_theta_sq = 0.0;  // rad^2/s
  double eta_theta = 1e6;       // 1/s, OU only

  void validate() const {
    require(sigma_theta_sq >= 0, "phase-noise variance must be non-negative");
    if (kind == Kind::OrnsteinUhlenbeck) require(eta_theta > 0, "OU mean-reversion rate must be positive");
  }

  static PhaseNoiseModel wiener(double sigma_sq) { return {Kind::Wiener, sigma_sq, 0.0}; }
  static PhaseNoiseModel ou(double sigma_sq, double eta) { return {Kind::OrnsteinUhlenbeck, sigma_sq, eta}; }
  bool silent() const { return kind == Kind::None || sigma_theta_sq == 0.0; }
};

/// Omega[k] = nDFT of exp(-j theta[n]), bin order.
inline CVec omega_coefficients(const RVec& theta) {
  const int K = static_cast<int>(theta.size());
  CVec e(K);
  for (int n = 0; n < K; ++n) e[n] = std::polar(1.0, -theta[n]);
  return spectrum::ndft(e);
}

/// One symbol of oscillator phase sampled at t = n Ts / K.
struct PhaseNoiseTrace {
  RVec theta;
  PhaseNoiseModel model;

  PhaseNoiseTrace() = default;
  PhaseNoiseTrace(RVec th, PhaseNoiseModel m) : theta(std::move(th)), model(m) {}

  const CVec& omega() const& {
    if (!omega_) omega_ = omega_coefficients(theta);
    return *omega_;
  }
  CVec omega() const&& { return omega_ ? *omega_ : omega_coefficients(theta); }

 private:
  mutable std::optional<CVec> omega_;
};

inline PhaseNoiseTrace sample_wiener_trace(const PhaseNoiseModel& m, const SubcarrierGrid& grid, rng::CounterEngine& e) {
  require(m.kind == Kind::Wiener, "sample_wiener_trace needs a Wiener model");
  m.validate();
  const int K = grid.size();
  const double step = std::sqrt(m.sigma_theta_sq * grid.sample_period());
  PhaseNoiseTrace tr{RVec::Zero(K), m};
  for (int n = 1; n < K; ++n) tr.theta[n] = tr.theta[n - 1] + step * e.normal();
  return tr;
}

inline PhaseNoiseTrace sample_ou_trace(const PhaseNoiseModel& m, const SubcarrierGrid& grid, rng::CounterEngine& e) {
  require(m.kind == Kind::OrnsteinUhlenbeck, "sample_ou_trace needs an OU model");
  m.validate();
  const int K = grid.size();
  const double var = m.sigma_theta_sq / (2 * m.eta_theta);
  const double rho = std::exp(-m.eta_theta * grid.sample_period());
  const double innov = std::sqrt(var * (1 - rho * rho));
  PhaseNoiseTrace tr{RVec(K), m};
  tr.theta[0] = std::sqrt(var) * e.normal();
  for (int n = 1; n < K; ++n) tr.theta[n] = rho * tr.theta[n - 1] + innov * e.normal();
  return tr;
}

inline PhaseNoiseTrace sample_trace(const PhaseNoiseModel& m, const SubcarrierGrid& grid, rng::CounterEngine& e) {
  switch (m.kind) {
    case Kind::Wiener: return sample_wiener_trace(m, grid, e);
    case Kind::OrnsteinUhlenbeck: return sample_ou_trace(m, grid, e);
    case Kind::None: break;
  }
  return PhaseNoiseTrace(RVec::Zero(grid.size()), m);
}

/// Diagonal second moments Delta_{k,k} in bin order.
struct DeltaProfile {
  RVec diag;
  SubcarrierGrid grid;

  double at(int k) const { return diag[spectrum::wrap(k, grid.size())]; }
  double sum() const { return diag.sum(); }
};

inline DeltaProfile impulse_profile(const SubcarrierGrid& grid) {
  DeltaProfile d{RVec::Zero(grid.size()), grid};
  d.diag[0] = 1.0;
  return d;
}

/// Closed-form Wiener diagonal, valid for sigma^2 Ts >> 1.
inline double delta_wiener(int k, const PhaseNoiseModel& m, const SubcarrierGrid& grid) {
  require(m.kind == Kind::Wiener, "delta_wiener needs a Wiener model");
  m.validate();
  const int K = grid.size();
  if (m.sigma_theta_sq == 0.0) return spectrum::mod_delta(k, 0, K);
  const double x = m.sigma_theta_sq * grid.symbol_duration;
  const cd a(x, -4 * kPi * k), b(x, 4 * kPi * k);
  const cd v = ((1.0 - std::exp(-a / 4.0)) / (std::exp(a / (2.0 * K)) - 1.0) +
                (1.0 - std::exp(-b / 4.0)) / (1.0 - std::exp(-b / (2.0 * K)))) /
               double(K);
  if (std::abs(v.imag()) > 1e-3 * std::abs(v.real()) + 1e-15)
    throw NumericError("closed-form phase-noise moment has a large imaginary part");
  return v.real();
}

/// Message when the closed form is used outside its validity range (sigma^2 Ts below 0.1).
inline std::optional<std::string> closed_form_warning(const PhaseNoiseModel& m, const SubcarrierGrid& grid) {
  if (m.kind != Kind::Wiener || m.silent()) return std::nullopt;
  const double x = m.sigma_theta_sq * grid.symbol_duration;
  if (x >= 0.1) return std::nullopt;
  return "closed-form Wiener moments assume sigma^2 Ts >> 1, got " + std::to_string(x) +
         "; consider delta_source = exact";
}

inline DeltaProfile delta_wiener_profile(const PhaseNoiseModel& m, const SubcarrierGrid& grid) {
  DeltaProfile d{RVec(grid.size()), grid};
  for (int b = 0; b < grid.size(); ++b) d.diag[b] = delta_wiener(grid.index(b), m, grid);
  return d;
}

/// Exact finite-K expectation of |Omega[k]|^2 for the sampled Wiener trace:
/// (1/K^2) sum_{|u|<K} (K-|u|) exp(-sigma^2 Ts |u| / 2K) exp(-j 2 pi k u / K).
inline DeltaProfile delta_wiener_exact_profile(const PhaseNoiseModel& m, const SubcarrierGrid& grid) {
  require(m.kind == Kind::Wiener, "delta_wiener_exact_profile needs a Wiener model");
  m.validate();
  const int K = grid.size();
  const double x = m.sigma_theta_sq * grid.symbol_duration;
  CVec a(K);
  a[0] = K;
  for (int u = 1; u < K; ++u) {
    const double w = std::exp(-x * u / (2.0 * K));
    a[u] = (K - u) * w + u * std::exp(-x * (K - u) / (2.0 * K));
  }
  const CVec c = spectrum::ndft(a);
  DeltaProfile d{RVec(K), grid};
  for (int b = 0; b < K; ++b) d.diag[b] = std::max(0.0, c[b].real() / K);
  return d;
}

inline DeltaProfile delta_ou_profile(const PhaseNoiseModel& m, const SubcarrierGrid& grid) {
  require(m.kind == Kind::OrnsteinUhlenbeck, "delta_ou needs an OU model");
  m.validate();
  const int K = grid.size();
  const double r0 = m.sigma_theta_sq / (2 * m.eta_theta);
  auto R = [&](int u) { return r0 * std::exp(-m.eta_theta * std::abs(u) * grid.sample_period()); };
  CVec f = CVec::Zero(K);
  for (int u = -(K / 2); u <= (K - 1) / 2; ++u) f[spectrum::wrap(u, K)] = std::exp(R(u) - r0);
  const CVec c = spectrum::ndft(f);
  DeltaProfile d{RVec(K), grid};
  for (int b = 0; b < K; ++b) d.diag[b] = std::max(0.0, c[b].real());
  return d;
}

inline double delta_ou(int k, const PhaseNoiseModel& m, const SubcarrierGrid& grid) {
  return delta_ou_profile(m, grid).at(k);
}

/// Closed-form profile for any model kind.
inline DeltaProfile delta_profile(const PhaseNoiseModel& m, const SubcarrierGrid& grid) {
  if (m.silent()) return impulse_profile(grid);
  if (m.kind == Kind::Wiener) return delta_wiener_profile(m, grid);
  return delta_ou_profile(m, grid);
}

/// mu(a, g^) = sum_{|j| <= g^} Delta_{a+j}.
inline double mu(int a, int g_hat, const DeltaProfile& d) {
  require(g_hat >= 0, "filter half-width must be non-negative");
  double s = 0;
  for (int j = -g_hat; j <= g_hat; ++j) s += d.at(a + j);
  return s;
}

/// mu~(k, g^) = sum_{|j| <= g^} Delta_j Delta_{j+k}.
inline double mu_tilde(int k, int g_hat, const DeltaProfile& d) {
  require(g_hat >= 0, "filter half-width must be non-negative");
  double s = 0;
  for (int j = -g_hat; j <= g_hat; ++j) s += d.at(j) * d.at(j + k);
  return s;
}

/// Monte Carlo E{Omega[k] conj(Omega[k+m])} for each lag, bin order.
struct OmegaMoments {
  std::vector<int> lags;
  std::vector<CVec> mean;
  std::vector<RVec> std_error;  // of the real part for lag 0, of the modulus estimate otherwise
  std::int64_t trials = 0;
};

inline OmegaMoments empirical_omega_moments(const PhaseNoiseModel& m, const SubcarrierGrid& grid,
                                            const std::vector<int>& lags, std::int64_t trials, std::uint64_t seed,
                                            unsigned workers = default_workers()) {
  const int K = grid.size();
  const std::size_t L = lags.size();
  struct Acc {
    std::vector<CVec> s;
    std::vector<RVec> s2;
  };
  auto blocks = run_blocks(trials, 1024, workers, [&](std::int64_t b, std::int64_t e) {
    Acc a{std::vector<CVec>(L, CVec::Zero(K)), std::vector<RVec>(L, RVec::Zero(K))};
    for (std::int64_t t = b; t < e; ++t) {
      rng::CounterEngine eng(seed, static_cast<std::uint64_t>(t), rng::Stream::PhaseNoise);
      const auto tr = sample_trace(m, grid, eng);
      const CVec& w = tr.omega();
      for (std::size_t l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
          const cd v = w[k] * std::conj(w[spectrum::wrap(k + lags[l], K)]);
          a.s[l][k] += v;
          a.s2[l][k] += std::norm(v);
        }
    }
    return a;
  });
  OmegaMoments r{lags, std::vector<CVec>(L, CVec::Zero(K)), std::vector<RVec>(L, RVec::Zero(K)), trials};
  RVec s2 = RVec::Zero(K);
  for (std::size_t l = 0; l < L; ++l) {
    s2.setZero();
    for (const auto& a : blocks) {
      r.mean[l] += a.s[l];
      s2 += a.s2[l];
    }
    const double n = double(trials);
    r.mean[l] /= n;
    for (int k = 0; k < K; ++k) {
      const double var = std::max(0.0, s2[k] / n - std::norm(r.mean[l][k]));
      r.std_error[l][k] = std::sqrt(var / n);
    }
  }
  return r;
}

}  // namespace cace::phase_noise
