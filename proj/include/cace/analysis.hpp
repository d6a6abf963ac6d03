// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "cace/channel.hpp"
#include "cace/link.hpp"
#include "cace/phase_noise.hpp"

namespace cace::analysis {

using channel::BetaTable;
using link::SystemConfig;
using phase_noise::DeltaProfile;

/// mu(0, g^), and mu(k, g^), mu~(k, g^) for every k in bin order.
struct Aggregates {
  int g_hat = 0;
  double mu0 = 0;
  RVec mu;
  RVec mu_tilde;
};

inline Aggregates aggregates(int g_hat, const DeltaProfile& d) {
  require(g_hat >= 0, "filter half-width must be non-negative");
  const int K = d.grid.size();
  Aggregates a{g_hat, phase_noise::mu(0, g_hat, d), RVec(K), RVec(K)};
  double run = 0;
  for (int j = -g_hat; j <= g_hat; ++j) run += d.at(j);
  for (int b = 0; b < K; ++b) {
    a.mu[b] = run;
    run += d.at(b + g_hat + 1) - d.at(b - g_hat);
  }
  // mu~[k] = sum_j masked[j] Delta[j+k], a circular cross-correlation.
  CVec masked = CVec::Zero(K), full(K);
  for (int j = -g_hat; j <= g_hat; ++j) masked[spectrum::wrap(j, K)] = d.at(j);
  for (int b = 0; b < K; ++b) full[b] = d.diag[b];
  const CVec p = spectrum::ndft(masked).conjugate().cwiseProduct(spectrum::ndft(full));
  const CVec c = spectrum::indft(p);
  for (int b = 0; b < K; ++b) a.mu_tilde[b] = std::max(0.0, K * c[b].real());
  return a;
}

namespace detail {

inline double sinr(double beta0k_sq, double ici, const BetaTable& b, const SystemConfig& cfg, double mu0) {
  const double M = b.m_rx, er = cfg.e_r, ed = cfg.e_d(), n0 = cfg.n0, bm = b.beta_max;
  const double G = cfg.filter_size();
  const double num = M * beta0k_sq * er * ed * mu0 * mu0;
  const double den = M * bm * bm * er * (ed * mu0 * (1 - mu0) + er * ici) + bm * n0 * (er + G * ed) + G * n0 * n0;
  if (num == 0) return 0;
  if (den <= 0) return std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace detail

/// Per-subcarrier SINR lower bound; refined_ici selects mu~ for the reference ICI term.
inline double sinr_lower_bound(int k, const BetaTable& b, const SystemConfig& cfg, const DeltaProfile& d,
                               bool refined_ici) {
  require(cfg.grid.contains(k) && cfg.is_data(k), "SINR bound is defined on data subcarriers only");
  const double mu0 = phase_noise::mu(0, cfg.g_hat, d);
  const double ici = refined_ici ? phase_noise::mu_tilde(k, cfg.g_hat, d) : phase_noise::mu(k, cfg.g_hat, d);
  return detail::sinr(std::norm(b.row(k)), ici, b, cfg, mu0);
}

/// gamma_k for every data subcarrier, ordered as cfg.data_indices().
inline std::vector<double> sinr_profile(const BetaTable& b, const SystemConfig& cfg, const Aggregates& a,
                                        bool refined_ici) {
  std::vector<double> out;
  out.reserve(cfg.data_count());
  for (int b0 = 0; b0 < cfg.K(); ++b0) {
    const int k = cfg.grid.index(b0);
    if (!cfg.is_data(k)) continue;
    const double ici = refined_ici ? a.mu_tilde[b0] : a.mu[b0];
    out.push_back(detail::sinr(std::norm(b.beta0[b0]), ici, b, cfg, a.mu0));
  }
  return out;
}

/// (1/K) sum over data subcarriers of log2(1 + gamma_k).
inline double capacity_approx(const BetaTable& b, const SystemConfig& cfg, const Aggregates& a, bool refined_ici) {
  double s = 0;
  for (double g : sinr_profile(b, cfg, a, refined_ici)) s += std::log2(1 + g);
  return s / cfg.K();
}

inline double capacity_approx(const BetaTable& b, const SystemConfig& cfg, const DeltaProfile& d, bool refined_ici) {
  return capacity_approx(b, cfg, aggregates(cfg.g_hat, d), refined_ici);
}

/// Surrogate objective with the reference-ICI term replaced by E_s/(K-|G|) mu0 (1 - mu0).
inline double xi(const BetaTable& b, const SystemConfig& cfg, double mu0) {
  const double M = b.m_rx, er = cfg.e_r, ed = cfg.e_d(), n0 = cfg.n0, bm = b.beta_max;
  const double G = cfg.filter_size();
  const double num = M * er * ed * mu0 * mu0;
  if (num == 0) return 0;
  const double den = M * bm * bm * er * (cfg.e_s / cfg.data_count()) * mu0 * (1 - mu0) + bm * n0 * (er + G * ed) +
                     G * n0 * n0;
  return num / den;
}

inline double xi(const BetaTable& b, const SystemConfig& cfg, const DeltaProfile& d) {
  return xi(b, cfg, phase_noise::mu(0, cfg.g_hat, d));
}

struct Allocation {
  double e_r_opt = 0;
  double q_term = 0;
  double r_term = 0;
};

/// Stationary point of xi in E_r: E_s (sqrt(R^2 + Q R) - R) / Q.
inline Allocation optimal_reference_energy(const BetaTable& b, const SystemConfig& cfg, double mu0) {
  const double M = b.m_rx, es = cfg.e_s, n0 = cfg.n0, bm = b.beta_max;
  const double K = cfg.K(), Gh = cfg.filter_size(), Gg = cfg.guard_size();
  Allocation a;
  a.q_term = M * bm * bm * (1 - mu0) * mu0 * es + bm * n0 * (K - Gh - Gg);
  a.r_term = n0 * Gh * (bm + n0 * (K - Gg) / es);
  require(a.q_term > 0, "reference-energy closed form needs Q > 0");
  a.e_r_opt = es * (std::sqrt(a.r_term * a.r_term + a.q_term * a.r_term) - a.r_term) / a.q_term;
  return a;
}

inline Allocation optimal_reference_energy(const BetaTable& b, const SystemConfig& cfg, const DeltaProfile& d) {
  return optimal_reference_energy(b, cfg, phase_noise::mu(0, cfg.g_hat, d));
}

/// |d xi / d E_r| * E_s / xi at the given E_r, by central difference.
inline double xi_stationarity_residual(const BetaTable& b, SystemConfig cfg, double mu0) {
  const double e = cfg.e_r, h = 1e-5 * cfg.e_s;
  cfg.e_r = e + h;
  const double up = xi(b, cfg, mu0);
  cfg.e_r = e - h;
  const double dn = xi(b, cfg, mu0);
  cfg.e_r = e;
  return std::abs(up - dn) / (2 * h) * cfg.e_s / xi(b, cfg, mu0);
}

struct GHatPoint {
  int g_hat = 0;
  double e_r = 0;
  double capacity = 0;
  bool valid = false;  // false when the closed-form allocation does not apply
};

struct GHatSearch {
  int g_hat_opt = 0;
  double e_r_opt = 0;
  double c_at_opt = 0;
  std::vector<GHatPoint> curve;
};

inline int max_g_hat(const SystemConfig& cfg) { return (std::min(cfg.grid.k1, cfg.grid.k2) - 1) / 2; }

/// Exhaustive scan over g^ with g = 2 g^ and E_r from the closed form.
inline GHatSearch optimize_g_hat(const BetaTable& b, const SystemConfig& tmpl, const DeltaProfile& d,
                                 bool refined_ici = true) {
  GHatSearch s;
  s.c_at_opt = -1;
  for (int gh = 1; gh <= max_g_hat(tmpl); ++gh) {
    SystemConfig cfg = tmpl;
    cfg.g_hat = gh;
    cfg.g = 2 * gh;
    const Aggregates a = aggregates(gh, d);
    GHatPoint p{gh, 0, 0, false};
    const double M = b.m_rx, bm = b.beta_max;
    const double q = M * bm * bm * (1 - a.mu0) * a.mu0 * cfg.e_s +
                     bm * cfg.n0 * (cfg.K() - cfg.filter_size() - cfg.guard_size());
    if (q > 0) {
      cfg.e_r = optimal_reference_energy(b, cfg, a.mu0).e_r_opt;
      p.e_r = cfg.e_r;
      p.capacity = capacity_approx(b, cfg, a, refined_ici);
      p.valid = true;
      if (p.capacity > s.c_at_opt) {
        s.c_at_opt = p.capacity;
        s.g_hat_opt = gh;
        s.e_r_opt = cfg.e_r;
      }
    }
    s.curve.push_back(p);
  }
  if (s.g_hat_opt == 0) throw NumericError("no admissible filter half-width in the line search");
  return s;
}

/// 2 Q(sqrt(gamma)) - Q(sqrt(gamma))^2.
inline double analytical_qpsk_ser(double gamma) {
  require(gamma >= 0, "SINR must be non-negative");
  const double q = 0.5 * std::erfc(std::sqrt(gamma / 2));
  return 2 * q - q * q;
}

/// Perfect-rCSI receive beamforming with E_d = E_s/K on every subcarrier.
inline double digital_ce_capacity(const CMat& response, const CVec& w, const SystemConfig& cfg) {
  channel::require_unit(w, "receive beamformer");
  const int K = cfg.K();
  require(response.cols() == K && response.rows() == w.size(), "response shape mismatch");
  const Eigen::RowVectorXcd proj = w.adjoint() * response;
  double s = 0;
  for (int b = 0; b < K; ++b) s += std::log2(1 + std::norm(proj[b]) * (cfg.e_s / K) / cfg.n0);
  return s / K;
}

inline double digital_ce_capacity(const channel::ChannelRealization& c, const CVec& t, const CVec& w,
                                  const SystemConfig& cfg) {
  return digital_ce_capacity(channel::beamformed_response(c, t, cfg.grid), w, cfg);
}

/// Same receiver with the oscillator's common phase corrected and its ICI left as noise.
inline double digital_ce_capacity_with_pn(const CMat& response, const CVec& w, const SystemConfig& cfg,
                                          const DeltaProfile& d) {
  channel::require_unit(w, "receive beamformer");
  const int K = cfg.K();
  const Eigen::RowVectorXcd proj = w.adjoint() * response;
  CVec p(K), dd(K);
  for (int b = 0; b < K; ++b) {
    p[b] = std::norm(proj[b]) * (cfg.e_s / K);
    dd[b] = d.diag[b];
  }
  // leak[k] = sum_j p[j] Delta[k - j], circular convolution.
  const CVec leak = spectrum::indft(spectrum::ndft(p).cwiseProduct(spectrum::ndft(dd))) * double(K);
  double s = 0;
  for (int b = 0; b < K; ++b) {
    const double sig = p[b].real() * d.diag[0];
    const double ici = std::max(0.0, leak[b].real() - sig);
    s += std::log2(1 + sig / (ici + cfg.n0));
  }
  return s / K;
}

struct Throughput {
  double mean = 0;
  double std_error = 0;
  std::int64_t trials = 0;
};

/// Monte Carlo CACE throughput with Gaussian data, treating I + Z as Gaussian noise of
/// empirically measured per-subcarrier power.
inline Throughput cace_mc_throughput(const link::LinkSimulator& sim, std::int64_t trials, std::uint64_t seed,
                                     unsigned workers = default_workers()) {
  require(trials >= 1, "trials must be >= 1");
  const SystemConfig& cfg = sim.config();
  const int K = cfg.K();
  struct Acc {
    RVec power;
    std::vector<double> u2;
  };
  auto blocks = run_blocks(trials, 16, workers, [&](std::int64_t b, std::int64_t e) {
    Acc a{RVec::Zero(K), {}};
    for (std::int64_t t = b; t < e; ++t) {
      rng::CounterEngine de(seed, t, rng::Stream::Data), pe(seed, t, rng::Stream::PhaseNoise),
          ne(seed, t, rng::Stream::Noise);
      const link::TxSymbol x = link::random_gaussian(cfg, de);
      const auto tr = phase_noise::sample_trace(cfg.pn, cfg.grid, pe);
      const link::DemodFrame f = sim.run(x, tr, &ne, false);
      const CVec gain = sim.signal_gain(tr);
      const CVec frame = link::build_tx_frequency_frame(cfg, x);
      for (int k = 0; k < K; ++k) a.power[k] += std::norm(f.y[k] - gain[k] * frame[k]);
      // gain = G^T conj(G0) sqrt(E_r) u, so the per-trial factor is |u|^2.
      const double ref = std::norm(sim.response().col(0).squaredNorm() * std::sqrt(cfg.e_r));
      a.u2.push_back(ref > 0 ? std::norm(gain[0]) / ref : 0.0);
    }
    return a;
  });
  RVec power = RVec::Zero(K);
  std::vector<double> u2;
  for (const auto& a : blocks) {
    power += a.power;
    u2.insert(u2.end(), a.u2.begin(), a.u2.end());
  }
  power /= double(trials);
  const auto& bt = sim.betas();
  const double M = sim.m_rx();
  std::vector<double> base;  // M^2 |beta0k|^2 E_r E_d / P_k
  for (int b = 0; b < K; ++b)
    if (cfg.is_data(cfg.grid.index(b)))
      base.push_back(power[b] > 0 ? M * M * std::norm(bt.beta0[b]) * cfg.e_r * cfg.e_d() / power[b]
                                  : std::numeric_limits<double>::infinity());
  double s = 0, s2 = 0;
  for (double v : u2) {
    double c = 0;
    for (double g : base) c += std::log2(1 + g * v);
    c /= K;
    s += c;
    s2 += c * c;
  }
  const double n = double(trials);
  Throughput r;
  r.mean = s / n;
  r.std_error = trials > 1 ? std::sqrt(std::max(0.0, s2 / n - r.mean * r.mean) / (n - 1)) : 0.0;
  r.trials = trials;
  return r;
}

}  // namespace cace::analysis
