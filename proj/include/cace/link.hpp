// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "cace/channel.hpp"
#include "cace/parallel.hpp"
#include "cace/phase_noise.hpp"
#include "cace/rng.hpp"
#include "cace/spectrum.hpp"

namespace cace::link {

using phase_noise::PhaseNoiseModel;
using phase_noise::PhaseNoiseTrace;
using spectrum::SubcarrierGrid;

enum class FilterMode { IdealRect, TruncatedSinc };

/// Scalar link parameters. Energies in J, noise PSD in J (W/Hz), offset in Hz.
struct SystemConfig {
  SubcarrierGrid grid;
  int g = 20;
  int g_hat = 10;
  double e_s = 1024.0;
  double e_r = 0.0;
  double n0 = 1.0;
  PhaseNoiseModel pn;
  double freq_offset = 0.0;
  FilterMode filter_mode = FilterMode::IdealRect;

  int K() const { return grid.size(); }
  int guard_size() const { return 2 * g + 1; }
  int filter_size() const { return 2 * g_hat + 1; }
  int data_count() const { return K() - guard_size(); }
  double e_d() const { return (e_s - e_r) / data_count(); }
  bool is_data(int k) const { return std::abs(k) > g; }

  void validate() const {
    grid.validate();
    pn.validate();
    require(g_hat >= 1 && 2 * g_hat <= g, "filter half-width must satisfy 0 < g_hat <= g/2");
    require(g < std::min(grid.k1, grid.k2), "guard half-width must be below min(k1, k2)");
    require(e_s > 0, "symbol energy must be positive");
    require(e_r >= 0 && e_r <= e_s, "reference energy must lie in [0, e_s]");
    require(n0 >= 0, "noise PSD must be non-negative");
  }

  /// Data subcarriers in bin order.
  std::vector<int> data_indices() const {
    std::vector<int> out;
    out.reserve(data_count());
    for (int b = 0; b < K(); ++b)
      if (is_data(grid.index(b))) out.push_back(grid.index(b));
    return out;
  }
};

/// N0 from SNR = bar_beta E_s / (K N0) in dB.
inline double n0_from_snr_db(double snr_db, double bar_beta, double e_s, int K) {
  return bar_beta * e_s / (K * std::pow(10.0, snr_db / 10.0));
}

enum class Constellation { Qpsk, Gaussian };

/// Data symbols on the data subcarriers, ordered as SystemConfig::data_indices().
struct TxSymbol {
  CVec data;
  Constellation constellation = Constellation::Gaussian;
  std::vector<std::uint8_t> labels;  // QPSK symbol indices
};

// Gray-mapped QPSK: bit 0 sets the in-phase sign, bit 1 the quadrature sign.
inline cd qpsk_point(int label, double energy) {
  const double a = std::sqrt(energy / 2);
  return {(label & 1) ? -a : a, (label & 2) ? -a : a};
}

inline int qpsk_slice(cd z) { return (z.real() < 0 ? 1 : 0) | (z.imag() < 0 ? 2 : 0); }

inline TxSymbol random_qpsk(const SystemConfig& cfg, rng::CounterEngine& e) {
  TxSymbol s{CVec(cfg.data_count()), Constellation::Qpsk, std::vector<std::uint8_t>(cfg.data_count())};
  const double ed = cfg.e_d();
  for (int i = 0; i < cfg.data_count(); i += 16) {
    std::uint64_t bits = e();
    for (int j = i; j < std::min(i + 16, cfg.data_count()); ++j, bits >>= 2) {
      s.labels[j] = static_cast<std::uint8_t>(bits & 3u);
      s.data[j] = qpsk_point(s.labels[j], ed);
    }
  }
  return s;
}

inline TxSymbol random_gaussian(const SystemConfig& cfg, rng::CounterEngine& e) {
  TxSymbol s{CVec(cfg.data_count()), Constellation::Gaussian, {}};
  const double ed = cfg.e_d();
  for (int i = 0; i < cfg.data_count(); ++i) s.data[i] = e.complex_normal(ed);
  return s;
}

/// sqrt(E_r) on bin 0, data on the data subcarriers, zeros on the guard band.
inline CVec build_tx_frequency_frame(const SystemConfig& cfg, const TxSymbol& x) {
  require(x.data.size() == cfg.data_count(), "data length must equal K - |G|");
  CVec f = CVec::Zero(cfg.K());
  f[0] = std::sqrt(cfg.e_r);
  int i = 0;
  for (int b = 0; b < cfg.K(); ++b)
    if (cfg.is_data(cfg.grid.index(b))) f[b] = x.data[i++];
  return f;
}

/// Column b = H(f_k) t frame[b] / sqrt(Ts), frequency domain.
inline CMat apply_channel_freq(const CMat& response, const CVec& frame, const SubcarrierGrid& grid) {
  require(frame.size() == grid.size() && response.cols() == grid.size(), "frame and response must have K columns");
  const double s = 1.0 / std::sqrt(grid.symbol_duration);
  const Eigen::RowVectorXcd f = frame.transpose() * s;
  CMat out(response.rows(), response.cols());
  for (Eigen::Index r = 0; r < response.rows(); ++r) out.row(r) = response.row(r).cwiseProduct(f);
  return out;
}

inline CMat apply_channel_freq(const channel::ChannelRealization& c, const CVec& t, const CVec& frame,
                               const SubcarrierGrid& grid) {
  return apply_channel_freq(channel::beamformed_response(c, t, grid), frame, grid);
}

/// exp(-j (theta[n] + 2 pi f_off n Ts / K)) for one symbol.
inline CVec oscillator_rotation(const RVec& theta, double freq_offset, const SubcarrierGrid& grid) {
  const int K = grid.size();
  require(theta.size() == K, "phase trace length must equal K");
  CVec p(K);
  const double w = 2 * kPi * freq_offset * grid.sample_period();
  for (int n = 0; n < K; ++n) p[n] = std::polar(1.0, -(theta[n] + w * n));
  return p;
}

inline void rotate_rows(CMat& m, const CVec& rot) {
  const Eigen::RowVectorXcd p = rot.transpose();
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r).array() *= p.array();
}

inline CMat apply_rx_oscillator(const CMat& rx_time, const PhaseNoiseTrace& trace, double freq_offset,
                                const SubcarrierGrid& grid) {
  CMat out = rx_time;
  rotate_rows(out, oscillator_rotation(trace.theta, freq_offset, grid));
  return out;
}

/// Adds circular complex Gaussian noise of per-sample variance K N0 / Ts.
inline void add_awgn_inplace(CMat& m, double n0, const SubcarrierGrid& grid, rng::CounterEngine& e) {
  if (n0 == 0.0) return;
  require(n0 > 0, "noise PSD must be non-negative");
  const double var = grid.size() * n0 / grid.symbol_duration;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) += e.complex_normal(var);
}

inline CMat add_awgn(const CMat& m, double n0, const SubcarrierGrid& grid, rng::CounterEngine& e) {
  CMat out = m;
  add_awgn_inplace(out, n0, grid, e);
  return out;
}

/// Real frequency response of the reference-extraction filter, bin order.
inline RVec filter_response(const SystemConfig& cfg) {
  const int K = cfg.K();
  const int gh = cfg.g_hat;
  require(gh >= 1, "filter half-width must be >= 1");
  RVec hf = RVec::Zero(K);
  if (cfg.filter_mode == FilterMode::IdealRect) {
    for (int j = -gh; j <= gh; ++j) hf[spectrum::wrap(j, K)] = 1.0;
    return hf;
  }
  // sin(2 pi g^ t / Ts) / (pi t) sampled at Ts/K, kept for |t| <= 2 Ts / g^, wrapped circularly.
  const int n_max = (2 * K) / gh;
  CVec h = CVec::Zero(K);
  for (int n = -n_max; n <= n_max; ++n) {
    const double v = n == 0 ? 2.0 * gh / K : std::sin(2 * kPi * gh * n / K) / (kPi * n);
    h[spectrum::wrap(n, K)] += v;
  }
  const CVec c = spectrum::ndft(h);
  for (int b = 0; b < K; ++b) hf[b] = K * c[b].real();
  return hf;
}

/// Filters each antenna's time series with the given frequency response.
inline CMat extract_reference(const CMat& rx_time, const RVec& hf) {
  require(hf.size() == rx_time.cols(), "filter length must equal K");
  CMat c = rx_time;
  spectrum::ndft_rows(c);
  const Eigen::RowVectorXd h = hf.transpose();
  for (Eigen::Index r = 0; r < c.rows(); ++r) c.row(r).array() *= h.array().cast<cd>();
  spectrum::indft_rows(c);
  return c;
}

inline CMat extract_reference(const CMat& rx_time, const SystemConfig& cfg) {
  return extract_reference(rx_time, filter_response(cfg));
}

/// y[n] = sum_m conj(control_m[n]) rx_m[n].
inline CVec combine_and_sample(const CMat& rx_time, const CMat& control) {
  require(rx_time.rows() == control.rows() && rx_time.cols() == control.cols(), "shape mismatch");
  CVec y = CVec::Zero(rx_time.cols());
  for (Eigen::Index r = 0; r < rx_time.rows(); ++r)
    y.array() += control.row(r).transpose().array().conjugate() * rx_time.row(r).transpose().array();
  return y;
}

struct Decomposition {
  CVec signal, interference, noise;
};

struct DemodFrame {
  CVec y;  // bin order
  SubcarrierGrid grid;
  std::optional<Decomposition> parts;
  double fast_fading = 1.0;

  cd at(int k) const { return y[grid.bin(k)]; }
};

/// Y = Ts * nDFT(y).
inline DemodFrame demodulate(const CVec& y, const SubcarrierGrid& grid) {
  CVec v = spectrum::ndft(y, grid.size());
  v *= grid.symbol_duration;
  return {v, grid, std::nullopt, 1.0};
}

/// (Re Y0 - M N0 noise_gain) / (M beta00 E_r), clamped to [0, 1].
/// noise_gain is sum_k Hf[k], which is |G^| for the ideal filter.
inline double estimate_fast_fading(cd y0, double beta00, const SystemConfig& cfg, int m_rx, double noise_gain) {
  const double den = m_rx * beta00 * cfg.e_r;
  require(den > 0, "fast-fading estimate needs beta00 > 0 and e_r > 0");
  return std::clamp((y0.real() - m_rx * cfg.n0 * noise_gain) / den, 0.0, 1.0);
}

inline double estimate_fast_fading(cd y0, double beta00, const SystemConfig& cfg, int m_rx) {
  return estimate_fast_fading(y0, beta00, cfg, m_rx, cfg.filter_size());
}

/// One OFDM symbol through the CACE receiver for a fixed channel and beam.
class LinkSimulator {
 public:
  LinkSimulator(const SystemConfig& cfg, CMat response, double bar_beta)
      : cfg_(cfg), g_(std::move(response)), hf_(filter_response(cfg)) {
    cfg_.validate();
    require(g_.cols() == cfg_.K(), "response must have K columns");
    betas_ = channel::make_beta_table(g_, cfg_.grid, bar_beta);
    noise_gain_ = hf_.sum();
  }

  LinkSimulator(const SystemConfig& cfg, const channel::ChannelRealization& c, const CVec& t)
      : LinkSimulator(cfg, channel::beamformed_response(c, t, cfg.grid), channel::bar_beta(c, t)) {}

  const SystemConfig& config() const { return cfg_; }
  const channel::BetaTable& betas() const { return betas_; }
  const CMat& response() const { return g_; }
  const RVec& filter() const { return hf_; }
  int m_rx() const { return static_cast<int>(g_.rows()); }
  double noise_gain() const { return noise_gain_; }

  /// Runs the chain. `noise` may be null for a noiseless run.
  DemodFrame run(const TxSymbol& x, const PhaseNoiseTrace& trace, rng::CounterEngine* noise, bool decompose) const {
    const SubcarrierGrid& grid = cfg_.grid;
    const CVec frame = build_tx_frequency_frame(cfg_, x);
    const CVec rot = oscillator_rotation(trace.theta, cfg_.freq_offset, grid);

    CMat rx = apply_channel_freq(g_, frame, grid);
    spectrum::indft_rows(rx);
    rotate_rows(rx, rot);

    const bool noisy = noise && cfg_.n0 > 0.0;
    CMat clean;
    if (decompose && noisy) clean = rx;
    if (noisy) add_awgn_inplace(rx, cfg_.n0, grid, *noise);

    DemodFrame out = demodulate(combine_and_sample(rx, extract_reference(rx, hf_)), grid);

    // Ground-truth Sum_{k in support} Hf |Omega'[k]|^2 with Omega' including the offset.
    const CVec om = spectrum::ndft(rot);
    double ff = 0;
    for (int b = 0; b < cfg_.K(); ++b) ff += hf_[b] * std::norm(om[b]);
    out.fast_fading = ff;

    if (decompose) {
      const CVec ynf = noisy ? demodulate(combine_and_sample(clean, extract_reference(clean, hf_)), grid).y : out.y;
      const CVec gain = gain_from_rotation(rot);
      Decomposition d;
      d.signal = gain.cwiseProduct(frame);
      d.signal[0] = 0;
      for (int b = 1; b < cfg_.K(); ++b)
        if (!cfg_.is_data(grid.index(b))) d.signal[b] = 0;
      d.interference = ynf - d.signal;
      d.noise = out.y - ynf;
      out.parts = std::move(d);
    }
    return out;
  }

  /// Per-subcarrier factor multiplying x_k in S_k for this trace.
  CVec signal_gain(const PhaseNoiseTrace& trace) const {
    return gain_from_rotation(oscillator_rotation(trace.theta, cfg_.freq_offset, cfg_.grid));
  }

 private:
  SystemConfig cfg_;
  CMat g_;
  RVec hf_;
  channel::BetaTable betas_;
  double noise_gain_ = 0;

  // Own symbol through the reference-only control: sqrt(Ts) G[:,k]^T v with
  // v_m = (1/K) sum_n conj(c_ref,m[n]) phi[n].
  CVec gain_from_rotation(const CVec& rot) const {
    CVec f = spectrum::ndft(rot);
    for (int b = 0; b < cfg_.K(); ++b) f[b] *= hf_[b];
    const CVec fr = spectrum::indft(f);
    const cd u = fr.conjugate().cwiseProduct(rot).sum() / double(cfg_.K());
    return (g_.transpose() * g_.col(0).conjugate()) * (std::sqrt(cfg_.e_r) * u);
  }
};

struct SerEstimate {
  int k = 0;
  std::int64_t errors = 0;
  std::int64_t symbols = 0;
  double ser = 0, lower = 0, upper = 0;  // Wilson 95% interval
};

inline void wilson_interval(SerEstimate& s, double z = 1.959963984540054) {
  const double n = double(s.symbols);
  if (n == 0) return;
  const double p = s.errors / n;
  const double den = 1 + z * z / n;
  const double centre = (p + z * z / (2 * n)) / den;
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den;
  s.ser = p;
  s.lower = s.errors == 0 ? 0.0 : std::max(0.0, centre - half);
  s.upper = s.errors == s.symbols ? 1.0 : std::min(1.0, centre + half);
}

struct QpskOptions {
  bool ground_truth_fast_fading = false;
  unsigned workers = default_workers();
};

/// Monte Carlo QPSK symbol error rate on the tracked subcarriers.
inline std::vector<SerEstimate> qpsk_roundtrip(const LinkSimulator& sim, std::int64_t n_symbols, std::uint64_t seed,
                                               const std::vector<int>& tracked, const QpskOptions& opt = {}) {
  require(!tracked.empty(), "tracked subcarrier set must be nonempty");
  const SystemConfig& cfg = sim.config();
  const auto data = cfg.data_indices();
  std::vector<int> pos;
  for (int k : tracked) {
    require(cfg.is_data(k) && cfg.grid.contains(k), "tracked subcarrier must be a data subcarrier");
    pos.push_back(static_cast<int>(std::find(data.begin(), data.end(), k) - data.begin()));
  }
  const double beta00 = sim.betas().at(0);
  auto blocks = run_blocks(n_symbols, 64, opt.workers, [&](std::int64_t b, std::int64_t e) {
    std::vector<std::int64_t> err(tracked.size(), 0);
    for (std::int64_t t = b; t < e; ++t) {
      rng::CounterEngine de(seed, t, rng::Stream::Data), pe(seed, t, rng::Stream::PhaseNoise),
          ne(seed, t, rng::Stream::Noise);
      const TxSymbol x = random_qpsk(cfg, de);
      const PhaseNoiseTrace tr = phase_noise::sample_trace(cfg.pn, cfg.grid, pe);
      const DemodFrame f = sim.run(x, tr, &ne, false);
      const double ff = opt.ground_truth_fast_fading
                            ? f.fast_fading
                            : estimate_fast_fading(f.at(0), beta00, cfg, sim.m_rx(), sim.noise_gain());
      for (std::size_t i = 0; i < tracked.size(); ++i) {
        const int k = tracked[i];
        const cd scale = double(sim.m_rx()) * sim.betas().row(k) * std::sqrt(cfg.e_r) * ff;
        const cd z = scale == 0.0 ? f.at(k) : f.at(k) / scale;
        if (qpsk_slice(z) != x.labels[pos[i]]) ++err[i];
      }
    }
    return err;
  });
  std::vector<SerEstimate> out;
  for (std::size_t i = 0; i < tracked.size(); ++i) {
    SerEstimate s{tracked[i], 0, n_symbols};
    for (const auto& e : blocks) s.errors += e[i];
    wilson_interval(s);
    out.push_back(s);
  }
  return out;
}

}  // namespace cace::link
