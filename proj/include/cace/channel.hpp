// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cace/rng.hpp"
#include "cace/spectrum.hpp"

namespace cace::channel {

using spectrum::SubcarrierGrid;

inline constexpr double kSpeedOfLight = 299792458.0;

/// Uniform planar array, M_H columns by M_V rows.
struct ArrayGeometry {
  int m_h = 1;
  int m_v = 1;
  double spacing_h = 0.5;  // meters
  double spacing_v = 0.5;  // meters
  double wavelength = 1.0;  // meters

  int size() const { return m_h * m_v; }

  void validate() const {
    require(m_h >= 1 && m_v >= 1, "array element counts must be >= 1");
    require(spacing_h > 0 && spacing_v > 0 && wavelength > 0, "array spacings and wavelength must be positive");
  }

  static ArrayGeometry half_wavelength(int m_h, int m_v, double carrier_hz) {
    const double lambda = kSpeedOfLight / carrier_hz;
    return {m_h, m_v, lambda / 2, lambda / 2, lambda};
  }
};

struct MultipathComponent {
  cd amplitude{1.0, 0.0};
  double delay = 0.0;  // seconds
  double aoa_azimuth = 0.0, aoa_elevation = kPi / 2;
  double aod_azimuth = 0.0, aod_elevation = kPi / 2;
};

struct ChannelRealization {
  std::vector<MultipathComponent> mpcs;
  ArrayGeometry tx_array, rx_array;
  double carrier_frequency = 30e9;  // Hz
  double cyclic_prefix = 100e-9;    // seconds

  void validate() const {
    require(!mpcs.empty(), "channel needs at least one multipath component");
    require(carrier_frequency > 0, "carrier frequency must be positive");
    tx_array.validate();
    rx_array.validate();
    for (const auto& p : mpcs) {
      require(p.delay >= 0, "multipath delay must be non-negative");
      require(p.delay < cyclic_prefix, "multipath delay must be shorter than the cyclic prefix");
    }
  }
};

/// Element M_V*h + (v-1) has phase 2 pi [dH h sin(azi) sin(ele) + dV (v-1) cos(ele)] / lambda.
inline CVec array_response(const ArrayGeometry& g, double azimuth, double elevation) {
  g.validate();
  CVec a(g.size());
  const double ph = 2 * kPi * g.spacing_h * std::sin(azimuth) * std::sin(elevation) / g.wavelength;
  const double pv = 2 * kPi * g.spacing_v * std::cos(elevation) / g.wavelength;
  for (int h = 0; h < g.m_h; ++h)
    for (int v = 0; v < g.m_v; ++v) a[g.m_v * h + v] = std::polar(1.0, ph * h + pv * v);
  return a;
}

inline CVec rx_response(const ChannelRealization& c, const MultipathComponent& p) {
  return array_response(c.rx_array, p.aoa_azimuth, p.aoa_elevation);
}

inline CVec tx_response(const ChannelRealization& c, const MultipathComponent& p) {
  return array_response(c.tx_array, p.aod_azimuth, p.aod_elevation);
}

/// H(f) = sum_l alpha_l a_rx(l) a_tx(l)^H exp(-j 2 pi (fc + f) tau_l); f is the baseband offset.
inline CMat freq_response(const ChannelRealization& c, double f) {
  c.validate();
  CMat h = CMat::Zero(c.rx_array.size(), c.tx_array.size());
  for (const auto& p : c.mpcs) {
    const cd w = p.amplitude * std::polar(1.0, -2 * kPi * (c.carrier_frequency + f) * p.delay);
    h += w * rx_response(c, p) * tx_response(c, p).adjoint();
  }
  return h;
}

inline void require_unit(const CVec& v, const char* what) {
  require(std::abs(v.norm() - 1.0) <= 1e-9, std::string(what) + " must have unit norm");
}

/// Columns in bin order: column b is H(f_k) t for k = grid.index(b).
inline CMat beamformed_response(const ChannelRealization& c, const CVec& t, const SubcarrierGrid& grid) {
  c.validate();
  grid.validate();
  require(t.size() == c.tx_array.size(), "beamformer length must match the TX array");
  const int K = grid.size();
  CMat g = CMat::Zero(c.rx_array.size(), K);
  for (const auto& p : c.mpcs) {
    const cd gain = p.amplitude * tx_response(c, p).dot(t) * std::polar(1.0, -2 * kPi * c.carrier_frequency * p.delay);
    const CVec a = rx_response(c, p);
    for (int b = 0; b < K; ++b)
      g.col(b) += (gain * std::polar(1.0, -2 * kPi * grid.frequency(grid.index(b)) * p.delay)) * a;
  }
  return g;
}

/// beta_{k1,k2} = t^H H(f_k1)^H H(f_k2) t / M_rx.
inline cd beta(const ChannelRealization& c, const CVec& t, int k1, int k2, const SubcarrierGrid& grid) {
  require_unit(t, "transmit beamformer");
  const CMat h1 = freq_response(c, grid.frequency(k1));
  const CMat h2 = freq_response(c, grid.frequency(k2));
  const CVec u1 = h1 * t, u2 = h2 * t;
  const cd v = u1.dot(u2) / double(c.rx_array.size());
  if (k1 == k2) return {std::max(0.0, v.real()), 0.0};
  return v;
}

/// Closed form for mutually orthogonal RX steering vectors.
inline cd orthogonal_beta(const std::vector<double>& gains, const std::vector<double>& delays, int k1, int k2,
                          const SubcarrierGrid& grid) {
  require(gains.size() == delays.size(), "gains and delays must have equal length");
  cd s = 0;
  const double df = grid.frequency(k1) - grid.frequency(k2);
  for (std::size_t l = 0; l < gains.size(); ++l) {
    require(gains[l] >= 0, "orthogonal_beta gains must be non-negative");
    s += k1 == k2 ? cd(gains[l]) : gains[l] * std::polar(1.0, 2 * kPi * df * delays[l]);
  }
  return s;
}

/// Row beta_{0,k} and diagonal beta_{k,k}, both in bin order.
struct BetaTable {
  CVec beta0;
  RVec diag;
  double beta_max = 0;
  double bar_beta = 0;
  int m_rx = 0;
  SubcarrierGrid grid;

  cd row(int k) const { return beta0[grid.bin(k)]; }
  double at(int k) const { return diag[grid.bin(k)]; }
};

inline BetaTable make_beta_table(const CMat& response, const SubcarrierGrid& grid, double bar_beta) {
  const int K = grid.size();
  require(response.cols() == K, "response width must equal K");
  const double m = double(response.rows());
  BetaTable b;
  b.grid = grid;
  b.bar_beta = bar_beta;
  b.m_rx = static_cast<int>(response.rows());
  b.beta0.resize(K);
  b.diag.resize(K);
  const CVec c0 = response.col(0);
  for (int i = 0; i < K; ++i) {
    b.beta0[i] = c0.dot(response.col(i)) / m;
    b.diag[i] = response.col(i).squaredNorm() / m;
  }
  b.beta_max = b.diag.maxCoeff();
  return b;
}

/// bar_beta = sum_l |alpha_l|^2 |a_tx(l)^H t|^2.
inline double bar_beta(const ChannelRealization& c, const CVec& t) {
  double s = 0;
  for (const auto& p : c.mpcs) s += std::norm(p.amplitude) * std::norm(tx_response(c, p).dot(t));
  return s;
}

inline BetaTable make_beta_table(const ChannelRealization& c, const CVec& t, const SubcarrierGrid& grid) {
  require_unit(t, "transmit beamformer");
  return make_beta_table(beamformed_response(c, t, grid), grid, bar_beta(c, t));
}

inline CVec tx_beamformer_strongest_mpc(const ChannelRealization& c) {
  c.validate();
  std::size_t best = 0;
  for (std::size_t l = 1; l < c.mpcs.size(); ++l)
    if (std::abs(c.mpcs[l].amplitude) > std::abs(c.mpcs[best].amplitude)) best = l;
  return tx_response(c, c.mpcs[best]) / std::sqrt(double(c.tx_array.size()));
}

/// R_rx = (1/K) sum_k H(f_k) t t^H H(f_k)^H.
inline Eigen::MatrixXcd rx_correlation(const CMat& response) {
  const Eigen::MatrixXcd g = response;
  return g * g.adjoint() / double(g.cols());
}

/// Principal eigenvector, phase fixed so the largest-magnitude entry is real positive.
inline CVec principal_eigenvector(const Eigen::MatrixXcd& r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed on RX correlation matrix");
  CVec w = es.eigenvectors().col(r.rows() - 1);
  Eigen::Index imax = 0;
  w.cwiseAbs().maxCoeff(&imax);
  w *= std::polar(1.0, -std::arg(w[imax]));
  w[imax] = std::abs(w[imax]);
  return w / w.norm();
}

inline CVec digital_ce_rx_beamformer(const ChannelRealization& c, const CVec& t, const SubcarrierGrid& grid) {
  require_unit(t, "transmit beamformer");
  return principal_eigenvector(rx_correlation(beamformed_response(c, t, grid)));
}

/// Three-path sparse channel: relative powers {0.6, 0.3, 0.1}, delays {0, 20, 40} ns,
/// mutually orthogonal arrival directions, common departure direction.
inline ChannelRealization sparse_three_path(const ArrayGeometry& tx, const ArrayGeometry& rx, double carrier_hz,
                                            double cyclic_prefix = 100e-9, double bar_beta = 1.0) {
  ChannelRealization c;
  c.tx_array = tx;
  c.rx_array = rx;
  c.carrier_frequency = carrier_hz;
  c.cyclic_prefix = cyclic_prefix;
  const double s = std::sqrt(bar_beta / tx.size());
  const double amp[3] = {std::sqrt(0.6), -std::sqrt(0.3), std::sqrt(0.1)};
  const double tau[3] = {0.0, 20e-9, 40e-9};
  const double azi[3] = {0.0, kPi / 6, -kPi / 6};
  const double ele[3] = {0.45 * kPi, kPi / 2, kPi / 2};
  for (int l = 0; l < 3; ++l) c.mpcs.push_back({cd(amp[l] * s, 0.0), tau[l], azi[l], ele[l], 0.0, kPi / 2});
  return c;
}

/// Simplified clustered surrogate for a dense channel (not a standardized model).
struct ClusteredChannelParams {
  int clusters = 3;
  int subpaths_per_cluster = 10;
  double delay_spread = 1e-9;      // seconds, intra-cluster jitter half-width
  double angle_spread = kPi / 50;  // radians, intra-cluster jitter half-width
  ArrayGeometry tx_array, rx_array;
  double carrier_frequency = 30e9;
  double cyclic_prefix = 100e-9;
};

inline ChannelRealization random_clustered_channel(std::uint64_t seed, const ClusteredChannelParams& p) {
  require(p.clusters >= 1 && p.subpaths_per_cluster >= 1, "cluster and subpath counts must be >= 1");
  require(p.delay_spread >= 0 && p.angle_spread >= 0, "spreads must be non-negative");
  rng::CounterEngine e(seed, 0, rng::Stream::Channel);
  ChannelRealization c;
  c.tx_array = p.tx_array;
  c.rx_array = p.rx_array;
  c.carrier_frequency = p.carrier_frequency;
  c.cyclic_prefix = p.cyclic_prefix;
  auto jitter = [&](double w) { return w * (2 * e.uniform() - 1); };
  const double tmax = std::nextafter(p.cyclic_prefix, 0.0);
  double total = 0;
  for (int cl = 0; cl < p.clusters; ++cl) {
    const double tau = 0.8 * p.cyclic_prefix * e.uniform();
    const double ra = kPi * (e.uniform() - 0.5), re = kPi * (0.25 + 0.5 * e.uniform());
    const double ta = kPi * (e.uniform() - 0.5), te = kPi * (0.25 + 0.5 * e.uniform());
    const cd gain = e.complex_normal(1.0);
    for (int s = 0; s < p.subpaths_per_cluster; ++s) {
      MultipathComponent m;
      m.amplitude = gain * std::polar(1.0, 2 * kPi * e.uniform());
      m.delay = std::clamp(tau + jitter(p.delay_spread), 0.0, tmax);
      m.aoa_azimuth = ra + jitter(p.angle_spread);
      m.aoa_elevation = re + jitter(p.angle_spread);
      m.aod_azimuth = ta + jitter(p.angle_spread);
      m.aod_elevation = te + jitter(p.angle_spread);
      total += std::norm(m.amplitude);
      c.mpcs.push_back(m);
    }
  }
  for (auto& m : c.mpcs) m.amplitude /= std::sqrt(total);
  return c;
}

}  // namespace cace::channel
