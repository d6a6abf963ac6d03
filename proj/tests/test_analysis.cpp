// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cace/analysis.hpp"

using namespace cace;
using namespace cace::analysis;
using link::SystemConfig;
using phase_noise::PhaseNoiseModel;

namespace {

const double kFc = 30e9;

struct Fixture {
  SystemConfig cfg;
  channel::ChannelRealization ch;
  CVec t;
  CMat response;
  channel::BetaTable betas;
  phase_noise::DeltaProfile delta;
};

Fixture reference_fixture(double snr_db, double sigma2 = 1e6, int rx_h = 16, int rx_v = 4) {
  Fixture f;
  f.cfg.grid = {512, 511, 1e-6};
  f.cfg.e_s = 1024;
  f.cfg.pn = sigma2 > 0 ? PhaseNoiseModel::wiener(sigma2) : PhaseNoiseModel{};
  f.cfg.n0 = link::n0_from_snr_db(snr_db, 1.0, f.cfg.e_s, f.cfg.K());
  f.ch = channel::sparse_three_path(channel::ArrayGeometry::half_wavelength(32, 8, kFc),
                                    channel::ArrayGeometry::half_wavelength(rx_h, rx_v, kFc), kFc);
  f.t = channel::tx_beamformer_strongest_mpc(f.ch);
  f.response = channel::beamformed_response(f.ch, f.t, f.cfg.grid);
  f.betas = channel::make_beta_table(f.response, f.cfg.grid, 1.0);
  f.delta = phase_noise::delta_profile(f.cfg.pn, f.cfg.grid);
  f.cfg.e_r = optimal_reference_energy(f.betas, f.cfg, f.delta).e_r_opt;
  return f;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("aggregates match direct sums", "[analysis]") {
  const auto f = reference_fixture(0);
  for (int gh : {0, 1, 10, 40}) {
    const Aggregates a = aggregates(gh, f.delta);
    CHECK(a.mu0 == Catch::Approx(phase_noise::mu(0, gh, f.delta)).epsilon(1e-12));
    for (int k : {-512, -300, -40, -1, 0, 1, 22, 300, 511}) {
      const int b = f.cfg.grid.bin(k);
      CHECK(a.mu[b] == Catch::Approx(phase_noise::mu(k, gh, f.delta)).epsilon(1e-9));
      CHECK(a.mu_tilde[b] == Catch::Approx(phase_noise::mu_tilde(k, gh, f.delta)).epsilon(1e-6).margin(1e-15));
    }
  }
}

TEST_CASE("SINR bound at a hand-computed point", "[analysis]") {
  // No phase noise: mu = 1, mu~ = 0 away from the reference, so the bound reduces to
  // M |b0k|^2 Er Ed / (bmax N0 (Er + |G^| Ed) + |G^| N0^2).
  auto f = reference_fixture(0, 0.0);
  f.cfg.e_r = 100;
  const int k = -40;
  const double M = 64, b2 = std::norm(f.betas.row(k)), er = 100, ed = (1024.0 - 100) / (1024 - 41), n0 = f.cfg.n0;
  const double expect = M * b2 * er * ed / (1.0 * n0 * (er + 21 * ed) + 21 * n0 * n0);
  CHECK(sinr_lower_bound(k, f.betas, f.cfg, f.delta, true) == Catch::Approx(expect).epsilon(1e-9));
  CHECK(sinr_lower_bound(k, f.betas, f.cfg, f.delta, false) == Catch::Approx(expect).epsilon(1e-9));
}

TEST_CASE("SINR bound monotonicity and refined ICI ordering", "[analysis]") {
  auto f = reference_fixture(0);
  for (int k : {-500, -40, 21, 22, 100, 300}) {
    CHECK(sinr_lower_bound(k, f.betas, f.cfg, f.delta, true) >= sinr_lower_bound(k, f.betas, f.cfg, f.delta, false));
  }
  double prev = 0;
  for (double snr : {-20.0, -10.0, 0.0, 10.0, 20.0}) {
    SystemConfig c = f.cfg;
    c.n0 = link::n0_from_snr_db(snr, 1.0, c.e_s, c.K());
    const double g = sinr_lower_bound(-40, f.betas, c, f.delta, true);
    CHECK(g > prev);
    prev = g;
  }
  // Larger |beta_0k|^2 never lowers the bound.
  channel::BetaTable b = f.betas;
  b.beta0[f.cfg.grid.bin(-40)] *= 0.5;
  CHECK(sinr_lower_bound(-40, b, f.cfg, f.delta, true) < sinr_lower_bound(-40, f.betas, f.cfg, f.delta, true));
  CHECK_THROWS_AS(sinr_lower_bound(5, f.betas, f.cfg, f.delta, true), ArgumentError);
  CHECK_THROWS_AS(sinr_lower_bound(0, f.betas, f.cfg, f.delta, true), ArgumentError);
}

TEST_CASE("noiseless, phase-noise-free bound diverges", "[analysis]") {
  auto f = reference_fixture(0, 0.0);
  double prev = 0;
  for (double n0 : {1e-1, 1e-3, 1e-5, 1e-7}) {
    SystemConfig c = f.cfg;
    c.n0 = n0;
    const double g = sinr_lower_bound(100, f.betas, c, f.delta, true);
    CHECK(g > 10 * prev);
    prev = g;
  }
}

TEST_CASE("reference ICI makes k = 22 worse than k = -40", "[analysis]") {
  const auto f = reference_fixture(-6);
  CHECK(sinr_lower_bound(22, f.betas, f.cfg, f.delta, true) < sinr_lower_bound(-40, f.betas, f.cfg, f.delta, true));
}

TEST_CASE("array gain at low SNR", "[analysis]") {
  // Noise-dominated regime: doubling M_rx doubles the bound.
  const auto small = reference_fixture(-25, 1e6, 8, 4);
  auto big = reference_fixture(-25, 1e6, 16, 4);
  SystemConfig c = big.cfg;
  c.e_r = small.cfg.e_r;
  for (int k : {-40, 100, 300}) {
    const double r = sinr_lower_bound(k, big.betas, c, big.delta, true) /
                     sinr_lower_bound(k, small.betas, small.cfg, small.delta, true);
    CHECK(r >= 1.9);
    CHECK(r <= 2.1);
  }
}

TEST_CASE("capacity approximation endpoints and g-rule", "[analysis]") {
  auto f = reference_fixture(3);
  const Aggregates a = aggregates(f.cfg.g_hat, f.delta);
  SystemConfig c = f.cfg;
  c.e_r = 0;
  CHECK(capacity_approx(f.betas, c, a, true) == 0.0);
  c.e_r = c.e_s;
  CHECK(capacity_approx(f.betas, c, a, true) == 0.0);
  const double base = capacity_approx(f.betas, f.cfg, a, true);
  CHECK(base > 0);
  for (int g = 2 * f.cfg.g_hat + 1; g < 200; g += 7) {
    c = f.cfg;
    c.g = g;
    CHECK(capacity_approx(f.betas, c, a, true) <= base);
  }
}

TEST_CASE("Xi is unimodal, vanishes at the endpoints and peaks at the closed form", "[analysis]") {
  for (double snr : {-3.0, 3.0}) {
    const auto f = reference_fixture(snr);
    const double mu0 = phase_noise::mu(0, f.cfg.g_hat, f.delta);
    const Allocation al = optimal_reference_energy(f.betas, f.cfg, mu0);
    CHECK(al.e_r_opt > 0);
    CHECK(al.e_r_opt < f.cfg.e_s);
    SystemConfig c = f.cfg;
    c.e_r = al.e_r_opt;
    const double peak = xi(f.betas, c, mu0);
    CHECK(xi_stationarity_residual(f.betas, c, mu0) <= 1e-6);
    std::vector<double> v;
    for (int i = 0; i <= 100; ++i) {
      c.e_r = c.e_s * i / 100.0;
      v.push_back(xi(f.betas, c, mu0));
      CHECK(v.back() <= peak * (1 + 1e-12));
    }
    CHECK(v.front() == 0.0);
    CHECK(v.back() == 0.0);
    int sign_changes = 0;
    for (std::size_t i = 2; i < v.size(); ++i)
      if ((v[i] - v[i - 1] < -1e-12) != (v[i - 1] - v[i - 2] < -1e-12)) ++sign_changes;
    CHECK(sign_changes == 1);
  }
}

TEST_CASE("Xi lower-bounds the capacity approximation", "[analysis]") {
  for (double snr : {-3.0, 3.0}) {
    const auto f = reference_fixture(snr);
    const double mu0 = phase_noise::mu(0, f.cfg.g_hat, f.delta);
    const Aggregates a = aggregates(f.cfg.g_hat, f.delta);
    double logb = 0;
    for (int k : f.cfg.data_indices()) logb += std::log2(std::norm(f.betas.row(k)));
    for (double frac : {0.01, 0.05, 0.2, 0.5, 0.9}) {
      SystemConfig c = f.cfg;
      c.e_r = frac * c.e_s;
      const double lhs = capacity_approx(f.betas, c, a, true);
      const double rhs = logb / c.K() + double(c.data_count()) / c.K() * std::log2(xi(f.betas, c, mu0));
      CHECK(lhs >= rhs);
    }
  }
}

TEST_CASE("closed-form reference energy is close to the grid optimum", "[analysis]") {
  for (double snr : {-3.0, 3.0}) {
    const auto f = reference_fixture(snr);
    const Aggregates a = aggregates(f.cfg.g_hat, f.delta);
    double best = 0;
    SystemConfig c = f.cfg;
    for (int i = 0; i <= 200; ++i) {
      c.e_r = c.e_s * i / 200.0;
      best = std::max(best, capacity_approx(f.betas, c, a, true));
    }
    CHECK(capacity_approx(f.betas, f.cfg, a, true) >= 0.98 * best);
  }
  // Reference share falls as SNR rises.
  const double lo = reference_fixture(-10).cfg.e_r, hi = reference_fixture(20).cfg.e_r;
  CHECK(hi < lo);
  auto f = reference_fixture(0);
  f.cfg.n0 = 1e-12;
  CHECK(optimal_reference_energy(f.betas, f.cfg, f.delta).e_r_opt < 1e-3 * f.cfg.e_s);
}

TEST_CASE("g-hat line search", "[analysis]") {
  const auto lo = reference_fixture(-3), hi = reference_fixture(3);
  const auto a = optimize_g_hat(lo.betas, lo.cfg, lo.delta);
  const auto b = optimize_g_hat(hi.betas, hi.cfg, hi.delta);
  CHECK(a.g_hat_opt > 1);
  CHECK(a.g_hat_opt < max_g_hat(lo.cfg));
  CHECK(b.g_hat_opt > 1);
  CHECK(b.g_hat_opt < max_g_hat(hi.cfg));
  CHECK(b.g_hat_opt >= a.g_hat_opt);
  for (const auto& p : a.curve)
    if (p.valid) CHECK(p.capacity <= a.c_at_opt);
  const auto quiet = reference_fixture(0, 0.0);
  CHECK(optimize_g_hat(quiet.betas, quiet.cfg, quiet.delta).g_hat_opt == 1);
}

TEST_CASE("analytical QPSK SER", "[analysis]") {
  CHECK(analytical_qpsk_ser(0) == Catch::Approx(0.75));
  CHECK(analytical_qpsk_ser(1e4) < 1e-300);
  double prev = 1;
  for (double g = 0; g < 30; g += 0.5) {
    const double s = analytical_qpsk_ser(g);
    CHECK(s <= prev);
    prev = s;
  }
  const double g98 = std::pow(10.0, 0.98);
  const double q = q_function(std::sqrt(g98));
  CHECK(analytical_qpsk_ser(g98) == Catch::Approx(2 * q - q * q).epsilon(1e-12));
  CHECK_THROWS_AS(analytical_qpsk_ser(-1), ArgumentError);
}

TEST_CASE("analytical QPSK SER matches an AWGN Monte Carlo", "[analysis]") {
  for (double gdb : {4.0, 7.0, 9.8}) {
    const double g = std::pow(10.0, gdb / 10);
    const int n = 400000;
    rng::CounterEngine e(12, 0, rng::Stream::Aux);
    int errors = 0;
    for (int i = 0; i < n; ++i) {
      const int l = int(e() & 3u);
      const cd y = link::qpsk_point(l, g) + e.complex_normal(1.0);
      if (link::qpsk_slice(y) != l) ++errors;
    }
    const double p = double(errors) / n, ana = analytical_qpsk_ser(g);
    CHECK(std::abs(p - ana) <= 0.05 * ana);
  }
}

TEST_CASE("digital CE baseline", "[analysis]") {
  auto f = reference_fixture(0, 0.0);
  const CVec w = channel::digital_ce_rx_beamformer(f.ch, f.t, f.cfg.grid);
  const double eig = digital_ce_capacity(f.response, w, f.cfg);
  rng::CounterEngine e(13, 0, rng::Stream::Aux);
  for (int i = 0; i < 100; ++i) {
    CVec v(w.size());
    for (int m = 0; m < v.size(); ++m) v[m] = e.complex_normal(1.0);
    v /= v.norm();
    CHECK(digital_ce_capacity(f.response, v, f.cfg) <= eig);
  }
  // Single path: SNR_k = M |alpha|^2 |a_tx^H t|^2 (Es/K) / N0 on every subcarrier.
  channel::ChannelRealization one = f.ch;
  one.mpcs.resize(1);
  const CMat r1 = channel::beamformed_response(one, f.t, f.cfg.grid);
  const CVec w1 = channel::principal_eigenvector(channel::rx_correlation(r1));
  const double snr = 64 * std::norm(one.mpcs[0].amplitude) * std::norm(channel::tx_response(one, one.mpcs[0]).dot(f.t)) *
                     (f.cfg.e_s / f.cfg.K()) / f.cfg.n0;
  CHECK(digital_ce_capacity(r1, w1, f.cfg) == Catch::Approx(std::log2(1 + snr)).epsilon(1e-9));
  SystemConfig c = f.cfg;
  c.e_s *= 2;
  CHECK(digital_ce_capacity(f.response, w, c) > eig);
  CHECK(digital_ce_capacity_with_pn(f.response, w, f.cfg, f.delta) == Catch::Approx(eig).epsilon(1e-9));
  const auto pn = phase_noise::delta_profile(PhaseNoiseModel::wiener(1e6), f.cfg.grid);
  CHECK(digital_ce_capacity_with_pn(f.response, w, f.cfg, pn) < eig);
  CHECK_THROWS_AS(digital_ce_capacity(f.response, 2.0 * w, f.cfg), ArgumentError);
}

TEST_CASE("Monte Carlo throughput sits above the capacity approximation", "[analysis]") {
  auto f = reference_fixture(0);
  f.cfg.filter_mode = link::FilterMode::IdealRect;
  const link::LinkSimulator sim(f.cfg, f.response, 1.0);
  const Throughput a = cace_mc_throughput(sim, 100, 3);
  const double c = capacity_approx(f.betas, f.cfg, f.delta, true);
  CHECK(a.mean >= c - 3 * a.std_error);
  const Throughput b = cace_mc_throughput(sim, 400, 3);
  // Four times the trials halves the standard error, up to sampling noise in the error itself.
  CHECK(b.std_error / a.std_error == Catch::Approx(0.5).margin(0.2));
}

TEST_CASE("Monte Carlo throughput without phase noise approaches the guard-loss limit", "[analysis]") {
  auto f = reference_fixture(20, 0.0);
  f.cfg.g_hat = 1;
  f.cfg.g = 2;
  f.cfg.e_r = optimal_reference_energy(f.betas, f.cfg, f.delta).e_r_opt;
  f.cfg.filter_mode = link::FilterMode::IdealRect;
  const link::LinkSimulator sim(f.cfg, f.response, 1.0);
  const Throughput t = cace_mc_throughput(sim, 20, 4);
  const CVec w = channel::digital_ce_rx_beamformer(f.ch, f.t, f.cfg.grid);
  const double dig = digital_ce_capacity(f.response, w, f.cfg);
  CHECK(t.mean <= dig);
  CHECK(t.mean >= 0.6 * dig * f.cfg.data_count() / f.cfg.K());
}
