// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cace/analysis.hpp"
#include "cace/channel.hpp"
#include "cace/config.hpp"
#include "cace/link.hpp"
#include "cace/phase_noise.hpp"

namespace cace::experiments {

inline constexpr const char* kCodeVersion = "0.1.0";

/// One self-describing output value. Unset coordinates print as empty cells.
struct ResultRow {
  std::string campaign;
  std::optional<int> k;
  std::optional<double> snr_db;
  std::optional<int> g_hat;
  std::optional<double> e_r;
  std::optional<int> l;
  std::optional<double> offset_hz;
  std::optional<double> sigma2;
  std::string metric;
  double value = 0;
  std::optional<double> std_error;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
};

inline const char* kCsvHeader =
    "campaign,k,snr_db,g_hat,e_r,l,offset_hz,sigma2_rad2_per_s,metric,value,std_error,trials,seed";

struct CampaignResult {
  std::vector<ResultRow> rows;
  std::vector<std::pair<std::string, double>> summary;

  double summary_value(const std::string& key) const {
    for (const auto& [k, v] : summary)
      if (k == key) return v;
    throw ArgumentError("no summary entry '" + key + "'");
  }
};

inline std::string csv_line(const ResultRow& r) {
  using detail::fmt_double;
  auto opt_d = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  auto opt_i = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  std::string s = r.campaign;
  for (const std::string& c : {opt_i(r.k), opt_d(r.snr_db), opt_i(r.g_hat), opt_d(r.e_r), opt_i(r.l), opt_d(r.offset_hz),
                               opt_d(r.sigma2), r.metric, fmt_double(r.value), opt_d(r.std_error),
                               std::to_string(r.trials), std::to_string(r.seed)})
    s += "," + c;
  return s;
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string s = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) s += csv_line(r) + "\n";
  return s;
}

inline std::string sidecar_json(const ExperimentSpec& spec, const CampaignResult& res) {
  nlohmann::ordered_json j;
  const std::string text = serialize(spec);
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  j["name"] = spec.name;
  j["campaign"] = to_string(spec.campaign);
  j["config_hash_fnv1a64"] = hash;
  j["seed"] = spec.seed;
  j["trials"] = spec.trials;
  j["code_version"] = kCodeVersion;
  j["rows"] = res.rows.size();
  nlohmann::ordered_json sum = nlohmann::ordered_json::object();
  for (const auto& [k, v] : res.summary) sum[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json();
  j["summary"] = sum;
  j["config"] = text;
  return j.dump(2) + "\n";
}

/// Writes the CSV to `path` and the metadata to `path` + ".json".
inline void write_outputs(const std::string& path, const ExperimentSpec& spec, const CampaignResult& res) {
  std::ofstream csv(path, std::ios::binary);
  if (!csv) throw ConfigError("cannot write '" + path + "'");
  csv << to_csv(res.rows);
  std::ofstream js(path + ".json", std::ios::binary);
  if (!js) throw ConfigError("cannot write '" + path + ".json'");
  js << sidecar_json(spec, res);
}

/// Per-campaign defaults, before any config file is applied.
inline ExperimentSpec default_spec(Campaign c) {
  ExperimentSpec s;
  s.campaign = c;
  s.name = to_string(c);
  s.output = std::string(to_string(c)) + ".csv";
  switch (c) {
    case Campaign::PnValidate:
      s.trials = 100000;
      break;
    case Campaign::Ser:
      s.trials = 20000;
      s.snr_db = {-8, -6, -4, -2};
      s.freq_offsets_mhz = {0.0, 5.0};
      break;
    case Campaign::GHatSweep:
      s.snr_db = {-3, 3};
      break;
    case Campaign::PowerAlloc:
      s.snr_db = {-9, -6, -3, 0, 3, 6, 9};
      break;
    case Campaign::Compare:
      s.trials = 100;
      s.snr_db.clear();
      for (int v = -20; v <= 20; v += 2) s.snr_db.push_back(v);
      s.sigma2_rad2_per_s = {0.0, 1e6};
      break;
    case Campaign::LSweep:
      s.trials = 1;
      s.snr_db = {0.0};
      s.channel_source = "clustered";
      break;
  }
  return s;
}

/// Reduced profile for quick runs: 4x2 receive array, 4x4 transmit array, K = 256.
inline void apply_small_profile(ExperimentSpec& s) {
  s.rx_horizontal = 4;
  s.rx_vertical = 2;
  s.tx_horizontal = 4;
  s.tx_vertical = 4;
  s.k1 = 128;
  s.k2 = 127;
}

/// Trial counts for high-resolution curves.
inline void apply_full_scale(ExperimentSpec& s) {
  if (s.campaign == Campaign::PnValidate || s.campaign == Campaign::Ser) s.trials = 1000000;
  if (s.campaign == Campaign::Compare) s.trials = 1000;
  if (s.campaign == Campaign::LSweep) s.realizations = 100;
}

/// Seed for one point of a campaign (splitmix64 finaliser over seed and index).
inline std::uint64_t point_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double to_db(double v) { return 10 * std::log10(v); }

/// True when v rises (weakly) to a single peak and then falls (weakly).
inline bool is_unimodal(const std::vector<double>& v, double rel_tol = 1e-12) {
  std::size_t i = 1;
  auto tol = [&](std::size_t j) { return rel_tol * std::max(std::abs(v[j]), std::abs(v[j - 1])); };
  while (i < v.size() && v[i] >= v[i - 1] - tol(i)) ++i;
  while (i < v.size() && v[i] <= v[i - 1] + tol(i)) ++i;
  return i >= v.size();
}

namespace detail {

struct Setup {
  channel::ChannelRealization chan;
  CVec t;
  CMat response;
  double bar_beta = 1;
  channel::BetaTable betas;
};

inline Setup setup_of(const ExperimentSpec& s, const channel::ChannelRealization& c) {
  Setup u{c, channel::tx_beamformer_strongest_mpc(c), {}, 0, {}};
  u.response = channel::beamformed_response(c, u.t, grid_of(s));
  u.bar_beta = channel::bar_beta(c, u.t);
  u.betas = channel::make_beta_table(u.response, grid_of(s), u.bar_beta);
  return u;
}

inline link::SystemConfig config_with_energy(const ExperimentSpec& s, double snr_db, double sigma2, const Setup& u,
                                             const phase_noise::DeltaProfile& d) {
  link::SystemConfig cfg = system_of(s, snr_db, sigma2, u.bar_beta);
  cfg.e_r = s.reference_energy_j ? *s.reference_energy_j : analysis::optimal_reference_energy(u.betas, cfg, d).e_r_opt;
  return cfg;
}

inline ResultRow row(const ExperimentSpec& s, std::string metric, double value) {
  ResultRow r;
  r.campaign = to_string(s.campaign);
  r.metric = std::move(metric);
  r.value = value;
  r.seed = s.seed;
  return r;
}

// Mean of the CACE SINR bound over data subcarriers, linear.
inline double mean_sinr(const channel::BetaTable& b, const link::SystemConfig& cfg, const analysis::Aggregates& a) {
  const auto g = analysis::sinr_profile(b, cfg, a, true);
  double s = 0;
  for (double v : g) s += v;
  return s / double(g.size());
}

}  // namespace detail

// --- campaigns ---

inline CampaignResult run_pn_validate(const ExperimentSpec& s) {
  validate(s);
  const auto grid = grid_of(s);
  const int K = grid.size();
  CampaignResult res;
  for (std::size_t si = 0; si < s.sigma2_rad2_per_s.size(); ++si) {
    const double s2 = s.sigma2_rad2_per_s[si];
    const auto m = pn_model_of(s, s2);
    const auto closed = phase_noise::delta_profile(m, grid);
    const auto exact = m.kind == phase_noise::Kind::Wiener ? phase_noise::delta_wiener_exact_profile(m, grid) : closed;
    const std::vector<int> lags{0, 1, 100};
    const auto mc = phase_noise::empirical_omega_moments(m, grid, lags, s.trials, point_seed(s.seed, si),
                                                         s.workers ? s.workers : default_workers());
    double max_gap = 0, max_gap_exact = 0, min_sep1 = std::numeric_limits<double>::infinity(), min_sep100 = min_sep1;
    for (int b = 0; b < K; ++b) {
      const int k = grid.index(b);
      const double diag = mc.mean[0][b].real();
      auto add = [&](const std::string& metric, double v, std::optional<double> se) {
        ResultRow r = detail::row(s, metric, v);
        r.k = k;
        r.sigma2 = s2;
        r.std_error = se;
        r.trials = se ? s.trials : 0;
        res.rows.push_back(r);
      };
      add("delta_closed_form", closed.diag[b], std::nullopt);
      add("delta_exact", exact.diag[b], std::nullopt);
      add("mc_omega_lag0", diag, mc.std_error[0][b]);
      add("mc_omega_lag1_abs", std::abs(mc.mean[1][b]), mc.std_error[1][b]);
      add("mc_omega_lag100_abs", std::abs(mc.mean[2][b]), mc.std_error[2][b]);
      if (diag > 0) {
        max_gap = std::max(max_gap, std::abs(to_db(closed.diag[b] / diag)));
        max_gap_exact = std::max(max_gap_exact, std::abs(to_db(exact.diag[b] / diag)));
        min_sep1 = std::min(min_sep1, to_db(diag / std::abs(mc.mean[1][b])));
        min_sep100 = std::min(min_sep100, to_db(diag / std::abs(mc.mean[2][b])));
      }
    }
    const std::string tag = "_sigma2_" + detail::fmt_double(s2);
    res.summary.push_back({"max_diag_gap_db_closed_form" + tag, max_gap});
    res.summary.push_back({"max_diag_gap_db_exact" + tag, max_gap_exact});
    res.summary.push_back({"min_offdiag_separation_db_lag1" + tag, min_sep1});
    res.summary.push_back({"min_offdiag_separation_db_lag100" + tag, min_sep100});
  }
  return res;
}

inline CampaignResult run_ser(const ExperimentSpec& s) {
  validate(s);
  const auto grid = grid_of(s);
  const auto u = detail::setup_of(s, channel_of(s));
  const double s2 = s.sigma2_rad2_per_s.front();
  const auto d = delta_of(s, pn_model_of(s, s2), grid);
  CampaignResult res;
  std::uint64_t point = 0;
  double worst_offset_ratio = 1;
  bool ordered = true;
  for (double snr : s.snr_db) {
    link::SystemConfig cfg = detail::config_with_energy(s, snr, s2, u, d);
    for (int k : s.tracked_subcarriers) {
      for (bool rem2 : {true, false}) {
        const double g = analysis::sinr_lower_bound(k, u.betas, cfg, d, rem2);
        ResultRow r = detail::row(s, rem2 ? "ser_analytical_refined_ici" : "ser_analytical_plain",
                                  analysis::analytical_qpsk_ser(g));
        r.k = k;
        r.snr_db = snr;
        r.g_hat = cfg.g_hat;
        r.e_r = cfg.e_r;
        r.sigma2 = s2;
        res.rows.push_back(r);
      }
    }
    std::vector<double> base;
    for (double off : s.freq_offsets_mhz) {
      cfg.freq_offset = off * 1e6;
      const link::LinkSimulator sim(cfg, u.response, u.bar_beta);
      link::QpskOptions opt;
      opt.ground_truth_fast_fading = s.ground_truth_fast_fading;
      if (s.workers) opt.workers = s.workers;
      const std::uint64_t ps = point_seed(s.seed, point++);
      const auto est = link::qpsk_roundtrip(sim, s.trials, ps, s.tracked_subcarriers, opt);
      std::vector<double> sers;
      for (const auto& e : est) {
        auto add = [&](const std::string& metric, double v, std::optional<double> se) {
          ResultRow r = detail::row(s, metric, v);
          r.k = e.k;
          r.snr_db = snr;
          r.g_hat = cfg.g_hat;
          r.e_r = cfg.e_r;
          r.offset_hz = cfg.freq_offset;
          r.sigma2 = s2;
          r.std_error = se;
          r.trials = s.trials;
          r.seed = ps;
          res.rows.push_back(r);
        };
        add("ser_mc", e.ser, std::sqrt(e.ser * (1 - e.ser) / double(e.symbols)));
        add("ser_mc_wilson_lower", e.lower, std::nullopt);
        add("ser_mc_wilson_upper", e.upper, std::nullopt);
        sers.push_back(e.ser);
      }
      if (base.empty()) {
        base = sers;
      } else {
        for (std::size_t i = 0; i < sers.size(); ++i)
          if (base[i] > 0 && sers[i] > 0)
            worst_offset_ratio = std::max(worst_offset_ratio, std::max(sers[i] / base[i], base[i] / sers[i]));
      }
      if (sers.size() >= 2 && !(sers[0] > sers[1])) ordered = false;
    }
  }
  res.summary.push_back({"worst_offset_ser_ratio", worst_offset_ratio});
  res.summary.push_back({"first_tracked_ser_above_second_everywhere", ordered ? 1.0 : 0.0});
  return res;
}

/// C_approx maximised over a uniform grid of E_r in [0, E_s].
inline std::pair<double, double> grid_max_capacity(const channel::BetaTable& b, link::SystemConfig cfg,
                                                   const analysis::Aggregates& a, int points) {
  double best = -1, arg = 0;
  for (int i = 0; i < points; ++i) {
    cfg.e_r = cfg.e_s * i / (points - 1);
    const double c = analysis::capacity_approx(b, cfg, a, true);
    if (c > best) {
      best = c;
      arg = cfg.e_r;
    }
  }
  return {best, arg};
}

inline CampaignResult run_ghat_sweep(const ExperimentSpec& s) {
  validate(s);
  const auto grid = grid_of(s);
  const auto u = detail::setup_of(s, channel_of(s));
  const double s2 = s.sigma2_rad2_per_s.front();
  const auto d = delta_of(s, pn_model_of(s, s2), grid);
  CampaignResult res;
  for (double snr : s.snr_db) {
    const link::SystemConfig tmpl = system_of(s, snr, s2, u.bar_beta);
    const auto search = analysis::optimize_g_hat(u.betas, tmpl, d, true);
    double worst_gap = 0;
    for (const auto& p : search.curve) {
      if (!p.valid) continue;
      link::SystemConfig cfg = tmpl;
      cfg.g_hat = p.g_hat;
      cfg.g = 2 * p.g_hat;
      const auto a = analysis::aggregates(p.g_hat, d);
      const auto [cmax, ermax] = grid_max_capacity(u.betas, cfg, a, s.power_grid_points);
      auto add = [&](const std::string& metric, double v, double er) {
        ResultRow r = detail::row(s, metric, v);
        r.snr_db = snr;
        r.g_hat = p.g_hat;
        r.e_r = er;
        r.sigma2 = s2;
        res.rows.push_back(r);
      };
      add("capacity_grid_optimal_e_r", cmax, ermax);
      add("capacity_closed_form_e_r", p.capacity, p.e_r);
      if (cmax > 0) worst_gap = std::max(worst_gap, (cmax - p.capacity) / cmax);
    }
    const std::string tag = "_snr_" + detail::fmt_double(snr);
    const int last = search.curve.back().g_hat;
    res.summary.push_back({"argmax_g_hat" + tag, double(search.g_hat_opt)});
    res.summary.push_back({"interior_maximum" + tag, (search.g_hat_opt > 1 && search.g_hat_opt < last) ? 1.0 : 0.0});
    res.summary.push_back({"max_relative_gap_closed_vs_grid" + tag, worst_gap});
  }
  return res;
}

inline CampaignResult run_power_alloc(const ExperimentSpec& s) {
  validate(s);
  const auto grid = grid_of(s);
  const auto u = detail::setup_of(s, channel_of(s));
  const double s2 = s.sigma2_rad2_per_s.front();
  const auto d = delta_of(s, pn_model_of(s, s2), grid);
  CampaignResult res;
  double worst_residual = 0, worst_gap = 0;
  bool unimodal = true, decreasing = true;
  double prev_frac = std::numeric_limits<double>::infinity();
  for (double snr : s.snr_db) {
    link::SystemConfig cfg = system_of(s, snr, s2, u.bar_beta);
    const auto a = analysis::aggregates(cfg.g_hat, d);
    const auto alloc = analysis::optimal_reference_energy(u.betas, cfg, a.mu0);
    cfg.e_r = alloc.e_r_opt;
    const double residual = analysis::xi_stationarity_residual(u.betas, cfg, a.mu0);
    const double c_opt = analysis::capacity_approx(u.betas, cfg, a, true);
    const auto [cmax, ermax] = grid_max_capacity(u.betas, cfg, a, s.power_grid_points);
    std::vector<double> xis;
    link::SystemConfig c2 = cfg;
    for (int i = 0; i < s.power_grid_points; ++i) {
      c2.e_r = cfg.e_s * i / (s.power_grid_points - 1);
      xis.push_back(analysis::xi(u.betas, c2, a.mu0));
    }
    const bool uni = is_unimodal(xis);
    const double frac = alloc.e_r_opt / cfg.e_s;
    auto add = [&](const std::string& metric, double v) {
      ResultRow r = detail::row(s, metric, v);
      r.snr_db = snr;
      r.g_hat = cfg.g_hat;
      r.e_r = alloc.e_r_opt;
      r.sigma2 = s2;
      res.rows.push_back(r);
    };
    add("e_r_opt", alloc.e_r_opt);
    add("e_r_opt_fraction", frac);
    add("q_term", alloc.q_term);
    add("r_term", alloc.r_term);
    add("xi_stationarity_residual", residual);
    add("capacity_at_e_r_opt", c_opt);
    add("capacity_grid_max", cmax);
    add("e_r_grid_argmax", ermax);
    add("capacity_relative_gap", cmax > 0 ? (cmax - c_opt) / cmax : 0.0);
    add("xi_unimodal", uni ? 1.0 : 0.0);
    worst_residual = std::max(worst_residual, residual);
    worst_gap = std::max(worst_gap, cmax > 0 ? (cmax - c_opt) / cmax : 0.0);
    unimodal = unimodal && uni;
    decreasing = decreasing && frac < prev_frac;
    prev_frac = frac;
  }
  res.summary.push_back({"max_stationarity_residual", worst_residual});
  res.summary.push_back({"max_capacity_relative_gap", worst_gap});
  res.summary.push_back({"xi_unimodal_everywhere", unimodal ? 1.0 : 0.0});
  res.summary.push_back({"e_r_fraction_decreasing_in_snr", decreasing ? 1.0 : 0.0});
  return res;
}

/// CACE operating point with the g^ line search and closed-form E_r.
struct CacePoint {
  link::SystemConfig cfg;
  double capacity = 0;
  double mean_sinr = 0;
};

inline CacePoint optimal_cace_point(const channel::BetaTable& b, const link::SystemConfig& tmpl,
                                    const phase_noise::DeltaProfile& d) {
  const auto search = analysis::optimize_g_hat(b, tmpl, d, true);
  CacePoint p{tmpl, search.c_at_opt, 0};
  p.cfg.g_hat = search.g_hat_opt;
  p.cfg.g = 2 * search.g_hat_opt;
  p.cfg.e_r = search.e_r_opt;
  p.mean_sinr = detail::mean_sinr(b, p.cfg, analysis::aggregates(p.cfg.g_hat, d));
  return p;
}

/// SNR (dB) at which `capacity_at(snr)` reaches `target`, by bisection; the
/// function must be nondecreasing.
template <class F>
double snr_for_capacity(F capacity_at, double target, double lo = -80, double hi = 80) {
  if (capacity_at(lo) >= target) return lo;
  if (capacity_at(hi) < target) return std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
    const double mid = 0.5 * (lo + hi);
    (capacity_at(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Digital-CE throughput of the eigen-beamformer at the given SNR.
inline double digital_capacity_at(const ExperimentSpec& s, const CMat& response, const CVec& w, double bar_beta,
                                  double snr_db) {
  link::SystemConfig cfg = system_of(s, snr_db, 0.0, bar_beta);
  return analysis::digital_ce_capacity(response, w, cfg);
}

inline CampaignResult run_compare(const ExperimentSpec& s) {
  validate(s);
  const auto grid = grid_of(s);
  const auto u = detail::setup_of(s, channel_of(s));
  const CVec w = channel::principal_eigenvector(channel::rx_correlation(u.response));
  CampaignResult res;
  std::uint64_t point = 0;
  for (double s2 : s.sigma2_rad2_per_s) {
    const auto model = pn_model_of(s, s2);
    const auto d = delta_of(s, model, grid);
    double max_gap = -std::numeric_limits<double>::infinity(), crossover = std::numeric_limits<double>::quiet_NaN();
    for (double snr : s.snr_db) {
      const CacePoint cp = optimal_cace_point(u.betas, system_of(s, snr, s2, u.bar_beta), d);
      const double dig = digital_capacity_at(s, u.response, w, u.bar_beta, snr);
      const double dig_pn = analysis::digital_ce_capacity_with_pn(u.response, w, cp.cfg, d);
      const double snr_eq = snr_for_capacity(
          [&](double x) { return digital_capacity_at(s, u.response, w, u.bar_beta, x); }, cp.capacity);
      const double gap = snr - snr_eq;
      auto add = [&](const std::string& metric, double v, std::optional<double> se = std::nullopt,
                     std::int64_t trials = 0, std::uint64_t seed = 0) {
        ResultRow r = detail::row(s, metric, v);
        r.snr_db = snr;
        r.g_hat = cp.cfg.g_hat;
        r.e_r = cp.cfg.e_r;
        r.sigma2 = s2;
        r.std_error = se;
        r.trials = trials;
        if (seed) r.seed = seed;
        res.rows.push_back(r);
      };
      add("cace_capacity_approx", cp.capacity);
      add("cace_mean_sinr_db", to_db(cp.mean_sinr));
      add("digital_ce_capacity", dig);
      add("digital_ce_capacity_with_pn", dig_pn);
      add("horizontal_gap_db", gap);
      add("cace_overhead_fraction", double(cp.cfg.guard_size()) / cp.cfg.K());
      if (s.trials > 0) {
        link::SystemConfig mc = cp.cfg;
        mc.freq_offset = 0;
        const link::LinkSimulator sim(mc, u.response, u.bar_beta);
        const std::uint64_t ps = point_seed(s.seed, point++);
        const auto tp = analysis::cace_mc_throughput(sim, s.trials, ps, s.workers ? s.workers : default_workers());
        add("cace_mc_throughput", tp.mean, tp.std_error, tp.trials, ps);
      }
      if (cp.mean_sinr >= 1.0) {
        if (std::isnan(crossover)) crossover = snr;
        max_gap = std::max(max_gap, gap);
      }
    }
    const std::string tag = "_sigma2_" + detail::fmt_double(s2);
    res.summary.push_back({"crossover_snr_db" + tag, crossover});
    res.summary.push_back({"max_horizontal_gap_db_above_crossover" + tag, max_gap});
  }
  return res;
}

inline CampaignResult run_l_sweep(const ExperimentSpec& s) {
  validate(s);
  const auto grid = grid_of(s);
  const double s2 = s.sigma2_rad2_per_s.front();
  const auto d = delta_of(s, pn_model_of(s, s2), grid);
  const double snr = s.snr_db.front();
  CampaignResult res;
  std::vector<double> gaps;
  for (std::size_t li = 0; li < s.cluster_counts.size(); ++li) {
    const int L = s.cluster_counts[li];
    std::vector<double> cace, dig, gap;
    for (int r = 0; r < s.realizations; ++r) {
      const auto c = channel::random_clustered_channel(point_seed(s.seed, li * 1000003ull + r), clustered_params_of(s, L));
      const auto u = detail::setup_of(s, c);
      const CVec w = channel::principal_eigenvector(channel::rx_correlation(u.response));
      const CacePoint cp = optimal_cace_point(u.betas, system_of(s, snr, s2, u.bar_beta), d);
      const double dc = digital_capacity_at(s, u.response, w, u.bar_beta, snr);
      cace.push_back(cp.capacity);
      dig.push_back(dc);
      gap.push_back(dc - cp.capacity);
    }
    auto stats = [](const std::vector<double>& v) {
      double m = 0, m2 = 0;
      for (double x : v) m += x;
      m /= double(v.size());
      for (double x : v) m2 += (x - m) * (x - m);
      const double se = v.size() > 1 ? std::sqrt(m2 / double(v.size() - 1) / double(v.size())) : 0.0;
      return std::pair{m, se};
    };
    auto add = [&](const std::string& metric, const std::vector<double>& v) {
      const auto [m, se] = stats(v);
      ResultRow row = detail::row(s, metric, m);
      row.snr_db = snr;
      row.l = L;
      row.sigma2 = s2;
      row.std_error = se;
      row.trials = s.realizations;
      res.rows.push_back(row);
      return m;
    };
    add("cace_capacity_approx", cace);
    add("digital_ce_capacity", dig);
    gaps.push_back(add("capacity_gap", gap));
  }
  res.summary.push_back({"gap_first_l", gaps.front()});
  res.summary.push_back({"gap_last_l", gaps.back()});
  return res;
}

inline CampaignResult run(const ExperimentSpec& s) {
  switch (s.campaign) {
    case Campaign::PnValidate: return run_pn_validate(s);
    case Campaign::Ser: return run_ser(s);
    case Campaign::GHatSweep: return run_ghat_sweep(s);
    case Campaign::PowerAlloc: return run_power_alloc(s);
    case Campaign::Compare: return run_compare(s);
    case Campaign::LSweep: return run_l_sweep(s);
  }
  throw ConfigError("unknown campaign");
}

}  // namespace cace::experiments
