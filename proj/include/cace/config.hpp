// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cace/channel.hpp"
#include "cace/error.hpp"
#include "cace/link.hpp"
#include "cace/phase_noise.hpp"

namespace cace::experiments {

namespace pt = boost::property_tree;

enum class Campaign { PnValidate, Ser, GHatSweep, PowerAlloc, Compare, LSweep };

inline const char* to_string(Campaign c) {
  switch (c) {
    case Campaign::PnValidate: return "pn-validate";
    case Campaign::Ser: return "ser";
    case Campaign::GHatSweep: return "ghat-sweep";
    case Campaign::PowerAlloc: return "power-alloc";
    case Campaign::Compare: return "compare";
    case Campaign::LSweep: return "l-sweep";
  }
  return "";
}

inline Campaign campaign_from_string(const std::string& s) {
  for (auto c : {Campaign::PnValidate, Campaign::Ser, Campaign::GHatSweep, Campaign::PowerAlloc, Campaign::Compare,
                 Campaign::LSweep})
    if (s == to_string(c)) return c;
  throw ConfigError("unknown campaign '" + s + "'");
}

enum class ChannelSource { Sparse, Explicit, Clustered };
enum class DeltaSource { ClosedForm, Exact };

struct MpcRecord {
  double amplitude_re = 1, amplitude_im = 0;
  double delay_ns = 0;
  double aoa_azimuth_rad = 0, aoa_elevation_rad = kPi / 2;
  double aod_azimuth_rad = 0, aod_elevation_rad = kPi / 2;
  bool operator==(const MpcRecord&) const = default;
};

/// Everything a campaign needs, in config units.
struct ExperimentSpec {
  std::string name = "run";
  Campaign campaign = Campaign::Compare;
  std::uint64_t seed = 1;
  std::int64_t trials = 1000;
  std::vector<double> snr_db{0.0};
  std::string output = "results.csv";
  unsigned workers = 0;  // 0 = hardware concurrency

  // [system]
  int k1 = 512, k2 = 511;
  double symbol_duration_us = 1.0;
  int guard = 20;
  int filter_half_width = 10;
  double symbol_energy_j = 1.0;
  std::optional<double> reference_energy_j;  // unset: closed-form optimum
  std::string filter_mode = "truncated_sinc";
  std::vector<double> freq_offsets_mhz{0.0};
  std::vector<int> tracked_subcarriers{22, -40};
  bool ground_truth_fast_fading = false;
  int power_grid_points = 201;

  // [phase_noise]
  std::string pn_model = "wiener";
  std::vector<double> sigma2_rad2_per_s{1e6};
  double eta_per_s = 1e6;
  std::string delta_source = "closed_form";

  // [arrays]
  int rx_horizontal = 16, rx_vertical = 4;
  int tx_horizontal = 32, tx_vertical = 8;
  double spacing_wavelengths = 0.5;
  double carrier_frequency_ghz = 30.0;
  double cyclic_prefix_ns = 100.0;

  // [channel]
  std::string channel_source = "sparse";
  double bar_beta = 1.0;
  std::vector<MpcRecord> mpcs;
  std::vector<int> cluster_counts{1, 2, 4, 6, 8, 10};
  int subpaths_per_cluster = 10;
  double delay_spread_ns = 1.0;
  double angle_spread_rad = kPi / 50;
  int realizations = 20;

  bool operator==(const ExperimentSpec&) const = default;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>)
      s += fmt_double(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

template <class T>
T parse_scalar(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if constexpr (std::is_same_v<T, std::string>) {
    return s;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + s + "'");
  } else {
    T v{};
    const char* end = s.data() + s.size();
    auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end)
      throw ConfigError("key '" + key + "': cannot parse '" + s + "'");
    return v;
  }
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_scalar<T>(key, item));
  return out;
}

template <class T>
void get(const pt::ptree& t, const std::string& key, T& dst) {
  if (auto v = t.get_optional<std::string>(key)) dst = parse_scalar<T>(key, *v);
}

template <class T>
void get_list(const pt::ptree& t, const std::string& key, std::vector<T>& dst) {
  if (auto v = t.get_optional<std::string>(key)) dst = parse_list<T>(key, *v);
}

}  // namespace detail

inline void validate(const ExperimentSpec& s) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(!s.snr_db.empty(), "snr_db must be nonempty");
  need(s.trials >= 1, "trials must be >= 1");
  need(s.k1 >= 1 && s.k2 >= 1, "k1 and k2 must be >= 1");
  need(s.symbol_duration_us > 0, "symbol_duration_us must be positive");
  need(s.filter_half_width >= 1 && 2 * s.filter_half_width <= s.guard, "need 1 <= filter_half_width <= guard/2");
  need(s.guard < std::min(s.k1, s.k2), "guard must be below min(k1, k2)");
  need(s.symbol_energy_j > 0, "symbol_energy_j must be positive");
  need(!s.reference_energy_j || (*s.reference_energy_j >= 0 && *s.reference_energy_j <= s.symbol_energy_j),
       "reference_energy_j must lie in [0, symbol_energy_j]");
  need(s.filter_mode == "ideal_rect" || s.filter_mode == "truncated_sinc", "filter_mode must be ideal_rect or truncated_sinc");
  need(s.pn_model == "wiener" || s.pn_model == "ou" || s.pn_model == "none", "phase-noise model must be wiener, ou or none");
  need(!s.sigma2_rad2_per_s.empty(), "sigma2_rad2_per_s must be nonempty");
  for (double v : s.sigma2_rad2_per_s) need(v >= 0, "sigma2_rad2_per_s must be non-negative");
  need(s.eta_per_s > 0, "eta_per_s must be positive");
  need(s.delta_source == "closed_form" || s.delta_source == "exact", "delta_source must be closed_form or exact");
  need(s.rx_horizontal >= 1 && s.rx_vertical >= 1 && s.tx_horizontal >= 1 && s.tx_vertical >= 1, "array sizes must be >= 1");
  need(s.spacing_wavelengths > 0 && s.carrier_frequency_ghz > 0 && s.cyclic_prefix_ns > 0, "array spacing, carrier and cyclic prefix must be positive");
  need(s.channel_source == "sparse" || s.channel_source == "explicit" || s.channel_source == "clustered",
       "channel source must be sparse, explicit or clustered");
  need(s.channel_source != "explicit" || !s.mpcs.empty(), "explicit channel needs at least one [mpc.N] section");
  need(!s.freq_offsets_mhz.empty(), "freq_offsets_mhz must be nonempty");
  need(!s.tracked_subcarriers.empty(), "tracked_subcarriers must be nonempty");
  need(s.power_grid_points >= 3, "power_grid_points must be >= 3");
  need(!s.cluster_counts.empty() && s.subpaths_per_cluster >= 1 && s.realizations >= 1, "cluster settings must be positive");
  for (int c : s.cluster_counts) need(c >= 1, "cluster counts must be >= 1");
}

inline ExperimentSpec spec_from_ptree(const pt::ptree& t, ExperimentSpec s = {}) {
  using detail::get;
  using detail::get_list;
  std::string camp;
  get(t, "experiment.campaign", camp);
  if (!camp.empty()) s.campaign = campaign_from_string(camp);
  get(t, "experiment.name", s.name);
  get(t, "experiment.seed", s.seed);
  get(t, "experiment.trials", s.trials);
  get_list(t, "experiment.snr_db", s.snr_db);
  get(t, "experiment.output", s.output);
  get(t, "experiment.workers", s.workers);

  get(t, "system.k1", s.k1);
  get(t, "system.k2", s.k2);
  get(t, "system.symbol_duration_us", s.symbol_duration_us);
  get(t, "system.guard", s.guard);
  get(t, "system.filter_half_width", s.filter_half_width);
  get(t, "system.symbol_energy_j", s.symbol_energy_j);
  if (auto v = t.get_optional<std::string>("system.reference_energy_j"))
    s.reference_energy_j = detail::trim(*v) == "optimal" ? std::nullopt
                                                         : std::optional(detail::parse_scalar<double>("reference_energy_j", *v));
  get(t, "system.filter_mode", s.filter_mode);
  get_list(t, "system.freq_offsets_mhz", s.freq_offsets_mhz);
  get_list(t, "system.tracked_subcarriers", s.tracked_subcarriers);
  get(t, "system.ground_truth_fast_fading", s.ground_truth_fast_fading);
  get(t, "system.power_grid_points", s.power_grid_points);

  get(t, "phase_noise.model", s.pn_model);
  get_list(t, "phase_noise.sigma2_rad2_per_s", s.sigma2_rad2_per_s);
  get(t, "phase_noise.eta_per_s", s.eta_per_s);
  get(t, "phase_noise.delta_source", s.delta_source);

  get(t, "arrays.rx_horizontal", s.rx_horizontal);
  get(t, "arrays.rx_vertical", s.rx_vertical);
  get(t, "arrays.tx_horizontal", s.tx_horizontal);
  get(t, "arrays.tx_vertical", s.tx_vertical);
  get(t, "arrays.spacing_wavelengths", s.spacing_wavelengths);
  get(t, "arrays.carrier_frequency_ghz", s.carrier_frequency_ghz);
  get(t, "arrays.cyclic_prefix_ns", s.cyclic_prefix_ns);

  get(t, "channel.source", s.channel_source);
  get(t, "channel.bar_beta", s.bar_beta);
  get_list(t, "channel.cluster_counts", s.cluster_counts);
  get(t, "channel.subpaths_per_cluster", s.subpaths_per_cluster);
  get(t, "channel.delay_spread_ns", s.delay_spread_ns);
  get(t, "channel.angle_spread_rad", s.angle_spread_rad);
  get(t, "channel.realizations", s.realizations);

  std::vector<MpcRecord> mpcs;
  for (int i = 0;; ++i) {
    const auto sec = t.get_child_optional("mpc." + std::to_string(i));
    if (!sec) break;
    MpcRecord m;
    get(*sec, "amplitude_re", m.amplitude_re);
    get(*sec, "amplitude_im", m.amplitude_im);
    get(*sec, "delay_ns", m.delay_ns);
    get(*sec, "aoa_azimuth_rad", m.aoa_azimuth_rad);
    get(*sec, "aoa_elevation_rad", m.aoa_elevation_rad);
    get(*sec, "aod_azimuth_rad", m.aod_azimuth_rad);
    get(*sec, "aod_elevation_rad", m.aod_elevation_rad);
    mpcs.push_back(m);
  }
  if (!mpcs.empty()) s.mpcs = mpcs;
  validate(s);
  return s;
}

inline pt::ptree spec_to_ptree(const ExperimentSpec& s) {
  using detail::fmt_double;
  using detail::join;
  pt::ptree t;
  t.put("experiment.name", s.name);
  t.put("experiment.campaign", to_string(s.campaign));
  t.put("experiment.seed", std::to_string(s.seed));
  t.put("experiment.trials", std::to_string(s.trials));
  t.put("experiment.snr_db", join(s.snr_db));
  t.put("experiment.output", s.output);
  t.put("experiment.workers", std::to_string(s.workers));

  t.put("system.k1", std::to_string(s.k1));
  t.put("system.k2", std::to_string(s.k2));
  t.put("system.symbol_duration_us", fmt_double(s.symbol_duration_us));
  t.put("system.guard", std::to_string(s.guard));
  t.put("system.filter_half_width", std::to_string(s.filter_half_width));
  t.put("system.symbol_energy_j", fmt_double(s.symbol_energy_j));
  t.put("system.reference_energy_j", s.reference_energy_j ? fmt_double(*s.reference_energy_j) : "optimal");
  t.put("system.filter_mode", s.filter_mode);
  t.put("system.freq_offsets_mhz", join(s.freq_offsets_mhz));
  t.put("system.tracked_subcarriers", join(s.tracked_subcarriers));
  t.put("system.ground_truth_fast_fading", s.ground_truth_fast_fading ? "true" : "false");
  t.put("system.power_grid_points", std::to_string(s.power_grid_points));

  t.put("phase_noise.model", s.pn_model);
  t.put("phase_noise.sigma2_rad2_per_s", join(s.sigma2_rad2_per_s));
  t.put("phase_noise.eta_per_s", fmt_double(s.eta_per_s));
  t.put("phase_noise.delta_source", s.delta_source);

  t.put("arrays.rx_horizontal", std::to_string(s.rx_horizontal));
  t.put("arrays.rx_vertical", std::to_string(s.rx_vertical));
  t.put("arrays.tx_horizontal", std::to_string(s.tx_horizontal));
  t.put("arrays.tx_vertical", std::to_string(s.tx_vertical));
  t.put("arrays.spacing_wavelengths", fmt_double(s.spacing_wavelengths));
  t.put("arrays.carrier_frequency_ghz", fmt_double(s.carrier_frequency_ghz));
  t.put("arrays.cyclic_prefix_ns", fmt_double(s.cyclic_prefix_ns));

  t.put("channel.source", s.channel_source);
  t.put("channel.bar_beta", fmt_double(s.bar_beta));
  t.put("channel.cluster_counts", join(s.cluster_counts));
  t.put("channel.subpaths_per_cluster", std::to_string(s.subpaths_per_cluster));
  t.put("channel.delay_spread_ns", fmt_double(s.delay_spread_ns));
  t.put("channel.angle_spread_rad", fmt_double(s.angle_spread_rad));
  t.put("channel.realizations", std::to_string(s.realizations));

  for (std::size_t i = 0; i < s.mpcs.size(); ++i) {
    const auto& m = s.mpcs[i];
    pt::ptree sec;
    sec.put("amplitude_re", fmt_double(m.amplitude_re));
    sec.put("amplitude_im", fmt_double(m.amplitude_im));
    sec.put("delay_ns", fmt_double(m.delay_ns));
    sec.put("aoa_azimuth_rad", fmt_double(m.aoa_azimuth_rad));
    sec.put("aoa_elevation_rad", fmt_double(m.aoa_elevation_rad));
    sec.put("aod_azimuth_rad", fmt_double(m.aod_azimuth_rad));
    sec.put("aod_elevation_rad", fmt_double(m.aod_elevation_rad));
    // INI has one level of sections, so each record becomes [mpc.N].
    t.add_child(pt::ptree::path_type("mpc." + std::to_string(i), '/'), sec);
  }
  return t;
}

inline std::string serialize(const ExperimentSpec& s) {
  std::ostringstream os;
  pt::write_ini(os, spec_to_ptree(s));
  return os.str();
}

inline pt::ptree read_ini_text(const std::string& text) {
  std::istringstream is(text);
  pt::ptree raw;
  try {
    pt::read_ini(is, raw);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  // Section names like "mpc.0" contain the path separator; nest them so that
  // "mpc.0.delay_ns" style lookups work.
  pt::ptree t;
  for (const auto& [sec, body] : raw) t.put_child(pt::ptree::path_type(sec, '.'), body);
  return t;
}

inline ExperimentSpec parse(const std::string& text, ExperimentSpec defaults = {}) {
  return spec_from_ptree(read_ini_text(text), std::move(defaults));
}

inline ExperimentSpec load(const std::string& path, ExperimentSpec defaults = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), std::move(defaults));
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// --- conversions into model types ---

inline spectrum::SubcarrierGrid grid_of(const ExperimentSpec& s) {
  return {s.k1, s.k2, s.symbol_duration_us * 1e-6};
}

inline phase_noise::PhaseNoiseModel pn_model_of(const ExperimentSpec& s, double sigma2) {
  if (s.pn_model == "none" || sigma2 == 0.0) return {phase_noise::Kind::None, 0.0, s.eta_per_s};
  if (s.pn_model == "ou") return phase_noise::PhaseNoiseModel::ou(sigma2, s.eta_per_s);
  return phase_noise::PhaseNoiseModel::wiener(sigma2);
}

inline phase_noise::DeltaProfile delta_of(const ExperimentSpec& s, const phase_noise::PhaseNoiseModel& m,
                                          const spectrum::SubcarrierGrid& grid) {
  if (s.delta_source == "exact" && m.kind == phase_noise::Kind::Wiener && !m.silent())
    return phase_noise::delta_wiener_exact_profile(m, grid);
  return phase_noise::delta_profile(m, grid);
}

inline channel::ArrayGeometry array_of(int mh, int mv, const ExperimentSpec& s) {
  const double lambda = channel::kSpeedOfLight / (s.carrier_frequency_ghz * 1e9);
  return {mh, mv, s.spacing_wavelengths * lambda, s.spacing_wavelengths * lambda, lambda};
}

inline channel::ArrayGeometry rx_array_of(const ExperimentSpec& s) {
  return array_of(s.rx_horizontal, s.rx_vertical, s);
}
inline channel::ArrayGeometry tx_array_of(const ExperimentSpec& s) {
  return array_of(s.tx_horizontal, s.tx_vertical, s);
}

inline channel::ClusteredChannelParams clustered_params_of(const ExperimentSpec& s, int clusters) {
  channel::ClusteredChannelParams p;
  p.clusters = clusters;
  p.subpaths_per_cluster = s.subpaths_per_cluster;
  p.delay_spread = s.delay_spread_ns * 1e-9;
  p.angle_spread = s.angle_spread_rad;
  p.tx_array = tx_array_of(s);
  p.rx_array = rx_array_of(s);
  p.carrier_frequency = s.carrier_frequency_ghz * 1e9;
  p.cyclic_prefix = s.cyclic_prefix_ns * 1e-9;
  return p;
}

/// Sparse or explicit channel; clustered specs use the first cluster count.
inline channel::ChannelRealization channel_of(const ExperimentSpec& s) {
  const double fc = s.carrier_frequency_ghz * 1e9, tcp = s.cyclic_prefix_ns * 1e-9;
  if (s.channel_source == "sparse") return channel::sparse_three_path(tx_array_of(s), rx_array_of(s), fc, tcp, s.bar_beta);
  if (s.channel_source == "clustered")
    return channel::random_clustered_channel(s.seed, clustered_params_of(s, s.cluster_counts.front()));
  channel::ChannelRealization c;
  c.tx_array = tx_array_of(s);
  c.rx_array = rx_array_of(s);
  c.carrier_frequency = fc;
  c.cyclic_prefix = tcp;
  for (const auto& m : s.mpcs)
    c.mpcs.push_back({cd(m.amplitude_re, m.amplitude_im), m.delay_ns * 1e-9, m.aoa_azimuth_rad, m.aoa_elevation_rad,
                      m.aod_azimuth_rad, m.aod_elevation_rad});
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

/// Link configuration for one SNR point; E_r is left at zero for the caller to fill.
inline link::SystemConfig system_of(const ExperimentSpec& s, double snr_db, double sigma2, double bar_beta) {
  link::SystemConfig c;
  c.grid = grid_of(s);
  c.g = s.guard;
  c.g_hat = s.filter_half_width;
  c.e_s = s.symbol_energy_j;
  c.e_r = s.reference_energy_j.value_or(0.0);
  c.n0 = link::n0_from_snr_db(snr_db, bar_beta, s.symbol_energy_j, c.grid.size());
  c.pn = pn_model_of(s, sigma2);
  c.freq_offset = s.freq_offsets_mhz.front() * 1e6;
  c.filter_mode = s.filter_mode == "ideal_rect" ? link::FilterMode::IdealRect : link::FilterMode::TruncatedSinc;
  return c;
}

}  // namespace cace::experiments
