// SPDX-License-Identifier: Apache-2.0
// Campaign runner: cace_sim <campaign> [--config PATH] [--seed N] [--trials N] [--out PATH] [--small] [--full-scale]

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cace/experiments.hpp"

namespace ex = cace::experiments;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::optional<unsigned> workers;
  std::string out;
  bool small = false;
  bool full_scale = false;
};

ex::ExperimentSpec build_spec(ex::Campaign c, const Options& o) {
  ex::ExperimentSpec s = ex::default_spec(c);
  if (o.small) ex::apply_small_profile(s);
  if (!o.config.empty()) {
    s = ex::load(o.config, s);
    if (s.campaign != c)
      throw cace::ConfigError("config campaign '" + std::string(ex::to_string(s.campaign)) + "' does not match subcommand '" +
                              ex::to_string(c) + "'");
  }
  if (o.full_scale) ex::apply_full_scale(s);
  if (o.seed) s.seed = *o.seed;
  if (o.trials) s.trials = *o.trials;
  if (o.workers) s.workers = *o.workers;
  if (!o.out.empty()) s.output = o.out;
  ex::validate(s);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CACE massive-MIMO OFDM link simulator and analysis campaigns"};
  app.require_subcommand(1);
  Options o;
  std::optional<ex::Campaign> chosen;
  for (auto c : {ex::Campaign::PnValidate, ex::Campaign::Ser, ex::Campaign::GHatSweep, ex::Campaign::PowerAlloc,
                 ex::Campaign::Compare, ex::Campaign::LSweep}) {
    auto* sub = app.add_subcommand(ex::to_string(c), std::string("run the ") + ex::to_string(c) + " campaign");
    sub->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--trials", o.trials, "Monte Carlo trials per point")->check(CLI::PositiveNumber);
    sub->add_option("--workers", o.workers, "worker threads (0 = all cores)");
    sub->add_option("--out", o.out, "output CSV path; metadata goes to PATH.json");
    sub->add_flag("--small", o.small, "4x2 RX / 4x4 TX arrays and K = 256");
    sub->add_flag("--full-scale", o.full_scale, "trial counts for high-resolution curves");
    sub->callback([&chosen, c] { chosen = c; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const ex::ExperimentSpec spec = build_spec(*chosen, o);
    if (spec.delta_source == "closed_form")
      for (double s2 : spec.sigma2_rad2_per_s)
        if (auto w = cace::phase_noise::closed_form_warning(ex::pn_model_of(spec, s2), ex::grid_of(spec)))
          std::cerr << "warning: " << *w << "\n";
    const ex::CampaignResult res = ex::run(spec);
    ex::write_outputs(spec.output, spec, res);
    std::cout << ex::to_string(spec.campaign) << ": " << res.rows.size() << " rows -> " << spec.output << "\n";
    for (const auto& [k, v] : res.summary) std::cout << "  " << k << " = " << ex::detail::fmt_double(v) << "\n";
    return 0;
  } catch (const cace::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cace::ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cace::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}
