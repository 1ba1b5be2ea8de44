// Command-line driver for the cavity-feedback trajectory toolkit.
//
// Usage:
//   cavfeed --config experiment.cfg [overrides]
//   cavfeed <kind> [overrides]
//
// Exactly one of --config or <kind> selects the experiment; flags override
// config keys. Exit codes: 0 success, 1 usage/config error, 2 runtime error.

#include <charconv>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cavfeed/config.hpp"
#include "cavfeed/experiments.hpp"

namespace {

std::optional<cavfeed::Complex> parse_complex_arg(const std::string& text) {
  const auto comma = text.find(',');
  const auto part = [&](std::size_t b, std::size_t e) -> std::optional<double> {
    double v{};
    const char* first = text.data() + b;
    const char* last = text.data() + e;
    auto res = std::from_chars(first, last, v);
    if (first == last || res.ec != std::errc{} || res.ptr != last ||
        !std::isfinite(v))
      return std::nullopt;
    return v;
  };
  std::optional<double> re, im;
  if (comma == std::string::npos) {
    re = part(0, text.size());
    im = 0.0;
  } else {
    re = part(0, comma);
    im = part(comma + 1, text.size());
  }
  if (!re || !im) return std::nullopt;
  return cavfeed::Complex(*re, *im);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Quantum-trajectory simulator and analysis toolkit for a driven "
      "optical cavity inside an instantaneous photon-detection feedback "
      "loop"};
  app.set_version_flag("--version",
                       "cavfeed " + std::string(cavfeed::kToolkitVersion));

  std::string kind_arg, config_path, beta_arg, mode_arg, out_path;
  std::uint64_t seed = 0;
  std::uint64_t trajectories = 0;
  double phi = 0.0, alpha_sq = 0.0, eta = 0.0, t_max = 0.0, dt = 0.0;
  int workers = 0;

  app.add_option("kind", kind_arg,
                 "Experiment kind (steady_state, phase_diagram, intensity, "
                 "g2, accuracy_time, accuracy_photon, scaling_fit, "
                 "oracle_validate, kraus_demo)");
  auto* opt_config =
      app.add_option("--config", config_path, "Experiment config file");
  auto* opt_seed = app.add_option("--seed", seed, "Master RNG seed");
  auto* opt_traj = app.add_option("--trajectories", trajectories,
                                  "Trajectories per ensemble")
                       ->check(CLI::PositiveNumber);
  auto* opt_phi =
      app.add_option("--phi", phi, "Cavity drive phase, in units of pi");
  auto* opt_asq = app.add_option("--alpha-sq", alpha_sq,
                                 "Stationary photon number |alpha_ss|^2")
                      ->check(CLI::NonNegativeNumber);
  auto* opt_eta = app.add_option("--eta", eta, "Detector efficiency")
                      ->check(CLI::Range(0.0, 1.0));
  auto* opt_beta = app.add_option(
      "--beta", beta_arg, "Feedback kick amplitude, RE or RE,IM");
  auto* opt_tmax = app.add_option("--t-max", t_max, "Run length (1/kappa)")
                       ->check(CLI::PositiveNumber);
  auto* opt_dt = app.add_option("--dt", dt, "Integration step (1/kappa)")
                     ->check(CLI::PositiveNumber);
  auto* opt_mode = app.add_option("--mode", mode_arg, "Stepping mode")
                       ->check(CLI::IsMember({"fixed", "event"}));
  auto* opt_workers =
      app.add_option("--workers", workers, "Worker threads (0 = automatic)")
          ->check(CLI::NonNegativeNumber);
  auto* opt_out = app.add_option("--out", out_path, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  cavfeed::ExperimentSpec spec;
  try {
    if (!config_path.empty() && !kind_arg.empty()) {
      throw cavfeed::ConfigError(
          "give either --config or a kind argument, not both");
    } else if (!config_path.empty()) {
      spec = cavfeed::parse_config_file(config_path);
    } else if (!kind_arg.empty()) {
      if (!cavfeed::kind_from_name(kind_arg))
        throw cavfeed::ConfigError("unknown kind '" + kind_arg + "'");
      spec = cavfeed::parse_config("kind = " + kind_arg + "\n");
    } else {
      throw cavfeed::ConfigError(
          "nothing to run: give --config FILE or a kind argument "
          "(see --help)");
    }

    if (*opt_seed) spec.config.master_seed = seed;
    if (*opt_traj) spec.config.n_traj = trajectories;
    if (*opt_phi) spec.params.phi = phi * cavfeed::ExperimentSpec::kPi;
    if (*opt_asq) spec.alpha_sq = alpha_sq;
    if (*opt_eta) spec.params.eta = eta;
    if (*opt_beta) {
      auto b = parse_complex_arg(beta_arg);
      if (!b)
        throw cavfeed::ConfigError("malformed --beta value '" + beta_arg +
                                   "' (expected RE or RE,IM)");
      spec.params.beta = *b;
      spec.beta_explicit = true;
    }
    if (*opt_tmax) spec.config.t_max = t_max;
    if (*opt_dt) spec.config.dt = dt;
    if (*opt_mode)
      spec.config.mode = mode_arg == "fixed"
                             ? cavfeed::SteppingMode::fixed_step
                             : cavfeed::SteppingMode::event_driven;
    if (*opt_workers) spec.workers = workers;
    if (*opt_out) spec.output_path = out_path;
    (void)opt_config;

    cavfeed::validate_spec(spec);
  } catch (const cavfeed::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    cavfeed::run_experiment(spec, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
