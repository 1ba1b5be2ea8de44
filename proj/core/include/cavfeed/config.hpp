#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cavfeed/estimators.hpp"
#include "cavfeed/params.hpp"
#include "cavfeed/trajectory.hpp"

namespace cavfeed {

/// Configuration or usage problem: malformed file, unknown/duplicate key,
/// out-of-range value, inconsistent experiment options. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  steady_state,
  phase_diagram,
  intensity,
  g2,
  accuracy_time,
  accuracy_photon,
  scaling_fit,
  oracle_validate,
  kraus_demo,
};

std::string_view kind_name(ExperimentKind kind);
std::optional<ExperimentKind> kind_from_name(std::string_view name);

/// Three-valued option choices: `automatic` defers to the kind- and
/// parameter-dependent defaults resolved in validate_spec.
enum class SignalChoice { automatic, intensity, g2 };
enum class UncertaintyChoice { automatic, single_shot, bootstrap };
enum class StencilChoice { automatic, centered, backward };

/// A fully described experiment: physics parameters, run configuration,
/// and per-kind options. Produced by parse_config + CLI overrides.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::steady_state;

  CavityParams params;           // omega/beta derived from alpha_sq defaults
  SimConfig config;
  double alpha_sq = 4.0;         // target |alpha_ss|^2; sets omega = kappa*sqrt(alpha_sq)

  std::vector<double> sweep;     // phase_diagram: phi grid (radians);
                                 // accuracy_photon: |alpha_ss|^2 values
  std::vector<double> times;     // phase_diagram / oracle_validate: snapshot times
  bool forced_feedback = false;  // phase_diagram: condition on a detection at t=0

  double dphi = 0.002 * kPi;     // finite-difference offset (radians)
  SignalChoice signal = SignalChoice::automatic;
  UncertaintyChoice uncertainty = UncertaintyChoice::automatic;
  StencilChoice stencil = StencilChoice::automatic;
  int bootstrap_replicas = 200;

  double fit_min = 0.2;          // scaling_fit resource range (units of 1/kappa
  double fit_max = kInf;         // for time scans)
  double window_min = 1.0;       // accuracy_photon time-window average bounds
  double window_max = 2.0;

  std::string input_path;        // scaling_fit: accuracy CSV to fit

  int fock_dim = 0;              // oracle_validate Fock dimension; 0 = auto
  double oracle_dt = 1e-3;
  double leak_threshold = 1e-6;

  int kraus_n = 2;               // kraus_demo: measurements in the sequence

  int workers = 0;               // 0 = resolve from CAVFEED_WORKERS / hardware
  std::string output_path;       // empty = "<kind>.csv" (set by validate_spec)

  static constexpr double kPi = 3.14159265358979323846;
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  /// True once beta was given explicitly (config key or CLI flag);
  /// otherwise validate_spec derives beta = sqrt(alpha_sq).
  bool beta_explicit = false;
};

/// Parses the line-oriented `key = value` format ('#' comments, optional
/// organizational `[section]` headers). Strict: unknown keys, duplicate
/// keys, malformed lines, and out-of-range values are errors with line
/// numbers. `preset = paper-default` applies |alpha_ss|^2 = 4, eta = 0.5,
/// 10^6 trajectories before any explicit keys.
ExperimentSpec parse_config(const std::string& text);

/// Reads and parses a config file; diagnostics are prefixed with the path.
ExperimentSpec parse_config_file(const std::string& path);

/// Kind-aware consistency check and default resolution (output path,
/// automatic signal/uncertainty/stencil, oracle dimension). Called after
/// CLI overrides; throws ConfigError on any inconsistency.
void validate_spec(ExperimentSpec& spec);

/// Resolved option values after validate_spec (never `automatic`).
SignalKind resolved_signal(const ExperimentSpec& spec);
UncertaintyMode resolved_uncertainty(const ExperimentSpec& spec);
StencilKind resolved_stencil(const ExperimentSpec& spec);

}  // namespace cavfeed
