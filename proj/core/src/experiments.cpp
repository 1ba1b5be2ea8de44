#include "cavfeed/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cavfeed/csv.hpp"
#include "cavfeed/ensemble.hpp"
#include "cavfeed/estimators.hpp"
#include "cavfeed/fock.hpp"
#include "cavfeed/kraus.hpp"
#include "cavfeed/scaling.hpp"

namespace cavfeed {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = ExperimentSpec::kPi;

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[24];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string mode_name(SteppingMode m) {
  return m == SteppingMode::fixed_step ? "fixed" : "event";
}

std::string signal_name(SignalKind s) {
  return s == SignalKind::intensity ? "intensity" : "g2";
}

std::string uncertainty_name(UncertaintyMode m) {
  return m == UncertaintyMode::single_shot ? "single_shot" : "bootstrap";
}

std::string stencil_name(StencilKind s) {
  return s == StencilKind::centered ? "centered" : "backward";
}

std::string join_numbers(const std::vector<double>& values, double scale) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ',';
    out += format_number(v * scale);
  }
  return out;
}

using MetaLines = std::vector<std::pair<std::string, std::string>>;

void physics_lines(MetaLines& m, const ExperimentSpec& spec) {
  const CavityParams& p = spec.params;
  m.emplace_back("phi_over_pi", format_number(p.phi / kPi));
  m.emplace_back("alpha_sq", format_number(spec.alpha_sq));
  m.emplace_back("eta", format_number(p.eta));
  m.emplace_back("kappa", format_number(p.kappa));
  m.emplace_back("omega", format_number(p.omega));
  m.emplace_back("beta", format_complex(p.beta.real(), p.beta.imag()));
  m.emplace_back("seed", std::to_string(spec.config.master_seed));
  m.emplace_back("trajectories", std::to_string(spec.config.n_traj));
  m.emplace_back("t_max", format_number(spec.config.t_max));
  m.emplace_back("dt", format_number(spec.config.dt));
  m.emplace_back("mode", mode_name(spec.config.mode));
  m.emplace_back("sample_stride", std::to_string(spec.config.sample_stride));
  m.emplace_back("max_feedback_events",
                 std::to_string(spec.config.max_feedback_events));
}

void scan_lines(MetaLines& m, const ExperimentSpec& spec) {
  m.emplace_back("dphi_over_pi", format_number(spec.dphi / kPi));
  m.emplace_back("signal", signal_name(resolved_signal(spec)));
  m.emplace_back("uncertainty", uncertainty_name(resolved_uncertainty(spec)));
  m.emplace_back("stencil", stencil_name(resolved_stencil(spec)));
  m.emplace_back("bootstrap_replicas",
                 std::to_string(spec.bootstrap_replicas));
}

/// Leading comment block: toolkit version, experiment identity, then the
/// volatile lines (wall time, timestamp). Only comments — consumers that
/// compare or parse table bodies skip every '#' line.
void write_metadata(CsvFile& csv, const ExperimentSpec& spec,
                    const MetaLines& lines, double wall_seconds) {
  csv.comment("cavfeed " + std::string(kToolkitVersion));
  csv.comment("kind = " + std::string(kind_name(spec.kind)));
  for (const auto& [key, value] : lines) csv.comment(key + " = " + value);
  csv.comment("wall_time_s = " + format_number(wall_seconds));
  csv.comment("created = " + utc_timestamp());
}

class WallTimer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_ = Clock::now();
};

/// Truncates the run to the latest snapshot time (at least one count bin);
/// per-step randomness does not depend on t_max, so the statistics at the
/// surviving edges are unchanged.
SimConfig truncated_to(const ExperimentSpec& spec, double t_last) {
  const TimeGrid g = make_grid(spec.config);
  SimConfig run_cfg = spec.config;
  run_cfg.t_max = std::max(t_last, g.sample_dt);
  return run_cfg;
}

std::size_t sample_edge(const TimeGrid& grid, double t) {
  return static_cast<std::size_t>(std::llround(t / grid.sample_dt));
}

void run_steady_state(const ExperimentSpec& spec, std::ostream& log) {
  const Complex a = steady_state_alpha(spec.params);
  // Display-only cleanup: drop the sin(pi)-sized rounding dust so exact
  // axis-aligned cases print exactly.
  const double scale = std::max(1.0, std::abs(a));
  const auto snap = [scale](double x) {
    return std::abs(x) < 1e-12 * scale ? 0.0 : x;
  };
  log << "alpha_ss = " << format_complex(snap(a.real()), snap(a.imag()))
      << "\n";
  log << "mean_photon = " << format_number(snap(std::norm(a))) << "\n";
}

void run_phase_diagram(const ExperimentSpec& spec, std::ostream& log) {
  WallTimer timer;
  const double t_last =
      *std::max_element(spec.times.begin(), spec.times.end());
  const SimConfig run_cfg = truncated_to(spec, t_last);
  const TimeGrid grid = make_grid(run_cfg);

  std::vector<PhasePoint> rows;
  rows.reserve(spec.sweep.size() * spec.times.size());
  for (const double phi : spec.sweep) {
    CavityParams p = spec.params;
    p.phi = phi;
    p = validated(p);
    const EnsembleAccumulator acc =
        run_ensemble(p, run_cfg,
                     spec.forced_feedback ? EnsemblePrep::conditional
                                          : EnsemblePrep::measurement,
                     spec.workers);
    for (const double t : spec.times) {
      const std::size_t e = sample_edge(grid, t);
      PhasePoint q;
      q.phi = p.phi;
      q.t = t;
      q.mean_re = acc.mean_re(e);
      q.mean_im = acc.mean_im(e);
      q.std_re = acc.std_re(e);
      q.std_im = acc.std_im(e);
      rows.push_back(q);
    }
  }

  MetaLines meta;
  physics_lines(meta, spec);
  meta.emplace_back("sweep_over_pi", join_numbers(spec.sweep, 1.0 / kPi));
  meta.emplace_back("times", join_numbers(spec.times, 1.0));
  meta.emplace_back("forced", spec.forced_feedback ? "true" : "false");

  CsvFile csv(spec.output_path);
  write_metadata(csv, spec, meta, timer.seconds());
  csv.line("phi,t,mean_re_alpha,mean_im_alpha,std_re,std_im");
  for (const PhasePoint& q : rows)
    csv.row({format_number(q.phi), format_number(q.t),
             format_number(q.mean_re), format_number(q.mean_im),
             format_number(q.std_re), format_number(q.std_im)});
  csv.commit();
  log << "wrote " << spec.output_path << " (" << rows.size() << " rows)\n";
}

void run_intensity(const ExperimentSpec& spec, std::ostream& log) {
  WallTimer timer;
  const EnsembleAccumulator acc = run_ensemble(
      spec.params, spec.config, EnsemblePrep::measurement, spec.workers);
  const std::vector<IntensityPoint> curve = intensity_curve(acc, spec.params);

  MetaLines meta;
  physics_lines(meta, spec);

  CsvFile csv(spec.output_path);
  write_metadata(csv, spec, meta, timer.seconds());
  csv.line("T,I_detected,I_emitted,I_analytic,stderr");
  for (const IntensityPoint& q : curve)
    csv.row({format_number(q.t), format_number(q.detected),
             format_number(q.emitted), format_number(q.analytic),
             format_number(q.stderr_emitted)});
  csv.commit();
  log << "wrote " << spec.output_path << " (" << curve.size() << " rows)\n";
}

void run_g2(const ExperimentSpec& spec, std::ostream& log) {
  WallTimer timer;
  const EnsembleAccumulator unconditional = run_ensemble(
      spec.params, spec.config, EnsemblePrep::measurement, spec.workers);
  const EnsembleAccumulator conditional = run_ensemble(
      spec.params, spec.config, EnsemblePrep::conditional, spec.workers);
  const std::vector<G2Point> curve = g2_curve(conditional, unconditional);

  MetaLines meta;
  physics_lines(meta, spec);

  CsvFile csv(spec.output_path);
  write_metadata(csv, spec, meta, timer.seconds());
  csv.line("T,g2,stderr,n_conditional,n_unconditional");
  for (const G2Point& q : curve)
    csv.row({format_number(q.t), format_number(q.g2),
             format_number(q.stderr_val), std::to_string(q.n_conditional),
             std::to_string(q.n_unconditional)});
  csv.commit();
  log << "wrote " << spec.output_path << " (" << curve.size() << " rows)\n";
}

AccuracyScan scan_from(const ExperimentSpec& spec) {
  AccuracyScan scan;
  scan.signal = resolved_signal(spec);
  scan.dphi = spec.dphi;
  scan.uncertainty = resolved_uncertainty(spec);
  scan.stencil = resolved_stencil(spec);
  scan.bootstrap_replicas = spec.bootstrap_replicas;
  return scan;
}

void write_accuracy_csv(const ExperimentSpec& spec, const MetaLines& meta,
                        const std::vector<AccuracyPoint>& rows,
                        double wall_seconds, std::ostream& log) {
  const std::string mode = uncertainty_name(resolved_uncertainty(spec));
  CsvFile csv(spec.output_path);
  write_metadata(csv, spec, meta, wall_seconds);
  csv.line("resource,signal,signal_std,sensitivity,delta_phi,uncertainty_mode");
  for (const AccuracyPoint& q : rows)
    csv.row({format_number(q.resource), format_number(q.signal),
             format_number(q.signal_std), format_number(q.sensitivity),
             format_number(q.delta_phi), mode});
  csv.commit();
  log << "wrote " << spec.output_path << " (" << rows.size() << " rows)\n";
}

void run_accuracy_time(const ExperimentSpec& spec, std::ostream& log) {
  WallTimer timer;
  const std::vector<AccuracyPoint> rows =
      accuracy_vs_time(spec.params, spec.config, scan_from(spec),
                       spec.workers);
  std::size_t flagged = 0;
  for (const AccuracyPoint& q : rows) flagged += q.below_noise_floor;
  MetaLines meta;
  physics_lines(meta, spec);
  scan_lines(meta, spec);
  write_accuracy_csv(spec, meta, rows, timer.seconds(), log);
  if (flagged)
    log << flagged << " of " << rows.size()
        << " bins fell below the noise floor and carry no delta_phi\n";
}

void run_accuracy_photon(const ExperimentSpec& spec, std::ostream& log) {
  WallTimer timer;
  const std::vector<AccuracyPoint> rows = accuracy_vs_photon_number(
      spec.sweep, spec.params.phi, spec.params.eta, spec.params.kappa,
      spec.config, scan_from(spec), spec.window_min, spec.window_max,
      spec.workers);
  MetaLines meta;
  physics_lines(meta, spec);
  scan_lines(meta, spec);
  meta.emplace_back("sweep", join_numbers(spec.sweep, 1.0));
  meta.emplace_back("window_min", format_number(spec.window_min));
  meta.emplace_back("window_max", format_number(spec.window_max));
  write_accuracy_csv(spec, meta, rows, timer.seconds(), log);
}

double cell_value(const std::string& cell, const std::string& path) {
  if (cell.empty()) return kNaN;
  double v{};
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
    throw std::runtime_error(path + ": malformed numeric cell '" + cell +
                             "'");
  return v;
}

void run_scaling_fit(const ExperimentSpec& spec, std::ostream& log) {
  WallTimer timer;
  const CsvTable table = read_csv(spec.input_path);
  const std::size_t ri = table.column_index("resource");
  const std::size_t di = table.column_index("delta_phi");
  std::vector<double> x, y;
  x.reserve(table.rows.size());
  y.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.size() <= std::max(ri, di))
      throw std::runtime_error(spec.input_path + ": short row");
    x.push_back(cell_value(row[ri], spec.input_path));
    y.push_back(cell_value(row[di], spec.input_path));
  }
  const PowerLawFit fit = power_law_fit(x, y, spec.fit_min, spec.fit_max);

  MetaLines meta;
  meta.emplace_back("input", spec.input_path);
  meta.emplace_back("fit_min", format_number(spec.fit_min));
  meta.emplace_back("fit_max", format_number(spec.fit_max));

  CsvFile csv(spec.output_path);
  write_metadata(csv, spec, meta, timer.seconds());
  csv.line("exponent,log_prefactor,r_squared,n_points,range_min,range_max");
  csv.row({format_number(fit.exponent), format_number(fit.log_prefactor),
           format_number(fit.r_squared), std::to_string(fit.n_points),
           format_number(fit.range_min), format_number(fit.range_max)});
  csv.commit();

  log << "fit: delta_phi ~ resource^" << format_number(fit.exponent)
      << " (r_squared = " << format_number(fit.r_squared) << ", n = "
      << fit.n_points << ")\n";
  if (fit.r_squared < 0.9)
    log << "warning: r_squared below 0.9; the data may not follow a single "
           "power law over this range\n";
  log << "wrote " << spec.output_path << "\n";
}

/// Oracle expectation at time t from the recorded step grid, linearly
/// interpolated between neighbouring steps.
double oracle_value_at(const OracleRun& run, double t) {
  const auto& ts = run.times;
  const auto it = std::lower_bound(ts.begin(), ts.end(), t);
  if (it == ts.end()) return run.mean_photon.back();
  const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  if (hi == 0 || std::abs(*it - t) < 1e-12) return run.mean_photon[hi];
  const double t0 = ts[hi - 1], t1 = ts[hi];
  const double f = (t - t0) / (t1 - t0);
  return (1.0 - f) * run.mean_photon[hi - 1] + f * run.mean_photon[hi];
}

void run_oracle_validate(const ExperimentSpec& spec, std::ostream& log) {
  WallTimer timer;
  const double t_last =
      *std::max_element(spec.times.begin(), spec.times.end());
  const SimConfig run_cfg = truncated_to(spec, t_last);
  const TimeGrid grid = make_grid(run_cfg);

  // Cross-validation runs with the drive still on: the density-matrix
  // reference integrates the driven observed-evolution generator, so the
  // trajectory side must keep the same dynamics.
  const EnsembleAccumulator acc = run_ensemble(
      spec.params, run_cfg, EnsemblePrep::driven, spec.workers);
  const DenseMatrix rho0 =
      coherent_state(steady_state_alpha(spec.params), spec.fock_dim);
  const OracleRun oracle =
      integrate_observed(rho0, spec.params, run_cfg.t_max, spec.oracle_dt,
                         true, spec.leak_threshold);

  struct Row {
    double t, traj, se, orac, z;
    std::string status;
  };
  std::vector<Row> rows;
  double max_abs_z = 0.0;
  std::size_t mismatches = 0, breaches = 0;
  for (const double t : spec.times) {
    const std::size_t e = sample_edge(grid, t);
    Row r;
    r.t = t;
    r.traj = acc.mean_abs_sq(e);
    r.se = std::sqrt(acc.var_abs_sq(e) /
                     static_cast<double>(acc.n_traj()));
    r.orac = oracle_value_at(oracle, t);
    if (r.se > 0.0) {
      r.z = (r.traj - r.orac) / r.se;
    } else {
      // Degenerate ensemble spread (e.g. t = 0): compare means directly.
      r.z = std::abs(r.traj - r.orac) <= 1e-9 * std::max(1.0, r.traj)
                ? 0.0
                : kNaN;
    }
    if (!oracle.valid_at(t)) {
      r.status = "breach";
      ++breaches;
    } else if (std::isfinite(r.z) && std::abs(r.z) <= 3.0) {
      r.status = "ok";
      max_abs_z = std::max(max_abs_z, std::abs(r.z));
    } else {
      r.status = "mismatch";
      ++mismatches;
      if (std::isfinite(r.z)) max_abs_z = std::max(max_abs_z, std::abs(r.z));
    }
    rows.push_back(std::move(r));
  }

  MetaLines meta;
  physics_lines(meta, spec);
  meta.emplace_back("times", join_numbers(spec.times, 1.0));
  meta.emplace_back("dim", std::to_string(spec.fock_dim));
  meta.emplace_back("oracle_dt", format_number(spec.oracle_dt));
  meta.emplace_back("leak_threshold", format_number(spec.leak_threshold));

  CsvFile csv(spec.output_path);
  write_metadata(csv, spec, meta, timer.seconds());
  csv.line("t,mean_photon_traj,stderr_traj,mean_photon_oracle,z,status");
  for (const Row& r : rows)
    csv.row({format_number(r.t), format_number(r.traj), format_number(r.se),
             format_number(r.orac), format_number(r.z), r.status});
  csv.commit();

  if (mismatches)
    log << "oracle agreement: MISMATCH at " << mismatches << " of "
        << rows.size() << " times (max |z| = " << format_number(max_abs_z)
        << ")\n";
  else
    log << "oracle agreement: OK (max |z| = " << format_number(max_abs_z)
        << " over " << rows.size() - breaches << " comparable times)\n";
  if (breaches)
    log << "note: truncation leaked past " << format_number(
               oracle.breach_time.value_or(kNaN))
        << "; " << breaches << " times reported as breach, not compared\n";
  log << "wrote " << spec.output_path << "\n";
}

std::string outcome_string(std::uint32_t index, int n) {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int pos = 0; pos < n; ++pos)
    if ((index >> (n - 1 - pos)) & 1u) s[static_cast<std::size_t>(pos)] = '1';
  return s;
}

std::string distribution_string(const std::vector<double>& probability,
                                int n) {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < probability.size(); ++i) {
    if (probability[i] <= 1e-12) continue;
    if (!first) out += ", ";
    first = false;
    out += outcome_string(static_cast<std::uint32_t>(i), n);
    out += ':';
    // Display precision only: 12 significant digits absorb the rounding
    // dust of amplitudes like 1/sqrt(2) without hiding real structure.
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", probability[i]);
    out += buf;
  }
  out += '}';
  return out;
}

void run_kraus_demo(const ExperimentSpec& spec, std::ostream& log) {
  // The worked example: measure in the computational basis, and prepare
  // the opposite state afterwards (a "swap" update), starting from the
  // balanced superposition.
  const Qubit basis0(1.0, 0.0), basis1(0.0, 1.0);
  const Qubit post0(0.0, 1.0), post1(1.0, 0.0);
  const KrausPair pair = make_kraus_pair(basis0, basis1, post0, post1);
  const Qubit psi = Qubit(1.0, 1.0) / std::sqrt(2.0);
  const int n = spec.kraus_n;

  const MeasurementTable table =
      sequential_measurement_distribution(pair, psi, n);
  const Eigen::VectorXcd amps = entangled_equivalent_state(pair, psi, n);
  std::vector<double> entangled(static_cast<std::size_t>(amps.size()));
  double max_diff = 0.0;
  for (std::size_t i = 0; i < entangled.size(); ++i) {
    entangled[i] = std::norm(amps[static_cast<Eigen::Index>(i)]);
    max_diff = std::max(max_diff,
                        std::abs(entangled[i] - table.probability[i]));
  }

  log << "sequential " << distribution_string(table.probability, n) << "\n";
  log << "entangled  " << distribution_string(entangled, n) << "\n";
  log << "max_probability_difference = " << format_number(max_diff) << "\n";
  log << "completeness_deviation = " << format_number(table.completeness_dev)
      << (table.valid_instrument ? " (valid instrument)"
                                 : " (NOT a valid instrument)")
      << "\n";
}

}  // namespace

void run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  switch (spec.kind) {
    case ExperimentKind::steady_state:
      return run_steady_state(spec, log);
    case ExperimentKind::phase_diagram:
      return run_phase_diagram(spec, log);
    case ExperimentKind::intensity:
      return run_intensity(spec, log);
    case ExperimentKind::g2:
      return run_g2(spec, log);
    case ExperimentKind::accuracy_time:
      return run_accuracy_time(spec, log);
    case ExperimentKind::accuracy_photon:
      return run_accuracy_photon(spec, log);
    case ExperimentKind::scaling_fit:
      return run_scaling_fit(spec, log);
    case ExperimentKind::oracle_validate:
      return run_oracle_validate(spec, log);
    case ExperimentKind::kraus_demo:
      return run_kraus_demo(spec, log);
  }
  throw std::logic_error("unhandled experiment kind");
}

}  // namespace cavfeed
