#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "cavfeed/accumulator.hpp"
#include "cavfeed/params.hpp"
#include "cavfeed/trajectory.hpp"

namespace cavfeed {

/// Photon flux estimates for one count bin starting at t.
struct IntensityPoint {
  double t = 0.0;
  double detected = 0.0;   ///< detected counts / (n_traj * bin_width)
  double emitted = 0.0;    ///< all emissions / (n_traj * bin_width)
  double analytic = 0.0;   ///< kappa * <|alpha|^2> from the sampled amplitudes
  double stderr_emitted = 0.0;  ///< standard error of the emitted estimate
};

/// Rejects conditional ensembles: the unconditional flux is the observable
/// here, the conditioned one only ever appears inside the g2 ratio.
std::vector<IntensityPoint> intensity_curve(const EnsembleAccumulator& acc,
                                            const CavityParams& p);

/// Second-order correlation estimate at delay t after a detection at t = 0:
/// the detected rate in the conditioned ensemble over the detected rate in
/// the stationary one. Undefined while the stationary ensemble has no
/// detections in the bin.
struct G2Point {
  double t = 0.0;
  double g2 = 0.0;
  double stderr_val = 0.0;
  std::uint64_t n_conditional = 0;    ///< detected counts, conditioned run
  std::uint64_t n_unconditional = 0;  ///< detected counts, stationary run
  bool defined = false;
};

std::vector<G2Point> g2_curve(const EnsembleAccumulator& conditional,
                              const EnsembleAccumulator& unconditional);

/// Amplitude quadrature statistics at one sample edge.
struct MomentPoint {
  double t = 0.0;
  double mean_re = 0.0;
  double mean_im = 0.0;
  double std_re = 0.0;
  double std_im = 0.0;
};

std::vector<MomentPoint> moment_curve(const EnsembleAccumulator& acc);

/// One row of a phase-space portrait: quadrature statistics at a snapshot
/// time for an ensemble started at phase phi.
struct PhasePoint {
  double phi = 0.0;
  double t = 0.0;
  double mean_re = 0.0;
  double mean_im = 0.0;
  double std_re = 0.0;
  double std_im = 0.0;
};

/// Ensemble-mean amplitude per initial phase at time t (which must lie on
/// the sample grid). The kick amplitude in `base` applies to every phase.
/// forced_feedback_at_zero selects ensembles conditioned on a detection at
/// t = 0, the portrait of the post-kick dynamics.
std::vector<PhasePoint> phase_diagram_snapshot(
    const std::vector<double>& initial_phis, const CavityParams& base,
    const SimConfig& cfg, double t, bool forced_feedback_at_zero,
    int workers);

/// Which observable serves as the phase-estimation signal.
enum class SignalKind { intensity, g2 };

/// How the signal spread entering the error propagation is measured:
/// single_shot takes the per-trajectory standard deviation of the counts
/// (the spread of one experimental run), bootstrap resamples the ensemble
/// in trajectory blocks, which is the only stable choice for ratio signals.
enum class UncertaintyMode { single_shot, bootstrap };

/// Finite-difference stencil for the phase sensitivity.
enum class StencilKind { centered, backward };

UncertaintyMode default_uncertainty(SignalKind s);

/// Centered everywhere except at phi = pi with a real kick: there the two
/// mirror flanks are complex conjugates trajectory-for-trajectory under
/// shared randomness (every decision depends on |alpha|^2 only), so the
/// centered difference cancels identically and the scan steps one-sided.
StencilKind default_stencil(const CavityParams& p);

/// Settings of a phase-accuracy scan around p.phi.
struct AccuracyScan {
  SignalKind signal = SignalKind::intensity;
  double dphi = 0.002 * std::numbers::pi;
  UncertaintyMode uncertainty = UncertaintyMode::single_shot;
  StencilKind stencil = StencilKind::centered;
  int bootstrap_replicas = 200;
};

/// One row of an accuracy scan: the smallest phase shift resolvable from
/// the signal at this resource value (a time bin, or a photon number).
/// delta_phi = signal_std / sensitivity is NaN when the finite difference
/// drowns in Monte Carlo noise; below_noise_floor reports that flag.
struct AccuracyPoint {
  double resource = 0.0;
  double signal = 0.0;
  double signal_std = 0.0;
  double sensitivity = 0.0;
  double delta_phi = 0.0;
  bool below_noise_floor = false;
};

/// Phase accuracy as a function of measurement time. Runs two flank
/// ensembles (four with a g2 signal) that share per-trajectory randomness,
/// then propagates the signal spread through the finite-difference slope
/// bin by bin. The noise floor test always uses block-paired bootstrap
/// replicas of the flank difference.
std::vector<AccuracyPoint> accuracy_vs_time(const CavityParams& p,
                                            const SimConfig& cfg,
                                            const AccuracyScan& scan,
                                            int workers);

/// Collapses a time scan into one point by averaging over the bins whose
/// time lies in [window_min, window_max] and whose delta_phi is finite.
/// `resource` labels the collapsed point (the photon number in sweeps).
AccuracyPoint accuracy_window_average(const std::vector<AccuracyPoint>& scan,
                                      double resource, double window_min,
                                      double window_max);

/// Phase accuracy as a function of the stationary photon number: one
/// window-averaged point per alpha_sq value, all sharing phi, eta, kappa
/// and the run configuration. The kick amplitude follows each alpha_sq.
std::vector<AccuracyPoint> accuracy_vs_photon_number(
    const std::vector<double>& alpha_sq_values, double phi, double eta,
    double kappa, const SimConfig& cfg, const AccuracyScan& scan,
    double window_min, double window_max, int workers);

}  // namespace cavfeed
