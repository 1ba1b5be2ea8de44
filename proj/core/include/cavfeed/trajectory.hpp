#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "cavfeed/params.hpp"
#include "cavfeed/rng.hpp"

namespace cavfeed {

/// How a trajectory advances between emissions.
///
/// fixed_step tests for an emission once per time step dt with the exact
/// finite-step no-emission probability; event_driven inverts the closed-form
/// waiting-time distribution and jumps straight to the next emission. Both
/// produce the same statistics (the second route only exists when the drive
/// is off) and the overlap is covered by equivalence tests.
enum class SteppingMode { fixed_step, event_driven };

/// Numerical controls for a trajectory ensemble run.
struct SimConfig {
  double dt = 1e-3;
  double t_max = 2.0;
  std::uint64_t n_traj = 1'000'000;
  std::uint64_t master_seed = 12345;
  SteppingMode mode = SteppingMode::fixed_step;
  int sample_stride = 10;
  /// Detected-emission cap per trajectory. The feedback kick makes the
  /// photon flux grow without bound on a measure-one set of futures, so a
  /// cascade that runs away is frozen (amplitude held, no further events)
  /// once this many kicks have fired. The cap is far above anything a
  /// non-runaway trajectory reaches.
  std::uint64_t max_feedback_events = 65536;
};

/// Uniform output grid induced by (dt, sample_stride, t_max): amplitude
/// samples live on edges 0..n_edges at spacing sample_dt, counts live in the
/// n_edges bins between them.
struct TimeGrid {
  std::size_t n_steps = 0;
  int stride = 1;
  std::size_t n_edges = 0;
  double dt = 0.0;
  double sample_dt = 0.0;

  double edge_time(std::size_t e) const {
    return static_cast<double>(e) * sample_dt;
  }
};

/// Derives the output grid, throwing std::invalid_argument unless t_max is
/// a whole number of steps and of sample intervals.
TimeGrid make_grid(const SimConfig& cfg);

/// Full validation of a run request: grid consistency, dt <= 0.01 / kappa,
/// positive trajectory count, and the drive being off in event_driven mode.
void validate_run(const CavityParams& p, const SimConfig& cfg);

/// One emission, flagged with whether the detector fired and whether the
/// feedback displacement was applied (always together in this scheme).
struct EmissionEvent {
  double time = 0.0;
  bool detected = false;
  bool feedback_applied = false;
};

/// A single stochastic history: the amplitude on the sample grid plus every
/// emission, with the stream index that reproduces it bit for bit.
struct TrajectoryRecord {
  CavityParams params;
  Complex initial_alpha{0.0, 0.0};
  std::vector<EmissionEvent> events;
  std::vector<Complex> alpha_samples;
  std::uint64_t rng_index = 0;
};

/// Deterministic between-emission flow: exponential relaxation towards the
/// stationary amplitude, exact for any elapsed time.
Complex propagate_no_jump(Complex alpha, const CavityParams& p, double t);

/// Probability that a mode of amplitude alpha emits no photon within
/// delta_t. Exact for the pure-decay segment; the fixed stepper applies it
/// per step, which stays exact because the survival factors multiply.
double no_emission_probability(Complex alpha, double kappa, double delta_t);

/// State change at an emission: undetected emissions leave the coherent
/// amplitude untouched, detected ones trigger the displacement kick.
Complex apply_emission(Complex alpha, bool detected, Complex beta);

/// Inverts the waiting-time law for a freely decaying mode: given uniform u,
/// returns the emission delay, or nullopt when the trajectory never emits
/// again (u falls below the survival probability at infinite time, or the
/// amplitude is exactly zero).
std::optional<double> sample_waiting_time(Complex alpha0, double kappa,
                                          double u);

/// Initial amplitude of the ensemble conditioned on a detection at t = 0:
/// the stationary amplitude with one feedback kick already applied. No
/// event is recorded for that kick.
Complex conditional_initial_alpha(const CavityParams& p);

/// Runs one trajectory and streams it into `sink`, which must provide
///   void sample(std::size_t edge, Complex alpha);
///   void event(double t, std::size_t bin, bool detected, bool feedback);
/// Samples arrive for every edge 0..n_edges in order; events carry their
/// count-bin index so downstream code never re-derives bins from floats.
/// This is the only stepping implementation; records and ensemble tallies
/// are different sinks over the same code.
template <class Sink>
void run_steps(const CavityParams& p, const SimConfig& cfg, Complex alpha0,
               PhiloxStream& rng, Sink&& sink);

/// Convenience wrapper producing a full record. alpha0 defaults to the
/// stationary amplitude; conditional ensembles pass
/// conditional_initial_alpha and RngDomain::conditional.
TrajectoryRecord simulate_trajectory(
    const CavityParams& p, const SimConfig& cfg, std::uint64_t traj_index,
    RngDomain domain = RngDomain::trajectory,
    std::optional<Complex> alpha0 = std::nullopt);

// ---------------------------------------------------------------------------
// implementation of the stepping template

template <class Sink>
void run_steps(const CavityParams& p, const SimConfig& cfg, Complex alpha0,
               PhiloxStream& rng, Sink&& sink) {
  const TimeGrid g = make_grid(cfg);
  Complex a = alpha0;
  std::uint64_t kicks = 0;

  if (cfg.mode == SteppingMode::fixed_step) {
    const double decay = std::exp(-0.5 * p.kappa * cfg.dt);
    const double jump_coeff = -std::expm1(-p.kappa * cfg.dt);
    const Complex pull = steady_state_alpha(p) * (1.0 - decay);
    const bool driven = p.omega != 0.0;
    const std::size_t stride = static_cast<std::size_t>(g.stride);
    bool frozen = false;

    std::size_t s = 0;
    while (s < g.n_steps) {
      if (s % stride == 0) sink.sample(s / stride, a);
      if (frozen || (!driven && a.real() == 0.0 && a.imag() == 0.0)) {
        // nothing can change any more: either the feedback cap froze the
        // trajectory or an undriven mode sits in vacuum
        for (std::size_t e = s / stride + 1; e <= g.n_edges; ++e)
          sink.sample(e, a);
        return;
      }
      const auto [u_jump, u_det] = rng.uniform_pair();
      const double nbar = std::norm(a);
      if (u_jump > std::exp(-nbar * jump_coeff)) {
        const bool det = u_det < p.eta;
        sink.event(static_cast<double>(s) * cfg.dt, s / stride, det, det);
        if (det) {
          a += p.beta;
          if (++kicks >= cfg.max_feedback_events) frozen = true;
        }
      }
      if (!frozen) a = decay * a + pull;
      ++s;
    }
    sink.sample(g.n_edges, a);
    return;
  }

  // event_driven: only valid with the drive off (validated upstream), so
  // between emissions the amplitude just decays
  const double w = g.sample_dt;
  sink.sample(0, a);
  std::size_t edge = 1;
  double t_state = 0.0;

  auto flush_decaying_to = [&](double tcut) {
    while (edge <= g.n_edges && g.edge_time(edge) <= tcut + 1e-12) {
      const double factor =
          std::exp(-0.5 * p.kappa * (g.edge_time(edge) - t_state));
      sink.sample(edge, a * factor);
      ++edge;
    }
  };

  for (;;) {
    const auto [u_wait, u_det] = rng.uniform_pair();
    const std::optional<double> wait = sample_waiting_time(a, p.kappa, u_wait);
    if (!wait || t_state + *wait >= cfg.t_max) {
      flush_decaying_to(cfg.t_max);
      return;
    }
    const double t_emit = t_state + *wait;
    flush_decaying_to(t_emit);
    a *= std::exp(-0.5 * p.kappa * *wait);
    const bool det = u_det < p.eta;
    std::size_t bin = static_cast<std::size_t>(t_emit / w);
    if (bin >= g.n_edges) bin = g.n_edges - 1;
    sink.event(t_emit, bin, det, det);
    t_state = t_emit;
    if (det) {
      a += p.beta;
      if (++kicks >= cfg.max_feedback_events) {
        // frozen: hold the post-kick amplitude for the remaining samples
        while (edge <= g.n_edges) sink.sample(edge++, a);
        return;
      }
    }
  }
}

}  // namespace cavfeed
