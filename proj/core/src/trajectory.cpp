#include "cavfeed/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace cavfeed {

TimeGrid make_grid(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
    throw std::invalid_argument("dt must be positive and finite");
  if (!(cfg.t_max > 0.0) || !std::isfinite(cfg.t_max))
    throw std::invalid_argument("t_max must be positive and finite");
  if (cfg.sample_stride < 1)
    throw std::invalid_argument("sample_stride must be at least 1");

  const double steps_f = cfg.t_max / cfg.dt;
  const auto steps = static_cast<std::uint64_t>(std::llround(steps_f));
  if (steps == 0 ||
      std::abs(steps_f - static_cast<double>(steps)) >
          1e-9 * std::max(1.0, steps_f))
    throw std::invalid_argument("t_max must be a whole number of dt steps");
  if (steps % static_cast<std::uint64_t>(cfg.sample_stride) != 0)
    throw std::invalid_argument(
        "t_max must be a whole number of sample intervals "
        "(sample_stride * dt)");

  TimeGrid g;
  g.n_steps = static_cast<std::size_t>(steps);
  g.stride = cfg.sample_stride;
  g.n_edges = static_cast<std::size_t>(
      steps / static_cast<std::uint64_t>(cfg.sample_stride));
  g.dt = cfg.dt;
  g.sample_dt = static_cast<double>(cfg.sample_stride) * cfg.dt;
  return g;
}

void validate_run(const CavityParams& p, const SimConfig& cfg) {
  validated(p);  // throws on bad physics parameters
  make_grid(cfg);
  if (cfg.dt > 0.01 / p.kappa * (1.0 + 1e-12))
    throw std::invalid_argument("dt must not exceed 0.01 / kappa");
  if (cfg.n_traj == 0)
    throw std::invalid_argument("n_traj must be positive");
  if (cfg.max_feedback_events == 0)
    throw std::invalid_argument("max_feedback_events must be positive");
  if (cfg.mode == SteppingMode::event_driven && p.omega != 0.0)
    throw std::invalid_argument(
        "event_driven stepping requires the drive to be off (omega == 0)");
}

Complex propagate_no_jump(Complex alpha, const CavityParams& p, double t) {
  if (t < 0.0) throw std::invalid_argument("propagation time must be >= 0");
  const double decay = std::exp(-0.5 * p.kappa * t);
  return decay * alpha + (1.0 - decay) * steady_state_alpha(p);
}

double no_emission_probability(Complex alpha, double kappa, double delta_t) {
  if (delta_t < 0.0) throw std::invalid_argument("delta_t must be >= 0");
  // exp(-|alpha|^2 (1 - e^{-kappa dt})), written through expm1 so the
  // small-dt regime keeps full precision and dt = infinity is exact
  return std::exp(std::norm(alpha) * std::expm1(-kappa * delta_t));
}

Complex apply_emission(Complex alpha, bool detected, Complex beta) {
  return detected ? alpha + beta : alpha;
}

std::optional<double> sample_waiting_time(Complex alpha0, double kappa,
                                          double u) {
  if (!(u > 0.0) || !(u < 1.0))
    throw std::invalid_argument("u must lie strictly inside (0, 1)");
  const double nbar = std::norm(alpha0);
  if (nbar == 0.0) return std::nullopt;
  // survival probability never drops below exp(-nbar); a draw underneath it
  // means the freely decaying mode keeps its photons forever
  const double log_u = std::log(u);
  if (log_u <= -nbar) return std::nullopt;
  return -std::log1p(log_u / nbar) / kappa;
}

Complex conditional_initial_alpha(const CavityParams& p) {
  return apply_emission(steady_state_alpha(p), true, p.beta);
}

namespace {

struct RecordSink {
  TrajectoryRecord& rec;
  double dt;
  void sample(std::size_t, Complex a) { rec.alpha_samples.push_back(a); }
  void event(double t, std::size_t, bool det, bool fb) {
    rec.events.push_back(EmissionEvent{t, det, fb});
  }
};

}  // namespace

TrajectoryRecord simulate_trajectory(const CavityParams& p,
                                     const SimConfig& cfg,
                                     std::uint64_t traj_index,
                                     RngDomain domain,
                                     std::optional<Complex> alpha0) {
  validate_run(p, cfg);
  if (traj_index >= cfg.n_traj)
    throw std::invalid_argument("trajectory index exceeds n_traj");
  const TimeGrid g = make_grid(cfg);
  TrajectoryRecord rec;
  rec.params = validated(p);
  rec.rng_index = traj_index;
  rec.initial_alpha = alpha0 ? *alpha0 : steady_state_alpha(p);
  rec.alpha_samples.reserve(g.n_edges + 1);
  PhiloxStream rng(cfg.master_seed, domain, traj_index);
  RecordSink sink{rec, cfg.dt};
  run_steps(p, cfg, rec.initial_alpha, rng, sink);
  return rec;
}

}  // namespace cavfeed
