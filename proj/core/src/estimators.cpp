#include "cavfeed/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "cavfeed/ensemble.hpp"
#include "cavfeed/rng.hpp"

namespace cavfeed {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_populated(const EnsembleAccumulator& acc) {
  if (acc.n_traj() == 0 || acc.n_bins() == 0)
    throw std::invalid_argument("accumulator holds no trajectories");
}

}  // namespace

std::vector<IntensityPoint> intensity_curve(const EnsembleAccumulator& acc,
                                            const CavityParams& p) {
  require_populated(acc);
  if (acc.conditional())
    throw std::invalid_argument(
        "intensity_curve expects the unconditional ensemble");
  const double w = acc.bin_width();
  const auto n = static_cast<double>(acc.n_traj());
  std::vector<IntensityPoint> out(acc.n_bins());
  for (std::size_t b = 0; b < acc.n_bins(); ++b) {
    IntensityPoint& q = out[b];
    q.t = acc.edge_time(b);
    q.detected = acc.mean_detected(b) / w;
    q.emitted = acc.mean_emitted(b) / w;
    q.analytic = p.kappa * acc.mean_abs_sq(b);
    q.stderr_emitted = std::sqrt(acc.var_emitted(b) / n) / w;
  }
  return out;
}

std::vector<G2Point> g2_curve(const EnsembleAccumulator& conditional,
                              const EnsembleAccumulator& unconditional) {
  require_populated(conditional);
  require_populated(unconditional);
  if (conditional.n_bins() != unconditional.n_bins() ||
      std::abs(conditional.bin_width() - unconditional.bin_width()) >
          1e-12 * unconditional.bin_width())
    throw std::invalid_argument("ensembles live on different grids");

  const auto n_c = static_cast<double>(conditional.n_traj());
  const auto n_u = static_cast<double>(unconditional.n_traj());
  std::vector<G2Point> out(unconditional.n_bins());
  for (std::size_t b = 0; b < out.size(); ++b) {
    G2Point& q = out[b];
    q.t = unconditional.edge_time(b);
    q.n_conditional = conditional.detected(b);
    q.n_unconditional = unconditional.detected(b);
    if (q.n_unconditional == 0) {
      q.g2 = kNaN;
      q.stderr_val = kNaN;
      q.defined = false;
      continue;
    }
    const double a = conditional.mean_detected(b);
    const double bb = unconditional.mean_detected(b);
    q.g2 = a / bb;
    const double se_a = std::sqrt(conditional.var_detected(b) / n_c);
    const double se_b = std::sqrt(unconditional.var_detected(b) / n_u);
    // independent ensembles, so the ratio error is the quadrature sum of the
    // relative errors; at a == 0 fall back to first order in the numerator
    q.stderr_val = a > 0.0 ? q.g2 * std::sqrt((se_a / a) * (se_a / a) +
                                              (se_b / bb) * (se_b / bb))
                           : se_a / bb;
    q.defined = true;
  }
  return out;
}

std::vector<MomentPoint> moment_curve(const EnsembleAccumulator& acc) {
  require_populated(acc);
  std::vector<MomentPoint> out(acc.n_bins() + 1);
  for (std::size_t e = 0; e <= acc.n_bins(); ++e) {
    MomentPoint& q = out[e];
    q.t = acc.edge_time(e);
    q.mean_re = acc.mean_re(e);
    q.mean_im = acc.mean_im(e);
    q.std_re = acc.std_re(e);
    q.std_im = acc.std_im(e);
  }
  return out;
}

std::vector<PhasePoint> phase_diagram_snapshot(
    const std::vector<double>& initial_phis, const CavityParams& base,
    const SimConfig& cfg, double t, bool forced_feedback_at_zero,
    int workers) {
  if (initial_phis.empty())
    throw std::invalid_argument("phase sweep is empty");
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument("snapshot time must be finite and >= 0");
  const double w = static_cast<double>(cfg.sample_stride) * cfg.dt;
  const auto edge = static_cast<std::uint64_t>(std::llround(t / w));
  if (std::abs(static_cast<double>(edge) * w - t) > 1e-9 * std::max(1.0, t))
    throw std::invalid_argument("snapshot time must lie on the sample grid");

  // integrating past the snapshot would not change the state at the
  // snapshot edge, so stop there (t = 0 still needs one valid bin)
  SimConfig run_cfg = cfg;
  run_cfg.t_max = edge == 0 ? w : static_cast<double>(edge) * w;

  std::vector<PhasePoint> out;
  out.reserve(initial_phis.size());
  for (const double phi : initial_phis) {
    CavityParams p = base;
    p.phi = phi;
    p = validated(p);
    const EnsembleAccumulator acc = run_ensemble(
        p, run_cfg,
        forced_feedback_at_zero ? EnsemblePrep::conditional
                                : EnsemblePrep::measurement,
        workers);
    PhasePoint q;
    q.phi = p.phi;
    q.t = t;
    q.mean_re = acc.mean_re(static_cast<std::size_t>(edge));
    q.mean_im = acc.mean_im(static_cast<std::size_t>(edge));
    q.std_re = acc.std_re(static_cast<std::size_t>(edge));
    q.std_im = acc.std_im(static_cast<std::size_t>(edge));
    out.push_back(q);
  }
  return out;
}

UncertaintyMode default_uncertainty(SignalKind s) {
  return s == SignalKind::g2 ? UncertaintyMode::bootstrap
                             : UncertaintyMode::single_shot;
}

StencilKind default_stencil(const CavityParams& p) {
  const double phi = canonical_phase(p.phi);
  const bool at_pi = std::abs(phi - std::numbers::pi) < 1e-9;
  return (at_pi && p.beta.imag() == 0.0) ? StencilKind::backward
                                         : StencilKind::centered;
}

namespace {

struct FlankData {
  std::vector<EnsembleAccumulator> unc_blocks;
  std::vector<EnsembleAccumulator> cond_blocks;
  EnsembleAccumulator unc;
  EnsembleAccumulator cond;
};

FlankData run_flank(const CavityParams& p, const SimConfig& cfg,
                    SignalKind signal, int workers) {
  FlankData f;
  f.unc_blocks =
      run_ensemble_blocks(p, cfg, EnsemblePrep::measurement, workers);
  f.unc = merge_blocks(f.unc_blocks);
  if (signal == SignalKind::g2) {
    f.cond_blocks =
        run_ensemble_blocks(p, cfg, EnsemblePrep::conditional, workers);
    f.cond = merge_blocks(f.cond_blocks);
  }
  return f;
}

std::vector<double> flank_signal(const FlankData& f, SignalKind signal) {
  const std::size_t nb = f.unc.n_bins();
  const double w = f.unc.bin_width();
  std::vector<double> m(nb, kNaN);
  if (signal == SignalKind::intensity) {
    for (std::size_t b = 0; b < nb; ++b) m[b] = f.unc.mean_emitted(b) / w;
    return m;
  }
  const auto curve = g2_curve(f.cond, f.unc);
  for (std::size_t b = 0; b < nb; ++b)
    m[b] = curve[b].defined ? curve[b].g2 : kNaN;
  return m;
}

/// Spread of the signal in one experimental realization, bin by bin.
std::vector<double> flank_single_shot_std(const FlankData& f,
                                          SignalKind signal) {
  const std::size_t nb = f.unc.n_bins();
  const double w = f.unc.bin_width();
  std::vector<double> s(nb, kNaN);
  if (signal == SignalKind::intensity) {
    for (std::size_t b = 0; b < nb; ++b)
      s[b] = std::sqrt(f.unc.var_emitted(b)) / w;
    return s;
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const double bb = f.unc.mean_detected(b);
    if (bb <= 0.0) continue;
    const double a = f.cond.mean_detected(b);
    const double sa = std::sqrt(f.cond.var_detected(b));
    const double sb = std::sqrt(f.unc.var_detected(b));
    s[b] = a > 0.0 ? (a / bb) * std::sqrt((sa / a) * (sa / a) +
                                          (sb / bb) * (sb / bb))
                   : sa / bb;
  }
  return s;
}

struct BootStats {
  std::vector<double> std_a, std_b, std_diff;
};

/// Block bootstrap over trajectory blocks. One shared index list per
/// replica resamples every ensemble at once, which keeps the flanks paired
/// (they already share per-trajectory randomness) so std_diff measures the
/// Monte Carlo noise of the finite difference itself.
BootStats bootstrap_flanks(const FlankData& fa, const FlankData& fb,
                           SignalKind signal, int replicas,
                           std::uint64_t seed) {
  const std::size_t nb = fa.unc.n_bins();
  const double w = fa.unc.bin_width();
  const std::size_t n_blocks = fa.unc_blocks.size();

  std::vector<double> s1a(nb, 0.0), s2a(nb, 0.0), s1b(nb, 0.0), s2b(nb, 0.0),
      s1d(nb, 0.0), s2d(nb, 0.0);
  std::vector<std::uint32_t> cnt_a(nb, 0), cnt_b(nb, 0), cnt_d(nb, 0);

  std::vector<std::size_t> idx(n_blocks);
  std::vector<double> sum_ua(nb), sum_ub(nb), sum_ca(nb), sum_cb(nb);
  std::vector<double> ma(nb), mb(nb);

  for (int r = 0; r < replicas; ++r) {
    PhiloxStream rs(seed, RngDomain::bootstrap,
                    static_cast<std::uint64_t>(r));
    for (std::size_t j = 0; j < n_blocks; ++j) {
      auto k = static_cast<std::size_t>(rs.uniform() *
                                        static_cast<double>(n_blocks));
      idx[j] = k < n_blocks ? k : n_blocks - 1;
    }

    std::fill(sum_ua.begin(), sum_ua.end(), 0.0);
    std::fill(sum_ub.begin(), sum_ub.end(), 0.0);
    std::fill(sum_ca.begin(), sum_ca.end(), 0.0);
    std::fill(sum_cb.begin(), sum_cb.end(), 0.0);
    double n_ua = 0.0, n_ub = 0.0, n_ca = 0.0, n_cb = 0.0;

    for (const std::size_t k : idx) {
      const EnsembleAccumulator& ua = fa.unc_blocks[k];
      const EnsembleAccumulator& ub = fb.unc_blocks[k];
      n_ua += static_cast<double>(ua.n_traj());
      n_ub += static_cast<double>(ub.n_traj());
      if (signal == SignalKind::intensity) {
        for (std::size_t b = 0; b < nb; ++b) {
          sum_ua[b] += static_cast<double>(ua.emitted(b));
          sum_ub[b] += static_cast<double>(ub.emitted(b));
        }
      } else {
        const EnsembleAccumulator& ca = fa.cond_blocks[k];
        const EnsembleAccumulator& cb = fb.cond_blocks[k];
        n_ca += static_cast<double>(ca.n_traj());
        n_cb += static_cast<double>(cb.n_traj());
        for (std::size_t b = 0; b < nb; ++b) {
          sum_ua[b] += static_cast<double>(ua.detected(b));
          sum_ub[b] += static_cast<double>(ub.detected(b));
          sum_ca[b] += static_cast<double>(ca.detected(b));
          sum_cb[b] += static_cast<double>(cb.detected(b));
        }
      }
    }

    for (std::size_t b = 0; b < nb; ++b) {
      if (signal == SignalKind::intensity) {
        ma[b] = sum_ua[b] / (n_ua * w);
        mb[b] = sum_ub[b] / (n_ub * w);
      } else {
        ma[b] = sum_ua[b] > 0.0
                    ? (sum_ca[b] / n_ca) / (sum_ua[b] / n_ua)
                    : kNaN;
        mb[b] = sum_ub[b] > 0.0
                    ? (sum_cb[b] / n_cb) / (sum_ub[b] / n_ub)
                    : kNaN;
      }
      if (std::isfinite(ma[b])) {
        s1a[b] += ma[b];
        s2a[b] += ma[b] * ma[b];
        ++cnt_a[b];
      }
      if (std::isfinite(mb[b])) {
        s1b[b] += mb[b];
        s2b[b] += mb[b] * mb[b];
        ++cnt_b[b];
      }
      if (std::isfinite(ma[b]) && std::isfinite(mb[b])) {
        const double d = mb[b] - ma[b];
        s1d[b] += d;
        s2d[b] += d * d;
        ++cnt_d[b];
      }
    }
  }

  auto finish = [&](const std::vector<double>& s1,
                    const std::vector<double>& s2,
                    const std::vector<std::uint32_t>& cnt, std::size_t b,
                    int min_count) {
    if (cnt[b] < static_cast<std::uint32_t>(min_count)) return kNaN;
    const double c = static_cast<double>(cnt[b]);
    const double mean = s1[b] / c;
    const double v = s2[b] / c - mean * mean;
    return std::sqrt(v > 0.0 ? v : 0.0);
  };

  BootStats out;
  out.std_a.resize(nb);
  out.std_b.resize(nb);
  out.std_diff.resize(nb);
  const int half = replicas / 2;
  for (std::size_t b = 0; b < nb; ++b) {
    out.std_a[b] = finish(s1a, s2a, cnt_a, b, half);
    out.std_b[b] = finish(s1b, s2b, cnt_b, b, half);
    out.std_diff[b] = finish(s1d, s2d, cnt_d, b, half);
  }
  return out;
}

}  // namespace

std::vector<AccuracyPoint> accuracy_vs_time(const CavityParams& p,
                                            const SimConfig& cfg,
                                            const AccuracyScan& scan,
                                            int workers) {
  if (!(scan.dphi > 0.0) || !std::isfinite(scan.dphi))
    throw std::invalid_argument("dphi must be positive and finite");
  if (scan.bootstrap_replicas < 2)
    throw std::invalid_argument("bootstrap_replicas must be at least 2");

  const CavityParams base = validated(p);
  CavityParams pa = base;
  CavityParams pb = base;
  if (scan.stencil == StencilKind::centered) {
    pa.phi = base.phi - 0.5 * scan.dphi;
    pb.phi = base.phi + 0.5 * scan.dphi;
  } else {
    pa.phi = base.phi - scan.dphi;
    pb.phi = base.phi;
  }
  pa = validated(pa);
  pb = validated(pb);

  const FlankData fa = run_flank(pa, cfg, scan.signal, workers);
  const FlankData fb = run_flank(pb, cfg, scan.signal, workers);

  const auto sig_a = flank_signal(fa, scan.signal);
  const auto sig_b = flank_signal(fb, scan.signal);
  const auto boot = bootstrap_flanks(fa, fb, scan.signal,
                                     scan.bootstrap_replicas,
                                     cfg.master_seed);

  std::vector<double> std_a, std_b;
  if (scan.uncertainty == UncertaintyMode::single_shot) {
    std_a = flank_single_shot_std(fa, scan.signal);
    std_b = flank_single_shot_std(fb, scan.signal);
  } else {
    std_a = boot.std_a;
    std_b = boot.std_b;
  }

  const std::size_t nb = fa.unc.n_bins();
  const double w = fa.unc.bin_width();
  std::vector<AccuracyPoint> out(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    AccuracyPoint& q = out[b];
    q.resource = static_cast<double>(b) * w;
    const double m_a = sig_a[b];
    const double m_b = sig_b[b];
    q.signal = 0.5 * (m_a + m_b);
    q.signal_std = 0.5 * (std_a[b] + std_b[b]);
    const double diff = std::abs(m_b - m_a);
    q.sensitivity = diff / scan.dphi;
    // NaN-aware on purpose: any undefined ingredient lands in the flag
    const bool resolved = std::isfinite(diff) &&
                          std::isfinite(boot.std_diff[b]) &&
                          diff >= 3.0 * boot.std_diff[b];
    q.below_noise_floor =
        !resolved || !(q.sensitivity > 0.0) || !std::isfinite(q.signal_std);
    q.delta_phi =
        q.below_noise_floor ? kNaN : q.signal_std / q.sensitivity;
  }
  return out;
}

AccuracyPoint accuracy_window_average(const std::vector<AccuracyPoint>& scan,
                                      double resource, double window_min,
                                      double window_max) {
  AccuracyPoint q;
  q.resource = resource;
  double s_sig = 0.0, s_std = 0.0, s_sen = 0.0, s_dp = 0.0;
  std::size_t n_used = 0;
  for (const AccuracyPoint& pt : scan) {
    if (pt.resource < window_min || pt.resource > window_max) continue;
    if (!std::isfinite(pt.delta_phi)) continue;
    s_sig += pt.signal;
    s_std += pt.signal_std;
    s_sen += pt.sensitivity;
    s_dp += pt.delta_phi;
    ++n_used;
  }
  if (n_used == 0) {
    q.signal = kNaN;
    q.signal_std = kNaN;
    q.sensitivity = kNaN;
    q.delta_phi = kNaN;
    q.below_noise_floor = true;
    return q;
  }
  const double n = static_cast<double>(n_used);
  q.signal = s_sig / n;
  q.signal_std = s_std / n;
  q.sensitivity = s_sen / n;
  q.delta_phi = s_dp / n;
  q.below_noise_floor = false;
  return q;
}

std::vector<AccuracyPoint> accuracy_vs_photon_number(
    const std::vector<double>& alpha_sq_values, double phi, double eta,
    double kappa, const SimConfig& cfg, const AccuracyScan& scan,
    double window_min, double window_max, int workers) {
  if (alpha_sq_values.empty())
    throw std::invalid_argument("alpha_sq sweep is empty");
  if (!(window_min <= window_max))
    throw std::invalid_argument("averaging window is empty");
  std::vector<AccuracyPoint> out;
  out.reserve(alpha_sq_values.size());
  for (const double asq : alpha_sq_values) {
    const CavityParams p = params_for_alpha_sq(asq, phi, eta, kappa);
    const auto curve = accuracy_vs_time(p, cfg, scan, workers);
    out.push_back(
        accuracy_window_average(curve, asq, window_min, window_max));
  }
  return out;
}

}  // namespace cavfeed
