#include "cavfeed/accumulator.hpp"

#include <cmath>
#include <stdexcept>

namespace cavfeed {

EnsembleAccumulator::EnsembleAccumulator(double bin_width, std::size_t n_bins,
                                         bool conditional)
    : w_(bin_width), nb_(n_bins), conditional_(conditional) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_width must be > 0");
  if (n_bins == 0) throw std::invalid_argument("n_bins must be > 0");
  emit_.assign(nb_, 0);
  det_.assign(nb_, 0);
  emit_sq_.assign(nb_, 0);
  det_sq_.assign(nb_, 0);
  sum_re_.assign(nb_ + 1, 0.0);
  sum_im_.assign(nb_ + 1, 0.0);
  sum_re_sq_.assign(nb_ + 1, 0.0);
  sum_im_sq_.assign(nb_ + 1, 0.0);
  sum_abs4_.assign(nb_ + 1, 0.0);
  cur_emit_.assign(nb_, 0);
  cur_det_.assign(nb_, 0);
}

EnsembleAccumulator EnsembleAccumulator::for_run(const SimConfig& cfg,
                                                 bool conditional) {
  const TimeGrid g = make_grid(cfg);
  return EnsembleAccumulator(g.sample_dt, g.n_edges, conditional);
}

void EnsembleAccumulator::begin_trajectory() { touched_.clear(); }

void EnsembleAccumulator::tally_sample(std::size_t edge, Complex alpha) {
  const double re = alpha.real();
  const double im = alpha.imag();
  const double n2 = re * re + im * im;
  sum_re_[edge] += re;
  sum_im_[edge] += im;
  sum_re_sq_[edge] += re * re;
  sum_im_sq_[edge] += im * im;
  sum_abs4_[edge] += n2 * n2;
}

void EnsembleAccumulator::tally_event(std::size_t bin, bool detected) {
  touched_.push_back(static_cast<std::uint32_t>(bin));
  ++cur_emit_[bin];
  if (detected) ++cur_det_[bin];
}

void EnsembleAccumulator::end_trajectory() {
  for (const std::uint32_t b : touched_) {
    const std::uint64_t e = cur_emit_[b];
    const std::uint64_t d = cur_det_[b];
    if (e == 0 && d == 0) continue;  // bin listed twice, already flushed
    emit_[b] += e;
    emit_sq_[b] += e * e;
    det_[b] += d;
    det_sq_[b] += d * d;
    cur_emit_[b] = 0;
    cur_det_[b] = 0;
  }
  touched_.clear();
  ++n_;
}

void EnsembleAccumulator::add(const TrajectoryRecord& rec,
                              const SimConfig& cfg) {
  const TimeGrid g = make_grid(cfg);
  if (g.n_edges != nb_ || std::abs(g.sample_dt - w_) > 1e-12 * w_)
    throw std::invalid_argument("record grid does not match accumulator");
  if (rec.alpha_samples.size() != nb_ + 1)
    throw std::invalid_argument("record holds wrong number of samples");

  begin_trajectory();
  for (std::size_t e = 0; e < rec.alpha_samples.size(); ++e)
    tally_sample(e, rec.alpha_samples[e]);
  for (const EmissionEvent& ev : rec.events) {
    std::size_t bin;
    if (cfg.mode == SteppingMode::fixed_step) {
      // fixed-mode event times sit on the step grid; recover the step index
      // by rounding so float division can never shift the bin
      const auto step = static_cast<std::uint64_t>(std::llround(ev.time / g.dt));
      bin = static_cast<std::size_t>(step) /
            static_cast<std::size_t>(g.stride);
    } else {
      bin = static_cast<std::size_t>(ev.time / w_);
    }
    if (bin >= nb_) bin = nb_ - 1;
    tally_event(bin, ev.detected);
  }
  end_trajectory();
}

void EnsembleAccumulator::merge_from(const EnsembleAccumulator& other) {
  if (other.nb_ != nb_ || other.conditional_ != conditional_ ||
      std::abs(other.w_ - w_) > 1e-12 * w_)
    throw std::invalid_argument("accumulator shapes do not match");
  for (std::size_t b = 0; b < nb_; ++b) {
    emit_[b] += other.emit_[b];
    det_[b] += other.det_[b];
    emit_sq_[b] += other.emit_sq_[b];
    det_sq_[b] += other.det_sq_[b];
  }
  for (std::size_t e = 0; e <= nb_; ++e) {
    sum_re_[e] += other.sum_re_[e];
    sum_im_[e] += other.sum_im_[e];
    sum_re_sq_[e] += other.sum_re_sq_[e];
    sum_im_sq_[e] += other.sum_im_sq_[e];
    sum_abs4_[e] += other.sum_abs4_[e];
  }
  n_ += other.n_;
}

namespace {

inline double sample_var(double sum, double sum_sq, std::uint64_t n) {
  if (n < 2) return 0.0;
  const double nd = static_cast<double>(n);
  const double mean = sum / nd;
  const double v = (sum_sq - nd * mean * mean) / (nd - 1.0);
  return v > 0.0 ? v : 0.0;
}

}  // namespace

double EnsembleAccumulator::mean_re(std::size_t e) const {
  return n_ ? sum_re_[e] / static_cast<double>(n_) : 0.0;
}

double EnsembleAccumulator::mean_im(std::size_t e) const {
  return n_ ? sum_im_[e] / static_cast<double>(n_) : 0.0;
}

double EnsembleAccumulator::std_re(std::size_t e) const {
  return std::sqrt(sample_var(sum_re_[e], sum_re_sq_[e], n_));
}

double EnsembleAccumulator::std_im(std::size_t e) const {
  return std::sqrt(sample_var(sum_im_[e], sum_im_sq_[e], n_));
}

double EnsembleAccumulator::mean_abs_sq(std::size_t e) const {
  return n_ ? (sum_re_sq_[e] + sum_im_sq_[e]) / static_cast<double>(n_) : 0.0;
}

double EnsembleAccumulator::var_abs_sq(std::size_t e) const {
  return sample_var(sum_re_sq_[e] + sum_im_sq_[e], sum_abs4_[e], n_);
}

double EnsembleAccumulator::mean_emitted(std::size_t b) const {
  return n_ ? static_cast<double>(emit_[b]) / static_cast<double>(n_) : 0.0;
}

double EnsembleAccumulator::var_emitted(std::size_t b) const {
  return sample_var(static_cast<double>(emit_[b]),
                    static_cast<double>(emit_sq_[b]), n_);
}

double EnsembleAccumulator::mean_detected(std::size_t b) const {
  return n_ ? static_cast<double>(det_[b]) / static_cast<double>(n_) : 0.0;
}

double EnsembleAccumulator::var_detected(std::size_t b) const {
  return sample_var(static_cast<double>(det_[b]),
                    static_cast<double>(det_sq_[b]), n_);
}

}  // namespace cavfeed
