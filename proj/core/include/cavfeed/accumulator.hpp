#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cavfeed/params.hpp"
#include "cavfeed/trajectory.hpp"

namespace cavfeed {

/// Ensemble tallies on the uniform output grid.
///
/// Counts (every emission, and the detected subset) are binned into the
/// n_bins intervals [b*w, (b+1)*w); per-trajectory squared counts are kept
/// alongside so single-realization spreads survive aggregation. Amplitude
/// moments are tallied at the n_bins + 1 bin edges. All state is additive,
/// so accumulators merge associatively and a fixed merge order reproduces
/// results bit for bit regardless of how work was distributed.
class EnsembleAccumulator {
 public:
  EnsembleAccumulator() = default;
  EnsembleAccumulator(double bin_width, std::size_t n_bins, bool conditional);

  /// Builds an accumulator shaped for the run's output grid.
  static EnsembleAccumulator for_run(const SimConfig& cfg, bool conditional);

  /// Streaming interface used while a trajectory is integrated.
  void begin_trajectory();
  void tally_sample(std::size_t edge, Complex alpha);
  void tally_event(std::size_t bin, bool detected);
  void end_trajectory();

  /// Replays a finished record into the tallies. The record must have been
  /// produced on a matching grid; `cfg` supplies the step geometry used to
  /// map event times back onto bins exactly.
  void add(const TrajectoryRecord& rec, const SimConfig& cfg);

  /// Elementwise merge; shapes must match. Merging in a fixed order is what
  /// keeps multi-worker runs byte-identical.
  void merge_from(const EnsembleAccumulator& other);

  std::uint64_t n_traj() const { return n_; }
  double bin_width() const { return w_; }
  std::size_t n_bins() const { return nb_; }
  bool conditional() const { return conditional_; }
  double edge_time(std::size_t e) const { return static_cast<double>(e) * w_; }

  std::uint64_t emitted(std::size_t b) const { return emit_[b]; }
  std::uint64_t detected(std::size_t b) const { return det_[b]; }
  std::uint64_t emitted_sq(std::size_t b) const { return emit_sq_[b]; }
  std::uint64_t detected_sq(std::size_t b) const { return det_sq_[b]; }

  double edge_sum_re(std::size_t e) const { return sum_re_[e]; }
  double edge_sum_im(std::size_t e) const { return sum_im_[e]; }

  double mean_re(std::size_t e) const;
  double mean_im(std::size_t e) const;
  /// Sample standard deviations (n - 1 normalisation) of the amplitude
  /// quadratures across trajectories.
  double std_re(std::size_t e) const;
  double std_im(std::size_t e) const;
  /// Mean and sample variance of the photon number |alpha|^2.
  double mean_abs_sq(std::size_t e) const;
  double var_abs_sq(std::size_t e) const;

  /// Mean per-trajectory count in bin b and its sample variance.
  double mean_emitted(std::size_t b) const;
  double var_emitted(std::size_t b) const;
  double mean_detected(std::size_t b) const;
  double var_detected(std::size_t b) const;

 private:
  double w_ = 0.0;
  std::size_t nb_ = 0;
  bool conditional_ = false;
  std::uint64_t n_ = 0;

  std::vector<std::uint64_t> emit_, det_, emit_sq_, det_sq_;
  std::vector<double> sum_re_, sum_im_, sum_re_sq_, sum_im_sq_, sum_abs4_;

  // per-trajectory scratch, flushed by end_trajectory
  std::vector<std::uint32_t> cur_emit_, cur_det_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace cavfeed
