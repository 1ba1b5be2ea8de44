#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace cavfeed {

/// Counter-based block cipher used as the simulation RNG (Philox-4x32,
/// 10 rounds). Counter-based generation gives every trajectory its own
/// statistically independent stream addressed by (seed, domain, index),
/// which is what makes ensemble runs reproducible regardless of worker
/// count and lets paired scans reuse identical randomness.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Namespaces the streams so different consumers of randomness can never
/// collide even when they share a seed and an index.
enum class RngDomain : std::uint32_t {
  trajectory = 0,   ///< unconditional trajectory evolution
  conditional = 1,  ///< trajectories started from the post-detection state
  bootstrap = 2,    ///< block-resampling replicas in the uncertainty stage
};

/// One lazily generated stream of uniforms in the open interval (0, 1).
///
/// The cipher key is the 64-bit seed; the 128-bit counter packs a running
/// 64-bit block counter, the 32-bit stream index and the domain tag. Each
/// cipher block yields exactly two doubles via the mantissa-centering map
/// u = ((x >> 11) + 0.5) * 2^-53 on a 64-bit lane, so u is never 0 or 1.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, RngDomain domain, std::uint64_t index);

  /// Next uniform in (0, 1).
  double uniform();

  /// Next two uniforms, in stream order. Trajectory stepping always draws
  /// in pairs (emission test, detection test) so that paired parameter
  /// scans consume randomness in lockstep.
  std::pair<double, double> uniform_pair();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::uint32_t index_;
  std::uint32_t domain_;
  double buf_[2] = {0.0, 0.0};
  int avail_ = 0;
};

}  // namespace cavfeed
