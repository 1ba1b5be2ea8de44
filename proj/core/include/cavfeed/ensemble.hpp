#pragma once

#include <cstdint>
#include <vector>

#include "cavfeed/accumulator.hpp"
#include "cavfeed/params.hpp"
#include "cavfeed/trajectory.hpp"

namespace cavfeed {

/// Trajectories per statistical block. Blocks are the unit of parallel work
/// and of resampling: block b always covers trajectory indices
/// [b * kStatBlock, (b+1) * kStatBlock), whichever worker runs it, and the
/// final reduction merges blocks in index order. Output is therefore
/// byte-identical for any worker count.
inline constexpr std::uint64_t kStatBlock = 1024;

/// Resolves a worker-count request: values > 0 are taken as-is, otherwise
/// the CAVFEED_WORKERS environment variable applies, otherwise the hardware
/// concurrency (at least 1).
int resolve_workers(int requested);

/// How each trajectory of an ensemble is prepared and stepped.
///
/// The protocol has two stages: a resonant drive first holds the mode in
/// its phase-dependent stationary state, then the drive is switched off and
/// the detector-triggered feedback loop takes over. `measurement` and
/// `conditional` both step undriven (omega = 0) from the prepared
/// stationary amplitude of p; `conditional` additionally applies one
/// feedback kick at t = 0, modelling a detection that just fired, and draws
/// from its own RNG domain. `driven` keeps the drive on while stepping,
/// matching what the density-matrix reference integrates, for
/// cross-validation runs.
enum class EnsemblePrep { measurement, conditional, driven };

/// Runs the ensemble and returns the per-block accumulators in block order.
std::vector<EnsembleAccumulator> run_ensemble_blocks(const CavityParams& p,
                                                     const SimConfig& cfg,
                                                     EnsemblePrep prep,
                                                     int workers);

/// Folds blocks in index order into one accumulator.
EnsembleAccumulator merge_blocks(const std::vector<EnsembleAccumulator>& blocks);

/// run_ensemble_blocks followed by the ordered merge.
EnsembleAccumulator run_ensemble(const CavityParams& p, const SimConfig& cfg,
                                 EnsemblePrep prep, int workers);

}  // namespace cavfeed
