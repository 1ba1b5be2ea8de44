#include "cavfeed/ensemble.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace cavfeed {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CAVFEED_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
      // fall through to hardware detection on malformed values
    }
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

namespace {

struct AccumSink {
  EnsembleAccumulator& acc;
  void sample(std::size_t edge, Complex a) { acc.tally_sample(edge, a); }
  void event(double, std::size_t bin, bool det, bool) {
    acc.tally_event(bin, det);
  }
};

}  // namespace

std::vector<EnsembleAccumulator> run_ensemble_blocks(const CavityParams& p,
                                                     const SimConfig& cfg,
                                                     EnsemblePrep prep,
                                                     int workers) {
  // The prepared state always reflects the full preparation parameters;
  // only the stepping dynamics depend on whether the drive stays on.
  const CavityParams stepping = prep == EnsemblePrep::driven
                                    ? validated(p)
                                    : measurement_params(p);
  validate_run(stepping, cfg);
  const TimeGrid g = make_grid(cfg);
  const std::uint64_t n_blocks = (cfg.n_traj + kStatBlock - 1) / kStatBlock;
  std::vector<EnsembleAccumulator> blocks(static_cast<std::size_t>(n_blocks));

  const bool conditional = prep == EnsemblePrep::conditional;
  const Complex a0 =
      conditional ? conditional_initial_alpha(p) : steady_state_alpha(p);
  const RngDomain domain =
      conditional ? RngDomain::conditional : RngDomain::trajectory;

  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    try {
      for (;;) {
        const std::uint64_t b = next.fetch_add(1);
        if (b >= n_blocks || failed.load(std::memory_order_relaxed)) return;
        EnsembleAccumulator acc(g.sample_dt, g.n_edges, conditional);
        const std::uint64_t lo = b * kStatBlock;
        const std::uint64_t hi = std::min(cfg.n_traj, lo + kStatBlock);
        for (std::uint64_t i = lo; i < hi; ++i) {
          PhiloxStream rng(cfg.master_seed, domain, i);
          acc.begin_trajectory();
          AccumSink sink{acc};
          run_steps(stepping, cfg, a0, rng, sink);
          acc.end_trajectory();
        }
        blocks[static_cast<std::size_t>(b)] = std::move(acc);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      failed.store(true, std::memory_order_relaxed);
    }
  };

  const int n_workers = static_cast<int>(std::min<std::uint64_t>(
      static_cast<std::uint64_t>(resolve_workers(workers)), n_blocks));
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return blocks;
}

EnsembleAccumulator merge_blocks(
    const std::vector<EnsembleAccumulator>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("no blocks to merge");
  EnsembleAccumulator total = blocks.front();
  for (std::size_t b = 1; b < blocks.size(); ++b)
    total.merge_from(blocks[b]);
  return total;
}

EnsembleAccumulator run_ensemble(const CavityParams& p, const SimConfig& cfg,
                                 EnsemblePrep prep, int workers) {
  return merge_blocks(run_ensemble_blocks(p, cfg, prep, workers));
}

}  // namespace cavfeed
