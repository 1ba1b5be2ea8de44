#pragma once

#include <iosfwd>
#include <string_view>

#include "cavfeed/config.hpp"

namespace cavfeed {

/// Version string stamped into every table's metadata block.
inline constexpr std::string_view kToolkitVersion = "0.1.0";

/// Runs the experiment described by `spec` (which must have passed
/// validate_spec). Human-readable result and verdict lines go to `log`;
/// tables go to spec.output_path, each led by a comment block recording
/// the full parameter set, the seed, and the wall time. Output is
/// deterministic: identical spec and seed reproduce the table body
/// byte-for-byte at any worker count. Throws on failure; a failed run
/// never leaves a partial table behind.
void run_experiment(const ExperimentSpec& spec, std::ostream& log);

}  // namespace cavfeed
