#pragma once

#include <span>
#include <vector>

#include "cavfeed/estimators.hpp"

namespace cavfeed {

/// Result of an unweighted least-squares line through (log x, log y).
struct PowerLawFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;  ///< natural log of the prefactor
  double r_squared = 0.0;
  int n_points = 0;
  double range_min = 0.0;  ///< smallest resource actually used
  double range_max = 0.0;
};

/// Fits y = a * x^exponent over the points with finite positive x and y
/// inside [x_min, x_max]. Throws std::invalid_argument with fewer than 3
/// usable points. Quality judgement (the r_squared < 0.9 caveat) is left
/// to callers, who know whether a warning or a failure is appropriate.
PowerLawFit power_law_fit(std::span<const double> x,
                          std::span<const double> y, double x_min,
                          double x_max);

/// Convenience overload over an accuracy scan: resource against delta_phi,
/// skipping rows flagged below the noise floor.
PowerLawFit power_law_fit(const std::vector<AccuracyPoint>& points,
                          double x_min, double x_max);

/// Replaces each point's delta_phi by the mean of the finite delta_phi
/// values whose resource lies within window/2 of it. Points that carry no
/// finite neighbours stay missing; a window below the point spacing leaves
/// the series unchanged.
std::vector<AccuracyPoint> time_average_smoothing(
    const std::vector<AccuracyPoint>& points, double window);

}  // namespace cavfeed
