#include "cavfeed/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cavfeed {

PowerLawFit power_law_fit(std::span<const double> x,
                          std::span<const double> y, double x_min,
                          double x_max) {
  if (x.size() != y.size())
    throw std::invalid_argument("x and y lengths differ");
  if (!(x_min <= x_max)) throw std::invalid_argument("empty fit range");

  std::vector<double> lx, ly;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    if (x[i] <= 0.0 || y[i] <= 0.0) continue;
    if (x[i] < x_min || x[i] > x_max) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
  }
  const std::size_t n = lx.size();
  if (n < 3)
    throw std::invalid_argument(
        "power_law_fit needs at least 3 positive points in range");

  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0)
    throw std::invalid_argument("all resources coincide, slope undefined");

  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.log_prefactor = my - fit.exponent * mx;
  if (syy == 0.0) {
    fit.r_squared = 1.0;
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - (fit.log_prefactor + fit.exponent * lx[i]);
      ss_res += r * r;
    }
    const double r2 = 1.0 - ss_res / syy;
    fit.r_squared = r2 < 0.0 ? 0.0 : (r2 > 1.0 ? 1.0 : r2);
  }
  fit.n_points = static_cast<int>(n);
  fit.range_min = lo;
  fit.range_max = hi;
  return fit;
}

PowerLawFit power_law_fit(const std::vector<AccuracyPoint>& points,
                          double x_min, double x_max) {
  std::vector<double> x, y;
  x.reserve(points.size());
  y.reserve(points.size());
  for (const AccuracyPoint& p : points) {
    if (p.below_noise_floor) continue;
    x.push_back(p.resource);
    y.push_back(p.delta_phi);
  }
  return power_law_fit(x, y, x_min, x_max);
}

std::vector<AccuracyPoint> time_average_smoothing(
    const std::vector<AccuracyPoint>& points, double window) {
  if (!(window > 0.0)) throw std::invalid_argument("window must be > 0");
  std::vector<AccuracyPoint> out = points;
  const double half = 0.5 * window;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].delta_phi)) continue;  // stays missing
    double s = 0.0;
    std::size_t c = 0;
    for (const AccuracyPoint& p : points) {
      if (std::abs(p.resource - points[i].resource) > half) continue;
      if (!std::isfinite(p.delta_phi)) continue;
      s += p.delta_phi;
      ++c;
    }
    if (c > 0) out[i].delta_phi = s / static_cast<double>(c);
  }
  return out;
}

}  // namespace cavfeed
