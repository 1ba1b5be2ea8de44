#include "cavfeed/params.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cavfeed {

double canonical_phase(double phi) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(phi, two_pi);
  if (w < 0.0) w += two_pi;
  // fmod of a value just below zero can round back up to two_pi itself
  if (w >= two_pi) w = 0.0;
  return w;
}

CavityParams validated(CavityParams p) {
  const bool finite = std::isfinite(p.kappa) && std::isfinite(p.omega) &&
                      std::isfinite(p.phi) && std::isfinite(p.eta) &&
                      std::isfinite(p.beta.real()) && std::isfinite(p.beta.imag());
  if (!finite) throw std::invalid_argument("cavity parameters must be finite");
  if (p.kappa <= 0.0) throw std::invalid_argument("kappa must be positive");
  if (p.omega < 0.0) throw std::invalid_argument("omega must be non-negative");
  if (p.eta < 0.0 || p.eta > 1.0)
    throw std::invalid_argument("eta must lie in [0, 1]");
  p.phi = canonical_phase(p.phi);
  return p;
}

Complex steady_state_alpha(const CavityParams& p) {
  const double r = p.omega / p.kappa;
  return Complex(r * std::cos(p.phi), -r * std::sin(p.phi));
}

CavityParams measurement_params(const CavityParams& p) {
  CavityParams m = validated(p);
  m.omega = 0.0;
  return m;
}

CavityParams params_for_alpha_sq(double alpha_sq, double phi, double eta,
                                 double kappa) {
  if (!(alpha_sq >= 0.0) || !std::isfinite(alpha_sq))
    throw std::invalid_argument("alpha_sq must be finite and non-negative");
  CavityParams p;
  p.kappa = kappa;
  p.omega = kappa * std::sqrt(alpha_sq);
  p.phi = phi;
  p.eta = eta;
  p.beta = Complex(std::sqrt(alpha_sq), 0.0);
  return validated(p);
}

}  // namespace cavfeed
