#pragma once

#include <complex>
#include <cstdint>

namespace cavfeed {

using Complex = std::complex<double>;

/// Physical parameters of a single leaky cavity mode driven through a
/// phase-imprinting channel and watched by a photon detector that triggers
/// an instantaneous displacement kick on every registered emission.
///
/// kappa sets the time unit (all rates are quoted relative to it), omega is
/// the resonant drive amplitude used to prepare the mode, phi is the phase
/// the drive imprints on the stationary amplitude, eta the detector
/// efficiency and beta the complex displacement applied per detected photon.
struct CavityParams {
  double kappa = 1.0;
  double omega = 0.0;
  double phi = 0.0;
  double eta = 1.0;
  Complex beta{0.0, 0.0};
};

/// Wraps an angle into [0, 2*pi).
double canonical_phase(double phi);

/// Returns a copy with phi wrapped into [0, 2*pi); throws
/// std::invalid_argument when kappa <= 0, omega < 0, eta outside [0, 1]
/// or any field is non-finite.
CavityParams validated(CavityParams p);

/// Stationary amplitude of the damped driven mode,
/// alpha_ss = (omega / kappa) * exp(-i * phi).
Complex steady_state_alpha(const CavityParams& p);

/// Measurement-stage copy of p: once the mode is prepared, the continuous
/// drive is switched off and replaced by the detector-triggered feedback
/// loop, so stepping proceeds with omega = 0 while kappa, eta, beta and phi
/// keep describing the loop and the prepared state. Validates p first.
CavityParams measurement_params(const CavityParams& p);

/// Convenience builder: picks omega so that |alpha_ss|^2 = alpha_sq and
/// defaults beta to the real displacement +|alpha_ss|. The feedback kick is
/// phase-independent by design; rotating it is a deliberate override.
CavityParams params_for_alpha_sq(double alpha_sq, double phi, double eta,
                                 double kappa = 1.0);

}  // namespace cavfeed
