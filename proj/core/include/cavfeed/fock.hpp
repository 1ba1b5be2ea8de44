#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cavfeed/params.hpp"

namespace cavfeed {

using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

/// Thrown when the integrator's top-level population crosses the leakage
/// threshold, i.e. the truncated basis stopped containing the state.
class LeakageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest power of two >= 4 * max_mean_photons + 20. Feedback growth can
/// defeat any static truncation, so runs monitor leakage regardless.
int suggested_dim(double max_mean_photons);

/// Ladder and identity matrices in the photon-number basis.
struct FockOperators {
  int dim = 0;
  DenseMatrix c;
  DenseMatrix c_dagger;
  DenseMatrix identity;
};

FockOperators build_operators(int dim);

/// Fock expansion of a coherent state, e^{-|a|^2/2} a^n / sqrt(n!).
/// Rejects truncations tighter than |alpha|^2 <= dim / 4.
DenseVector coherent_state_vector(Complex alpha, int dim);

/// The corresponding pure density matrix.
DenseMatrix coherent_state(Complex alpha, int dim);

/// Unitary displacement by beta, built by exponentiating
/// beta c^dag - conj(beta) c through its eigendecomposition (exactly
/// unitary by construction, validated against the coherent expansion).
DenseMatrix displacement_operator(Complex beta, int dim);

/// Precomputed workspace for the master-equation right-hand side.
struct FockWorkspace {
  int dim = 0;
  CavityParams params;
  bool with_feedback = false;
  std::vector<double> sqrt_n;  ///< sqrt(n) ladder factors, index 0..dim
  DenseMatrix displacement;    ///< D(beta)
  DenseMatrix displacement_dag;
  Complex drive_plus{0.0, 0.0};   ///< coefficient of the c^dag shift in -i[H, .]
  Complex drive_minus{0.0, 0.0};  ///< coefficient of the c shift
};

FockWorkspace make_workspace(const CavityParams& p, int dim,
                             bool with_feedback);

/// Right-hand side of the cavity master equation: coherent drive, the
/// standard photon-loss dissipator, and (with feedback on) the detected
/// fraction of the recycling term displaced by D(beta). Trace-free by
/// construction up to rounding.
DenseMatrix lindblad_rhs(const FockWorkspace& ws, const DenseMatrix& rho);

/// Integration trace: photon-number expectation and top-level population on
/// the step grid, plus the first time the leakage threshold was crossed
/// (the state keeps evolving afterwards; callers decide what is still
/// trustworthy).
struct OracleRun {
  DenseMatrix rho;
  std::vector<double> times;
  std::vector<double> mean_photon;
  std::vector<double> top_population;
  std::optional<double> breach_time;
  double leak_threshold = 0.0;

  bool valid_at(double t) const {
    return !breach_time || t < *breach_time;
  }
};

/// Classical 4th-order fixed-step integration of the master equation with
/// the state re-Hermitized each step. dt must satisfy the usual check that
/// halving it leaves the observable unchanged at the required tolerance;
/// the defaults used by the validation harness do.
OracleRun integrate_observed(const DenseMatrix& rho0, const CavityParams& p,
                             double t, double dt, bool with_feedback,
                             double leak_threshold = 1e-6);

/// As integrate_observed, but a leakage breach throws LeakageError.
DenseMatrix integrate(const DenseMatrix& rho0, const CavityParams& p,
                      double t, double dt, bool with_feedback,
                      double leak_threshold = 1e-6);

double mean_photon_number(const DenseMatrix& rho);

/// Consistency measures for the density-matrix invariants.
struct DensityCheck {
  double hermiticity_dev = 0.0;
  double trace_dev = 0.0;
  double min_eigenvalue = 0.0;
  double top_population = 0.0;
};

DensityCheck check_density(const DenseMatrix& rho);

}  // namespace cavfeed
