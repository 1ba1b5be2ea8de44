#include "cavfeed/fock.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace cavfeed {

int suggested_dim(double max_mean_photons) {
  if (!(max_mean_photons >= 0.0) || !std::isfinite(max_mean_photons))
    throw std::invalid_argument("max_mean_photons must be finite and >= 0");
  const double target = 4.0 * max_mean_photons + 20.0;
  int d = 1;
  while (static_cast<double>(d) < target) d *= 2;
  return d;
}

FockOperators build_operators(int dim) {
  if (dim < 2) throw std::invalid_argument("dim must be at least 2");
  FockOperators ops;
  ops.dim = dim;
  ops.c = DenseMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n)
    ops.c(n - 1, n) = Complex(std::sqrt(static_cast<double>(n)), 0.0);
  ops.c_dagger = ops.c.adjoint();
  ops.identity = DenseMatrix::Identity(dim, dim);
  return ops;
}

DenseVector coherent_state_vector(Complex alpha, int dim) {
  if (dim < 2) throw std::invalid_argument("dim must be at least 2");
  const double nbar = std::norm(alpha);
  if (nbar > static_cast<double>(dim) / 4.0)
    throw std::invalid_argument(
        "truncation too tight for this amplitude (need |alpha|^2 <= dim/4)");
  DenseVector v(dim);
  v(0) = Complex(std::exp(-0.5 * nbar), 0.0);
  for (int n = 1; n < dim; ++n)
    v(n) = v(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return v;
}

DenseMatrix coherent_state(Complex alpha, int dim) {
  const DenseVector v = coherent_state_vector(alpha, dim);
  return v * v.adjoint();
}

DenseMatrix displacement_operator(Complex beta, int dim) {
  if (dim < 2) throw std::invalid_argument("dim must be at least 2");
  const FockOperators ops = build_operators(dim);
  // exp(beta c^dag - beta* c) through the eigensystem of the Hermitian
  // matrix i(beta c^dag - beta* c); the result is unitary by construction
  const DenseMatrix h =
      Complex(0.0, 1.0) * (beta * ops.c_dagger - std::conj(beta) * ops.c);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h);
  const auto& lam = es.eigenvalues();
  DenseVector phase(dim);
  for (int k = 0; k < dim; ++k)
    phase(k) = std::exp(Complex(0.0, -lam(k)));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

FockWorkspace make_workspace(const CavityParams& p, int dim,
                             bool with_feedback) {
  const CavityParams vp = validated(p);
  if (dim < 2) throw std::invalid_argument("dim must be at least 2");
  FockWorkspace ws;
  ws.dim = dim;
  ws.params = vp;
  ws.with_feedback = with_feedback;
  ws.sqrt_n.resize(static_cast<std::size_t>(dim) + 1);
  for (int n = 0; n <= dim; ++n)
    ws.sqrt_n[static_cast<std::size_t>(n)] =
        std::sqrt(static_cast<double>(n));
  if (with_feedback) {
    ws.displacement = displacement_operator(vp.beta, dim);
    ws.displacement_dag = ws.displacement.adjoint();
  }
  const Complex phase(std::cos(vp.phi), -std::sin(vp.phi));
  ws.drive_plus = 0.5 * vp.omega * phase;
  ws.drive_minus = 0.5 * vp.omega * std::conj(phase);
  return ws;
}

DenseMatrix lindblad_rhs(const FockWorkspace& ws, const DenseMatrix& rho) {
  const int d = ws.dim;
  const double kappa = ws.params.kappa;
  const double eta = ws.params.eta;
  const auto& rt = ws.sqrt_n;

  // c rho c^dag by index shifts, no matrix product needed
  DenseMatrix crc(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      crc(i, j) = (i + 1 < d && j + 1 < d)
                      ? rt[static_cast<std::size_t>(i + 1)] *
                            rt[static_cast<std::size_t>(j + 1)] *
                            rho(i + 1, j + 1)
                      : Complex(0.0, 0.0);
    }
  }

  DenseMatrix out;
  if (ws.with_feedback && eta > 0.0) {
    // detected fraction of the recycled photon flux re-enters displaced
    out = kappa * ((1.0 - eta) * crc +
                   eta * (ws.displacement * crc * ws.displacement_dag));
  } else {
    out = kappa * crc;
  }

  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      out(i, j) -= 0.5 * kappa *
                   (static_cast<double>(i) + static_cast<double>(j)) *
                   rho(i, j);

  if (ws.params.omega != 0.0) {
    const Complex dp = ws.drive_plus;
    const Complex dm = ws.drive_minus;
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) {
        Complex v(0.0, 0.0);
        if (i > 0) v += dp * rt[static_cast<std::size_t>(i)] * rho(i - 1, j);
        if (i + 1 < d)
          v -= dm * rt[static_cast<std::size_t>(i + 1)] * rho(i + 1, j);
        if (j + 1 < d)
          v -= dp * rt[static_cast<std::size_t>(j + 1)] * rho(i, j + 1);
        if (j > 0) v += dm * rt[static_cast<std::size_t>(j)] * rho(i, j - 1);
        out(i, j) += v;
      }
    }
  }
  return out;
}

double mean_photon_number(const DenseMatrix& rho) {
  double s = 0.0;
  for (int n = 0; n < rho.rows(); ++n)
    s += static_cast<double>(n) * rho(n, n).real();
  return s;
}

OracleRun integrate_observed(const DenseMatrix& rho0, const CavityParams& p,
                             double t, double dt, bool with_feedback,
                             double leak_threshold) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument("t must be finite and >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("dt must be positive");
  if (rho0.rows() != rho0.cols() || rho0.rows() < 2)
    throw std::invalid_argument("rho0 must be square, dim >= 2");

  const int d = static_cast<int>(rho0.rows());
  const FockWorkspace ws = make_workspace(p, d, with_feedback);

  OracleRun run;
  run.leak_threshold = leak_threshold;
  run.rho = rho0;

  const auto n_full = static_cast<std::uint64_t>(std::floor(t / dt + 1e-9));
  const double tail = t - static_cast<double>(n_full) * dt;

  double now = 0.0;
  auto observe = [&]() {
    const double top = run.rho(d - 1, d - 1).real();
    run.times.push_back(now);
    run.mean_photon.push_back(mean_photon_number(run.rho));
    run.top_population.push_back(top);
    if (!run.breach_time && top > leak_threshold) run.breach_time = now;
  };
  observe();

  DenseMatrix k1, k2, k3, k4;
  auto step = [&](double h) {
    k1 = lindblad_rhs(ws, run.rho);
    k2 = lindblad_rhs(ws, run.rho + (0.5 * h) * k1);
    k3 = lindblad_rhs(ws, run.rho + (0.5 * h) * k2);
    k4 = lindblad_rhs(ws, run.rho + h * k3);
    run.rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    // rounding drifts the state off the Hermitian manifold; pull it back
    run.rho = 0.5 * (run.rho + run.rho.adjoint().eval());
    now += h;
  };

  for (std::uint64_t s = 0; s < n_full; ++s) {
    step(dt);
    observe();
  }
  if (tail > 1e-12 * std::max(1.0, t)) {
    step(tail);
    observe();
  }
  return run;
}

DenseMatrix integrate(const DenseMatrix& rho0, const CavityParams& p,
                      double t, double dt, bool with_feedback,
                      double leak_threshold) {
  OracleRun run =
      integrate_observed(rho0, p, t, dt, with_feedback, leak_threshold);
  if (run.breach_time)
    throw LeakageError("truncation leakage threshold crossed at t = " +
                       std::to_string(*run.breach_time));
  return run.rho;
}

DensityCheck check_density(const DenseMatrix& rho) {
  DensityCheck chk;
  const DenseMatrix herm = rho - rho.adjoint().eval();
  chk.hermiticity_dev = herm.cwiseAbs().maxCoeff();
  chk.trace_dev = std::abs(rho.trace() - Complex(1.0, 0.0));
  const DenseMatrix sym = 0.5 * (rho + rho.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym);
  chk.min_eigenvalue = es.eigenvalues().minCoeff();
  chk.top_population =
      rho(rho.rows() - 1, rho.cols() - 1).real();
  return chk;
}

}  // namespace cavfeed
