#include "cavfeed/kraus.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace cavfeed {

KrausPair make_kraus_pair(const Qubit& basis0, const Qubit& basis1,
                          const Qubit& post0, const Qubit& post1) {
  if (std::abs(basis0.norm() - 1.0) > 1e-12 ||
      std::abs(basis1.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("measured basis states must be normalized");
  if (std::abs(basis0.dot(basis1)) > 1e-12)
    throw std::invalid_argument("measured basis states must be orthogonal");
  return KrausPair{basis0, basis1, post0, post1};
}

double completeness_deviation(const KrausPair& pair) {
  const QubitMatrix k0 = pair.k0();
  const QubitMatrix k1 = pair.k1();
  const QubitMatrix s =
      k0.adjoint() * k0 + k1.adjoint() * k1 - QubitMatrix::Identity();
  return s.cwiseAbs().maxCoeff();
}

namespace {

void check_measurement_args(const Qubit& psi, int n) {
  if (std::abs(psi.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("psi must be normalized");
  if (n < 1 || n > 20)
    throw std::invalid_argument("n must lie in [1, 20]");
}

}  // namespace

MeasurementTable sequential_measurement_distribution(const KrausPair& pair,
                                                     const Qubit& psi,
                                                     int n) {
  check_measurement_args(psi, n);
  const QubitMatrix k[2] = {pair.k0(), pair.k1()};

  MeasurementTable table;
  table.n = n;
  table.completeness_dev = completeness_deviation(pair);
  table.valid_instrument = table.completeness_dev <= 1e-10;
  table.probability.resize(std::size_t{1} << n);
  for (std::size_t s = 0; s < table.probability.size(); ++s) {
    Qubit state = psi;
    for (int step = 0; step < n; ++step) {
      const std::size_t bit = (s >> (n - 1 - step)) & 1u;
      state = k[bit] * state;
    }
    table.probability[s] = state.squaredNorm();
  }
  return table;
}

Eigen::VectorXcd entangled_equivalent_state(const KrausPair& pair,
                                            const Qubit& psi, int n) {
  check_measurement_args(psi, n);
  const Qubit basis[2] = {pair.basis0, pair.basis1};
  const Qubit post[2] = {pair.post0, pair.post1};
  // Eigen's dot conjugates its first argument, i.e. basis.dot(x) = <basis|x>
  const Complex overlap_psi[2] = {basis[0].dot(psi), basis[1].dot(psi)};
  Complex cross[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) cross[i][j] = basis[j].dot(post[i]);
  const double post_norm[2] = {post[0].norm(), post[1].norm()};

  Eigen::VectorXcd amp(std::int64_t{1} << n);
  for (std::size_t s = 0; s < static_cast<std::size_t>(amp.size()); ++s) {
    std::size_t prev = (s >> (n - 1)) & 1u;
    Complex a = overlap_psi[prev];
    for (int step = 1; step < n; ++step) {
      const std::size_t bit = (s >> (n - 1 - step)) & 1u;
      a *= cross[prev][bit];
      prev = bit;
    }
    // the final collapse contributes only its norm, so |a|^2 matches the
    // sequential probability even for unnormalized post states
    amp(static_cast<std::int64_t>(s)) = a * post_norm[prev];
  }
  return amp;
}

}  // namespace cavfeed
