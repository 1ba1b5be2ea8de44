#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cavfeed/params.hpp"

namespace cavfeed {

using Qubit = Eigen::Vector2cd;
using QubitMatrix = Eigen::Matrix2cd;

/// Rank-one measurement pair on a two-level probe: K_i = |post_i><basis_i|.
/// The measured basis must be orthonormal; the post-measurement states are
/// arbitrary (leaving them unnormalized models an invalid instrument, which
/// the distribution op reports rather than rejects).
struct KrausPair {
  Qubit basis0, basis1;
  Qubit post0, post1;

  QubitMatrix k0() const { return post0 * basis0.adjoint(); }
  QubitMatrix k1() const { return post1 * basis1.adjoint(); }
};

/// Validates orthonormality of the measured basis to 1e-12.
KrausPair make_kraus_pair(const Qubit& basis0, const Qubit& basis1,
                          const Qubit& post0, const Qubit& post1);

/// Max-norm of K0^dag K0 + K1^dag K1 - I.
double completeness_deviation(const KrausPair& pair);

/// Outcome statistics of n sequential measurements. Strings are indexed
/// with the FIRST outcome as the most significant bit, so index 0b01 at
/// n=2 means "first 0, then 1".
struct MeasurementTable {
  int n = 0;
  std::vector<double> probability;  ///< 2^n entries, raw norms
  double completeness_dev = 0.0;
  bool valid_instrument = false;  ///< completeness_dev <= 1e-10
};

/// p(i1..in) = || K_{i_n} ... K_{i_1} |psi> ||^2 for every outcome string.
/// psi must be normalized; n in [1, 20].
MeasurementTable sequential_measurement_distribution(const KrausPair& pair,
                                                     const Qubit& psi, int n);

/// Amplitudes of the n-party entangled state whose single-shot measurement
/// reproduces the sequential statistics: the coefficient on
/// |basis_{i_1}> x ... x |basis_{i_n}> is
/// <basis_{i_1}|psi> * prod_k <basis_{i_k}|post_{i_{k-1}}> * ||post_{i_n}||,
/// whose squared modulus equals the sequential probability identically.
/// Same string indexing as the table.
Eigen::VectorXcd entangled_equivalent_state(const KrausPair& pair,
                                            const Qubit& psi, int n);

}  // namespace cavfeed
