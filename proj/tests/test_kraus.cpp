// Two-level probe measurements: rank-one Kraus pairs, sequential outcome
// statistics, and the entangled state that reproduces them in one shot.

#include <cmath>
#include <complex>
#include <stdexcept>

#include "cavfeed/kraus.hpp"
#include "doctest.h"

using namespace cavfeed;

namespace {

const Complex I_unit(0.0, 1.0);

Qubit ket0() { return Qubit(1.0, 0.0); }
Qubit ket1() { return Qubit(0.0, 1.0); }
Qubit ket_plus() { return Qubit(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)); }
Qubit ket_minus() {
  return Qubit(1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0));
}

double table_sum(const MeasurementTable& t) {
  double s = 0.0;
  for (double p : t.probability) s += p;
  return s;
}

}  // namespace

TEST_CASE("constructing a pair validates the measured basis") {
  CHECK_NOTHROW(make_kraus_pair(ket0(), ket1(), ket0(), ket1()));
  CHECK_NOTHROW(make_kraus_pair(ket_plus(), ket_minus(), ket1(), ket0()));

  SUBCASE("non-normalized basis vectors are rejected") {
    CHECK_THROWS_AS(make_kraus_pair(2.0 * ket0(), ket1(), ket0(), ket1()),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_kraus_pair(ket0(), 0.5 * ket1(), ket0(), ket1()),
                    std::invalid_argument);
  }
  SUBCASE("non-orthogonal basis vectors are rejected") {
    CHECK_THROWS_AS(make_kraus_pair(ket0(), ket_plus(), ket0(), ket1()),
                    std::invalid_argument);
  }
  SUBCASE("post-measurement states are unconstrained") {
    CHECK_NOTHROW(
        make_kraus_pair(ket0(), ket1(), 3.0 * ket_plus(), Qubit(0.0, 0.0)));
  }
}

TEST_CASE("a single measurement reproduces the Born rule") {
  // normalized post states make the pair a proper instrument, and the
  // outcome weights depend only on the measured-basis overlaps
  const KrausPair pair = make_kraus_pair(ket0(), ket1(), ket_plus(), ket1());
  const double theta = 0.7;
  const Qubit psi(std::cos(theta), std::sin(theta) * std::exp(I_unit * 0.3));

  const MeasurementTable t = sequential_measurement_distribution(pair, psi, 1);
  REQUIRE(t.n == 1);
  REQUIRE(t.probability.size() == 2);
  CHECK(t.valid_instrument);
  CHECK(t.completeness_dev <= 1e-12);
  CHECK(t.probability[0] ==
        doctest::Approx(std::cos(theta) * std::cos(theta)).epsilon(1e-12));
  CHECK(t.probability[1] ==
        doctest::Approx(std::sin(theta) * std::sin(theta)).epsilon(1e-12));
  CHECK(table_sum(t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("projective measurements repeat their first outcome") {
  const KrausPair pair = make_kraus_pair(ket0(), ket1(), ket0(), ket1());
  const Qubit psi(0.6, 0.8);
  const MeasurementTable t = sequential_measurement_distribution(pair, psi, 3);
  REQUIRE(t.probability.size() == 8);
  CHECK(t.probability[0b000] == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(t.probability[0b111] == doctest::Approx(0.64).epsilon(1e-12));
  for (std::size_t s = 1; s < 7; ++s)
    CHECK(t.probability[s] == 0.0);
  CHECK(table_sum(t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a swap instrument alternates outcomes deterministically") {
  // each detection leaves the probe in the other basis state, so the only
  // strings with weight are the two alternating ones
  const KrausPair pair = make_kraus_pair(ket0(), ket1(), ket1(), ket0());
  const MeasurementTable t =
      sequential_measurement_distribution(pair, ket_plus(), 2);
  REQUIRE(t.probability.size() == 4);
  CHECK(t.probability[0b00] == 0.0);
  CHECK(t.probability[0b01] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.probability[0b10] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.probability[0b11] == 0.0);
  CHECK(t.valid_instrument);

  SUBCASE("the equivalent entangled state carries the same two branches") {
    const Eigen::VectorXcd amp = entangled_equivalent_state(pair, ket_plus(), 2);
    REQUIRE(amp.size() == 4);
    CHECK(std::abs(amp(0b00)) == 0.0);
    CHECK(std::abs(amp(0b01)) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::abs(amp(0b10)) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::abs(amp(0b11)) == 0.0);
  }
}

TEST_CASE("sequential statistics match the entangled equivalent state") {
  // generic pair: complex posts, measured basis away from the poles
  const Qubit b0 = ket_plus();
  const Qubit b1 = ket_minus();
  const Qubit p0(0.6, 0.8 * I_unit);
  const Qubit p1(1.0 / std::sqrt(3.0), (1.0 + I_unit) / std::sqrt(3.0));
  const KrausPair pair = make_kraus_pair(b0, b1, p0, p1);
  const Qubit psi(Complex(0.48, 0.36), Complex(0.8, 0.0));

  for (int n = 1; n <= 6; ++n) {
    const MeasurementTable t =
        sequential_measurement_distribution(pair, psi, n);
    const Eigen::VectorXcd amp = entangled_equivalent_state(pair, psi, n);
    REQUIRE(t.probability.size() == static_cast<std::size_t>(amp.size()));
    for (std::size_t s = 0; s < t.probability.size(); ++s)
      CHECK(std::norm(amp(static_cast<std::int64_t>(s))) ==
            doctest::Approx(t.probability[s]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("equivalence also holds for an invalid instrument") {
  // the identity is algebraic, so it survives posts that break completeness
  const KrausPair pair =
      make_kraus_pair(ket0(), ket1(), 0.9 * ket_plus(), ket_minus());
  const Qubit psi(0.6, 0.8);
  const MeasurementTable t = sequential_measurement_distribution(pair, psi, 4);
  CHECK_FALSE(t.valid_instrument);
  CHECK(t.completeness_dev == doctest::Approx(0.19).epsilon(1e-12));
  CHECK(table_sum(t) < 1.0);

  const Eigen::VectorXcd amp = entangled_equivalent_state(pair, psi, 4);
  for (std::size_t s = 0; s < t.probability.size(); ++s)
    CHECK(std::norm(amp(static_cast<std::int64_t>(s))) ==
          doctest::Approx(t.probability[s]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("measurement arguments are validated") {
  const KrausPair pair = make_kraus_pair(ket0(), ket1(), ket0(), ket1());
  CHECK_THROWS_AS(sequential_measurement_distribution(pair, 2.0 * ket0(), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(sequential_measurement_distribution(pair, ket0(), 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sequential_measurement_distribution(pair, ket0(), 21),
                  std::invalid_argument);
  CHECK_THROWS_AS(entangled_equivalent_state(pair, 2.0 * ket0(), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(entangled_equivalent_state(pair, ket0(), 0),
                  std::invalid_argument);
  CHECK_NOTHROW(sequential_measurement_distribution(pair, ket0(), 20));
}
