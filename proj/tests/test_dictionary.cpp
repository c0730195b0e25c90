#include "doctest.h"
#include "koopman/dictionary.hpp"
#include "koopman/dynamics.hpp"
#include "koopman/rng.hpp"

using namespace koopman;

namespace {
long long binomial(int n, int k) {
  long long b = 1;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}
}  // namespace

TEST_CASE("monomial counts") {
  CHECK(monomial_dictionary(2, 7).size() == 36);
  CHECK(monomial_dictionary(1, 1).size() == 2);
  CHECK(monomial_dictionary(2, 2).size() == 6);
  for (int n = 1; n <= 3; ++n)
    for (int deg = 1; deg <= 5; ++deg)
      CHECK(monomial_dictionary(n, deg).size() == binomial(n + deg, deg));
}

TEST_CASE("lift ordering, n=2 degree 2") {
  const Dictionary dict = monomial_dictionary(2, 2);
  VectorXd x(2);
  x << 2, 3;
  const VectorXd z = dict.lift(x);
  REQUIRE(z.size() == 6);
  VectorXd expect(6);
  expect << 2, 3, 1, 4, 6, 9;  // x1, x2, 1, x1^2, x1*x2, x2^2
  CHECK((z - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lift at zero: only the constant survives") {
  const Dictionary dict = monomial_dictionary(2, 3);
  const VectorXd z = dict.lift(VectorXd::Zero(2));
  for (int k = 0; k < z.size(); ++k) CHECK(z(k) == (k == 2 ? 1.0 : 0.0));
}

TEST_CASE("coordinate head reproduces the state") {
  const Dictionary dict = monomial_dictionary(3, 4);
  CHECK(dict.coordinate_head);
  CHECK(dict.s == 3);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd x(3);
    for (int k = 0; k < 3; ++k) x(k) = rng.uniform(-2, 2);
    CHECK((dict.lift(x).head(3) - x).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("coordinate_matrix is [I 0] and left-inverts the lift") {
  const Dictionary dict = monomial_dictionary(2, 7);
  const MatrixXd Pi = coordinate_matrix(dict);
  REQUIRE(Pi.rows() == 2);
  REQUIRE(Pi.cols() == 36);
  CHECK((Pi.leftCols(2) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Pi.rightCols(34).isZero(0.0));

  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd x(2);
    x << rng.uniform(-2, 2), rng.uniform(-2, 2);
    CHECK(((Pi * dict.lift(x)) - x).cwiseAbs().maxCoeff() == 0.0);
  }

  Dictionary headless = dict;
  headless.coordinate_head = false;
  CHECK_THROWS((void)coordinate_matrix(headless));
}

TEST_CASE("lift_batch matches per-state lifts") {
  const Dictionary dict = monomial_dictionary(2, 3);
  const auto states = sample_states(VectorXd::Constant(2, -1.0),
                                    VectorXd::Constant(2, 1.0), 3, 9);
  const MatrixXd B = dict.lift_batch(states);
  REQUIRE(B.rows() == dict.size());
  REQUIRE(B.cols() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK((B.col(i) - dict.lift(states[i])).cwiseAbs().maxCoeff() == 0.0);
  CHECK(dict.lift_batch({}).cols() == 0);
}

TEST_CASE("json descriptor round-trip") {
  const Dictionary dict = monomial_dictionary(2, 4, 3);
  const Dictionary back = dictionary_from_json(dictionary_to_json(dict));
  CHECK(back.n == dict.n);
  CHECK(back.s == dict.s);
  CHECK(back.coordinate_head == dict.coordinate_head);
  REQUIRE(back.size() == dict.size());
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd x(2);
    x << rng.uniform(-2, 2), rng.uniform(-2, 2);
    CHECK((back.lift(x) - dict.lift(x)).cwiseAbs().maxCoeff() == 0.0);
  }
}
