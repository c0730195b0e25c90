#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace koopman {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A real-valued observable on the state space. For monomials the exponent
/// tuple doubles as the serialisable descriptor.
struct Observable {
  std::function<double(const VectorXd&)> eval;
  std::vector<int> exponents;  // empty for non-monomial observables
};

/// Ordered observable basis with a protected head of size s. When
/// coordinate_head is set, the first n observables are the coordinate
/// functions, so lift(x) starts with x itself.
struct Dictionary {
  int n = 0;
  int s = 0;
  bool coordinate_head = false;
  std::vector<Observable> observables;

  int size() const { return static_cast<int>(observables.size()); }

  VectorXd lift(const VectorXd& x) const;
  MatrixXd lift_batch(const std::vector<VectorXd>& states) const;
};

/// All monomials x^a with total degree <= max_degree. Ordering: the n
/// coordinate functions first, then the remaining monomials by ascending
/// total degree with graded-lex tie break (x1^2 before x1*x2 before x2^2).
/// The constant sits at position n, never in the protected head.
Dictionary monomial_dictionary(int n, int max_degree, int s = -1);

/// Pi = [I_n 0]; only defined for coordinate-head dictionaries.
MatrixXd coordinate_matrix(const Dictionary& dict);

/// Descriptor round-trip, enough to rebuild the lift of a saved model.
nlohmann::json dictionary_to_json(const Dictionary& dict);
Dictionary dictionary_from_json(const nlohmann::json& j);

}  // namespace koopman
