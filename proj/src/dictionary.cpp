#include "koopman/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace koopman {

namespace {

Observable make_monomial(const std::vector<int>& exps) {
  Observable obs;
  obs.exponents = exps;
  obs.eval = [exps](const VectorXd& x) {
    double v = 1.0;
    for (std::size_t k = 0; k < exps.size(); ++k) {
      for (int e = 0; e < exps[k]; ++e) v *= x(static_cast<int>(k));
    }
    return v;
  };
  return obs;
}

void enumerate_exponents(int n, int max_degree, std::vector<int>& current,
                         int pos, int remaining, std::vector<std::vector<int>>& out) {
  if (pos == n) {
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[pos] = e;
    enumerate_exponents(n, max_degree, current, pos + 1, remaining - e, out);
  }
  current[pos] = 0;
}

int total_degree(const std::vector<int>& exps) {
  int d = 0;
  for (int e : exps) d += e;
  return d;
}

bool is_coordinate(const std::vector<int>& exps, int k) {
  if (exps[k] != 1) return false;
  return total_degree(exps) == 1;
}

}  // namespace

Dictionary monomial_dictionary(int n, int max_degree, int s) {
  if (n < 1 || max_degree < 1)
    throw std::invalid_argument("monomial_dictionary: n and max_degree must be >= 1");
  if (s < 0) s = n;
  if (s < n) throw std::invalid_argument("monomial_dictionary: s must be >= n");

  std::vector<std::vector<int>> all;
  std::vector<int> current(n, 0);
  enumerate_exponents(n, max_degree, current, 0, max_degree, all);

  // Tail: ascending total degree, graded-lex tie break (larger leading
  // exponent first), which lists x1^2, x1*x2, x2^2 in that order.
  std::vector<std::vector<int>> tail;
  for (const auto& e : all) {
    bool coord = false;
    for (int k = 0; k < n; ++k) coord = coord || is_coordinate(e, k);
    if (!coord) tail.push_back(e);
  }
  std::sort(tail.begin(), tail.end(), [](const auto& a, const auto& b) {
    const int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return a > b;  // lexicographic, larger exponent on x1 first
  });

  Dictionary dict;
  dict.n = n;
  dict.s = s;
  dict.coordinate_head = true;
  for (int k = 0; k < n; ++k) {
    std::vector<int> e(n, 0);
    e[k] = 1;
    dict.observables.push_back(make_monomial(e));
  }
  for (const auto& e : tail) dict.observables.push_back(make_monomial(e));

  if (dict.size() <= s)
    throw std::invalid_argument("monomial_dictionary: M must exceed s");
  return dict;
}

VectorXd Dictionary::lift(const VectorXd& x) const {
  if (x.size() != n) throw std::invalid_argument("lift: state dimension mismatch");
  VectorXd z(size());
  for (int k = 0; k < size(); ++k) z(k) = observables[k].eval(x);
  return z;
}

MatrixXd Dictionary::lift_batch(const std::vector<VectorXd>& states) const {
  MatrixXd Z(size(), static_cast<int>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) Z.col(static_cast<int>(i)) = lift(states[i]);
  return Z;
}

MatrixXd coordinate_matrix(const Dictionary& dict) {
  if (!dict.coordinate_head)
    throw std::invalid_argument("coordinate_matrix: dictionary has no coordinate head");
  MatrixXd Pi = MatrixXd::Zero(dict.n, dict.size());
  Pi.leftCols(dict.n) = MatrixXd::Identity(dict.n, dict.n);
  return Pi;
}

nlohmann::json dictionary_to_json(const Dictionary& dict) {
  nlohmann::json j;
  j["n"] = dict.n;
  j["s"] = dict.s;
  j["coordinate_head"] = dict.coordinate_head;
  j["exponents"] = nlohmann::json::array();
  for (const auto& obs : dict.observables) {
    if (obs.exponents.empty())
      throw std::runtime_error("dictionary_to_json: non-monomial observable is not serialisable");
    j["exponents"].push_back(obs.exponents);
  }
  return j;
}

Dictionary dictionary_from_json(const nlohmann::json& j) {
  Dictionary dict;
  dict.n = j.at("n").get<int>();
  dict.s = j.at("s").get<int>();
  dict.coordinate_head = j.at("coordinate_head").get<bool>();
  for (const auto& e : j.at("exponents"))
    dict.observables.push_back(make_monomial(e.get<std::vector<int>>()));
  return dict;
}

}  // namespace koopman
