#include "koopman/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "koopman/rng.hpp"

namespace koopman {

VectorField duffing_field() {
  VectorField f;
  f.dim = 2;
  f.eval = [](const VectorXd& x) {
    VectorXd dx(2);
    dx(0) = x(1);
    dx(1) = x(0) - x(0) * x(0) * x(0);
    return dx;
  };
  return f;
}

VectorField linear_field(const MatrixXd& C) {
  if (C.rows() != C.cols()) throw std::invalid_argument("linear_field: C must be square");
  VectorField f;
  f.dim = static_cast<int>(C.rows());
  f.eval = [C](const VectorXd& x) -> VectorXd { return C * x; };
  return f;
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 4th-order embedded weights.
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

}  // namespace

VectorXd step(const SampledMap& map, const VectorXd& x) {
  if (x.size() != map.field.dim)
    throw std::invalid_argument("step: state dimension mismatch");
  const auto& f = map.field.eval;
  const IntegratorSettings& st = map.settings;

  VectorXd y = x;
  double t = 0.0;
  double h = map.dt * st.initial_step_fraction;
  VectorXd k1 = f(y);

  while (t < map.dt) {
    h = std::min(h, map.dt - t);
    if (h < st.min_step)
      throw IntegratorError("integrator step size underflow at t = " + std::to_string(t));

    VectorXd k2 = f(y + h * (a21 * k1));
    VectorXd k3 = f(y + h * (a31 * k1 + a32 * k2));
    VectorXd k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    VectorXd k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    VectorXd k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    VectorXd y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    VectorXd k7 = f(y5);
    VectorXd y4 = y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    if (!y5.allFinite())
      throw IntegratorError("integrator produced a non-finite state");

    // Scaled error norm; accept when err <= 1.
    double err = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double sc = st.abs_tol + st.rel_tol * std::max(std::abs(y(i)), std::abs(y5(i)));
      const double e = (y5(i) - y4(i)) / sc;
      err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(y.size()));

    if (err <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;  // FSAL
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
    h *= fac;
  }
  return y;
}

std::vector<VectorXd> sample_states(const VectorXd& lo, const VectorXd& hi,
                                    int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_states: count must be >= 1");
  if (lo.size() != hi.size()) throw std::invalid_argument("sample_states: box dimension mismatch");
  Rng rng(seed);
  std::vector<VectorXd> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    VectorXd x(lo.size());
    for (int k = 0; k < lo.size(); ++k) x(k) = rng.uniform(lo(k), hi(k));
    out.push_back(std::move(x));
  }
  return out;
}

TrainingSet generate_pairs(const SampledMap& map,
                           const std::vector<VectorXd>& states) {
  TrainingSet ts;
  ts.pairs.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    try {
      ts.pairs.emplace_back(states[i], step(map, states[i]));
    } catch (const IntegratorError& e) {
      throw IntegratorError("pair " + std::to_string(i) + ": " + e.what());
    }
  }
  return ts;
}

Trajectory rollout_truth(const SampledMap& map, const VectorXd& x0, int N) {
  if (N < 1) throw std::invalid_argument("rollout_truth: N must be >= 1");
  Trajectory traj;
  traj.x0 = x0;
  traj.states.resize(N + 1, x0.size());
  traj.states.row(0) = x0.transpose();
  VectorXd x = x0;
  for (int t = 0; t < N; ++t) {
    x = step(map, x);
    traj.states.row(t + 1) = x.transpose();
  }
  return traj;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "t";
  for (int k = 0; k < traj.states.cols(); ++k) out << ",x" << (k + 1);
  out << "\n";
  for (int t = 0; t < traj.states.rows(); ++t) {
    out << t;
    for (int k = 0; k < traj.states.cols(); ++k) out << "," << traj.states(t, k);
    out << "\n";
  }
}

void write_training_csv(const TrainingSet& ts, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  if (ts.pairs.empty()) return;
  const int n = static_cast<int>(ts.pairs.front().first.size());
  out << "i";
  for (int k = 0; k < n; ++k) out << ",x" << (k + 1);
  for (int k = 0; k < n; ++k) out << ",y" << (k + 1);
  out << "\n";
  for (std::size_t i = 0; i < ts.pairs.size(); ++i) {
    out << i;
    for (int k = 0; k < n; ++k) out << "," << ts.pairs[i].first(k);
    for (int k = 0; k < n; ++k) out << "," << ts.pairs[i].second(k);
    out << "\n";
  }
}

}  // namespace koopman
