#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace koopman {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Continuous-time vector field x' = eval(x).
struct VectorField {
  int dim = 0;
  std::function<VectorXd(const VectorXd&)> eval;
};

struct IntegratorSettings {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double initial_step_fraction = 0.1;  // of dt
  double min_step = 1e-14;
};

/// Discrete-time map obtained by flowing a vector field for a fixed
/// sampling time dt.
struct SampledMap {
  VectorField field;
  double dt = 0.1;
  IntegratorSettings settings;
};

struct IntegratorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Row t holds the state at time step t; states.rows() == horizon + 1.
struct Trajectory {
  MatrixXd states;
  VectorXd x0;
};

struct TrainingSet {
  std::vector<std::pair<VectorXd, VectorXd>> pairs;
  int size() const { return static_cast<int>(pairs.size()); }
};

/// Unforced, undamped Duffing oscillator: x1' = x2, x2' = x1 - x1^3.
VectorField duffing_field();

/// Linear field x' = C x; its sampled map is x+ = exp(C dt) x.
VectorField linear_field(const MatrixXd& C);

/// Flow `x` forward by map.dt with an embedded Dormand-Prince RK5(4) pair.
/// Throws IntegratorError on step-size underflow.
VectorXd step(const SampledMap& map, const VectorXd& x);

/// L i.i.d. uniform samples on the box [lo, hi], reproducible for fixed seed.
std::vector<VectorXd> sample_states(const VectorXd& lo, const VectorXd& hi,
                                    int count, std::uint64_t seed);

/// Snapshot pairs (x_i, f(x_i)); integrator failures carry the pair index.
TrainingSet generate_pairs(const SampledMap& map,
                           const std::vector<VectorXd>& states);

Trajectory rollout_truth(const SampledMap& map, const VectorXd& x0, int N);

/// CSV export, one row per state, time column first.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
void write_training_csv(const TrainingSet& ts, const std::string& path);

}  // namespace koopman
