#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "koopman/dynamics.hpp"

namespace koopman {

/// Lifted linear recursion z(t+1) = K^T z(t), z(0) = lift(x0), with state
/// read-out x_hat = Pi z.
struct KoopmanLinearSystem {
  MatrixXd K;                                      // l x l
  std::function<VectorXd(const VectorXd&)> lift;   // state -> length-l vector
  MatrixXd Pi;                                     // n x l
};

/// (N+1) x l lifted trajectory; row t is z(t).
MatrixXd rollout_lifted(const KoopmanLinearSystem& kls, const VectorXd& x0, int N);

Trajectory predict_states(const KoopmanLinearSystem& kls, const VectorXd& x0, int N);

/// d_N: sum over t = 0..N of the Euclidean state-error norms.
double trajectory_distance(const MatrixXd& xi, const MatrixXd& zeta, int N);

/// (1/N) sum_{t=0..N} ||truth(t) - pred(t)||_2 -- 21 summands with a 1/20
/// prefactor at N = 20.
double mean_prediction_error(const MatrixXd& truth, const MatrixXd& pred, int N);

/// Empirical invariance measure: max of d_N(truth, prediction) over the
/// test states.
double invariance_estimate(const KoopmanLinearSystem& kls, const SampledMap& map,
                           const std::vector<VectorXd>& test_states, int N);

struct ErrorGridResult {
  Eigen::VectorXd x1;       // grid nodes, axis 1
  Eigen::VectorXd x2;       // grid nodes, axis 2
  MatrixXd eps_full;        // res2 x res1
  MatrixXd eps_reduced;
  MatrixXd diff;            // eps_full - eps_reduced
  std::vector<std::string> cell_errors;  // integrator failures, "i,j: what"

  struct Stats {
    double mean, median, max;
  };
  Stats full_stats() const;
  Stats reduced_stats() const;
  Stats diff_stats() const;
};

/// Evaluates eps_f and eps_r at each node of a resolution1 x resolution2
/// grid over the box. Cells parallelise over `threads` workers; failed
/// cells are recorded and set to NaN.
ErrorGridResult error_grid(const KoopmanLinearSystem& full,
                           const KoopmanLinearSystem& reduced,
                           const SampledMap& map, const VectorXd& lo,
                           const VectorXd& hi, int resolution, int N,
                           int threads = 0);

/// CSV: x1, x2, eps_full, eps_reduced, diff.
void write_error_grid_csv(const ErrorGridResult& grid, const std::string& path);

}  // namespace koopman
