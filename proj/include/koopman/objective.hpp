#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "koopman/dictionary.hpp"
#include "koopman/dynamics.hpp"
#include "koopman/edmd.hpp"

namespace koopman {

/// Everything the N-step prediction-error objective needs, precomputed once:
/// the cached A_E blocks, ground-truth test trajectories, and the lifted,
/// basis-transformed test initial states w_i = P Psi(x_i).
struct ObjectiveContext {
  MatrixXd A;                  // A_E, M x M
  MatrixXd Q11;                // n x n state read-out block
  int s = 0, n = 0, r = 0;
  int N = 0, J = 0;
  std::vector<MatrixXd> truth;  // J trajectories, each (N+1) x n
  std::vector<VectorXd> w;      // J vectors of length M

  int head_dim() const { return s; }
  int tail_dim() const { return static_cast<int>(A.rows()) - s; }
};

/// Simulates ground truth for the test states and transforms their lifts.
ObjectiveContext make_objective_context(const TransformedModel& tm,
                                        const Dictionary& dict,
                                        const SampledMap& map,
                                        const std::vector<VectorXd>& test_states,
                                        int N, int r);

/// Same, but with precomputed truth trajectories (one per test state).
ObjectiveContext make_objective_context(const TransformedModel& tm,
                                        const Dictionary& dict,
                                        const std::vector<VectorXd>& test_states,
                                        const std::vector<MatrixXd>& truth,
                                        int N, int r);

/// Mean squared N-step state-prediction error with prefactor 1/(2 J N),
/// summed over k = 1..N (at k = 0 the read-out reproduces the state).
/// Throws when U is off the Stiefel manifold. `breakdown`, when given,
/// receives the per-trajectory contributions.
double evaluate(const ObjectiveContext& ctx, const MatrixXd& U,
                std::vector<double>* breakdown = nullptr);

/// Gradient of the smooth extension (U treated as a free d x r matrix),
/// computed by an adjoint sweep through the lifted recursion.
MatrixXd euclidean_gradient(const ObjectiveContext& ctx, const MatrixXd& U);

/// Horizontal projection of the Euclidean gradient.
MatrixXd riemannian_gradient(const ObjectiveContext& ctx, const MatrixXd& U);

/// Riemannian Hessian-vector product: central-difference directional
/// derivative of egrad_fn along V, minus the quotient correction
/// V U^T egrad(U), projected horizontal. Generic so test objectives
/// (e.g. Rayleigh quotients) can reuse it.
MatrixXd riemannian_hessian_fd(
    const std::function<MatrixXd(const MatrixXd&)>& egrad_fn,
    const MatrixXd& U, const MatrixXd& V);

MatrixXd hessian_vector(const ObjectiveContext& ctx, const MatrixXd& U,
                        const MatrixXd& V);

}  // namespace koopman
