#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace koopman {

using Eigen::MatrixXd;

struct TrustRegionConfig {
  double delta0 = -1.0;     // < 0: 0.1 * sqrt(r)
  double delta_max = -1.0;  // < 0: 2 * sqrt(r)
  double rho_accept = 0.1;
  double rho_expand = 0.75;
  double shrink_factor = 0.25;
  double expand_factor = 2.0;
  int max_outer_iters = 500;
  double grad_tol = 1e-6;
  int tcg_max_inner = -1;  // < 0: dimension of the horizontal space
  double tcg_kappa = 0.1;
  double tcg_theta = 1.0;
  bool debug_check_gradient = false;  // FD spot-check of the callbacks at U0
};

struct IterationRecord {
  int iter = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  double step_norm = 0.0;
  bool accepted = false;
};

enum class OptStatus { Converged, MaxIters, NumericalFailure };

struct OptimizationTrace {
  std::vector<IterationRecord> records;
  OptStatus status = OptStatus::MaxIters;
  std::string message;
};

using ValueFn = std::function<double(const MatrixXd&)>;
using GradFn = std::function<MatrixXd(const MatrixXd&)>;   // Riemannian, horizontal
using HvpFn = std::function<MatrixXd(const MatrixXd&)>;    // at a fixed point

struct TcgResult {
  MatrixXd step;
  bool hit_boundary = false;
  int iterations = 0;
};

/// Steihaug-Toint truncated CG on the quadratic model
/// m(s) = <grad, s> + 0.5 <s, H s> within ||s|| <= delta. Exits on boundary
/// hit, negative curvature, or the residual rule
/// ||res|| <= ||grad|| min(kappa, ||grad||^theta).
TcgResult truncated_cg(const MatrixXd& grad, const HvpFn& hvp, double delta,
                       const TrustRegionConfig& config);

/// Riemannian trust-region over Grassmann points represented on the Stiefel
/// manifold. hvp_fn(U) must return the Hessian-vector callback at U.
std::pair<MatrixXd, OptimizationTrace> trust_region(
    const ValueFn& value_fn, const GradFn& grad_fn,
    const std::function<std::function<MatrixXd(const MatrixXd&)>(const MatrixXd&)>& hvp_at,
    const MatrixXd& U0, TrustRegionConfig config);

void write_trace_csv(const OptimizationTrace& trace, const std::string& path);

}  // namespace koopman
