#include "koopman/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "koopman/manifold.hpp"

namespace koopman {

namespace {

constexpr double kStiefelTol = 1e-8;

void check_shape(const ObjectiveContext& ctx, const MatrixXd& U) {
  if (U.rows() != ctx.tail_dim() || U.cols() != ctx.r)
    throw std::invalid_argument("objective: U has the wrong shape");
}

// K = Ubar^T A Ubar with Ubar = blkdiag(I_s, U), blockwise.
MatrixXd reduced_compression(const ObjectiveContext& ctx, const MatrixXd& U) {
  const int s = ctx.s, d = ctx.tail_dim(), r = ctx.r;
  MatrixXd K(s + r, s + r);
  K.topLeftCorner(s, s) = ctx.A.topLeftCorner(s, s);
  K.topRightCorner(s, r) = ctx.A.topRightCorner(s, d) * U;
  K.bottomLeftCorner(r, s) = U.transpose() * ctx.A.bottomLeftCorner(d, s);
  K.bottomRightCorner(r, r) = U.transpose() * ctx.A.bottomRightCorner(d, d) * U;
  return K;
}

VectorXd reduced_initial_state(const ObjectiveContext& ctx, const MatrixXd& U,
                               const VectorXd& w) {
  VectorXd z(ctx.s + ctx.r);
  z.head(ctx.s) = w.head(ctx.s);
  z.tail(ctx.r) = U.transpose() * w.tail(ctx.tail_dim());
  return z;
}

}  // namespace

ObjectiveContext make_objective_context(const TransformedModel& tm,
                                        const Dictionary& dict,
                                        const std::vector<VectorXd>& test_states,
                                        const std::vector<MatrixXd>& truth,
                                        int N, int r) {
  if (test_states.empty()) throw std::invalid_argument("objective: empty test set");
  if (truth.size() != test_states.size())
    throw std::invalid_argument("objective: truth/test size mismatch");
  if (N < 1) throw std::invalid_argument("objective: N must be >= 1");
  const int d = tm.dim() - tm.s;
  if (r < 1 || r > d) throw std::invalid_argument("objective: need 1 <= r <= M - s");

  ObjectiveContext ctx;
  ctx.A = tm.A_E;
  ctx.Q11 = tm.Q11;
  ctx.s = tm.s;
  ctx.n = tm.n;
  ctx.r = r;
  ctx.N = N;
  ctx.J = static_cast<int>(test_states.size());
  ctx.truth = truth;
  for (const auto& t : ctx.truth)
    if (t.rows() != N + 1 || t.cols() != tm.n)
      throw std::invalid_argument("objective: truth trajectory shape mismatch");
  for (const VectorXd& x : test_states) {
    VectorXd w = dict.lift(x);
    tm.P_inv.triangularView<Eigen::Lower>().solveInPlace(w);  // w = P Psi(x)
    ctx.w.push_back(std::move(w));
  }
  return ctx;
}

ObjectiveContext make_objective_context(const TransformedModel& tm,
                                        const Dictionary& dict,
                                        const SampledMap& map,
                                        const std::vector<VectorXd>& test_states,
                                        int N, int r) {
  std::vector<MatrixXd> truth;
  truth.reserve(test_states.size());
  for (const VectorXd& x0 : test_states)
    truth.push_back(rollout_truth(map, x0, N).states);
  return make_objective_context(tm, dict, test_states, truth, N, r);
}

double evaluate(const ObjectiveContext& ctx, const MatrixXd& U,
                std::vector<double>* breakdown) {
  check_shape(ctx, U);
  if (manifold::stiefel_residual(U) > kStiefelTol)
    throw std::invalid_argument("objective: U is off the Stiefel manifold");

  const MatrixXd K = reduced_compression(ctx, U);
  const double scale = 1.0 / (2.0 * ctx.J * ctx.N);

  if (breakdown) breakdown->assign(ctx.J, 0.0);
  double total = 0.0;
  for (int i = 0; i < ctx.J; ++i) {
    VectorXd z = reduced_initial_state(ctx, U, ctx.w[i]);
    double acc = 0.0;
    for (int k = 1; k <= ctx.N; ++k) {
      z = K.transpose() * z;
      const VectorXd xhat = ctx.Q11 * z.head(ctx.n);
      acc += (ctx.truth[i].row(k).transpose() - xhat).squaredNorm();
    }
    acc *= scale;
    if (breakdown) (*breakdown)[i] = acc;
    total += acc;
  }
  return total;
}

// Gradient of the smooth extension: U is treated as a free d x r matrix, so
// this stays well-defined at the slightly off-manifold points the FD Hessian
// probes. Ubar enters through K = Ubar^T A Ubar and each z_i(0) = Ubar^T w_i;
// the adjoint recursion lambda(k) = c(k) + K lambda(k+1) backpropagates the
// per-step residual c(k) = (1/JN) Pi~^T (xhat(k) - x(k)) through
// z(k+1) = K^T z(k).
MatrixXd euclidean_gradient(const ObjectiveContext& ctx, const MatrixXd& U) {
  check_shape(ctx, U);
  const int s = ctx.s, d = ctx.tail_dim(), r = ctx.r, l = s + r;
  const MatrixXd K = reduced_compression(ctx, U);
  const double scale = 1.0 / (static_cast<double>(ctx.J) * ctx.N);

  MatrixXd grad_K = MatrixXd::Zero(l, l);
  MatrixXd grad_Ubar = MatrixXd::Zero(ctx.A.rows(), l);

  MatrixXd z(ctx.N + 1, l);
  std::vector<VectorXd> lambdas(ctx.N + 1);
  for (int i = 0; i < ctx.J; ++i) {
    z.row(0) = reduced_initial_state(ctx, U, ctx.w[i]).transpose();
    for (int k = 0; k < ctx.N; ++k) z.row(k + 1) = z.row(k) * K;

    for (int k = ctx.N; k >= 0; --k) {
      VectorXd c = VectorXd::Zero(l);
      if (k >= 1) {
        const VectorXd xhat = ctx.Q11 * z.row(k).head(ctx.n).transpose();
        const VectorXd err = xhat - ctx.truth[i].row(k).transpose();
        c.head(ctx.n) = scale * (ctx.Q11.transpose() * err);
      }
      lambdas[k] = (k == ctx.N) ? std::move(c) : VectorXd(c + K * lambdas[k + 1]);
    }
    for (int k = 0; k < ctx.N; ++k)
      grad_K.noalias() += z.row(k).transpose() * lambdas[k + 1].transpose();
    grad_Ubar.noalias() += ctx.w[i] * lambdas[0].transpose();
  }

  // K = Ubar^T A Ubar gives dg/dUbar = A Ubar grad_K^T + A^T Ubar grad_K.
  MatrixXd Ubar = MatrixXd::Zero(ctx.A.rows(), l);
  Ubar.topLeftCorner(s, s) = MatrixXd::Identity(s, s);
  Ubar.bottomRightCorner(d, r) = U;
  grad_Ubar.noalias() += ctx.A * Ubar * grad_K.transpose();
  grad_Ubar.noalias() += ctx.A.transpose() * Ubar * grad_K;

  return grad_Ubar.bottomRightCorner(d, r);
}

MatrixXd riemannian_gradient(const ObjectiveContext& ctx, const MatrixXd& U) {
  return manifold::project_horizontal(U, euclidean_gradient(ctx, U));
}

MatrixXd riemannian_hessian_fd(
    const std::function<MatrixXd(const MatrixXd&)>& egrad_fn,
    const MatrixXd& U, const MatrixXd& V) {
  const double vnorm = V.norm();
  if (vnorm == 0.0) return MatrixXd::Zero(U.rows(), U.cols());
  const double h = 1e-5 * (1.0 + U.norm()) / (1.0 + vnorm);
  const MatrixXd ehess_v = (egrad_fn(U + h * V) - egrad_fn(U - h * V)) / (2.0 * h);
  const MatrixXd correction = V * (U.transpose() * egrad_fn(U));
  return manifold::project_horizontal(U, ehess_v - correction);
}

MatrixXd hessian_vector(const ObjectiveContext& ctx, const MatrixXd& U,
                        const MatrixXd& V) {
  return riemannian_hessian_fd(
      [&ctx](const MatrixXd& X) { return euclidean_gradient(ctx, X); }, U, V);
}

}  // namespace koopman
