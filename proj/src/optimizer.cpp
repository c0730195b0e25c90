#include "koopman/optimizer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "koopman/manifold.hpp"

namespace koopman {

namespace {

// Positive root of ||s + tau p|| = delta.
double boundary_tau(const MatrixXd& s, const MatrixXd& p, double delta) {
  const double pp = manifold::metric(p, p);
  const double sp = manifold::metric(s, p);
  const double ss = manifold::metric(s, s);
  const double disc = std::max(0.0, sp * sp - pp * (ss - delta * delta));
  return (-sp + std::sqrt(disc)) / pp;
}

}  // namespace

TcgResult truncated_cg(const MatrixXd& grad, const HvpFn& hvp, double delta,
                       const TrustRegionConfig& config) {
  const int dim_hor = static_cast<int>(grad.size());
  const int max_inner = config.tcg_max_inner > 0 ? config.tcg_max_inner : dim_hor;
  const double grad_norm = grad.norm();
  const double res_target =
      grad_norm * std::min(config.tcg_kappa, std::pow(grad_norm, config.tcg_theta));

  TcgResult out;
  out.step = MatrixXd::Zero(grad.rows(), grad.cols());
  MatrixXd res = grad;
  MatrixXd p = -grad;

  if (grad_norm == 0.0) return out;

  double res_sq = manifold::metric(res, res);
  for (int iter = 0; iter < max_inner; ++iter) {
    out.iterations = iter + 1;
    const MatrixXd Hp = hvp(p);
    const double curvature = manifold::metric(p, Hp);

    if (curvature <= 0.0) {
      // Negative curvature: walk to the boundary along p.
      const double tau = boundary_tau(out.step, p, delta);
      out.step += tau * p;
      out.hit_boundary = true;
      return out;
    }

    const double alpha = res_sq / curvature;
    const MatrixXd candidate = out.step + alpha * p;
    if (candidate.norm() >= delta) {
      const double tau = boundary_tau(out.step, p, delta);
      out.step += tau * p;
      out.hit_boundary = true;
      return out;
    }

    out.step = candidate;
    res += alpha * Hp;
    const double res_sq_next = manifold::metric(res, res);
    if (std::sqrt(res_sq_next) <= res_target) return out;
    p = -res + (res_sq_next / res_sq) * p;
    res_sq = res_sq_next;
  }
  return out;
}

std::pair<MatrixXd, OptimizationTrace> trust_region(
    const ValueFn& value_fn, const GradFn& grad_fn,
    const std::function<std::function<MatrixXd(const MatrixXd&)>(const MatrixXd&)>& hvp_at,
    const MatrixXd& U0, TrustRegionConfig config) {
  const int r = static_cast<int>(U0.cols());
  if (config.delta0 < 0.0) config.delta0 = 0.1 * std::sqrt(static_cast<double>(r));
  if (config.delta_max < 0.0) config.delta_max = 2.0 * std::sqrt(static_cast<double>(r));

  OptimizationTrace trace;
  MatrixXd U = U0;
  if (manifold::stiefel_residual(U) > 1e-8)
    throw std::invalid_argument("trust_region: U0 is off the Stiefel manifold");

  if (config.debug_check_gradient) {
    // FD spot-check along a random-ish horizontal direction.
    MatrixXd V = manifold::project_horizontal(U, MatrixXd::Ones(U.rows(), U.cols()));
    if (V.norm() > 0) {
      V /= V.norm();
      const double h = 1e-6;
      const double fd =
          (value_fn(manifold::retract(U, h * V)) - value_fn(manifold::retract(U, -h * V))) /
          (2.0 * h);
      const double an = manifold::metric(grad_fn(U), V);
      if (std::abs(fd - an) > 1e-4 * (1.0 + std::abs(an)))
        throw std::runtime_error("trust_region: gradient callback fails FD spot-check");
    }
  }

  double value = value_fn(U);
  double delta = config.delta0;

  if (!std::isfinite(value)) {
    trace.status = OptStatus::NumericalFailure;
    trace.message = "objective not finite at U0";
    return {U, trace};
  }

  for (int iter = 0; iter < config.max_outer_iters; ++iter) {
    const MatrixXd grad = grad_fn(U);
    const double grad_norm = grad.norm();

    IterationRecord rec;
    rec.iter = iter;
    rec.value = value;
    rec.grad_norm = grad_norm;
    rec.delta = delta;

    if (!grad.allFinite()) {
      trace.records.push_back(rec);
      trace.status = OptStatus::NumericalFailure;
      trace.message = "gradient not finite at iteration " + std::to_string(iter);
      return {U, trace};
    }
    if (grad_norm <= config.grad_tol) {
      trace.records.push_back(rec);
      trace.status = OptStatus::Converged;
      return {U, trace};
    }

    const auto hvp = hvp_at(U);
    const TcgResult tcg = truncated_cg(grad, hvp, delta, config);
    const MatrixXd& step = tcg.step;
    rec.step_norm = step.norm();

    // Model decrease, with the denominator floored to avoid 0/0 stagnation.
    const double predicted =
        -(manifold::metric(grad, step) + 0.5 * manifold::metric(step, hvp(step)));
    const MatrixXd U_trial = manifold::retract(U, step);
    const double value_trial = value_fn(U_trial);
    const double actual = value - value_trial;
    const double rho = actual / std::max(predicted, 1e-15);
    rec.rho = rho;

    if (!std::isfinite(value_trial)) {
      trace.records.push_back(rec);
      trace.status = OptStatus::NumericalFailure;
      trace.message = "objective not finite at trial point, iteration " + std::to_string(iter);
      return {U, trace};
    }

    if (rho >= config.rho_accept && actual > 0.0) {
      U = U_trial;
      value = value_trial;
      rec.accepted = true;
    }
    if (rho < config.rho_accept) {
      delta *= config.shrink_factor;
    } else if (rho >= config.rho_expand && tcg.hit_boundary) {
      delta = std::min(config.expand_factor * delta, config.delta_max);
    }
    trace.records.push_back(rec);
  }
  trace.status = OptStatus::MaxIters;
  return {U, trace};
}

void write_trace_csv(const OptimizationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "iter,value,gradnorm,delta,rho,step_norm,accepted\n";
  for (const auto& rec : trace.records)
    out << rec.iter << "," << rec.value << "," << rec.grad_norm << "," << rec.delta
        << "," << rec.rho << "," << rec.step_norm << "," << (rec.accepted ? 1 : 0)
        << "\n";
}

}  // namespace koopman
