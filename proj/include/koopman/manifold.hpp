#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace koopman {
namespace manifold {

using Eigen::MatrixXd;

/// ||U^T U - I||_max.
double stiefel_residual(const MatrixXd& U);

/// Seeded Gaussian d x r matrix, QR-orthonormalised. Throws when r > d.
MatrixXd random_stiefel(int d, int r, std::uint64_t seed);

/// QR-orthonormalisation with positive-diagonal convention; used to repair
/// drift after long optimiser runs.
MatrixXd reorthonormalize(const MatrixXd& U);

/// (I - U U^T) W, the projector onto {V : U^T V = 0}.
MatrixXd project_horizontal(const MatrixXd& U, const MatrixXd& W);

/// tr(V1^T V2).
double metric(const MatrixXd& V1, const MatrixXd& V2);

/// QR retraction: orthonormal factor of U + V. Throws when U + V is
/// rank deficient.
MatrixXd retract(const MatrixXd& U, const MatrixXd& V);

/// 2-norm of the principal-angle vector between the column spans.
double subspace_distance(const MatrixXd& U1, const MatrixXd& U2);

}  // namespace manifold
}  // namespace koopman
