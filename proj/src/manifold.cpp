#include "koopman/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "koopman/rng.hpp"

namespace koopman {
namespace manifold {

double stiefel_residual(const MatrixXd& U) {
  const int r = static_cast<int>(U.cols());
  return (U.transpose() * U - MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff();
}

MatrixXd reorthonormalize(const MatrixXd& U) {
  const int d = static_cast<int>(U.rows());
  const int r = static_cast<int>(U.cols());
  Eigen::HouseholderQR<MatrixXd> qr(U);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(d, r);
  MatrixXd R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const double dmax = R.diagonal().cwiseAbs().maxCoeff();
  if (dmax == 0.0)
    throw std::invalid_argument("reorthonormalize: rank-deficient input");
  for (int k = 0; k < r; ++k) {
    if (std::abs(R(k, k)) < 1e-12 * dmax)
      throw std::invalid_argument("reorthonormalize: rank-deficient input");
    if (R(k, k) < 0.0) Q.col(k) = -Q.col(k);
  }
  return Q;
}

MatrixXd random_stiefel(int d, int r, std::uint64_t seed) {
  if (r < 1 || r > d) throw std::invalid_argument("random_stiefel: need 1 <= r <= d");
  Rng rng(seed);
  MatrixXd A(d, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < d; ++i) A(i, j) = rng.gaussian();
  return reorthonormalize(A);
}

MatrixXd project_horizontal(const MatrixXd& U, const MatrixXd& W) {
  if (U.rows() != W.rows() || U.cols() != W.cols())
    throw std::invalid_argument("project_horizontal: shape mismatch");
  return W - U * (U.transpose() * W);
}

double metric(const MatrixXd& V1, const MatrixXd& V2) {
  if (V1.rows() != V2.rows() || V1.cols() != V2.cols())
    throw std::invalid_argument("metric: shape mismatch");
  return (V1.array() * V2.array()).sum();
}

MatrixXd retract(const MatrixXd& U, const MatrixXd& V) {
  return reorthonormalize(U + V);
}

double subspace_distance(const MatrixXd& U1, const MatrixXd& U2) {
  if (U1.rows() != U2.rows() || U1.cols() != U2.cols())
    throw std::invalid_argument("subspace_distance: shape mismatch");
  // Cosines from svd(U1^T U2) lose precision near zero angles; pair them
  // with sines from the complementary projection and use atan2.
  Eigen::JacobiSVD<MatrixXd> svd_c(U1.transpose() * U2);
  Eigen::JacobiSVD<MatrixXd> svd_s(U2 - U1 * (U1.transpose() * U2));
  const auto& c = svd_c.singularValues();  // descending
  const auto& s = svd_s.singularValues();  // descending
  const int r = static_cast<int>(c.size());
  double sum = 0.0;
  for (int k = 0; k < r; ++k) {
    // kth largest cosine pairs with kth smallest sine.
    const double angle = std::atan2(std::clamp(s(r - 1 - k), 0.0, 1.0),
                                    std::clamp(c(k), -1.0, 1.0));
    sum += angle * angle;
  }
  return std::sqrt(sum);
}

}  // namespace manifold
}  // namespace koopman
