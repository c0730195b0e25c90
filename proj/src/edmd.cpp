#include "koopman/edmd.hpp"

#include <cmath>
#include <iostream>

namespace koopman {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kStiefelTol = 1e-8;

struct ThinQR {
  MatrixXd Q;  // L x M
  MatrixXd R;  // M x M upper triangular, non-negative diagonal
};

// Thin QR of G^T with the diagonal of R forced non-negative so that P and
// model files are deterministic. Throws RankError when the numerical rank
// (diagonal threshold) falls short.
ThinQR thin_qr_checked(const MatrixXd& G) {
  const int M = static_cast<int>(G.rows());
  const int L = static_cast<int>(G.cols());
  if (L < M)
    throw RankError("data matrix has fewer samples than observables (L=" +
                    std::to_string(L) + " < M=" + std::to_string(M) + ")");
  Eigen::HouseholderQR<MatrixXd> qr(G.transpose());
  ThinQR out;
  out.Q = qr.householderQ() * MatrixXd::Identity(L, M);
  out.R = qr.matrixQR().topRows(M).triangularView<Eigen::Upper>();
  for (int k = 0; k < M; ++k) {
    if (out.R(k, k) < 0.0) {
      out.R.row(k) = -out.R.row(k);
      out.Q.col(k) = -out.Q.col(k);
    }
  }
  const double dmax = out.R.diagonal().cwiseAbs().maxCoeff();
  int rank = 0;
  for (int k = 0; k < M; ++k)
    if (std::abs(out.R(k, k)) > kRankTol * dmax) ++rank;
  if (rank < M)
    throw RankError("data matrix is rank deficient: numerical rank " +
                    std::to_string(rank) + " < " + std::to_string(M));
  return out;
}

void check_stiefel(const MatrixXd& U) {
  const MatrixXd gram = U.transpose() * U;
  const double res = (gram - MatrixXd::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff();
  if (res > kStiefelTol)
    throw std::invalid_argument("subspace matrix is off the Stiefel manifold (residual " +
                                std::to_string(res) + ")");
}

}  // namespace

DataMatrices build_data_matrices(const Dictionary& dict, const TrainingSet& ts) {
  const int M = dict.size();
  const int L = ts.size();
  if (L < M)
    std::cerr << "warning: L = " << L << " < M = " << M
              << " training pairs; EDMD needs L >= M\n";
  DataMatrices dm;
  dm.G.resize(M, L);
  dm.S.resize(M, L);
  for (int i = 0; i < L; ++i) {
    dm.G.col(i) = dict.lift(ts.pairs[i].first);
    dm.S.col(i) = dict.lift(ts.pairs[i].second);
  }
  return dm;
}

MatrixXd full_edmd(const DataMatrices& dm) {
  const ThinQR qr = thin_qr_checked(dm.G);
  // G^T K = S^T in least squares: K = R^{-1} Q^T S^T.
  MatrixXd K = qr.Q.transpose() * dm.S.transpose();
  qr.R.triangularView<Eigen::Upper>().solveInPlace(K);
  return K;
}

TransformedModel qr_transform(const DataMatrices& dm, int s, int n) {
  const int M = static_cast<int>(dm.G.rows());
  if (s < n || s >= M) throw std::invalid_argument("qr_transform: need n <= s < M");
  const ThinQR qr = thin_qr_checked(dm.G);

  TransformedModel tm;
  tm.s = s;
  tm.n = n;
  tm.G_E = qr.Q.transpose();
  tm.P_inv = qr.R.transpose();
  // P = R^{-T} by triangular solve, no explicit inverse.
  tm.P = MatrixXd::Identity(M, M);
  tm.P_inv.triangularView<Eigen::Lower>().solveInPlace(tm.P);
  // S_E = P S_B, again as a solve against R^T.
  tm.S_E = dm.S;
  tm.P_inv.triangularView<Eigen::Lower>().solveInPlace(tm.S_E);
  tm.Q11 = qr.R.topLeftCorner(n, n).transpose();
  tm.A_E = tm.G_E * tm.S_E.transpose();
  return tm;
}

MatrixXd subspace_compression(const TransformedModel& tm, const MatrixXd& U) {
  const int M = tm.dim();
  const int s = tm.s;
  const int d = M - s;
  const int r = static_cast<int>(U.cols());
  if (U.rows() != d)
    throw std::invalid_argument("subspace_compression: U must have M - s rows");
  check_stiefel(U);

  // Blocked U_bar^T A_E U_bar with U_bar = blkdiag(I_s, U).
  MatrixXd K(s + r, s + r);
  K.topLeftCorner(s, s) = tm.A_E.topLeftCorner(s, s);
  K.topRightCorner(s, r) = tm.A_E.topRightCorner(s, d) * U;
  K.bottomLeftCorner(r, s) = U.transpose() * tm.A_E.bottomLeftCorner(d, s);
  K.bottomRightCorner(r, r) = U.transpose() * tm.A_E.bottomRightCorner(d, d) * U;
  return K;
}

std::pair<MatrixXd, MatrixXd> bilinear_matrices_from_data(const DataMatrices& dm) {
  return {dm.G * dm.G.transpose(), dm.G * dm.S.transpose()};
}

MatrixXd bilinear_compression(const MatrixXd& H, const MatrixXd& A) {
  Eigen::LLT<MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("bilinear_compression: H is not positive definite "
                                "(degenerate bilinear form)");
  return llt.solve(A);
}

MatrixXd subspace_bilinear_compression(const MatrixXd& H, const MatrixXd& A,
                                       const MatrixXd& Ubar) {
  const MatrixXd Hr = Ubar.transpose() * H * Ubar;
  const MatrixXd Ar = Ubar.transpose() * A * Ubar;
  Eigen::LLT<MatrixXd> llt(Hr);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("subspace_bilinear_compression: reduced Gram is singular");
  return llt.solve(Ar);
}

MatrixXd change_of_basis_compression(const MatrixXd& K_B, const MatrixXd& P) {
  Eigen::PartialPivLU<MatrixXd> lu(P);
  const double rcond = lu.rcond();
  if (!std::isfinite(rcond) || rcond < 1e-14)
    throw std::invalid_argument("change_of_basis_compression: P is singular");
  // K_E^T = (P K_B^T) P^{-1}; solving P^T Y = (P K_B^T)^T gives Y = K_E.
  const MatrixXd X = P * K_B.transpose();
  return P.transpose().partialPivLu().solve(X.transpose());
}

MatrixXd reduced_coordinate_matrix(const TransformedModel& tm, int r) {
  if (tm.s < tm.n)
    throw std::invalid_argument("reduced_coordinate_matrix: requires s >= n");
  MatrixXd Pi = MatrixXd::Zero(tm.n, tm.s + r);
  Pi.topLeftCorner(tm.n, tm.n) = tm.Q11;
  return Pi;
}

}  // namespace koopman
