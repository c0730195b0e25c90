#pragma once

#include <Eigen/Dense>
#include <utility>

#include "koopman/dictionary.hpp"
#include "koopman/dynamics.hpp"

namespace koopman {

/// Empirical lift matrices: G holds lifts of the x_i, S lifts of the
/// successors y_i. Both are M x L.
struct DataMatrices {
  MatrixXd G;
  MatrixXd S;
};

/// QR-orthonormalised EDMD model. With G_B^T = Q R (thin, R diagonal forced
/// non-negative) the change of basis is P = R^{-T}, G_E = Q^T satisfies
/// G_E G_E^T = I, and S_E = P S_B. A_E = G_E S_E^T is cached because the
/// optimiser evaluates U_bar^T A_E U_bar thousands of times.
struct TransformedModel {
  MatrixXd G_E;    // M x L
  MatrixXd S_E;    // M x L
  MatrixXd P;      // M x M
  MatrixXd P_inv;  // M x M, lower triangular
  MatrixXd Q11;    // n x n
  MatrixXd A_E;    // M x M
  int s = 0;
  int n = 0;

  int dim() const { return static_cast<int>(A_E.rows()); }
};

struct RankError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

DataMatrices build_data_matrices(const Dictionary& dict, const TrainingSet& ts);

/// Full EDMD compression K_B solving the normal equations via QR least
/// squares. Throws RankError naming the numerical rank when G is deficient.
MatrixXd full_edmd(const DataMatrices& dm);

TransformedModel qr_transform(const DataMatrices& dm, int s, int n);

/// K relative to the reduced basis: U_bar^T A_E U_bar with
/// U_bar = blkdiag(I_s, U). U must have orthonormal columns.
MatrixXd subspace_compression(const TransformedModel& tm, const MatrixXd& U);

/// (H, A) = (G G^T, G S^T), the bilinear-form matrices.
std::pair<MatrixXd, MatrixXd> bilinear_matrices_from_data(const DataMatrices& dm);

/// K = H^{-1} A via Cholesky; throws on a non-SPD (degenerate) H.
MatrixXd bilinear_compression(const MatrixXd& H, const MatrixXd& A);

/// K_red = (Ubar^T H Ubar)^{-1} Ubar^T A Ubar; the slow oracle for
/// subspace_compression.
MatrixXd subspace_bilinear_compression(const MatrixXd& H, const MatrixXd& A,
                                       const MatrixXd& Ubar);

/// K_E = (P K_B^T P^{-1})^T for an arbitrary invertible P.
MatrixXd change_of_basis_compression(const MatrixXd& K_B, const MatrixXd& P);

/// Pi relative to the reduced basis: [Q11 0], an n x (s+r) matrix that does
/// not depend on the chosen subspace.
MatrixXd reduced_coordinate_matrix(const TransformedModel& tm, int r);

}  // namespace koopman
