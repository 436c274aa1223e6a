#pragma once

#include <Eigen/Dense>

namespace lowhtr::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Full SVD factors: u is d1 x d1, v is d2 x d2, singular_values has
/// min(d1, d2) non-increasing entries. Signs follow a fixed convention
/// (largest-magnitude entry of each left singular vector is non-negative,
/// ties broken by lowest row index) so factorizations are reproducible.
struct SvdFactors {
  Matrix u;
  Vector singular_values;
  Matrix v;

  Matrix reconstruct() const;
};

SvdFactors full_svd(const Matrix& a);

/// Symmetric inverse square root of an SPD matrix: returns R with R*M*R = I.
/// Eigenvalues are clamped at 1e-12 before inversion to absorb roundoff.
/// Throws NumericError (carrying the offending eigenvalue) when M is not
/// positive definite, InputError when it is not symmetric.
Matrix sym_inv_sqrt(const Matrix& m);

/// Proximal operator of k * nuclear norm: U diag(max(sigma_i - k, 0)) V^T,
/// the minimizer of 0.5*||Z - theta||_F^2 + k*||Z||_nuc.
Matrix svd_soft_threshold(const Matrix& theta, double k);

double nuclear_norm(const Matrix& a);

/// Orthogonal column/row bases split at an effective rank. The concatenation
/// [col_basis | col_complement] is d1 x d1 orthogonal, same on the row side.
struct SubspaceSplit {
  Matrix col_basis;       // d1 x r_hat
  Matrix col_complement;  // d1 x (d1 - r_hat)
  Matrix row_basis;       // d2 x r_hat
  Matrix row_complement;  // d2 x (d2 - r_hat)
  Index effective_rank = 0;

  Index d1() const { return col_basis.rows(); }
  Index d2() const { return row_basis.rows(); }
  Index total_dim() const { return d1() * d2(); }
  /// k = p - (d1 - r_hat)(d2 - r_hat)
  Index effective_dim() const {
    return total_dim() - (d1() - effective_rank) * (d2() - effective_rank);
  }

  /// Top-r_hat subspaces of a full SVD.
  static SubspaceSplit from_svd(const SvdFactors& f, Index r_hat);
  /// Identity bases with r_hat = min(d1, d2); the complement block is empty
  /// when d1 == d2.
  static SubspaceSplit identity(Index d1, Index d2);

  /// Checks orthogonality and rank bounds; throws InputError on violation.
  void validate(double tol = 1e-10) const;
};

/// Rearranged vectorization of [U|U_perp]^T X [V|V_perp]: the four blocks
/// are flattened column-major and concatenated as
///   [vec(U^T X V), vec(U^T X V_perp), vec(U_perp^T X V), vec(U_perp^T X V_perp)]
/// so the first k entries are the active coordinates and the last p - k the
/// complement block. This is the one vec convention used across the project.
Vector rotate_and_vectorize(const Matrix& x, const SubspaceSplit& split);

/// Same rearrangement applied to a parameter matrix; the tail p - k entries
/// equal vec of the rotated parameter's complement block. Diagnostics only.
Vector rotate_parameter(const Matrix& theta, const SubspaceSplit& split);

/// Inverse of rotate_and_vectorize.
Matrix restore_from_vector(const Vector& v, const SubspaceSplit& split);

}  // namespace lowhtr::linalg
