#include "lowhtr/linalg.hpp"

#include <cmath>

#include "lowhtr/common.hpp"

namespace lowhtr::linalg {
namespace {

void require_finite(const Matrix& a, const char* who) {
  if (!a.allFinite()) throw InputError(std::string(who) + ": non-finite entries in input");
}

// Flip signs so each column's largest-magnitude entry (lowest index on ties)
// is non-negative. Columns of u and v are flipped in pairs where both exist;
// surplus columns of the wider factor are normalized on their own.
void fix_signs(Matrix& u, Matrix& v) {
  const Index paired = std::min(u.cols(), v.cols());
  auto dominant_negative = [](const Matrix& m, Index j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < m.rows(); ++i) {
      const double a = std::fabs(m(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    return m(arg, j) < 0.0;
  };
  for (Index j = 0; j < paired; ++j) {
    if (dominant_negative(u, j)) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
  Matrix& wide = u.cols() > v.cols() ? u : v;
  for (Index j = paired; j < wide.cols(); ++j) {
    if (dominant_negative(wide, j)) wide.col(j) = -wide.col(j);
  }
}

}  // namespace

Matrix SvdFactors::reconstruct() const {
  const Index m = singular_values.size();
  return u.leftCols(m) * singular_values.asDiagonal() * v.leftCols(m).transpose();
}

SvdFactors full_svd(const Matrix& a) {
  require_finite(a, "full_svd");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdFactors f{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  fix_signs(f.u, f.v);
  return f;
}

Matrix sym_inv_sqrt(const Matrix& m) {
  require_finite(m, "sym_inv_sqrt");
  if (m.rows() != m.cols()) throw InputError("sym_inv_sqrt: matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (((m - m.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale)
    throw InputError("sym_inv_sqrt: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw NumericError("sym_inv_sqrt: eigensolver failed");
  const Vector& ev = es.eigenvalues();
  const double min_ev = ev.minCoeff();
  if (min_ev <= 0.0)
    throw NumericError("sym_inv_sqrt: matrix is not positive definite", min_ev);
  Vector inv_sqrt = ev.cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

Matrix svd_soft_threshold(const Matrix& theta, double k) {
  require_finite(theta, "svd_soft_threshold");
  if (k < 0.0) throw InputError("svd_soft_threshold: threshold must be non-negative");
  if (k == 0.0) return theta;
  Eigen::JacobiSVD<Matrix> svd(theta, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector s = (svd.singularValues().array() - k).max(0.0).matrix();
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double nuclear_norm(const Matrix& a) {
  return Eigen::JacobiSVD<Matrix>(a).singularValues().sum();
}

SubspaceSplit SubspaceSplit::from_svd(const SvdFactors& f, Index r_hat) {
  const Index d1 = f.u.rows();
  const Index d2 = f.v.rows();
  if (r_hat < 1 || r_hat > std::min(d1, d2))
    throw InputError("SubspaceSplit: effective rank out of range");
  SubspaceSplit s;
  s.col_basis = f.u.leftCols(r_hat);
  s.col_complement = f.u.rightCols(d1 - r_hat);
  s.row_basis = f.v.leftCols(r_hat);
  s.row_complement = f.v.rightCols(d2 - r_hat);
  s.effective_rank = r_hat;
  return s;
}

SubspaceSplit SubspaceSplit::identity(Index d1, Index d2) {
  const Index r = std::min(d1, d2);
  SubspaceSplit s;
  Matrix iu = Matrix::Identity(d1, d1);
  Matrix iv = Matrix::Identity(d2, d2);
  s.col_basis = iu.leftCols(r);
  s.col_complement = iu.rightCols(d1 - r);
  s.row_basis = iv.leftCols(r);
  s.row_complement = iv.rightCols(d2 - r);
  s.effective_rank = r;
  return s;
}

void SubspaceSplit::validate(double tol) const {
  const Index r = effective_rank;
  if (r < 1 || r > std::min(d1(), d2()))
    throw InputError("SubspaceSplit: effective rank out of range");
  if (col_complement.rows() != d1() || row_complement.rows() != d2() ||
      col_basis.cols() != r || row_basis.cols() != r ||
      col_complement.cols() != d1() - r || row_complement.cols() != d2() - r)
    throw InputError("SubspaceSplit: inconsistent block shapes");
  Matrix cu(d1(), d1());
  cu << col_basis, col_complement;
  Matrix cv(d2(), d2());
  cv << row_basis, row_complement;
  if ((cu.transpose() * cu - Matrix::Identity(d1(), d1())).norm() > tol ||
      (cv.transpose() * cv - Matrix::Identity(d2(), d2())).norm() > tol)
    throw InputError("SubspaceSplit: bases are not orthogonal");
}

Vector rotate_and_vectorize(const Matrix& x, const SubspaceSplit& split) {
  if (x.rows() != split.d1() || x.cols() != split.d2())
    throw InputError("rotate_and_vectorize: dimension mismatch");
  const Index r = split.effective_rank;
  const Index d1 = split.d1();
  const Index d2 = split.d2();
  // Rotate once, then slice the four blocks out of the rotated matrix.
  Matrix left(d1, d1);
  left << split.col_basis, split.col_complement;
  Matrix right(d2, d2);
  right << split.row_basis, split.row_complement;
  Matrix rot = left.transpose() * x * right;

  Vector out(d1 * d2);
  Index at = 0;
  auto put = [&](const Matrix& block) {
    Eigen::Map<const Vector> flat(block.data(), block.size());
    out.segment(at, block.size()) = flat;  // column-major vec
    at += block.size();
  };
  Matrix b11 = rot.topLeftCorner(r, r);
  Matrix b12 = rot.topRightCorner(r, d2 - r);
  Matrix b21 = rot.bottomLeftCorner(d1 - r, r);
  Matrix b22 = rot.bottomRightCorner(d1 - r, d2 - r);
  put(b11);
  put(b12);
  put(b21);
  put(b22);
  return out;
}

Vector rotate_parameter(const Matrix& theta, const SubspaceSplit& split) {
  return rotate_and_vectorize(theta, split);
}

Matrix restore_from_vector(const Vector& v, const SubspaceSplit& split) {
  const Index r = split.effective_rank;
  const Index d1 = split.d1();
  const Index d2 = split.d2();
  if (v.size() != d1 * d2) throw InputError("restore_from_vector: dimension mismatch");
  Matrix rot(d1, d2);
  Index at = 0;
  auto take = [&](Index rows, Index cols) {
    Matrix block = Eigen::Map<const Matrix>(v.data() + at, rows, cols);
    at += rows * cols;
    return block;
  };
  rot.topLeftCorner(r, r) = take(r, r);
  rot.topRightCorner(r, d2 - r) = take(r, d2 - r);
  rot.bottomLeftCorner(d1 - r, r) = take(d1 - r, r);
  rot.bottomRightCorner(d1 - r, d2 - r) = take(d1 - r, d2 - r);
  Matrix left(d1, d1);
  left << split.col_basis, split.col_complement;
  Matrix right(d2, d2);
  right << split.row_basis, split.row_complement;
  return left * rot * right.transpose();
}

}  // namespace lowhtr::linalg
