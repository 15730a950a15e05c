// SPDX-License-Identifier: Apache-2.0
#include "shk/core_la.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace shk {

Vector spmv(const SparseMatrix& a, const Vector& v) {
  if (a.cols() != v.size())
    throw std::invalid_argument("spmv: dimension mismatch");
  return a * v;
}

ThinQr thin_qr(const Matrix& w, double drop_tol, double scale,
               bool reorthogonalize, long* ip_count) {
  const int n = static_cast<int>(w.rows());
  const int p = static_cast<int>(w.cols());
  if (n < p) throw std::invalid_argument("thin_qr: block is wider than tall");
  const double ref = scale >= 0.0 ? scale : w.norm();
  const double tol = drop_tol * ref;

  ThinQr out;
  out.q.resize(n, p);
  Matrix rfull = Matrix::Zero(p, p);
  int kept = 0;
  for (int c = 0; c < p; ++c) {
    Vector x = w.col(c);
    const int passes = reorthogonalize ? 2 : 1;
    for (int pass = 0; pass < passes; ++pass) {
      for (int j = 0; j < kept; ++j) {
        Complex h = out.q.col(j).dot(x);
        if (ip_count) ++*ip_count;
        x -= out.q.col(j) * h;
        rfull(j, kept) += h;
      }
    }
    double nrm = x.norm();
    if (ip_count) ++*ip_count;
    if (nrm <= tol) continue;  // deflated
    out.q.col(kept) = x / nrm;
    rfull(kept, kept) = nrm;
    out.kept.push_back(c);
    ++kept;
  }
  out.q.conservativeResize(n, kept);
  out.r = rfull.topLeftCorner(kept, kept);
  return out;
}

LuFactorization LuFactorization::factor(const SparseMatrix& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("LuFactorization: matrix must be square");
  LuFactorization f;
  f.rows_ = static_cast<int>(a.rows());
  Eigen::SparseMatrix<Complex> csc(a);
  csc.makeCompressed();
  f.sparse_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<Complex>>>();
  f.sparse_->compute(csc);
  if (f.sparse_->info() != Eigen::Success)
    throw SingularMatrixError("sparse LU failed: matrix numerically singular");
  return f;
}

LuFactorization LuFactorization::factor_dense(const Matrix& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("LuFactorization: matrix must be square");
  LuFactorization f;
  f.rows_ = static_cast<int>(a.rows());
  f.dense_ = std::make_shared<Eigen::PartialPivLU<Matrix>>(a);
  const auto diag = f.dense_->matrixLU().diagonal().cwiseAbs();
  if (a.size() > 0) {
    double dmin = diag.minCoeff();
    double dmax = std::max(diag.maxCoeff(), 1e-300);
    if (dmin <= 1e-14 * dmax)
      throw SingularMatrixError("dense LU: pivot below tolerance");
  }
  return f;
}

Vector LuFactorization::solve(const Vector& b) const {
  if (b.size() != rows_)
    throw std::invalid_argument("lu_solve: dimension mismatch");
  if (sparse_) return sparse_->solve(b);
  return dense_->solve(b);
}

GenEig small_gen_eig(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw std::invalid_argument("small_gen_eig: square conforming inputs required");
  const int n = static_cast<int>(a.rows());
  GenEig out;
  if (n == 0) return out;

  Matrix ac = a, bc = b;
  std::vector<Complex> alpha(n), beta(n);
  Matrix vr(n, n);
  int info = LAPACKE_zggev(LAPACK_COL_MAJOR, 'N', 'V', n, ac.data(), n,
                           bc.data(), n, alpha.data(), beta.data(), nullptr, 1,
                           vr.data(), n);
  if (info != 0) throw DegeneratePencilError("zggev failed to converge");

  const double anorm = a.norm();
  const double bnorm = b.norm();
  const double scale = std::max(anorm + bnorm, 1e-300);
  int indeterminate = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(beta[i]) <= 1e-14 * scale) {
      ++out.omitted;
      if (std::abs(alpha[i]) <= 1e-14 * scale) ++indeterminate;
      continue;
    }
    Complex lam = alpha[i] / beta[i];
    Vector z = vr.col(i);
    double res = (a * z - lam * (b * z)).norm();
    double bound = 1e-8 * (anorm + std::abs(lam) * bnorm) * z.norm();
    if (!std::isfinite(lam.real()) || !std::isfinite(lam.imag()) ||
        res > bound) {
      ++out.omitted;
      continue;
    }
    out.eigenvalues.push_back(lam);
  }
  if (indeterminate == n)
    throw DegeneratePencilError("pencil is singular: all pairs indeterminate");
  return out;
}

LeastSquares dense_least_squares(const Matrix& a, const Vector& rhs) {
  if (a.rows() != rhs.size())
    throw std::invalid_argument("dense_least_squares: dimension mismatch");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  LeastSquares out;
  out.y = cod.solve(rhs);
  out.residual_norm = (rhs - a * out.y).norm();
  out.rank_deficient = cod.rank() < a.cols();
  return out;
}

}  // namespace shk
