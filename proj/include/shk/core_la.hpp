// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/SparseLU>

#include <memory>
#include <vector>

#include "shk/types.hpp"

namespace shk {

/// Raised when a factorization or eigensolve meets a numerically singular
/// operator.
struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneratePencilError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sparse matrix-vector product with dimension checking.
Vector spmv(const SparseMatrix& a, const Vector& v);

/// Result of a deflating thin QR. `q` holds orthonormal columns spanning the
/// kept columns of the input, `r` is the square upper-triangular factor over
/// the kept columns (q * r reconstructs input(:, kept)), and `kept` lists the
/// surviving column indices in order.
struct ThinQr {
  Matrix q;
  Matrix r;
  std::vector<int> kept;
};

/// Column-wise modified Gram-Schmidt QR of a tall block. A column whose
/// remaining norm is <= drop_tol * scale is deflated (dropped from q/r and
/// reported through `kept`). `scale` defaults to ||w||_F. With
/// `reorthogonalize` each column gets a second projection pass. `ip_count`,
/// when given, is incremented once per length-n inner product or norm.
ThinQr thin_qr(const Matrix& w, double drop_tol, double scale = -1.0,
               bool reorthogonalize = true, long* ip_count = nullptr);

/// LU factorization of a square complex matrix, sparse (default) or dense.
/// Factors are immutable after construction and shareable across threads.
class LuFactorization {
 public:
  static LuFactorization factor(const SparseMatrix& a);
  static LuFactorization factor_dense(const Matrix& a);

  Vector solve(const Vector& b) const;
  int rows() const { return rows_; }

 private:
  LuFactorization() = default;
  int rows_ = 0;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<Complex>>> sparse_;
  std::shared_ptr<Eigen::PartialPivLU<Matrix>> dense_;
};

struct GenEig {
  std::vector<Complex> eigenvalues;  ///< finite, residual-verified pairs
  int omitted = 0;                   ///< infinite or ill-posed pairs dropped
};

/// Eigenvalues of the small dense pencil A z = lambda B z (QZ via LAPACK
/// zggev). Pairs with |beta| below tolerance or failing the residual check
/// ||A z - lambda B z|| <= 1e-8 (||A|| + |lambda| ||B||) are omitted and
/// counted. Throws DegeneratePencilError when the pencil is numerically
/// singular (all pairs indeterminate).
GenEig small_gen_eig(const Matrix& a, const Matrix& b);

struct LeastSquares {
  Vector y;
  double residual_norm = 0.0;
  bool rank_deficient = false;
};

/// Minimum-norm least-squares solution of min ||rhs - a y||_2 via a complete
/// orthogonal decomposition; rank deficiency is flagged.
LeastSquares dense_least_squares(const Matrix& a, const Vector& rhs);

}  // namespace shk
