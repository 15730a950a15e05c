// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace shk {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Tall dense block of complex columns (column-major).
using DenseBlock = Eigen::MatrixXcd;
using Matrix = Eigen::MatrixXcd;

/// Compressed sparse row storage with complex values. Row pointers are
/// nondecreasing and column indices strictly increasing within a row once
/// compressed; assembly sums duplicate (row, col) entries.
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<Complex>;

inline SparseMatrix sparse_from_triplets(int rows, int cols,
                                         const std::vector<Triplet>& entries) {
  SparseMatrix a(rows, cols);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  return a;
}

inline SparseMatrix sparse_identity(int n) {
  SparseMatrix a(n, n);
  a.setIdentity();
  return a;
}

inline SparseMatrix sparse_diagonal(const Vector& d) {
  std::vector<Triplet> ts;
  ts.reserve(static_cast<size_t>(d.size()));
  for (int i = 0; i < d.size(); ++i) ts.emplace_back(i, i, d[i]);
  return sparse_from_triplets(static_cast<int>(d.size()),
                              static_cast<int>(d.size()), ts);
}

inline SparseMatrix sparse_from_dense(const Matrix& a, double tol = 0.0) {
  std::vector<Triplet> ts;
  for (int j = 0; j < a.cols(); ++j)
    for (int i = 0; i < a.rows(); ++i)
      if (std::abs(a(i, j)) > tol) ts.emplace_back(i, j, a(i, j));
  return sparse_from_triplets(static_cast<int>(a.rows()),
                              static_cast<int>(a.cols()), ts);
}

inline Matrix to_dense(const SparseMatrix& a) { return Matrix(a); }

/// K + tau * M with the sparsity patterns unioned. M == nullptr means the
/// identity.
inline SparseMatrix add_scaled(const SparseMatrix& k, Complex tau,
                               const SparseMatrix* m) {
  if (k.rows() != k.cols())
    throw std::invalid_argument("add_scaled: K must be square");
  if (m == nullptr) {
    SparseMatrix s = k;
    SparseMatrix id = sparse_identity(static_cast<int>(k.rows()));
    s += tau * id;
    s.makeCompressed();
    return s;
  }
  if (m->rows() != k.rows() || m->cols() != k.cols())
    throw std::invalid_argument("add_scaled: K and M dimensions differ");
  SparseMatrix s = k + tau * (*m);
  s.makeCompressed();
  return s;
}

}  // namespace shk
