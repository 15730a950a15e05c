// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "shk/preconditioners.hpp"
#include "shk/types.hpp"

namespace shk {

struct ArnoldiOptions {
  double drop_tol = 1e-10;      ///< relative deflation tolerance in thin QR
  bool reorthogonalize = true;  ///< extra MGS pass over prior blocks + within block
  int complete_col_cap = 256;   ///< width limit for the complete variant
};

struct ArnoldiCounters {
  long inner_products = 0;  ///< length-n dot products and norms spent orthogonalizing
  long spmvs = 0;
};

/// Flexible multipreconditioned Arnoldi decomposition for shifted systems.
///
/// Invariants maintained across expansions:
///   M Z = V Hbar                       (flexible Arnoldi relation)
///   (K + tau_c M) z_c = v_{src(c)}     (per search direction c)
/// so (K + sigma M) Z = V ([E; 0] + Hbar (sigma I - T)) for every sigma.
/// V keeps orthonormal columns; Z keeps every search direction generated,
/// including those whose image deflated out of the new V block.
class MpArnoldiState {
 public:
  explicit MpArnoldiState(const Vector& b);

  /// One selective iteration: apply every preconditioner in `p` to the last
  /// basis column. Returns the number of new V columns (0 = breakdown).
  int expand_selective(const PreconditionerSet& p, const SparseMatrix* m,
                       const ArnoldiOptions& opt);

  /// One flexible iteration: apply preconditioner `j` only (FGMRES-style).
  int expand_flexible(const PreconditionerSet& p, int j, const SparseMatrix* m,
                      const ArnoldiOptions& opt);

  /// One complete-variant iteration: apply every preconditioner to every
  /// column of the newest V block. Test scale only; throws when the new block
  /// would exceed opt.complete_col_cap columns.
  int expand_complete(const PreconditionerSet& p, const SparseMatrix* m,
                      const ArnoldiOptions& opt);

  int iterations() const { return static_cast<int>(z_block_ofs_.size()) - 1; }
  double beta() const { return beta_; }
  int v_cols() const { return v_cols_; }
  int z_cols() const { return z_cols_; }
  bool broke_down() const { return broke_down_; }

  auto v_view() const { return v_.leftCols(v_cols_); }
  auto z_view() const { return z_.leftCols(z_cols_); }

  /// Hbar, shape v_cols x z_cols.
  Matrix hbar() const;
  /// Hbar(sigma; T) = [E; 0] + Hbar (sigma I - T), shape v_cols x z_cols.
  Matrix hbar_sigma(Complex sigma) const;
  /// Columns [col_begin, col_end) of Hbar(sigma; T) over the first
  /// `row_count` rows (used for incremental least-squares updates).
  Matrix hbar_sigma_block(Complex sigma, int col_begin, int col_end,
                          int row_count) const;

  /// Dense 0/1 selection matrix E, shape v_cols x z_cols.
  Matrix selection_matrix() const;

  const std::vector<Complex>& column_taus() const { return col_tau_; }
  const std::vector<int>& column_sources() const { return col_src_; }
  const std::vector<int>& v_block_offsets() const { return v_block_ofs_; }
  const std::vector<int>& z_block_offsets() const { return z_block_ofs_; }
  /// Deflated column count per iteration.
  const std::vector<int>& deflations() const { return deflations_; }

  ArnoldiCounters& counters() { return counters_; }
  const ArnoldiCounters& counters() const { return counters_; }

 private:
  struct ApplySpec {
    int src;   // V column the preconditioner is applied to
    int prec;  // preconditioner index
  };
  int expand_with(const PreconditionerSet& p, const SparseMatrix* m,
                  const ArnoldiOptions& opt, const std::vector<ApplySpec>& specs,
                  bool block_apply, bool zero_pad = false);
  void ensure_capacity(int vc, int zc);

  Matrix v_, z_, hbar_;
  int v_cols_ = 0, z_cols_ = 0;
  double beta_ = 0.0;
  bool broke_down_ = false;
  std::vector<Complex> col_tau_;
  std::vector<int> col_src_;
  std::vector<int> v_block_ofs_;  // size = #blocks + 1
  std::vector<int> z_block_ofs_;
  std::vector<int> deflations_;
  ArnoldiCounters counters_;
};

}  // namespace shk
