// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <optional>
#include <span>
#include <vector>

#include "shk/core_la.hpp"
#include "shk/types.hpp"

namespace shk {

enum class ApplyMode { exact, inexact };

struct InnerSolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shift-and-invert preconditioner: applying it solves (K + tau M) x = v.
/// Exact mode backs the apply with an LU factorization; inexact mode runs an
/// unrestarted inner GMRES on the assembled operator until the relative
/// residual drops below epsilon.
class ShiftInvertPreconditioner {
 public:
  ShiftInvertPreconditioner(const SparseMatrix& k, const SparseMatrix* m,
                            Complex tau, ApplyMode mode, double epsilon = 0.0,
                            int max_inner_iterations = 500);

  Vector apply(const Vector& v) const;
  Complex tau() const { return tau_; }
  ApplyMode mode() const { return mode_; }
  double epsilon() const { return epsilon_; }
  int rows() const { return static_cast<int>(shifted_.rows()); }

 private:
  Complex tau_;
  ApplyMode mode_;
  double epsilon_;
  int max_inner_;
  SparseMatrix shifted_;  // K + tau M
  std::optional<LuFactorization> lu_;
};

/// Ordered set of shift-and-invert preconditioners sharing (K, M). Shifts
/// must be pairwise distinct. apply_block may run its solves on worker
/// threads (capped by SHIFTED_KRYLOV_THREADS); the solve tally is merged
/// after the join so counts stay deterministic.
class PreconditionerSet {
 public:
  PreconditionerSet(const SparseMatrix& k, const SparseMatrix* m,
                    std::span<const Complex> taus, ApplyMode mode,
                    double epsilon = 0.0, int max_inner_iterations = 500);

  int size() const { return static_cast<int>(ps_.size()); }
  const ShiftInvertPreconditioner& at(int j) const { return ps_.at(j); }
  Complex tau(int j) const { return ps_.at(j).tau(); }

  /// Column j of the result is P_j^{-1} vhat; performs exactly size() solves.
  DenseBlock apply_block(const Vector& vhat) const;
  /// Single preconditioner apply (one solve).
  Vector apply_one(int j, const Vector& vhat) const;

  long solve_count() const { return solves_.load(); }

 private:
  std::vector<ShiftInvertPreconditioner> ps_;
  mutable std::atomic<long> solves_{0};
};

/// Worker-thread cap from SHIFTED_KRYLOV_THREADS (>= 1; defaults to 1).
int worker_thread_cap();

}  // namespace shk
