// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "shk/mp_arnoldi.hpp"
#include "shk/preconditioners.hpp"
#include "shk/types.hpp"

namespace shk {

/// A family of shifted systems (K + sigma_j M) x_j = b sharing one
/// right-hand side. M absent means the identity.
struct ShiftedProblem {
  SparseMatrix k;
  std::optional<SparseMatrix> m;
  Vector b;
  std::vector<Complex> sigmas;

  const SparseMatrix* mass() const { return m ? &*m : nullptr; }
};

enum class SolverKind { mpgmres_sh, fgmres_sh, gmres_sh };

const char* solver_name(SolverKind kind);

struct SolverConfig {
  std::vector<Complex> taus;     ///< preconditioner shifts (GMRES-Sh: empty = unpreconditioned)
  int m_per_prec = 5;            ///< FGMRES-Sh iterations per preconditioner before cycling
  double btol = 1e-10;
  double atol = 0.0;
  double epsilon = 0.0;          ///< inexact preconditioner accuracy (0 = exact solves)
  int max_total_iterations = 500;
  int max_inner_iterations = 500;
  bool parallel_shifts = false;  ///< parallelize per-shift least-squares work
  ArnoldiOptions arnoldi;

  ApplyMode apply_mode() const {
    return epsilon > 0.0 ? ApplyMode::inexact : ApplyMode::exact;
  }
};

struct ShiftReport {
  Complex sigma;
  Vector x;
  Vector y;  ///< projected least-squares coefficients at the final space
  std::vector<double> residual_history;  ///< reported least-squares residuals
  double final_residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// FGMRES-Sh preconditioner schedule: m_per_prec consecutive iterations per
/// shift value, wrapping (k is 1-based).
int fgmres_cycle_index(int k, int m_per_prec, int n_p);

struct SolveReport {
  std::vector<ShiftReport> shifts;
  int iterations = 0;  ///< basis-building iterations performed
  long precond_solves = 0;
  long inner_products = 0;
  long spmvs = 0;
  bool breakdown = false;
  double wall_ms = 0.0;

  bool all_converged() const;
};

/// Selective MPGMRES-Sh: every preconditioner applied each iteration.
SolveReport solve_mpgmres_sh(const ShiftedProblem& prob, const SolverConfig& cfg);
SolveReport solve_mpgmres_sh(const ShiftedProblem& prob, const SolverConfig& cfg,
                             const PreconditionerSet& p);

/// FGMRES-Sh: one preconditioner per iteration, cycling in blocks of
/// m_per_prec iterations per shift value.
SolveReport solve_fgmres_sh(const ShiftedProblem& prob, const SolverConfig& cfg);
SolveReport solve_fgmres_sh(const ShiftedProblem& prob, const SolverConfig& cfg,
                            const PreconditionerSet& p);

/// GMRES-Sh: one shared Krylov basis, at most one preconditioner (none =
/// plain shifted Arnoldi on K, valid only when M is the identity).
SolveReport solve_gmres_sh(const ShiftedProblem& prob, const SolverConfig& cfg);

SolveReport solve_shifted(SolverKind kind, const ShiftedProblem& prob,
                          const SolverConfig& cfg);

/// Least squares min ||beta e1 - Hbar(sigma) y||; minimum-norm solution with
/// a rank-deficiency flag.
LeastSquares per_shift_least_squares(const Matrix& hbar_sigma, double beta);

struct NormEstimate {
  double value = 0.0;
  bool degenerate = false;  ///< pencil degenerate; value fell back to ||Hbar(sigma)||_F
};

/// ||K + sigma M|| estimate: largest modulus of the harmonic Ritz pencil
/// Hsq(sigma; T) z = lambda Hsq z on the leading square blocks.
NormEstimate estimate_shifted_norm(const MpArnoldiState& state, Complex sigma);

/// Harmonic Ritz eigenvalues mu of the sigma-independent pencil; the per-shift
/// estimate is max |mu + sigma|.
GenEig harmonic_pencil(const MpArnoldiState& state);

/// res <= btol ||b|| + atol ||K + sigma M|| ||x|| + epsilon ||y||_1
bool convergence_check(double res_norm, double b_norm, double x_norm,
                       double norm_est, double y_l1, const SolverConfig& cfg);

}  // namespace shk
