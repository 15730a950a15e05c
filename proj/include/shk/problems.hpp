// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "shk/solvers.hpp"
#include "shk/types.hpp"

namespace shk {

/// Finite-volume phasor-domain groundwater operator on a square domain with
/// homogeneous Dirichlet boundaries: (K + i omega M) x = b.
struct PhasorProblem {
  SparseMatrix k;  ///< stiffness (real symmetric positive definite)
  SparseMatrix m;  ///< diagonal lumped storage (positive)
  Vector b;        ///< unit point source
  std::vector<double> omegas;

  ShiftedProblem to_shifted() const;
};

/// 5-point finite-volume discretization of -div(K grad) + i omega Ss on an
/// nx x ny interior vertex grid over [0, L]^2 (harmonic-mean interface
/// conductivities, entries scaled by the cell area so M = diag(Ss h^2)).
/// `cond_cells` holds one positive conductivity per node, or a single scalar.
PhasorProblem gen_phasor_2d(int nx, int ny, const RealVector& cond_cells,
                            double ss, int source_index,
                            std::vector<double> omegas, double length = 1.0);

/// Independent log-normal cells: exp(N(mean_log, var_log)), seeded.
RealVector sample_lognormal_field(int n, double mean_log, double var_log,
                                  unsigned long long seed);

struct TauGrid {
  std::vector<Complex> taus;  ///< i * omega, log-even in [omega_lo, omega_hi]
  double omega_lo = 0.0, omega_hi = 0.0;
};

/// tau_k = i exp(log omega_lo + (k-1) (log omega_hi - log omega_lo)/(n_p-1));
/// n_p = 1 takes the log midpoint.
TauGrid gen_tau_grid(double omega_lo, double omega_hi, int n_p);

struct MatrixMarketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Matrix Market coordinate reader (real/integer/complex x
/// general/symmetric/hermitian); 1-based indices converted, symmetric
/// storage expanded, duplicates summed.
SparseMatrix load_matrix_market(const std::string& path);

/// Coordinate-format writer (%.17g, so exactly representable values
/// round-trip bit-identically).
void save_matrix_market(const std::string& path, const SparseMatrix& a);

/// Loads an n x 1 coordinate file as a vector.
Vector load_vector_market(const std::string& path);
void save_vector_market(const std::string& path, const Vector& v);

/// Deterministic sparse SPD test matrix with spectrum inside
/// [lambda_min, 1.1 lambda_min + lambda_max]: shuffled log-spaced diagonal
/// plus a weak path-graph coupling. Stands in for external collection
/// matrices when those files are not available.
SparseMatrix gen_spd_test_matrix(int n, double lambda_min, double lambda_max,
                                 unsigned long long seed);

}  // namespace shk
