// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "shk/solvers.hpp"
#include "shk/types.hpp"

namespace shk {

enum class MatrixFunction { exp_neg, log, sqrt, one };

Complex apply_scalar(MatrixFunction f, Complex z);
MatrixFunction parse_function_token(std::string_view token);  // "exp-neg" | "log" | "sqrt"
const char* function_token(MatrixFunction f);

enum class QuadKind {
  circle_trapezoid,
  hale_higham_1,
  hale_higham_2,
  hale_higham_3,
  parabola_exp,
};

QuadKind parse_quad_kind(std::string_view token);
const char* quad_kind_token(QuadKind kind);

/// Estimated extreme eigenvalues of an SPD matrix.
struct SpectrumBounds {
  double m_hat = 0.0;
  double big_m_hat = 0.0;
  double kappa() const { return big_m_hat / m_hat; }
};

/// Lanczos-based bounds: largest eigenvalue from 50 steps on A, smallest from
/// 50 steps on A^{-1} (one sparse LU), both pushed outward by `margin`.
SpectrumBounds estimate_spectrum_bounds(const SparseMatrix& a,
                                        int lanczos_steps = 50,
                                        double margin = 0.05);

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solver failure on one quadrature node.
struct NodeSolveError : std::runtime_error {
  NodeSolveError(int node, const std::string& what)
      : std::runtime_error(what), node_index(node) {}
  int node_index;
};

/// Quadrature rule for f(A) b ~ [A *] sum_j w_j (z_j I - A)^{-1} b. The
/// function values are folded into the weights at construction.
struct QuadratureRule {
  QuadKind kind;
  MatrixFunction f;
  std::vector<Complex> nodes;
  std::vector<Complex> weights;
  bool premultiply_by_a = false;  // hale-higham-3 evaluates A * sum
  int size() const { return static_cast<int>(nodes.size()); }
};

/// Trapezoid rule on the circle with center (m+M)/2 and radius
/// (M-m)/2 + 0.1 m (keeps 0 strictly outside for SPD spectra).
QuadratureRule build_circle_rule(const SpectrumBounds& bounds, MatrixFunction f,
                                 int n);

/// Midline trapezoid rule in the annulus conformally equivalent to the plane
/// cut along (-inf,0] and [m,M] (Jacobi elliptic map). Any f analytic off the
/// cut; the rate degrades for fast-growing f such as exp(-z) at large kappa.
QuadratureRule build_hale_higham_1(const SpectrumBounds& bounds,
                                   MatrixFunction f, int n);

/// Same construction in the w = sqrt(z) plane (doubled convergence rate);
/// valid for log and sqrt.
QuadratureRule build_hale_higham_2(const SpectrumBounds& bounds,
                                   MatrixFunction f, int n);

/// A^{1/2} b = A * (2/pi) int_0^inf (t^2 I + A)^{-1} b dt with the elliptic
/// substitution t = sqrt(m) sc(u, k); nodes are real negative, the result is
/// premultiplied by A. sqrt only.
QuadratureRule build_hale_higham_3(const SpectrumBounds& bounds,
                                   MatrixFunction f, int n);

/// Parabolic contour z = mu (theta + i)^2 wrapping the positive axis, with
/// (h, mu) balanced so the rate is independent of kappa. exp-neg only.
QuadratureRule build_parabola_exp(const SpectrumBounds& bounds,
                                  MatrixFunction f, int n);

QuadratureRule build_quadrature_rule(QuadKind kind, const SpectrumBounds& bounds,
                                     MatrixFunction f, int n);

/// Fastest uniformly valid kind per function: exp-neg -> parabola,
/// log -> hale-higham-2, sqrt -> hale-higham-3.
QuadKind default_rule_for(MatrixFunction f);

/// f_N(D) v for diagonal D (resolvents become divisions); the surrogate used
/// by adaptive N selection.
Vector apply_rule_to_diagonal(const QuadratureRule& rule, const RealVector& d,
                              const Vector& v);

/// Smallest N (doubling from n0) with ||f_2N(D)v - f_N(D)v|| <= eps
/// ||f_N(D)v|| on a geometric surrogate spectrum. Throws QuadratureError past
/// the cap.
int select_n_adaptive(const SpectrumBounds& bounds, MatrixFunction f,
                      QuadKind kind, double eps, int n0 = 16, int cap = 4096);

struct MatfunResult {
  Vector value;
  SolveReport report;
  std::vector<Complex> taus_used;
  double imag_ratio = 0.0;  ///< discarded imaginary mass relative to ||value||
};

/// Evaluates f(A) b through the rule: the N shifted systems
/// (A - z_j I) x = -b share one solver basis (sigma_j = -z_j). Preconditioner
/// shifts default to the negated nodes z_1, z_{N/2}, z_N. Throws
/// NodeSolveError (carrying the node index) when any node fails to converge.
MatfunResult eval_matfun(MatrixFunction f, const SparseMatrix& a,
                         const Vector& b, const QuadratureRule& rule,
                         const SolverConfig& solver_cfg,
                         SolverKind solver = SolverKind::mpgmres_sh);

}  // namespace shk
