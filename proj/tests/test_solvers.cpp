// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "shk/core_la.hpp"
#include "shk/solvers.hpp"
#include "test_support.hpp"

using namespace shk;

namespace {

Vector dense_direct(const Matrix& kd, const Matrix* md, Complex sigma,
                    const Vector& b) {
  Matrix s = kd + sigma * (md ? *md : Matrix::Identity(kd.rows(), kd.cols()));
  return s.partialPivLu().solve(b);
}

double true_residual(const ShiftedProblem& prob, Complex sigma,
                     const Vector& x) {
  Vector ax = spmv(prob.k, x);
  Vector mx = prob.m ? spmv(*prob.m, x) : x;
  return (prob.b - ax - sigma * mx).norm();
}

void check_nonincreasing(const std::vector<double>& hist) {
  for (size_t i = 1; i < hist.size(); ++i)
    CHECK(hist[i] <= hist[i - 1] * (1.0 + 1e-10) + 1e-14 * hist[0]);
}

}  // namespace

TEST_CASE("mpgmres-sh with sigma = tau converges in one iteration") {
  auto g = test::rng(301);
  int n = 30;
  SparseMatrix a = sparse_from_dense(test::random_well_conditioned(n, g));
  Vector b = test::random_vector(n, g);
  ShiftedProblem prob{a, std::nullopt, b, {Complex(0.8, 0.1)}};
  SolverConfig cfg;
  cfg.taus = {Complex(0.8, 0.1)};
  cfg.btol = 1e-12;
  SolveReport rep = solve_mpgmres_sh(prob, cfg);
  CHECK(rep.shifts[0].converged);
  CHECK(rep.shifts[0].iterations == 1);
  CHECK(rep.shifts[0].final_residual <= 1e-12 * b.norm());
  CHECK(true_residual(prob, prob.sigmas[0], rep.shifts[0].x) <=
        1e-11 * b.norm());
}

TEST_CASE("mpgmres-sh matches a dense direct solve on diag(1..20)") {
  Vector d(20);
  for (int i = 0; i < 20; ++i) d[i] = Complex(1.0 + i);
  SparseMatrix a = sparse_diagonal(d);
  Matrix ad = to_dense(a);
  auto g = test::rng(302);
  Vector b = test::random_vector(20, g);
  ShiftedProblem prob{a, std::nullopt, b, {Complex(0.1), Complex(0.5)}};
  SolverConfig cfg;
  cfg.taus = {Complex(0.3), Complex(5.0)};
  cfg.max_total_iterations = 20;
  SolveReport rep = solve_mpgmres_sh(prob, cfg);
  for (size_t j = 0; j < prob.sigmas.size(); ++j) {
    Vector want = dense_direct(ad, nullptr, prob.sigmas[j], b);
    CHECK((rep.shifts[j].x - want).norm() <= 1e-8 * want.norm());
    check_nonincreasing(rep.shifts[j].residual_history);
  }
  CHECK(rep.precond_solves == 2 * rep.iterations);
}

TEST_CASE("the three solvers match dense direct solves on a random problem") {
  auto g = test::rng(303);
  int n = 80;
  Matrix ad = test::random_well_conditioned(n, g);
  SparseMatrix a = sparse_from_dense(ad);
  Vector b = test::random_vector(n, g);
  std::vector<Complex> sigmas{Complex(0.2), Complex(0.0, 0.9), Complex(-1.0, 0.3)};
  ShiftedProblem prob{a, std::nullopt, b, sigmas};

  SolverConfig cfg;
  cfg.taus = {Complex(0.5), Complex(2.0, 1.0)};
  cfg.max_total_iterations = n;
  for (SolverKind kind : {SolverKind::mpgmres_sh, SolverKind::fgmres_sh}) {
    SolveReport rep = solve_shifted(kind, prob, cfg);
    REQUIRE(rep.all_converged());
    for (size_t j = 0; j < sigmas.size(); ++j) {
      Vector want = dense_direct(ad, nullptr, sigmas[j], b);
      CHECK((rep.shifts[j].x - want).norm() <= 1e-8 * want.norm());
    }
  }
  SolverConfig cfg1 = cfg;
  cfg1.taus = {Complex(0.5)};
  SolveReport rep = solve_gmres_sh(prob, cfg1);
  REQUIRE(rep.all_converged());
  for (size_t j = 0; j < sigmas.size(); ++j) {
    Vector want = dense_direct(ad, nullptr, sigmas[j], b);
    CHECK((rep.shifts[j].x - want).norm() <= 1e-8 * want.norm());
  }
}

TEST_CASE("generalized (K, M) systems solve correctly") {
  auto g = test::rng(304);
  int n = 40;
  Matrix kd = test::random_well_conditioned(n, g);
  Matrix md = test::random_well_conditioned(n, g);
  ShiftedProblem prob{sparse_from_dense(kd), sparse_from_dense(md),
                      test::random_vector(n, g),
                      {Complex(0.0, 0.4), Complex(0.0, 2.0)}};
  SolverConfig cfg;
  cfg.taus = {Complex(0.0, 0.4), Complex(0.0, 2.0)};
  cfg.max_total_iterations = n;
  SolveReport rep = solve_mpgmres_sh(prob, cfg);
  REQUIRE(rep.all_converged());
  for (size_t j = 0; j < prob.sigmas.size(); ++j) {
    Vector want = dense_direct(kd, &md, prob.sigmas[j], prob.b);
    CHECK((rep.shifts[j].x - want).norm() <= 1e-8 * want.norm());
  }
}

TEST_CASE("residual polynomial lives in the sum of preconditioner Krylov spaces") {
  auto g = test::rng(305);
  int n = 40;
  Matrix ad = 0.05 * test::random_matrix(n, n, g);
  for (int i = 0; i < n; ++i)
    ad(i, i) += Complex(std::pow(10.0, -1.0 + 2.0 * i / (n - 1.0)));
  SparseMatrix a = sparse_from_dense(ad);
  Vector b = test::random_vector(n, g);
  ShiftedProblem prob{a, std::nullopt, b, {Complex(0.3, 0.2)}};
  SolverConfig cfg;
  cfg.taus = {Complex(0.6), Complex(1.8)};
  cfg.btol = 1e-30;  // force a fixed number of iterations
  cfg.max_total_iterations = 3;
  PreconditionerSet p(prob.k, nullptr, cfg.taus, ApplyMode::exact);
  SolveReport rep = solve_mpgmres_sh(prob, cfg, p);
  const int m = rep.iterations;

  Matrix basis(n, 2 * m);
  Vector u = b;
  for (int i = 0; i < m; ++i) {
    u = p.at(0).apply(u);
    basis.col(i) = u;
  }
  u = b;
  for (int i = 0; i < m; ++i) {
    u = p.at(1).apply(u);
    basis.col(m + i) = u;
  }
  Vector x = rep.shifts[0].x;
  Vector r = b - (ad + prob.sigmas[0] * Matrix::Identity(n, n)) * x;
  Vector diff = r - b;
  // orthonormalize the explicit Krylov basis before projecting
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix qb = qr.householderQ() * Matrix::Identity(n, 2 * m);
  CHECK((diff - qb * (qb.adjoint() * diff)).norm() <= 1e-7 * b.norm());
}

TEST_CASE("reported residual matches the true residual in exact mode") {
  auto g = test::rng(306);
  int n = 50;
  Matrix ad = test::random_well_conditioned(n, g);
  ShiftedProblem prob{sparse_from_dense(ad), std::nullopt,
                      test::random_vector(n, g),
                      {Complex(0.4), Complex(0.0, 1.0)}};
  SolverConfig cfg;
  cfg.taus = {Complex(0.2), Complex(1.1)};
  cfg.btol = 1e-8;
  SolveReport rep = solve_mpgmres_sh(prob, cfg);
  for (const ShiftReport& s : rep.shifts) {
    double tr = true_residual(prob, s.sigma, s.x);
    CHECK(std::abs(tr - s.final_residual) <=
          1e-9 * std::max(1.0, s.final_residual) * prob.b.norm());
  }
}

TEST_CASE("inexact preconditioning: reported vs true residual gap is O(eps |y|_1)") {
  auto g = test::rng(307);
  const double eps = 1e-6;
  for (int trial = 0; trial < 5; ++trial) {
    int n = 60;
    Matrix ad = test::random_well_conditioned(n, g);
    ShiftedProblem prob{sparse_from_dense(ad), std::nullopt,
                        test::random_vector(n, g),
                        {Complex(0.5, 0.1 * trial)}};
    SolverConfig cfg;
    cfg.taus = {Complex(0.4), Complex(2.2)};
    cfg.epsilon = eps;
    cfg.btol = 1e-9;
    SolveReport rep = solve_mpgmres_sh(prob, cfg);
    const ShiftReport& s = rep.shifts[0];
    REQUIRE(s.converged);
    double tr = true_residual(prob, s.sigma, s.x);
    double y1 = s.y.lpNorm<1>();
    CHECK(std::abs(tr - s.final_residual) <= 10.0 * eps * std::max(y1, 1.0));
  }
}

TEST_CASE("fgmres-sh with one preconditioner reproduces gmres-sh") {
  auto g = test::rng(308);
  int n = 35;
  Matrix ad = test::random_well_conditioned(n, g);
  ShiftedProblem prob{sparse_from_dense(ad), std::nullopt,
                      test::random_vector(n, g),
                      {Complex(0.1), Complex(0.9, 0.5)}};
  SolverConfig cfg;
  cfg.taus = {Complex(0.7)};
  cfg.btol = 1e-11;
  SolveReport rf = solve_fgmres_sh(prob, cfg);
  SolveReport rg = solve_gmres_sh(prob, cfg);
  REQUIRE(rf.shifts.size() == rg.shifts.size());
  for (size_t j = 0; j < rf.shifts.size(); ++j) {
    const auto& hf = rf.shifts[j].residual_history;
    const auto& hg = rg.shifts[j].residual_history;
    REQUIRE(hf.size() == hg.size());
    for (size_t i = 0; i < hf.size(); ++i)
      CHECK(std::abs(hf[i] - hg[i]) <= 1e-10 * (1.0 + hg[i]));
  }
  CHECK(rf.precond_solves == rf.iterations);
}

TEST_CASE("fgmres cycle index follows the block schedule") {
  // m_per_prec = 5, n_p = 3: five iterations per value, then wrap
  for (int k = 1; k <= 5; ++k) CHECK(fgmres_cycle_index(k, 5, 3) == 0);
  for (int k = 6; k <= 10; ++k) CHECK(fgmres_cycle_index(k, 5, 3) == 1);
  for (int k = 11; k <= 15; ++k) CHECK(fgmres_cycle_index(k, 5, 3) == 2);
  for (int k = 16; k <= 20; ++k) CHECK(fgmres_cycle_index(k, 5, 3) == 0);
}

TEST_CASE("fgmres-sh on diag(1..20) with two preconditioners") {
  Vector d(20);
  for (int i = 0; i < 20; ++i) d[i] = Complex(1.0 + i);
  ShiftedProblem prob{sparse_diagonal(d), std::nullopt, Vector::Ones(20),
                      {Complex(0.1), Complex(0.5)}};
  SolverConfig cfg;
  cfg.taus = {Complex(0.3), Complex(5.0)};
  cfg.m_per_prec = 3;
  cfg.max_total_iterations = 40;
  SolveReport rep = solve_fgmres_sh(prob, cfg);
  CHECK(rep.all_converged());
  for (const ShiftReport& s : rep.shifts)
    check_nonincreasing(s.residual_history);
}

TEST_CASE("gmres-sh on the identity solves every shift in one iteration") {
  int n = 10;
  SparseMatrix a = sparse_identity(n);
  auto g = test::rng(309);
  Vector b = test::random_vector(n, g);
  std::vector<Complex> sigmas{Complex(0.5), Complex(0.0, 1.0), Complex(2.0)};
  ShiftedProblem prob{a, std::nullopt, b, sigmas};
  SolverConfig cfg;  // unpreconditioned
  SolveReport rep = solve_gmres_sh(prob, cfg);
  CHECK(rep.iterations == 1);
  for (size_t j = 0; j < sigmas.size(); ++j) {
    CHECK(rep.shifts[j].converged);
    Vector want = b / (Complex(1.0) + sigmas[j]);
    CHECK((rep.shifts[j].x - want).norm() <= 1e-12 * want.norm());
  }
}

TEST_CASE("unpreconditioned gmres-sh reaches the full-space solution") {
  Vector d(10);
  for (int i = 0; i < 10; ++i) d[i] = Complex(1.0 + i);
  auto g = test::rng(310);
  Vector b = test::random_vector(10, g);
  ShiftedProblem prob{sparse_diagonal(d), std::nullopt, b,
                      {Complex(0.0), Complex(1.0)}};
  SolverConfig cfg;
  cfg.max_total_iterations = 10;
  cfg.btol = 1e-10;
  SolveReport rep = solve_gmres_sh(prob, cfg);
  for (const ShiftReport& s : rep.shifts) {
    CHECK(s.final_residual <= 1e-10 * b.norm());
    CHECK(true_residual(prob, s.sigma, s.x) <= 1e-9 * b.norm());
  }
}

TEST_CASE("gmres-sh argument validation") {
  SparseMatrix a = sparse_identity(4);
  ShiftedProblem prob{a, a, Vector::Ones(4), {Complex(0.1)}};
  SolverConfig cfg;  // no taus but M present
  CHECK_THROWS_AS(solve_gmres_sh(prob, cfg), std::invalid_argument);
  cfg.taus = {Complex(0.1), Complex(0.2)};
  CHECK_THROWS_AS(solve_gmres_sh(prob, cfg), std::invalid_argument);
}

TEST_CASE("per-shift least squares basics") {
  Matrix h(2, 1);
  h << Complex(1), Complex(0);
  LeastSquares s = per_shift_least_squares(h, 1.0);
  CHECK(std::abs(s.y[0] - Complex(1)) < 1e-15);
  CHECK(s.residual_norm < 1e-15);

  h << Complex(0), Complex(1);
  s = per_shift_least_squares(h, 1.0);
  CHECK(std::abs(s.y[0]) < 1e-15);
  CHECK(std::abs(s.residual_norm - 1.0) < 1e-15);
}

TEST_CASE("per-shift least squares residual matches the explicit residual") {
  auto g = test::rng(311);
  Matrix h = test::random_matrix(21, 20, g);
  double beta = 2.5;
  LeastSquares s = per_shift_least_squares(h, beta);
  Vector rhs = Vector::Zero(21);
  rhs[0] = beta;
  CHECK(std::abs((rhs - h * s.y).norm() - s.residual_norm) <=
        1e-10 * std::max(1.0, s.residual_norm));
}

TEST_CASE("norm estimate recovers max |lambda + sigma| at full dimension") {
  int n = 10;
  Vector d(n);
  for (int i = 0; i < n; ++i) d[i] = Complex(1.0 + i);
  SparseMatrix a = sparse_diagonal(d);
  auto g = test::rng(312);
  Vector b = test::random_vector(n, g);
  std::vector<Complex> taus{Complex(0.5), Complex(3.0)};
  PreconditionerSet p(a, nullptr, taus, ApplyMode::exact);
  MpArnoldiState st(b);
  ArnoldiOptions opt;
  for (int k = 0; k < 5 && !st.broke_down(); ++k)
    st.expand_selective(p, nullptr, opt);
  NormEstimate est = estimate_shifted_norm(st, Complex(2.0));
  CHECK(!est.degenerate);
  CHECK(std::abs(est.value - 12.0) <= 1e-8 * 12.0);
}

TEST_CASE("norm estimate on A = I is 1 at sigma = 0") {
  int n = 6;
  SparseMatrix a = sparse_identity(n);
  auto g = test::rng(313);
  Vector b = test::random_vector(n, g);
  std::vector<Complex> taus{Complex(0.5)};
  PreconditionerSet p(a, nullptr, taus, ApplyMode::exact);
  MpArnoldiState st(b);
  ArnoldiOptions opt;
  st.expand_selective(p, nullptr, opt);
  NormEstimate est = estimate_shifted_norm(st, Complex(0.0));
  CHECK(std::abs(est.value - 1.0) <= 1e-10);
}

TEST_CASE("harmonic Ritz pairs are perpendicular in the V-inner product") {
  auto g = test::rng(314);
  int n = 60;
  Matrix ad = test::random_well_conditioned(n, g);
  SparseMatrix a = sparse_from_dense(ad);
  std::vector<Complex> taus{Complex(0.5), Complex(1.5)};
  PreconditionerSet p(a, nullptr, taus, ApplyMode::exact);
  MpArnoldiState st(test::random_vector(n, g));
  ArnoldiOptions opt;
  for (int k = 0; k < 4; ++k) st.expand_selective(p, nullptr, opt);

  const int q = st.z_cols();
  Complex sigma(0.3, 0.7);
  Matrix hs_sq = st.hbar_sigma(sigma).topRows(q);
  Matrix h_sq = st.hbar().topRows(q);
  // eigenvectors of the pencil Hsq(sigma) z = theta Hsq z
  Eigen::ComplexEigenSolver<Matrix> es(h_sq.inverse() * hs_sq);
  Matrix vbig = st.v_view();
  Matrix hbar = st.hbar();
  Matrix shifted = ad + sigma * Matrix::Identity(n, n);
  for (int j = 0; j < es.eigenvalues().size(); ++j) {
    Complex theta = es.eigenvalues()[j];
    Vector z = es.eigenvectors().col(j);
    Vector u = vbig * (hbar * z);
    Vector resid = vbig.leftCols(q).adjoint() * (shifted * u - theta * u);
    double scale = (shifted.norm() + std::abs(theta)) * u.norm();
    CHECK(resid.norm() <= 1e-8 * scale);
  }
}

TEST_CASE("convergence_check arithmetic") {
  SolverConfig cfg;
  cfg.btol = 1e-10;
  cfg.atol = 0.0;
  cfg.epsilon = 0.0;
  CHECK(convergence_check(0.0, 1.0, 0.0, 0.0, 0.0, cfg));
  CHECK(!convergence_check(1e-9, 1.0, 0.0, 0.0, 0.0, cfg));
  cfg.atol = 1e-10;
  // 1e-9 <= 1e-10 + 1e-10 * 1e7 * 1 = ~1e-3
  CHECK(convergence_check(1e-9, 1.0, 1.0, 1e7, 0.0, cfg));
}

TEST_CASE("budget exhaustion reports non-convergence") {
  Vector d(30);
  for (int i = 0; i < 30; ++i) d[i] = Complex(1.0 + i);
  ShiftedProblem prob{sparse_diagonal(d), std::nullopt, Vector::Ones(30),
                      {Complex(0.05)}};
  SolverConfig cfg;
  cfg.taus = {Complex(100.0)};  // poor preconditioner
  cfg.max_total_iterations = 2;
  cfg.btol = 1e-14;
  SolveReport rep = solve_mpgmres_sh(prob, cfg);
  CHECK(!rep.shifts[0].converged);
  CHECK(rep.iterations == 2);
  CHECK(rep.shifts[0].x.size() == 30);
}

TEST_CASE("atol-based stopping engages the norm estimate") {
  auto g = test::rng(315);
  int n = 40;
  Matrix ad = test::random_well_conditioned(n, g);
  ShiftedProblem prob{sparse_from_dense(ad), std::nullopt,
                      test::random_vector(n, g), {Complex(0.2)}};
  SolverConfig cfg;
  cfg.taus = {Complex(0.4)};
  cfg.btol = 1e-12;
  cfg.atol = 1e-12;
  SolveReport rep = solve_mpgmres_sh(prob, cfg);
  CHECK(rep.all_converged());
  const ShiftReport& s = rep.shifts[0];
  double tr = true_residual(prob, s.sigma, s.x);
  NormEstimate est{0.0, false};
  {
    PreconditionerSet p(prob.k, nullptr, cfg.taus, ApplyMode::exact);
    MpArnoldiState st(prob.b);
    for (int k = 0; k < s.iterations && !st.broke_down(); ++k)
      st.expand_selective(p, nullptr, cfg.arnoldi);
    est = estimate_shifted_norm(st, s.sigma);
  }
  CHECK(tr <= cfg.btol * prob.b.norm() +
                  1.01 * cfg.atol * est.value * s.x.norm() + 1e-13);
}
