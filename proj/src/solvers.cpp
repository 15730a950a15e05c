// SPDX-License-Identifier: Apache-2.0
#include "shk/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "shk/core_la.hpp"

namespace shk {

const char* solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::mpgmres_sh: return "mpgmres-sh";
    case SolverKind::fgmres_sh: return "fgmres-sh";
    case SolverKind::gmres_sh: return "gmres-sh";
  }
  return "?";
}

bool SolveReport::all_converged() const {
  return std::all_of(shifts.begin(), shifts.end(),
                     [](const ShiftReport& s) { return s.converged; });
}

LeastSquares per_shift_least_squares(const Matrix& hbar_sigma, double beta) {
  Vector rhs = Vector::Zero(hbar_sigma.rows());
  rhs[0] = beta;
  return dense_least_squares(hbar_sigma, rhs);
}

GenEig harmonic_pencil(const MpArnoldiState& state) {
  const int q = std::min(state.v_cols(), state.z_cols());
  Matrix hb = state.hbar();
  Matrix b = hb.topLeftCorner(q, q);
  Matrix c = Matrix::Zero(q, q);
  const auto& taus = state.column_taus();
  const auto& srcs = state.column_sources();
  for (int j = 0; j < q; ++j) {
    c.col(j) = -taus[j] * hb.col(j).head(q);
    if (srcs[j] < q) c(srcs[j], j) += Complex(1.0);
  }
  return small_gen_eig(c, b);
}

NormEstimate estimate_shifted_norm(const MpArnoldiState& state, Complex sigma) {
  NormEstimate out;
  try {
    GenEig eig = harmonic_pencil(state);
    if (eig.eigenvalues.empty())
      throw DegeneratePencilError("no finite harmonic Ritz values");
    for (Complex mu : eig.eigenvalues)
      out.value = std::max(out.value, std::abs(mu + sigma));
  } catch (const DegeneratePencilError&) {
    out.degenerate = true;
    out.value = state.hbar_sigma(sigma).norm();
  }
  return out;
}

bool convergence_check(double res_norm, double b_norm, double x_norm,
                       double norm_est, double y_l1, const SolverConfig& cfg) {
  return res_norm <= cfg.btol * b_norm + cfg.atol * norm_est * x_norm +
                         cfg.epsilon * y_l1;
}

int fgmres_cycle_index(int k, int m_per_prec, int n_p) {
  return ((k - 1) / std::max(1, m_per_prec)) % n_p;
}

namespace {

// Incremental QR of the growing per-shift projected matrix. Columns and rows
// only ever get appended (older columns carry zeros in new rows), so the
// Givens reduction is updated instead of rebuilt each iteration.
class IncrementalLs {
 public:
  explicit IncrementalLs(double beta) {
    g_ = Vector::Zero(16);
    g_[0] = beta;
    rows_ = 1;
  }

  void append(const Matrix& cols, int rows_new) {
    if (rows_new > g_.size()) {
      int cap = std::max<int>(rows_new, 2 * static_cast<int>(g_.size()));
      Vector ng = Vector::Zero(cap);
      ng.head(g_.size()) = g_;
      g_ = std::move(ng);
    }
    rows_ = std::max(rows_, rows_new);
    const int w = static_cast<int>(cols.cols());
    if (cols_ + w > r_.cols()) {
      int cap = std::max(cols_ + w, 2 * static_cast<int>(r_.cols()) + 4);
      Matrix nr = Matrix::Zero(cap, cap);
      nr.topLeftCorner(r_.rows(), r_.cols()) = r_;
      r_ = std::move(nr);
    }
    for (int c = 0; c < w; ++c) {
      Vector x = Vector::Zero(rows_);
      x.head(cols.rows()) = cols.col(c);
      for (size_t i = 0; i < rots_.size(); ++i)
        x.applyOnTheLeft(rot_rows_[i].first, rot_rows_[i].second,
                         rots_[i].adjoint());
      const int cc = cols_;
      for (int r = cc + 1; r < rows_; ++r) {
        if (x[r] == Complex(0.0)) continue;
        Eigen::JacobiRotation<Complex> rot;
        rot.makeGivens(x[cc], x[r]);
        x.applyOnTheLeft(cc, r, rot.adjoint());
        g_.applyOnTheLeft(cc, r, rot.adjoint());
        rots_.push_back(rot);
        rot_rows_.emplace_back(cc, r);
      }
      const int len = std::min(cc + 1, rows_);
      r_.col(cc).head(len) = x.head(len);
      ++cols_;
    }
  }

  double residual() const {
    if (rows_ <= cols_) return 0.0;
    return g_.segment(cols_, rows_ - cols_).norm();
  }

  // Back substitution; false when R is numerically rank deficient and the
  // caller should fall back to a minimum-norm dense solve.
  bool solve_y(Vector& y) const {
    if (cols_ == 0) {
      y.resize(0);
      return true;
    }
    auto diag = r_.topLeftCorner(cols_, cols_).diagonal().cwiseAbs();
    if (diag.minCoeff() <= 1e-12 * diag.maxCoeff()) return false;
    y = r_.topLeftCorner(cols_, cols_)
            .triangularView<Eigen::Upper>()
            .solve(g_.head(cols_));
    return true;
  }

  int cols() const { return cols_; }

 private:
  Matrix r_;
  Vector g_;
  std::vector<Eigen::JacobiRotation<Complex>> rots_;
  std::vector<std::pair<int, int>> rot_rows_;
  int rows_ = 0, cols_ = 0;
};

struct ShiftWork {
  Complex sigma;
  std::unique_ptr<IncrementalLs> ls;
  std::vector<double> history;
  bool frozen = false;
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;
  Vector x;
  Vector y;
};

enum class PreconMode { selective, cycling, single };

// Drives the multipreconditioned Arnoldi state for the three preconditioned
// solver variants.
struct PreconStrategy {
  MpArnoldiState state;
  const PreconditionerSet& p;
  const SparseMatrix* m;
  const SolverConfig& cfg;
  PreconMode mode;

  PreconStrategy(const ShiftedProblem& prob, const SolverConfig& c,
                 const PreconditionerSet& pre, PreconMode md)
      : state(prob.b), p(pre), m(prob.mass()), cfg(c), mode(md) {}

  double beta() const { return state.beta(); }
  bool broke_down() const { return state.broke_down(); }
  int z_cols() const { return state.z_cols(); }
  int v_cols() const { return state.v_cols(); }

  void expand(int k) {
    switch (mode) {
      case PreconMode::selective:
        state.expand_selective(p, m, cfg.arnoldi);
        break;
      case PreconMode::cycling:
        state.expand_flexible(p, fgmres_cycle_index(k, cfg.m_per_prec, p.size()),
                              m, cfg.arnoldi);
        break;
      case PreconMode::single:
        state.expand_flexible(p, 0, m, cfg.arnoldi);
        break;
    }
  }

  Matrix ls_columns(Complex sigma, int z0, int z1, int rows) const {
    return state.hbar_sigma_block(sigma, z0, z1, rows);
  }
  Matrix projected_full(Complex sigma) const { return state.hbar_sigma(sigma); }
  Vector assemble_x(const Vector& y) const {
    return state.z_view().leftCols(y.size()) * y;
  }
  auto solution_basis() const { return state.z_view(); }
  std::vector<Complex> harmonic_mus() const {
    return harmonic_pencil(state).eigenvalues;
  }
  const ArnoldiCounters& counters() const { return state.counters(); }
};

// Plain shifted Arnoldi on K (no preconditioner): one Krylov basis shared by
// all shifts, projected matrix Hbar + sigma [I; 0], solutions in span(V).
struct PlainStrategy {
  const SparseMatrix& k_;
  const SolverConfig& cfg;
  Matrix v, h;  // h holds Hbar in (iters_+1) x iters_ top-left corner
  int vcols = 1, iters_ = 0;
  double beta_;
  bool broke_ = false;
  ArnoldiCounters counters_;

  PlainStrategy(const ShiftedProblem& prob, const SolverConfig& c)
      : k_(prob.k), cfg(c) {
    beta_ = prob.b.norm();
    if (!(beta_ > 0.0))
      throw std::invalid_argument("solve: right-hand side is zero");
    v.resize(prob.b.size(), 8);
    h = Matrix::Zero(9, 8);
    v.col(0) = prob.b / beta_;
  }

  double beta() const { return beta_; }
  bool broke_down() const { return broke_; }
  int z_cols() const { return iters_; }
  int v_cols() const { return vcols; }

  void expand(int) {
    if (vcols + 1 > v.cols()) {
      v.conservativeResize(Eigen::NoChange, 2 * v.cols());
      Matrix nh = Matrix::Zero(v.cols() + 1, v.cols());
      nh.topLeftCorner(h.rows(), h.cols()) = h;
      h = std::move(nh);
    }
    Vector w = spmv(k_, v.col(vcols - 1));
    ++counters_.spmvs;
    const double scale = w.norm();
    ++counters_.inner_products;
    for (int pass = 0; pass < (cfg.arnoldi.reorthogonalize ? 2 : 1); ++pass) {
      for (int j = 0; j < vcols; ++j) {
        Complex c = v.col(j).dot(w);
        ++counters_.inner_products;
        w -= v.col(j) * c;
        h(j, iters_) += c;
      }
    }
    double nrm = w.norm();
    ++counters_.inner_products;
    if (nrm <= cfg.arnoldi.drop_tol * scale) {
      broke_ = true;
      ++iters_;
      return;
    }
    h(vcols, iters_) = nrm;
    v.col(vcols) = w / nrm;
    ++vcols;
    ++iters_;
  }

  Matrix ls_columns(Complex sigma, int z0, int z1, int rows) const {
    Matrix out = Matrix::Zero(rows, z1 - z0);
    for (int c = z0; c < z1; ++c) {
      out.col(c - z0) = h.col(c).head(rows);
      out(c, c - z0) += sigma;
    }
    return out;
  }
  Matrix projected_full(Complex sigma) const {
    Matrix out = h.topLeftCorner(vcols, iters_);
    for (int c = 0; c < iters_; ++c) out(c, c) += sigma;
    return out;
  }
  Vector assemble_x(const Vector& y) const {
    return v.leftCols(y.size()) * y;
  }
  auto solution_basis() const { return v.leftCols(iters_); }
  std::vector<Complex> harmonic_mus() const {
    const int q = std::min(vcols, iters_);
    Eigen::ComplexEigenSolver<Matrix> es(h.topLeftCorner(q, q));
    std::vector<Complex> mus(es.eigenvalues().data(),
                             es.eigenvalues().data() + q);
    return mus;
  }
  const ArnoldiCounters& counters() const { return counters_; }
};

template <typename Fn>
void for_each_maybe_parallel(const std::vector<int>& idx, bool parallel,
                             Fn&& fn) {
  const int nth =
      parallel ? std::min<int>(worker_thread_cap(), static_cast<int>(idx.size()))
               : 1;
  if (nth <= 1) {
    for (int i : idx) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nth);
  for (int t = 0; t < nth; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (size_t s = next.fetch_add(1); s < idx.size();
             s = next.fetch_add(1))
          fn(idx[s]);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

void validate_problem(const ShiftedProblem& prob) {
  if (prob.k.rows() != prob.k.cols())
    throw std::invalid_argument("solve: K must be square");
  if (prob.m &&
      (prob.m->rows() != prob.k.rows() || prob.m->cols() != prob.k.cols()))
    throw std::invalid_argument("solve: K and M dimensions differ");
  if (prob.b.size() != prob.k.rows())
    throw std::invalid_argument("solve: right-hand side dimension mismatch");
  if (prob.sigmas.empty()) throw std::invalid_argument("solve: no shifts given");
}

template <class Strategy>
SolveReport run_driver(Strategy& strat, const ShiftedProblem& prob,
                       const SolverConfig& cfg, const PreconditionerSet* p) {
  const auto t0 = std::chrono::steady_clock::now();
  const double bnorm = strat.beta();
  const long solves0 = p ? p->solve_count() : 0;
  const bool need_y = cfg.atol > 0.0 || cfg.epsilon > 0.0;

  std::vector<ShiftWork> works(prob.sigmas.size());
  for (size_t i = 0; i < works.size(); ++i) {
    works[i].sigma = prob.sigmas[i];
    works[i].ls = std::make_unique<IncrementalLs>(bnorm);
  }

  // Gram matrix of the solution basis (for ||x|| = sqrt(y^H G y)) and cached
  // harmonic Ritz values. The Ritz refresh runs on a doubling schedule; a
  // stale estimate only tightens the stopping test.
  Matrix gram;
  std::vector<Complex> mus;
  bool have_mus = false;

  auto finalize = [&](ShiftWork& w, bool converged, int k) {
    w.converged = converged;
    w.iterations = k;
    w.final_residual = w.ls->residual();
    Vector y;
    if (!w.ls->solve_y(y)) {
      Matrix hs = strat.projected_full(w.sigma);
      LeastSquares sol = per_shift_least_squares(hs, bnorm);
      y = sol.y;
      w.final_residual = sol.residual_norm;
    }
    w.x = strat.assemble_x(y);
    w.y = std::move(y);
    w.frozen = true;
  };

  int iters_done = 0;
  for (int k = 1; k <= cfg.max_total_iterations; ++k) {
    const int z0 = strat.z_cols();
    strat.expand(k);
    const int z1 = strat.z_cols();
    const int rows_new = strat.v_cols();
    iters_done = k;

    std::vector<int> active;
    for (size_t i = 0; i < works.size(); ++i)
      if (!works[i].frozen) active.push_back(static_cast<int>(i));

    if (cfg.atol > 0.0) {
      const auto z = strat.solution_basis();
      if (gram.cols() < z1) {
        Matrix ng = Matrix::Zero(z1, z1);
        ng.topLeftCorner(gram.rows(), gram.cols()) = gram;
        gram = std::move(ng);
      }
      Matrix cross = z.adjoint() * z.middleCols(z0, z1 - z0);
      gram.block(0, z0, z1, z1 - z0) = cross;
      gram.block(z0, 0, z1 - z0, z0) = cross.topRows(z0).adjoint();
      const bool refresh = (k & (k - 1)) == 0 || strat.broke_down() ||
                           k == cfg.max_total_iterations;
      if (refresh || !have_mus) {
        try {
          mus = strat.harmonic_mus();
        } catch (const DegeneratePencilError&) {
          mus.clear();
        }
        have_mus = true;
      }
    }

    std::vector<char> ok(works.size(), 0);
    auto process = [&](int i) {
      ShiftWork& w = works[i];
      Matrix cols = strat.ls_columns(w.sigma, z0, z1, rows_new);
      w.ls->append(cols, rows_new);
      double res = w.ls->residual();
      w.history.push_back(res);
      double est = 0.0, xnorm = 0.0, y1 = 0.0;
      if (need_y) {
        Vector y;
        if (w.ls->solve_y(y) && y.size() > 0) {
          y1 = y.template lpNorm<1>();
          if (cfg.atol > 0.0) {
            if (!mus.empty()) {
              for (Complex mu : mus)
                est = std::max(est, std::abs(mu + w.sigma));
            } else {
              est = strat.projected_full(w.sigma).norm();
            }
            xnorm = std::sqrt(std::abs(
                (y.adjoint() * gram.topLeftCorner(y.size(), y.size()) * y)(0)
                    .real()));
          }
        }
      }
      ok[i] = convergence_check(res, bnorm, xnorm, est, y1, cfg) ? 1 : 0;
    };
    for_each_maybe_parallel(active, cfg.parallel_shifts, process);

    for (int i : active)
      if (ok[i]) finalize(works[i], true, k);

    bool all_frozen = std::all_of(works.begin(), works.end(),
                                  [](const ShiftWork& w) { return w.frozen; });
    if (all_frozen || strat.broke_down()) break;
  }

  for (auto& w : works)
    if (!w.frozen) finalize(w, false, iters_done);

  SolveReport rep;
  rep.iterations = iters_done;
  rep.breakdown = strat.broke_down();
  rep.precond_solves = (p ? p->solve_count() : 0) - solves0;
  rep.inner_products = strat.counters().inner_products;
  rep.spmvs = strat.counters().spmvs;
  rep.shifts.reserve(works.size());
  for (auto& w : works) {
    ShiftReport s;
    s.sigma = w.sigma;
    s.x = std::move(w.x);
    s.y = std::move(w.y);
    s.residual_history = std::move(w.history);
    s.final_residual = w.final_residual;
    s.converged = w.converged;
    s.iterations = w.iterations;
    rep.shifts.push_back(std::move(s));
  }
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

SolveReport run_precon(const ShiftedProblem& prob, const SolverConfig& cfg,
                       const PreconditionerSet& p, PreconMode mode) {
  validate_problem(prob);
  PreconStrategy strat(prob, cfg, p, mode);
  return run_driver(strat, prob, cfg, &p);
}

}  // namespace

SolveReport solve_mpgmres_sh(const ShiftedProblem& prob, const SolverConfig& cfg,
                             const PreconditionerSet& p) {
  return run_precon(prob, cfg, p, PreconMode::selective);
}

SolveReport solve_mpgmres_sh(const ShiftedProblem& prob,
                             const SolverConfig& cfg) {
  PreconditionerSet p(prob.k, prob.mass(), cfg.taus, cfg.apply_mode(),
                      cfg.epsilon, cfg.max_inner_iterations);
  return solve_mpgmres_sh(prob, cfg, p);
}

SolveReport solve_fgmres_sh(const ShiftedProblem& prob, const SolverConfig& cfg,
                            const PreconditionerSet& p) {
  return run_precon(prob, cfg, p, PreconMode::cycling);
}

SolveReport solve_fgmres_sh(const ShiftedProblem& prob,
                            const SolverConfig& cfg) {
  PreconditionerSet p(prob.k, prob.mass(), cfg.taus, cfg.apply_mode(),
                      cfg.epsilon, cfg.max_inner_iterations);
  return solve_fgmres_sh(prob, cfg, p);
}

SolveReport solve_gmres_sh(const ShiftedProblem& prob, const SolverConfig& cfg) {
  if (cfg.taus.size() > 1)
    throw std::invalid_argument("gmres-sh takes at most one preconditioner");
  if (cfg.taus.size() == 1) {
    PreconditionerSet p(prob.k, prob.mass(), cfg.taus, cfg.apply_mode(),
                        cfg.epsilon, cfg.max_inner_iterations);
    return run_precon(prob, cfg, p, PreconMode::single);
  }
  validate_problem(prob);
  if (prob.mass() != nullptr)
    throw std::invalid_argument(
        "gmres-sh without a preconditioner requires M = I");
  PlainStrategy strat(prob, cfg);
  return run_driver(strat, prob, cfg, nullptr);
}

SolveReport solve_shifted(SolverKind kind, const ShiftedProblem& prob,
                          const SolverConfig& cfg) {
  switch (kind) {
    case SolverKind::mpgmres_sh: return solve_mpgmres_sh(prob, cfg);
    case SolverKind::fgmres_sh: return solve_fgmres_sh(prob, cfg);
    case SolverKind::gmres_sh: return solve_gmres_sh(prob, cfg);
  }
  throw std::invalid_argument("unknown solver kind");
}

}  // namespace shk
