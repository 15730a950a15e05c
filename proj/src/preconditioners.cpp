// SPDX-License-Identifier: Apache-2.0
#include "shk/preconditioners.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

namespace shk {

namespace {

// Unrestarted GMRES on a x = rhs (MGS Arnoldi, Givens least squares),
// stopping at relative residual <= eps.
Vector gmres_inner(const SparseMatrix& a, const Vector& rhs, double eps,
                   int max_iters) {
  const int n = static_cast<int>(rhs.size());
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return Vector::Zero(n);
  const int m_max = std::min(max_iters, n);

  Matrix v(n, m_max + 1);
  Matrix h = Matrix::Zero(m_max + 1, m_max);
  std::vector<Eigen::JacobiRotation<Complex>> rots;
  Vector g = Vector::Zero(m_max + 1);
  v.col(0) = rhs / bnorm;
  g[0] = bnorm;

  int m = 0;
  for (int k = 0; k < m_max; ++k) {
    Vector w = a * v.col(k);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j <= k; ++j) {
        Complex c = v.col(j).dot(w);
        h(j, k) += c;
        w -= v.col(j) * c;
      }
    }
    h(k + 1, k) = w.norm();
    const bool breakdown = std::abs(h(k + 1, k)) <= 1e-300;
    if (!breakdown) v.col(k + 1) = w / h(k + 1, k);

    for (int j = 0; j < k; ++j)
      h.col(k).applyOnTheLeft(j, j + 1, rots[j].adjoint());
    Eigen::JacobiRotation<Complex> rot;
    rot.makeGivens(h(k, k), h(k + 1, k));
    h.col(k).applyOnTheLeft(k, k + 1, rot.adjoint());
    g.applyOnTheLeft(k, k + 1, rot.adjoint());
    rots.push_back(rot);
    m = k + 1;
    if (std::abs(g[m]) <= eps * bnorm || breakdown) break;
  }

  Vector y = h.topLeftCorner(m, m)
                 .triangularView<Eigen::Upper>()
                 .solve(g.head(m));
  Vector x = v.leftCols(m) * y;
  if ((rhs - a * x).norm() > eps * bnorm)
    throw InnerSolveError("inner GMRES did not reach requested accuracy");
  return x;
}

}  // namespace

ShiftInvertPreconditioner::ShiftInvertPreconditioner(const SparseMatrix& k,
                                                     const SparseMatrix* m,
                                                     Complex tau,
                                                     ApplyMode mode,
                                                     double epsilon,
                                                     int max_inner_iterations)
    : tau_(tau),
      mode_(mode),
      epsilon_(epsilon),
      max_inner_(max_inner_iterations),
      shifted_(add_scaled(k, tau, m)) {
  if (mode_ == ApplyMode::exact) {
    lu_ = LuFactorization::factor(shifted_);
  } else if (!(epsilon_ > 0.0)) {
    throw std::invalid_argument("inexact preconditioner requires epsilon > 0");
  }
}

Vector ShiftInvertPreconditioner::apply(const Vector& v) const {
  if (v.size() != shifted_.rows())
    throw std::invalid_argument("preconditioner apply: dimension mismatch");
  if (mode_ == ApplyMode::exact) return lu_->solve(v);
  return gmres_inner(shifted_, v, epsilon_, max_inner_);
}

PreconditionerSet::PreconditionerSet(const SparseMatrix& k,
                                     const SparseMatrix* m,
                                     std::span<const Complex> taus,
                                     ApplyMode mode, double epsilon,
                                     int max_inner_iterations) {
  if (taus.empty())
    throw std::invalid_argument("PreconditionerSet: need at least one shift");
  for (size_t i = 0; i < taus.size(); ++i)
    for (size_t j = i + 1; j < taus.size(); ++j)
      if (taus[i] == taus[j])
        throw std::invalid_argument(
            "PreconditionerSet: shifts must be pairwise distinct");
  ps_.reserve(taus.size());
  for (Complex t : taus)
    ps_.emplace_back(k, m, t, mode, epsilon, max_inner_iterations);
}

int worker_thread_cap() {
  const char* env = std::getenv("SHIFTED_KRYLOV_THREADS");
  if (env == nullptr) return 1;
  int v = std::atoi(env);
  return v >= 1 ? v : 1;
}

DenseBlock PreconditionerSet::apply_block(const Vector& vhat) const {
  const int np = size();
  DenseBlock z(vhat.size(), np);
  const int threads = std::min(worker_thread_cap(), np);
  if (threads <= 1) {
    for (int j = 0; j < np; ++j) z.col(j) = ps_[j].apply(vhat);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errs(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (int j = next.fetch_add(1); j < np; j = next.fetch_add(1))
            z.col(j) = ps_[j].apply(vhat);
        } catch (...) {
          errs[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  solves_ += np;
  return z;
}

Vector PreconditionerSet::apply_one(int j, const Vector& vhat) const {
  Vector z = ps_.at(j).apply(vhat);
  solves_ += 1;
  return z;
}

}  // namespace shk
