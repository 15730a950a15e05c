// SPDX-License-Identifier: Apache-2.0
#include "shk/mp_arnoldi.hpp"

#include <algorithm>
#include <stdexcept>

#include "shk/core_la.hpp"

namespace shk {

MpArnoldiState::MpArnoldiState(const Vector& b) {
  beta_ = b.norm();
  if (!(beta_ > 0.0))
    throw std::invalid_argument("MpArnoldiState: right-hand side is zero");
  const int n = static_cast<int>(b.size());
  v_.resize(n, 8);
  z_.resize(n, 8);
  hbar_ = Matrix::Zero(8, 8);
  v_.col(0) = b / beta_;
  v_cols_ = 1;
  v_block_ofs_ = {0, 1};
  z_block_ofs_ = {0};
}

void MpArnoldiState::ensure_capacity(int vc, int zc) {
  const int n = static_cast<int>(v_.rows());
  if (vc > v_.cols()) v_.conservativeResize(n, std::max<int>(vc, 2 * v_.cols()));
  if (zc > z_.cols()) z_.conservativeResize(n, std::max<int>(zc, 2 * z_.cols()));
  if (vc > hbar_.rows() || zc > hbar_.cols()) {
    int nr = std::max<int>(vc, 2 * hbar_.rows());
    int nc = std::max<int>(zc, 2 * hbar_.cols());
    Matrix h = Matrix::Zero(nr, nc);
    h.topLeftCorner(hbar_.rows(), hbar_.cols()) = hbar_;
    hbar_ = std::move(h);
  }
}

int MpArnoldiState::expand_selective(const PreconditionerSet& p,
                                     const SparseMatrix* m,
                                     const ArnoldiOptions& opt) {
  std::vector<ApplySpec> specs;
  for (int j = 0; j < p.size(); ++j) specs.push_back({v_cols_ - 1, j});
  return expand_with(p, m, opt, specs, /*block_apply=*/true);
}

int MpArnoldiState::expand_flexible(const PreconditionerSet& p, int j,
                                    const SparseMatrix* m,
                                    const ArnoldiOptions& opt) {
  return expand_with(p, m, opt, {{v_cols_ - 1, j}}, /*block_apply=*/false);
}

int MpArnoldiState::expand_complete(const PreconditionerSet& p,
                                    const SparseMatrix* m,
                                    const ArnoldiOptions& opt) {
  const int b0 = v_block_ofs_[v_block_ofs_.size() - 2];
  const int b1 = v_block_ofs_.back();
  std::vector<ApplySpec> specs;
  for (int j = 0; j < p.size(); ++j)
    for (int c = b0; c < b1; ++c) specs.push_back({c, j});
  if (static_cast<int>(specs.size()) > opt.complete_col_cap)
    throw std::invalid_argument(
        "expand_complete: block width exceeds the test-scale cap");
  return expand_with(p, m, opt, specs, /*block_apply=*/false,
                     /*zero_pad=*/true);
}

int MpArnoldiState::expand_with(const PreconditionerSet& p,
                                const SparseMatrix* m,
                                const ArnoldiOptions& opt,
                                const std::vector<ApplySpec>& specs,
                                bool block_apply, bool zero_pad) {
  if (broke_down_)
    throw std::logic_error("expand: state already broke down");
  const int n = static_cast<int>(v_.rows());
  const int w0 = static_cast<int>(specs.size());

  Matrix znew(n, w0);
  if (block_apply) {
    znew = p.apply_block(v_.col(specs[0].src));
  } else {
    for (int c = 0; c < w0; ++c)
      znew.col(c) = p.apply_one(specs[c].prec, v_.col(specs[c].src));
  }

  Matrix w;
  if (m != nullptr) {
    w.resize(n, w0);
    for (int c = 0; c < w0; ++c) {
      w.col(c) = spmv(*m, znew.col(c));
      ++counters_.spmvs;
    }
  } else {
    w = znew;
  }
  const double scale = w.norm();

  // Block MGS against all prior V blocks; coefficients accumulate into hnew.
  const int nblocks = static_cast<int>(v_block_ofs_.size()) - 1;
  Matrix hnew = Matrix::Zero(v_cols_ + w0, w0);
  const int passes = opt.reorthogonalize ? 2 : 1;
  for (int pass = 0; pass < passes; ++pass) {
    for (int bidx = 0; bidx < nblocks; ++bidx) {
      const int c0 = v_block_ofs_[bidx];
      const int nc = v_block_ofs_[bidx + 1] - c0;
      Matrix h = v_.middleCols(c0, nc).adjoint() * w;
      counters_.inner_products += static_cast<long>(nc) * w0;
      w -= v_.middleCols(c0, nc) * h;
      hnew.block(c0, 0, nc, w0) += h;
    }
  }

  ThinQr qr = thin_qr(w, opt.drop_tol, scale, opt.reorthogonalize,
                      &counters_.inner_products);
  const int kept = static_cast<int>(qr.kept.size());
  Matrix q = qr.q;
  Matrix hlast;  // kept x w0
  if (kept == w0) {
    hlast = qr.r;
  } else if (kept > 0) {
    hlast = q.adjoint() * w;
    counters_.inner_products += static_cast<long>(kept) * w0;
  }

  if (opt.reorthogonalize && kept > 0) {
    // Normalizing a nearly deflated column amplifies its leftover components
    // along the prior basis; purge them once more and fold the correction
    // into the coefficients, then restore orthonormality within the block.
    auto vprior = v_.leftCols(v_cols_);
    Matrix corr = vprior.adjoint() * q;
    counters_.inner_products += static_cast<long>(v_cols_) * kept;
    q -= vprior * corr;
    hnew.topRows(v_cols_) += corr * hlast;
    ThinQr qr2 = thin_qr(q, 0.0, 1.0, true, &counters_.inner_products);
    if (static_cast<int>(qr2.kept.size()) == kept) {
      q = qr2.q;
      hlast = qr2.r * hlast;
    }
  }

  deflations_.push_back(w0 - kept);

  // The complete variant keeps textbook block shapes: a deflated direction
  // stays as an explicit zero basis column (its preconditioner images are
  // zero and add nothing to the search space).
  int vwidth = kept;
  if (zero_pad && kept < w0) {
    Matrix qp = Matrix::Zero(v_.rows(), w0);
    Matrix hp = Matrix::Zero(w0, w0);
    for (int i = 0; i < kept; ++i) {
      qp.col(qr.kept[i]) = q.col(i);
      hp.row(qr.kept[i]) = hlast.row(i);
    }
    q = std::move(qp);
    hlast = std::move(hp);
    vwidth = kept > 0 ? w0 : 0;
  }

  if (vwidth > 0) hnew.block(v_cols_, 0, vwidth, w0) = hlast;

  ensure_capacity(v_cols_ + vwidth, z_cols_ + w0);
  z_.middleCols(z_cols_, w0) = znew;
  hbar_.block(0, z_cols_, v_cols_ + vwidth, w0) = hnew.topRows(v_cols_ + vwidth);
  for (int c = 0; c < w0; ++c) {
    col_tau_.push_back(p.tau(specs[c].prec));
    col_src_.push_back(specs[c].src);
  }
  z_cols_ += w0;
  z_block_ofs_.push_back(z_cols_);
  if (vwidth > 0) {
    v_.middleCols(v_cols_, vwidth) = q;
    v_cols_ += vwidth;
    v_block_ofs_.push_back(v_cols_);
  } else {
    broke_down_ = true;
  }
  return kept;
}

Matrix MpArnoldiState::hbar() const {
  return hbar_.topLeftCorner(v_cols_, z_cols_);
}

Matrix MpArnoldiState::hbar_sigma_block(Complex sigma, int col_begin,
                                        int col_end, int row_count) const {
  Matrix out = Matrix::Zero(row_count, col_end - col_begin);
  for (int c = col_begin; c < col_end; ++c) {
    const int oc = c - col_begin;
    out.col(oc) = hbar_.col(c).head(row_count) * (sigma - col_tau_[c]);
    if (col_src_[c] < row_count) out(col_src_[c], oc) += Complex(1.0);
  }
  return out;
}

Matrix MpArnoldiState::hbar_sigma(Complex sigma) const {
  return hbar_sigma_block(sigma, 0, z_cols_, v_cols_);
}

Matrix MpArnoldiState::selection_matrix() const {
  Matrix e = Matrix::Zero(v_cols_, z_cols_);
  for (int c = 0; c < z_cols_; ++c) e(col_src_[c], c) = Complex(1.0);
  return e;
}

}  // namespace shk
