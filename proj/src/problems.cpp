// SPDX-License-Identifier: Apache-2.0
#include "shk/problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace shk {

ShiftedProblem PhasorProblem::to_shifted() const {
  ShiftedProblem p;
  p.k = k;
  p.m = m;
  p.b = b;
  p.sigmas.reserve(omegas.size());
  for (double w : omegas) p.sigmas.emplace_back(0.0, w);
  return p;
}

PhasorProblem gen_phasor_2d(int nx, int ny, const RealVector& cond_cells,
                            double ss, int source_index,
                            std::vector<double> omegas, double length) {
  if (nx < 3 || ny < 3)
    throw std::invalid_argument("gen_phasor_2d: grid must be at least 3x3");
  const int n = nx * ny;
  if (cond_cells.size() != 1 && cond_cells.size() != n)
    throw std::invalid_argument(
        "gen_phasor_2d: conductivity needs 1 or nx*ny entries");
  if ((cond_cells.array() <= 0.0).any())
    throw std::invalid_argument("gen_phasor_2d: nonpositive conductivity");
  if (!(ss > 0.0))
    throw std::invalid_argument("gen_phasor_2d: nonpositive specific storage");
  if (source_index < 0 || source_index >= n)
    throw std::invalid_argument("gen_phasor_2d: source index out of range");

  auto cond = [&](int i, int j) {
    return cond_cells.size() == 1 ? cond_cells[0] : cond_cells[j * nx + i];
  };
  auto face = [](double a, double b) { return 2.0 * a * b / (a + b); };
  const double hx = length / (nx + 1);
  const double hy = length / (ny + 1);

  std::vector<Triplet> ts;
  ts.reserve(static_cast<size_t>(5) * n);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = j * nx + i;
      const double kc = cond(i, j);
      double diag = 0.0;
      auto couple = [&](int ii, int jj, double tfac) {
        const bool interior = ii >= 0 && ii < nx && jj >= 0 && jj < ny;
        const double kf = interior ? face(kc, cond(ii, jj)) : kc;
        diag += kf * tfac;
        if (interior) ts.emplace_back(row, jj * nx + ii, Complex(-kf * tfac));
      };
      couple(i - 1, j, hy / hx);
      couple(i + 1, j, hy / hx);
      couple(i, j - 1, hx / hy);
      couple(i, j + 1, hx / hy);
      ts.emplace_back(row, row, Complex(diag));
    }
  }

  PhasorProblem p;
  p.k = sparse_from_triplets(n, n, ts);
  p.m = sparse_diagonal(Vector::Constant(n, Complex(ss * hx * hy)));
  p.b = Vector::Zero(n);
  p.b[source_index] = Complex(1.0);
  p.omegas = std::move(omegas);
  return p;
}

RealVector sample_lognormal_field(int n, double mean_log, double var_log,
                                  unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(mean_log, std::sqrt(var_log));
  RealVector f(n);
  for (int i = 0; i < n; ++i) f[i] = std::exp(nd(rng));
  return f;
}

TauGrid gen_tau_grid(double omega_lo, double omega_hi, int n_p) {
  if (!(omega_lo > 0.0) || !(omega_hi > omega_lo))
    throw std::invalid_argument("gen_tau_grid: need 0 < omega_lo < omega_hi");
  if (n_p < 1) throw std::invalid_argument("gen_tau_grid: n_p >= 1");
  TauGrid g;
  g.omega_lo = omega_lo;
  g.omega_hi = omega_hi;
  const double llo = std::log(omega_lo), lhi = std::log(omega_hi);
  if (n_p == 1) {
    g.taus.emplace_back(0.0, std::exp(0.5 * (llo + lhi)));
    return g;
  }
  for (int k = 0; k < n_p; ++k)
    g.taus.emplace_back(0.0, std::exp(llo + (lhi - llo) * k / (n_p - 1)));
  return g;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

SparseMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MatrixMarketError("cannot open " + path);

  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    throw MatrixMarketError("malformed MatrixMarket header");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate")
    throw MatrixMarketError("only coordinate format is supported");
  const bool complex_field = field == "complex";
  if (!complex_field && field != "real" && field != "integer")
    throw MatrixMarketError("unsupported field type: " + field);
  const bool symmetric = symmetry == "symmetric";
  const bool hermitian = symmetry == "hermitian";
  if (!symmetric && !hermitian && symmetry != "general")
    throw MatrixMarketError("unsupported symmetry type: " + symmetry);

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream ss(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(ss >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0)
    throw MatrixMarketError("malformed size line");

  std::vector<Triplet> ts;
  ts.reserve(static_cast<size_t>(nnz) * (symmetric || hermitian ? 2 : 1));
  for (long e = 0; e < nnz; ++e) {
    long i = 0, j = 0;
    double re = 0.0, im = 0.0;
    if (!(in >> i >> j >> re)) throw MatrixMarketError("truncated entry list");
    if (complex_field && !(in >> im))
      throw MatrixMarketError("truncated complex entry");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw MatrixMarketError("index out of range at entry " + std::to_string(e + 1));
    Complex v(re, im);
    ts.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    if ((symmetric || hermitian) && i != j)
      ts.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1),
                      hermitian ? std::conj(v) : v);
  }
  return sparse_from_triplets(static_cast<int>(rows), static_cast<int>(cols), ts);
}

void save_matrix_market(const std::string& path, const SparseMatrix& a) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError("cannot write " + path);
  bool real_only = true;
  for (int k = 0; k < a.outerSize() && real_only; ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      if (it.value().imag() != 0.0) {
        real_only = false;
        break;
      }
  out << "%%MatrixMarket matrix coordinate " << (real_only ? "real" : "complex")
      << " general\n";
  out << a.rows() << " " << a.cols() << " " << a.nonZeros() << "\n";
  char buf[80];
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      if (real_only)
        std::snprintf(buf, sizeof buf, "%d %d %.17g\n", int(it.row() + 1),
                      int(it.col() + 1), it.value().real());
      else
        std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g\n", int(it.row() + 1),
                      int(it.col() + 1), it.value().real(), it.value().imag());
      out << buf;
    }
  }
}

Vector load_vector_market(const std::string& path) {
  SparseMatrix a = load_matrix_market(path);
  if (a.cols() != 1)
    throw MatrixMarketError("expected an n x 1 vector in " + path);
  return Vector(Matrix(a).col(0));
}

void save_vector_market(const std::string& path, const Vector& v) {
  std::vector<Triplet> ts;
  for (int i = 0; i < v.size(); ++i) ts.emplace_back(i, 0, v[i]);
  save_matrix_market(path,
                     sparse_from_triplets(static_cast<int>(v.size()), 1, ts));
}

SparseMatrix gen_spd_test_matrix(int n, double lambda_min, double lambda_max,
                                 unsigned long long seed) {
  if (n < 2 || !(lambda_min > 0.0) || !(lambda_max > lambda_min))
    throw std::invalid_argument("gen_spd_test_matrix: bad spectrum request");
  std::vector<double> d(n);
  const double l0 = std::log(lambda_min), l1 = std::log(lambda_max);
  for (int i = 0; i < n; ++i) d[i] = std::exp(l0 + (l1 - l0) * i / (n - 1.0));
  std::mt19937_64 rng(seed);
  std::shuffle(d.begin(), d.end(), rng);
  // weak path coupling keeps lambda_min within [lambda_min, 1.1 lambda_min]
  const double g = 0.05 * lambda_min;
  std::vector<Triplet> ts;
  for (int i = 0; i < n; ++i) {
    double diag = d[i] + (i > 0 ? g : 0.0) + (i + 1 < n ? g : 0.0);
    ts.emplace_back(i, i, Complex(diag));
    if (i + 1 < n) {
      ts.emplace_back(i, i + 1, Complex(-g));
      ts.emplace_back(i + 1, i, Complex(-g));
    }
  }
  return sparse_from_triplets(n, n, ts);
}

}  // namespace shk
