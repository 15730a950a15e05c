// SPDX-License-Identifier: Apache-2.0
#include "shk/matfun.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "shk/core_la.hpp"
#include "shk/elliptic.hpp"

namespace shk {

Complex apply_scalar(MatrixFunction f, Complex z) {
  switch (f) {
    case MatrixFunction::exp_neg: return std::exp(-z);
    case MatrixFunction::log: return std::log(z);
    case MatrixFunction::sqrt: return std::sqrt(z);
    case MatrixFunction::one: return Complex(1.0);
  }
  throw std::invalid_argument("unknown matrix function");
}

MatrixFunction parse_function_token(std::string_view token) {
  if (token == "exp-neg") return MatrixFunction::exp_neg;
  if (token == "log") return MatrixFunction::log;
  if (token == "sqrt") return MatrixFunction::sqrt;
  if (token == "one") return MatrixFunction::one;
  throw std::invalid_argument("unknown function token: " + std::string(token));
}

const char* function_token(MatrixFunction f) {
  switch (f) {
    case MatrixFunction::exp_neg: return "exp-neg";
    case MatrixFunction::log: return "log";
    case MatrixFunction::sqrt: return "sqrt";
    case MatrixFunction::one: return "one";
  }
  return "?";
}

QuadKind parse_quad_kind(std::string_view token) {
  if (token == "circle") return QuadKind::circle_trapezoid;
  if (token == "hh1") return QuadKind::hale_higham_1;
  if (token == "hh2") return QuadKind::hale_higham_2;
  if (token == "hh3") return QuadKind::hale_higham_3;
  if (token == "parabola") return QuadKind::parabola_exp;
  throw std::invalid_argument("unknown quadrature kind: " + std::string(token));
}

const char* quad_kind_token(QuadKind kind) {
  switch (kind) {
    case QuadKind::circle_trapezoid: return "circle";
    case QuadKind::hale_higham_1: return "hh1";
    case QuadKind::hale_higham_2: return "hh2";
    case QuadKind::hale_higham_3: return "hh3";
    case QuadKind::parabola_exp: return "parabola";
  }
  return "?";
}

namespace {

// Symmetric Lanczos with full reorthogonalization; returns the extreme Ritz
// values of the (Hermitian) operator.
template <typename Op>
std::pair<double, double> lanczos_extremes(const Op& op, int n, int steps) {
  steps = std::min(steps, n);
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> nd;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = Complex(nd(rng), 0.0);
  v.normalize();

  Matrix basis(n, steps);
  std::vector<double> alpha, beta;
  basis.col(0) = v;
  int m = 0;
  for (int j = 0; j < steps; ++j) {
    Vector w = op(basis.col(j));
    double a = basis.col(j).dot(w).real();
    alpha.push_back(a);
    w -= a * basis.col(j);
    if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
    w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).adjoint() * w);
    double nb = w.norm();
    m = j + 1;
    if (nb <= 1e-14 || j + 1 == steps) break;
    beta.push_back(nb);
    basis.col(j + 1) = w / nb;
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

void check_bounds(const SpectrumBounds& b) {
  if (!(b.m_hat > 0.0) || !(b.big_m_hat >= b.m_hat))
    throw QuadratureError("spectrum bounds must satisfy 0 < m <= M");
}

void check_branch_cut_nodes(const QuadratureRule& rule) {
  if (rule.f != MatrixFunction::log && rule.f != MatrixFunction::sqrt) return;
  for (Complex z : rule.nodes)
    if (z.imag() == 0.0 && z.real() <= 0.0)
      throw QuadratureError("node on the branch cut (-inf, 0]");
}

// Midline contour of the annulus map for the domain between the cut
// (-inf, 0] and the segment [lo, hi]. Emits nodes z_j, theta-step dt and the
// map derivative dz/dt at each node.
struct AnnulusContour {
  std::vector<Complex> z, dzdt;
  double dt;
};

AnnulusContour annulus_midline(double lo, double hi, int n) {
  using namespace elliptic;
  Modulus mo = modulus_from_ratio(hi / lo);
  const double sg = std::sqrt(lo * hi);
  AnnulusContour out;
  out.dt = 4.0 * mo.big_k / n;
  out.z.resize(n);
  out.dzdt.resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = -mo.big_k + (j + 0.5) * out.dt;
    SncndnC e = sncndn(Complex(x, mo.big_kp / 2.0), mo.k, mo.kp);
    const Complex den = 1.0 / mo.k - e.sn;
    out.z[j] = sg * (1.0 / mo.k + e.sn) / den;
    out.dzdt[j] = sg * (2.0 / mo.k) * e.cn * e.dn / (den * den);
  }
  return out;
}

// Winding orientation of the discrete contour around `inside` with f == 1;
// the exact value is +-1, up to quadrature error.
double winding_sign(const AnnulusContour& c, double inside) {
  Complex s = 0.0;
  for (int j = 0; j < static_cast<int>(c.z.size()); ++j)
    s += c.dt * c.dzdt[j] / (2.0 * M_PI * Complex(0, 1) * (c.z[j] - inside));
  return s.real() >= 0.0 ? 1.0 : -1.0;
}

}  // namespace

SpectrumBounds estimate_spectrum_bounds(const SparseMatrix& a,
                                        int lanczos_steps, double margin) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("estimate_spectrum_bounds: square matrix required");
  const int n = static_cast<int>(a.rows());
  auto [lo_a, hi_a] =
      lanczos_extremes([&](const Vector& x) { return Vector(a * x); }, n,
                       lanczos_steps);
  LuFactorization lu = LuFactorization::factor(a);
  auto [lo_i, hi_i] = lanczos_extremes(
      [&](const Vector& x) { return lu.solve(x); }, n, lanczos_steps);
  (void)lo_a;
  (void)lo_i;
  SpectrumBounds b;
  if (!(hi_i > 0.0))
    throw QuadratureError("spectrum bounds: matrix does not look positive definite");
  b.m_hat = (1.0 / hi_i) / (1.0 + margin);
  b.big_m_hat = hi_a * (1.0 + margin);
  check_bounds(b);
  return b;
}

QuadratureRule build_circle_rule(const SpectrumBounds& bounds, MatrixFunction f,
                                 int n) {
  check_bounds(bounds);
  const double c = 0.5 * (bounds.m_hat + bounds.big_m_hat);
  const double rho = 0.5 * (bounds.big_m_hat - bounds.m_hat) + 0.1 * bounds.m_hat;
  if ((f == MatrixFunction::log || f == MatrixFunction::sqrt) && c - rho <= 0.0)
    throw QuadratureError("circle contour would enclose the branch point 0");
  QuadratureRule rule{QuadKind::circle_trapezoid, f, {}, {}, false};
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int j = 1; j <= n; ++j) {
    const Complex e = std::exp(Complex(0, 2.0 * M_PI * j / n));
    const Complex z = c + rho * e;
    rule.nodes[j - 1] = z;
    rule.weights[j - 1] = apply_scalar(f, z) * rho * e / static_cast<double>(n);
  }
  check_branch_cut_nodes(rule);
  return rule;
}

QuadratureRule build_hale_higham_1(const SpectrumBounds& bounds,
                                   MatrixFunction f, int n) {
  check_bounds(bounds);
  if (bounds.kappa() <= 1.0 + 1e-12)
    throw QuadratureError("hale-higham-1 needs M > m; use the circle rule");
  AnnulusContour c = annulus_midline(bounds.m_hat, bounds.big_m_hat, n);
  const double sign = winding_sign(c, std::sqrt(bounds.m_hat * bounds.big_m_hat));
  QuadratureRule rule{QuadKind::hale_higham_1, f, {}, {}, false};
  rule.nodes = c.z;
  rule.weights.resize(n);
  for (int j = 0; j < n; ++j)
    rule.weights[j] = sign * c.dt * apply_scalar(f, c.z[j]) * c.dzdt[j] /
                      (2.0 * M_PI * Complex(0, 1));
  check_branch_cut_nodes(rule);
  return rule;
}

QuadratureRule build_hale_higham_2(const SpectrumBounds& bounds,
                                   MatrixFunction f, int n) {
  check_bounds(bounds);
  if (f != MatrixFunction::log && f != MatrixFunction::sqrt &&
      f != MatrixFunction::one)
    throw std::invalid_argument("hale-higham-2 supports log and sqrt");
  if (bounds.kappa() <= 1.0 + 1e-12)
    throw QuadratureError("hale-higham-2 needs M > m; use the circle rule");
  // Map in w = sqrt(z): spectrum image [sqrt(m), sqrt(M)], f(w^2) evaluated
  // without touching the z-plane cut.
  AnnulusContour c =
      annulus_midline(std::sqrt(bounds.m_hat), std::sqrt(bounds.big_m_hat), n);
  const double sign =
      winding_sign(c, std::pow(bounds.m_hat * bounds.big_m_hat, 0.25));
  auto f_in_w = [&](Complex w) -> Complex {
    switch (f) {
      case MatrixFunction::log: return 2.0 * std::log(w);
      case MatrixFunction::sqrt: return w;
      default: return Complex(1.0);
    }
  };
  QuadratureRule rule{QuadKind::hale_higham_2, f, {}, {}, false};
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int j = 0; j < n; ++j) {
    const Complex w = c.z[j];
    rule.nodes[j] = w * w;
    rule.weights[j] = sign * c.dt * f_in_w(w) * 2.0 * w * c.dzdt[j] /
                      (2.0 * M_PI * Complex(0, 1));
  }
  return rule;
}

QuadratureRule build_hale_higham_3(const SpectrumBounds& bounds,
                                   MatrixFunction f, int n) {
  check_bounds(bounds);
  if (f != MatrixFunction::sqrt)
    throw std::invalid_argument("hale-higham-3 computes A^{1/2} only");
  using namespace elliptic;
  const double kp = std::sqrt(bounds.m_hat / bounds.big_m_hat);
  const double k = std::sqrt((1.0 - kp) * (1.0 + kp));
  const double big_k = complete_k_from_complement(kp);
  const double sm = std::sqrt(bounds.m_hat);
  QuadratureRule rule{QuadKind::hale_higham_3, f, {}, {}, true};
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int j = 0; j < n; ++j) {
    const double u = (j + 0.5) * big_k / n;
    Sncndn e = sncndn(u, k, kp);
    const double t = sm * e.sn / e.cn;
    rule.nodes[j] = Complex(-t * t, 0.0);
    rule.weights[j] =
        Complex(-(2.0 * big_k * sm / (M_PI * n)) * e.dn / (e.cn * e.cn), 0.0);
  }
  return rule;
}

QuadratureRule build_parabola_exp(const SpectrumBounds& bounds,
                                  MatrixFunction f, int n) {
  check_bounds(bounds);
  if (f != MatrixFunction::exp_neg && f != MatrixFunction::one)
    throw std::invalid_argument("parabola rule computes exp(-A) only");
  // z = mu (theta + i)^2 wraps [0, inf); h and mu balance the pole-side and
  // growth-side discretization errors with the truncation at |theta| = 3.
  const double h = 6.0 / n;
  const double mu = M_PI * n / 24.0;
  QuadratureRule rule{QuadKind::parabola_exp, f, {}, {}, false};
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int j = 0; j < n; ++j) {
    const double th = -3.0 + (j + 0.5) * h;
    const Complex base(th, 1.0);
    const Complex z = mu * base * base;
    rule.nodes[j] = z;
    rule.weights[j] = -h * apply_scalar(f, z) * 2.0 * mu * base /
                      (2.0 * M_PI * Complex(0, 1));
  }
  return rule;
}

QuadratureRule build_quadrature_rule(QuadKind kind, const SpectrumBounds& bounds,
                                     MatrixFunction f, int n) {
  switch (kind) {
    case QuadKind::circle_trapezoid: return build_circle_rule(bounds, f, n);
    case QuadKind::hale_higham_1: return build_hale_higham_1(bounds, f, n);
    case QuadKind::hale_higham_2: return build_hale_higham_2(bounds, f, n);
    case QuadKind::hale_higham_3: return build_hale_higham_3(bounds, f, n);
    case QuadKind::parabola_exp: return build_parabola_exp(bounds, f, n);
  }
  throw std::invalid_argument("unknown quadrature kind");
}

QuadKind default_rule_for(MatrixFunction f) {
  switch (f) {
    case MatrixFunction::exp_neg: return QuadKind::parabola_exp;
    case MatrixFunction::log: return QuadKind::hale_higham_2;
    case MatrixFunction::sqrt: return QuadKind::hale_higham_3;
    case MatrixFunction::one: return QuadKind::circle_trapezoid;
  }
  throw std::invalid_argument("unknown matrix function");
}

Vector apply_rule_to_diagonal(const QuadratureRule& rule, const RealVector& d,
                              const Vector& v) {
  Vector acc = Vector::Zero(v.size());
  for (int j = 0; j < rule.size(); ++j)
    acc += rule.weights[j] *
           (v.array() / (rule.nodes[j] - d.cast<Complex>().array())).matrix();
  if (rule.premultiply_by_a) acc.array() *= d.cast<Complex>().array();
  return acc;
}

int select_n_adaptive(const SpectrumBounds& bounds, MatrixFunction f,
                      QuadKind kind, double eps, int n0, int cap) {
  if (!(eps > 0.0)) throw std::invalid_argument("select_n_adaptive: eps > 0");
  check_bounds(bounds);
  const int nd = 128;
  RealVector d(nd);
  const double lr = std::log(bounds.big_m_hat / bounds.m_hat);
  for (int i = 0; i < nd; ++i)
    d[i] = bounds.m_hat * std::exp(lr * i / (nd - 1.0));
  Vector v = Vector::Constant(nd, Complex(1.0 / std::sqrt(double(nd))));

  Vector cur = apply_rule_to_diagonal(build_quadrature_rule(kind, bounds, f, n0),
                                      d, v);
  for (int n = n0; n <= cap; n *= 2) {
    Vector next = apply_rule_to_diagonal(
        build_quadrature_rule(kind, bounds, f, 2 * n), d, v);
    if ((next - cur).norm() <= eps * cur.norm()) return n;
    cur = next;
  }
  throw QuadratureError("select_n_adaptive: no convergence below the N cap");
}

MatfunResult eval_matfun(MatrixFunction f, const SparseMatrix& a,
                         const Vector& b, const QuadratureRule& rule,
                         const SolverConfig& solver_cfg, SolverKind solver) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw std::invalid_argument("eval_matfun: dimension mismatch");
  const int n = rule.size();
  if (n == 0) throw std::invalid_argument("eval_matfun: empty rule");

  ShiftedProblem prob;
  prob.k = a;
  prob.b = b;
  prob.sigmas.resize(n);
  for (int j = 0; j < n; ++j) prob.sigmas[j] = -rule.nodes[j];

  SolverConfig cfg = solver_cfg;
  if (cfg.taus.empty()) {
    // preconditioner shifts at the negated nodes z_1, z_{N/2}, z_N
    std::vector<int> picks{0, n / 2 - 1, n - 1};
    if (n < 2) picks = {0};
    for (int idx : picks) {
      if (idx < 0) continue;
      Complex t = -rule.nodes[idx];
      if (std::find(cfg.taus.begin(), cfg.taus.end(), t) == cfg.taus.end())
        cfg.taus.push_back(t);
    }
  }

  MatfunResult out;
  out.taus_used = cfg.taus;
  out.report = solve_shifted(solver, prob, cfg);
  for (int j = 0; j < n; ++j)
    if (!out.report.shifts[j].converged)
      throw NodeSolveError(
          j, "shifted solve did not converge at quadrature node " +
                 std::to_string(j));

  Vector s = Vector::Zero(b.size());
  for (int j = 0; j < n; ++j) s -= rule.weights[j] * out.report.shifts[j].x;
  if (rule.premultiply_by_a) s = spmv(a, s);

  bool real_data = true;
  for (int i = 0; i < b.size() && real_data; ++i)
    if (b[i].imag() != 0.0) real_data = false;
  if (real_data)
    for (int k = 0; k < a.outerSize() && real_data; ++k)
      for (SparseMatrix::InnerIterator it(a, k); it; ++it)
        if (it.value().imag() != 0.0) {
          real_data = false;
          break;
        }

  if (real_data && f != MatrixFunction::one) {
    const double total = s.norm();
    const double imag_mass = s.imag().norm();
    out.imag_ratio = total > 0.0 ? imag_mass / total : 0.0;
    if (out.imag_ratio > 1e-6)
      throw QuadratureError(
          "imaginary residue exceeds tolerance; quadrature inconsistent");
    out.value = s.real().cast<Complex>();
  } else {
    out.value = s;
  }
  return out;
}

}  // namespace shk
