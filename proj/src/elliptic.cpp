// SPDX-License-Identifier: Apache-2.0
#include "shk/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shk::elliptic {

double complete_k_from_complement(double kp) {
  if (!(kp > 0.0) || kp > 1.0)
    throw std::invalid_argument("complete_k: complement must lie in (0, 1]");
  double a = 1.0, b = kp;
  for (int i = 0; i < 80 && std::abs(a - b) > 4e-16 * a; ++i) {
    double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return M_PI / (2.0 * a);
}

Sncndn sncndn(double u, double k, double kp) {
  if (k < 0.0 || k >= 1.0)
    throw std::invalid_argument("sncndn: modulus must lie in [0, 1)");
  if (k < 1e-14) return {std::sin(u), std::cos(u), 1.0};

  double a[64], c[64];
  a[0] = 1.0;
  c[0] = k;
  double b = kp;
  int n = 0;
  while (n < 62 && std::abs(c[n]) > 4e-16 * a[n]) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  for (int i = n; i > 0; --i) {
    double s = std::clamp(c[i] * std::sin(phi) / a[i], -1.0, 1.0);
    phi = 0.5 * (phi + std::asin(s));
  }
  Sncndn r;
  r.sn = std::sin(phi);
  r.cn = std::cos(phi);
  r.dn = std::sqrt(kp * kp + (k * r.cn) * (k * r.cn));
  return r;
}

SncndnC sncndn(std::complex<double> t, double k, double kp) {
  const auto [s, c, d] = sncndn(t.real(), k, kp);
  const auto [s1, c1, d1] = sncndn(t.imag(), kp, k);
  const double denom = c1 * c1 + (k * s * s1) * (k * s * s1);
  using C = std::complex<double>;
  SncndnC r;
  r.sn = C(s * d1, c * d * s1 * c1) / denom;
  r.cn = C(c * c1, -s * d * s1 * d1) / denom;
  r.dn = C(d * c1 * d1, -k * k * s * c * s1) / denom;
  return r;
}

Modulus modulus_from_ratio(double ratio) {
  if (!(ratio > 1.0))
    throw std::invalid_argument("modulus_from_ratio: ratio must exceed 1");
  const double sq = std::sqrt(ratio);
  Modulus mo;
  mo.k = (sq - 1.0) / (sq + 1.0);
  mo.kp = 2.0 * std::pow(ratio, 0.25) / (sq + 1.0);
  mo.big_k = complete_k_from_complement(mo.kp);
  mo.big_kp = complete_k_from_complement(mo.k);
  return mo;
}

}  // namespace shk::elliptic
