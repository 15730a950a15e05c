// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

namespace shk::elliptic {

/// Complete elliptic integral K(k) computed as pi / (2 agm(1, k')), taking
/// the complementary modulus to stay accurate for k near 1.
double complete_k_from_complement(double kp);

struct Sncndn {
  double sn, cn, dn;
};

/// Jacobi elliptic functions for real argument via the descending Landen
/// (AGM) transformation. `kp` is the complementary modulus sqrt(1 - k^2),
/// passed explicitly so callers with an exact expression avoid cancellation.
Sncndn sncndn(double u, double k, double kp);

struct SncndnC {
  std::complex<double> sn, cn, dn;
};

/// Jacobi elliptic functions for complex argument via the real/imaginary
/// addition split.
SncndnC sncndn(std::complex<double> t, double k, double kp);

struct Modulus {
  double k, kp;        // modulus and complement
  double big_k, big_kp;  // K(k), K(k')
};

/// Modulus data for the annulus map of the plane cut along (-inf, 0] and
/// [m, M], parameterized by ratio = M/m: k = (sqrt(ratio)-1)/(sqrt(ratio)+1).
Modulus modulus_from_ratio(double ratio);

}  // namespace shk::elliptic
