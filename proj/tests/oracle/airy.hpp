#pragma once

// Independent Airy evaluation for test oracles. Nothing here touches the
// library; the arithmetic runs in 50-digit binary floating point.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <stdexcept>

namespace oracle {

using big = boost::multiprecision::cpp_bin_float_50;

struct Airy {
  double ai = 0, aip = 0, bi = 0, bip = 0;
};

namespace detail {

inline const big& pi() {
  static const big v = boost::multiprecision::acos(big(-1));
  return v;
}

}  // namespace detail

/// Maclaurin series for Ai, Ai', Bi, Bi' at real z. Intended for |z| <= 10,
/// where the terms peak near 1e9 and the 50-digit sum keeps ~30 digits.
inline Airy airy_series(double zd) {
  using boost::multiprecision::pow;
  using boost::multiprecision::sqrt;
  using boost::multiprecision::tgamma;
  if (std::abs(zd) > 12.0) throw std::domain_error("airy_series: |z| > 12");
  const big z = zd, z3 = z * z * z;
  const big c1 = 1 / (pow(big(3), big(2) / 3) * tgamma(big(2) / 3));  // Ai(0)
  const big c2 = 1 / (pow(big(3), big(1) / 3) * tgamma(big(1) / 3));  // -Ai'(0)
  // f = 1 + z^3/3! + 1*4 z^6/6! + ..., g = z + 2 z^4/4! + 2*5 z^7/7! + ...
  big f = 0, fp = 0, g = 0, gp = 0;
  big tf = 1, tg = z;
  for (int k = 0; k < 400; ++k) {
    f += tf;
    g += tg;
    if (zd != 0.0) {
      fp += tf * (3 * k) / z;
      gp += tg * (3 * k + 1) / z;
    }
    tf *= z3 / ((3 * k + 2) * (3 * k + 3));
    tg *= z3 / ((3 * k + 3) * (3 * k + 4));
    if (k > 10 && abs(tf) < 1e-60 && abs(tg) < 1e-60) break;
  }
  if (zd == 0.0) gp = 1;
  const big s3 = sqrt(big(3));
  Airy out;
  out.ai = static_cast<double>(c1 * f - c2 * g);
  out.aip = static_cast<double>(c1 * fp - c2 * gp);
  out.bi = static_cast<double>(s3 * (c1 * f + c2 * g));
  out.bip = static_cast<double>(s3 * (c1 * fp + c2 * gp));
  return out;
}

/// Large-argument expansion of Ai(-x), Ai'(-x), Bi(-x), Bi'(-x) (derivatives
/// with respect to the Airy argument). Valid for x >= 8, truncated at the
/// smallest term.
inline Airy airy_negative_asymptotic(double xd) {
  using boost::multiprecision::cos;
  using boost::multiprecision::pow;
  using boost::multiprecision::sin;
  using boost::multiprecision::sqrt;
  if (xd < 7.0) throw std::domain_error("airy_negative_asymptotic: x < 7");
  const big x = xd;
  const big zeta = big(2) / 3 * x * sqrt(x);
  // u_k, v_k coefficients; alternating partial sums over even/odd k
  big u = 1, P = 0, Q = 0, Pv = 0, Qv = 0;
  big zk = 1;  // zeta^{-k}
  big last = 1e300;
  for (int k = 0; k < 200; ++k) {
    const big v = k == 0 ? big(1) : -big(6 * k + 1) / (6 * k - 1) * u;
    const big term = abs(u * zk);
    if (k > 0 && term > last) break;
    last = term;
    const int sgn = (k / 2) % 2 == 0 ? 1 : -1;
    if (k % 2 == 0) {
      P += sgn * u * zk;
      Pv += sgn * v * zk;
    } else {
      Q += sgn * u * zk;
      Qv += sgn * v * zk;
    }
    if (term < 1e-45) break;
    const int n = k + 1;
    u *= big((6 * n - 5) * (6 * n - 3) * (6 * n - 1)) / (big(216) * (2 * n - 1) * n);
    zk /= zeta;
  }
  const big ph = zeta - detail::pi() / 4;
  const big s = sin(ph), c = cos(ph);
  const big a = 1 / (sqrt(detail::pi()) * pow(x, big(1) / 4));
  const big b = pow(x, big(1) / 4) / sqrt(detail::pi());
  Airy out;
  out.ai = static_cast<double>(a * (c * P + s * Q));
  out.bi = static_cast<double>(a * (-s * P + c * Q));
  out.aip = static_cast<double>(b * (s * Pv - c * Qv));
  out.bip = static_cast<double>(b * (c * Pv + s * Qv));
  return out;
}

/// Ai(-x) etc. for x >= 0 by the appropriate route.
inline Airy airy_of_negative(double x) {
  if (x <= 9.0) return airy_series(-x);
  return airy_negative_asymptotic(x);
}

/// sqrt(Ai^2 + Bi^2), the oscillation envelope on the negative axis.
inline double modulus(const Airy& a) { return std::hypot(a.ai, a.bi); }

}  // namespace oracle
