#pragma once

#include <cmath>
#include <numbers>

namespace typpert {

namespace detail {

// sum_k (-1)^k (x/2)^(2k+1) / (k! (k+1)!), in extended precision to keep the
// cancellation near |x| = 12 below 1e-15 absolute.
inline double bessel_j1_series(double x) {
  const long double h = 0.5L * x;
  const long double h2 = h * h;
  long double term = h, sum = h;
  for (int k = 1; k < 200; ++k) {
    term *= -h2 / (static_cast<long double>(k) * (k + 1));
    sum += term;
    if (std::fabs(term) < 1e-21L) break;
  }
  return static_cast<double>(sum);
}

// Hankel expansion, summed until the terms stop decreasing.
inline double bessel_j1_asymptotic(double x) {
  const double mu = 4.0;  // 4 nu^2
  const double z = 8.0 * x;
  double p = 1.0, q = 0.0;
  double a = 1.0;  // a_k(nu) / z^k
  double last = INFINITY;
  for (int k = 1; k < 100; ++k) {
    const double odd = 2.0 * k - 1.0;
    a *= (mu - odd * odd) / (k * z);
    if (std::abs(a) >= last) break;
    last = std::abs(a);
    switch (k % 4) {
      case 1: q += a; break;
      case 2: p -= a; break;
      case 3: q -= a; break;
      case 0: p += a; break;
    }
    if (last < 1e-17) break;
  }
  const double chi = x - 0.75 * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// Bessel function of the first kind, order one.
inline double bessel_j1(double x) {
  const double ax = std::abs(x);
  const double v = ax <= 12.0 ? detail::bessel_j1_series(ax) : detail::bessel_j1_asymptotic(ax);
  return x < 0.0 ? -v : v;
}

/// 2 J1(z) / z with its limit 1 at z = 0.
inline double bessel_jinc(double z) {
  if (std::abs(z) < 1e-8) return 1.0 - z * z / 8.0;
  return 2.0 * bessel_j1(z) / z;
}

}  // namespace typpert
