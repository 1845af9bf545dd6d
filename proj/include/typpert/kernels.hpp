#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "typpert/bessel.hpp"
#include "typpert/error.hpp"
#include "typpert/timeseries.hpp"

namespace typpert {

/// {sigma^2(0), Delta_v, epsilon, lambda} and the rates derived from them.
struct ResponseParams {
  double sigma2_0 = 0.0;
  double delta_v = 1.0;
  double epsilon = 1.0;
  double lambda = 0.0;

  void validate() const {
    require(sigma2_0 >= 0.0 && std::isfinite(sigma2_0), ErrorKind::input, "sigma2_0 must be >= 0");
    require(delta_v > 0.0 && std::isfinite(delta_v), ErrorKind::input, "delta_v must be > 0");
    require(epsilon > 0.0 && std::isfinite(epsilon), ErrorKind::input, "epsilon must be > 0");
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::input, "lambda must be >= 0");
  }

  ResponseParams with_lambda(double l) const {
    ResponseParams p = *this;
    p.lambda = l;
    return p;
  }

  /// Gamma = 2 pi lambda^2 sigma^2(0) / epsilon
  double Gamma() const { return 2.0 * std::numbers::pi * lambda * lambda * sigma2_0 / epsilon; }
  /// gamma = lambda sqrt(8 Delta_v sigma^2(0) / epsilon)
  double gamma() const { return lambda * std::sqrt(8.0 * delta_v * sigma2_0 / epsilon); }
  double gamma0() const { return 2.0 * delta_v / std::numbers::pi; }
  /// 1 - pi Gamma / (2 Delta_v); negative on the overdamped branch.
  double discriminant() const { return 1.0 - Gamma() / gamma0(); }
  bool overdamped() const { return discriminant() < 0.0; }
  std::complex<double> gamma_minus() const {
    return gamma0() * (1.0 - std::sqrt(std::complex<double>(discriminant())));
  }
  std::complex<double> gamma_plus() const {
    return gamma0() * (1.0 + std::sqrt(std::complex<double>(discriminant())));
  }
};

/// lambda_c = sqrt(2 Delta_v epsilon / (pi^2 sigma^2(0)))
inline double lambda_c(const ResponseParams& p) {
  require(p.sigma2_0 > 0.0, ErrorKind::undefined, "lambda_c needs sigma2_0 > 0");
  return std::sqrt(2.0 * p.delta_v * p.epsilon / (std::numbers::pi * std::numbers::pi * p.sigma2_0));
}

inline double g1(double t, const ResponseParams& p) { return std::exp(-0.5 * p.Gamma() * std::abs(t)); }

inline double g2(double t, const ResponseParams& p) { return bessel_jinc(p.gamma() * std::abs(t)); }

namespace detail {

inline std::complex<double> shc(std::complex<double> z) {
  if (z == std::complex<double>{}) return 1.0;
  return std::sinh(z) / z;
}

}  // namespace detail

/// Third kernel, written in s = sqrt(1 - Gamma/gamma0) and u = gamma0 |t|:
///   [(1+s)^2 e^{-u(1-s)} + (1-s)^2 e^{-u(1+s)} - 2(1-s^2) e^{-u}] / (4 s^2).
/// Near s = 0 (the gamma0 = Gamma pole) the equivalent entire form
///   e^{-u} [u^2/4 shc(us/2)^2 + (1 + cosh us)/2 + u shc(us)]
/// is used, so no special band is needed. s is imaginary when overdamped.
inline double g3(double t, const ResponseParams& p) {
  if (p.Gamma() == 0.0) return 1.0;
  const double u = p.gamma0() * std::abs(t);
  const std::complex<double> s = std::sqrt(std::complex<double>(p.discriminant()));
  const std::complex<double> us = u * s;
  std::complex<double> v;
  if (std::abs(us) <= 1.0) {
    const std::complex<double> h = detail::shc(0.5 * us);
    v = std::exp(-u) * (0.25 * u * u * h * h + 0.5 * (1.0 + std::cosh(us)) + u * detail::shc(us));
  } else {
    const std::complex<double> one(1.0);
    v = ((one + s) * (one + s) * std::exp(-u * (one - s)) +
         (one - s) * (one - s) * std::exp(-u * (one + s)) - 2.0 * (one - s * s) * std::exp(-u)) /
        (4.0 * s * s);
  }
  return v.real();
}

/// The third kernel evaluated term by term as written, for cross-checks away from the pole.
inline double g3_literal(double t, const ResponseParams& p) {
  const double G = p.Gamma(), g0 = p.gamma0();
  const std::complex<double> gm = p.gamma_minus(), gp = p.gamma_plus();
  const double at = std::abs(t);
  const std::complex<double> num =
      (gp - 0.5 * G) * std::exp(-gm * at) + (gm - 0.5 * G) * std::exp(-gp * at) - G * std::exp(-g0 * at);
  return (num / (2.0 * (g0 - G))).real();
}

enum class AdHocKind { gauss, lorentz };

inline double g_adhoc(double t, AdHocKind kind, double alpha, double lambda) {
  require(alpha > 0.0, ErrorKind::input, "alpha must be > 0");
  const double x = alpha * (lambda * t) * (lambda * t);
  return kind == AdHocKind::gauss ? std::exp(-x) : 1.0 / (1.0 + x);
}

enum class KernelKind { g1, g2, g3, gauss, lorentz };

inline std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::g1: return "g1";
    case KernelKind::g2: return "g2";
    case KernelKind::g3: return "g3";
    case KernelKind::gauss: return "gauss";
    case KernelKind::lorentz: return "lorentz";
  }
  return "?";
}

inline KernelKind kernel_from_string(const std::string& s) {
  for (KernelKind k : {KernelKind::g1, KernelKind::g2, KernelKind::g3, KernelKind::gauss, KernelKind::lorentz})
    if (to_string(k) == s) return k;
  throw Error(ErrorKind::config, "unknown kernel '" + s + "'");
}

inline bool is_adhoc(KernelKind k) { return k == KernelKind::gauss || k == KernelKind::lorentz; }

/// A kernel choice; alpha is used by the ad-hoc kinds only.
struct Kernel {
  KernelKind kind = KernelKind::g1;
  double alpha = 1.0;
};

inline double evaluate(const Kernel& k, double t, const ResponseParams& p) {
  switch (k.kind) {
    case KernelKind::g1: return g1(t, p);
    case KernelKind::g2: return g2(t, p);
    case KernelKind::g3: return g3(t, p);
    case KernelKind::gauss: return g_adhoc(t, AdHocKind::gauss, k.alpha, p.lambda);
    case KernelKind::lorentz: return g_adhoc(t, AdHocKind::lorentz, k.alpha, p.lambda);
  }
  return 1.0;
}

/// out(t) = longtime + |g(t)|^2 (unperturbed(t) - longtime)
inline TimeSeries predict(const TimeSeries& unperturbed, double longtime, const Kernel& kernel,
                          const ResponseParams& params) {
  require(!unperturbed.empty(), ErrorKind::input, "empty time grid");
  TimeSeries out;
  out.times = unperturbed.times;
  out.values.resize(unperturbed.size());
  out.meta = unperturbed.meta;
  out.meta.lambda = params.lambda;
  for (std::size_t k = 0; k < unperturbed.size(); ++k) {
    const double g = evaluate(kernel, unperturbed.times[k], params);
    // g = 1 passes the input through bit for bit
    out.values[k] = g == 1.0 ? unperturbed.values[k] : longtime + g * g * (unperturbed.values[k] - longtime);
  }
  return out;
}

/// sigma^2(0) / (1 + (pi omega / (2 Delta_v))^2)
inline double lorentz_profile(double omega, double sigma2_0, double delta_v) {
  require(delta_v > 0.0, ErrorKind::input, "delta_v must be > 0");
  const double x = std::numbers::pi * omega / (2.0 * delta_v);
  return sigma2_0 / (1.0 + x * x);
}

/// sigma^2(0) e^{-|omega| / Delta_v}
inline double exponential_profile(double omega, double sigma2_0, double delta_v) {
  require(delta_v > 0.0, ErrorKind::input, "delta_v must be > 0");
  return sigma2_0 * std::exp(-std::abs(omega) / delta_v);
}

}  // namespace typpert
