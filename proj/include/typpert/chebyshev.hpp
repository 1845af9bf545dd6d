#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "typpert/error.hpp"
#include "typpert/krylov.hpp"
#include "typpert/models.hpp"
#include "typpert/sparse.hpp"
#include "typpert/spectrum.hpp"

namespace typpert {

/// f(E) ~ c_0/2 + sum_k c_k T_k((E - center) / half_width) on `bounds`.
struct ChebyshevSeries {
  std::vector<double> coefficients;
  SpectralBounds bounds;
  double tail_bound = 0.0;  // sum of |c_k| dropped by the truncation

  int order() const { return static_cast<int>(coefficients.size()) - 1; }

  double evaluate(double e) const {
    const double x = (e - bounds.center()) / bounds.half_width();
    // Clenshaw
    double b1 = 0.0, b2 = 0.0;
    for (int k = order(); k >= 1; --k) {
      const double b0 = 2.0 * x * b1 - b2 + coefficients[k];
      b2 = b1;
      b1 = b0;
    }
    return x * b1 - b2 + 0.5 * coefficients[0];
  }
};

namespace detail {

inline std::vector<double> chebyshev_coefficients_at(const std::function<double(double)>& f,
                                                     const SpectralBounds& b, int nodes) {
  std::vector<double> fx(nodes), theta(nodes);
  for (int j = 0; j < nodes; ++j) {
    theta[j] = std::numbers::pi * (j + 0.5) / nodes;
    fx[j] = f(b.center() + b.half_width() * std::cos(theta[j]));
  }
  std::vector<double> c(nodes, 0.0);
  for (int j = 0; j < nodes; ++j) {
    const double x = std::cos(theta[j]);
    double prev = 1.0, cur = x;  // cos(k theta) by recurrence
    c[0] += fx[j];
    if (nodes > 1) c[1] += fx[j] * cur;
    for (int k = 2; k < nodes; ++k) {
      const double next = 2.0 * x * cur - prev;
      c[k] += fx[j] * next;
      prev = cur;
      cur = next;
    }
  }
  for (double& ck : c) ck *= 2.0 / nodes;
  return c;
}

}  // namespace detail

/// Chebyshev interpolant of `f` on `bounds`, truncated at the smallest
/// order whose dropped coefficients sum below `tolerance`.
inline ChebyshevSeries chebyshev_expand(const std::function<double(double)>& f,
                                        const SpectralBounds& bounds, double tolerance = 1e-8,
                                        int max_nodes = 1 << 15) {
  require(bounds.upper > bounds.lower, ErrorKind::bounds, "degenerate spectral interval");
  for (int nodes = 64; nodes <= max_nodes; nodes *= 2) {
    std::vector<double> c = detail::chebyshev_coefficients_at(f, bounds, nodes);
    // resolved once the upper quarter is negligible
    double upper_tail = 0.0;
    for (int k = 3 * nodes / 4; k < nodes; ++k) upper_tail += std::abs(c[k]);
    if (upper_tail > 0.1 * tolerance && nodes < max_nodes) continue;
    double tail = 0.0;
    int order = nodes - 1;
    while (order > 0 && tail + std::abs(c[order]) < tolerance) tail += std::abs(c[order--]);
    c.resize(order + 1);
    return {std::move(c), bounds, tail};
  }
  throw Error(ErrorKind::bounds, "Chebyshev expansion did not resolve the function");
}

/// f(H) psi with the three-term recurrence; H must have its spectrum inside
/// series.bounds.
inline StateVector chebyshev_apply(const SparseHermitian& h, const ChebyshevSeries& series,
                                   const StateVector& psi) {
  const double c = series.bounds.center(), a = series.bounds.half_width();
  auto scaled = [&](const StateVector& v) -> StateVector { return (h.apply(v) - c * v) / a; };
  const auto& coef = series.coefficients;
  StateVector t_prev = psi;
  StateVector out = 0.5 * coef[0] * psi;
  if (series.order() == 0) return out;
  StateVector t_cur = scaled(psi);
  out += coef[1] * t_cur;
  for (int k = 2; k <= series.order(); ++k) {
    StateVector t_next = 2.0 * scaled(t_cur) - t_prev;
    out += coef[k] * t_next;
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return out;
}

/// mu_k = <left| T_k(H~) |right>, k = 0..order.
inline std::vector<Complex> chebyshev_moments(const SparseHermitian& h, const SpectralBounds& bounds,
                                              const StateVector& left, const StateVector& right,
                                              int order) {
  const double c = bounds.center(), a = bounds.half_width();
  auto scaled = [&](const StateVector& v) -> StateVector { return (h.apply(v) - c * v) / a; };
  std::vector<Complex> mu(order + 1);
  StateVector t_prev = right;
  mu[0] = left.dot(t_prev);
  if (order == 0) return mu;
  StateVector t_cur = scaled(right);
  mu[1] = left.dot(t_cur);
  for (int k = 2; k <= order; ++k) {
    StateVector t_next = 2.0 * scaled(t_cur) - t_prev;
    mu[k] = left.dot(t_next);
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return mu;
}

/// Jackson damping factors g_k for a series truncated at `order`.
inline std::vector<double> jackson_damping(int order) {
  const double n = order + 1;
  std::vector<double> g(order + 1);
  for (int k = 0; k <= order; ++k) {
    const double q = std::numbers::pi / (n + 1);
    g[k] = ((n - k + 1) * std::cos(k * q) + std::sin(k * q) / std::tan(q)) / (n + 1);
  }
  return g;
}

/// Coefficients (c_0/2 convention) of the indicator of [x1, x2] in scaled
/// units, -1 <= x1 < x2 <= 1.
inline std::vector<double> indicator_coefficients(double x1, double x2, int order) {
  x1 = std::clamp(x1, -1.0, 1.0);
  x2 = std::clamp(x2, -1.0, 1.0);
  const double t1 = std::acos(x1), t2 = std::acos(x2);  // t1 >= t2
  std::vector<double> c(order + 1);
  c[0] = 2.0 * (t1 - t2) / std::numbers::pi;
  for (int k = 1; k <= order; ++k)
    c[k] = 2.0 * (std::sin(k * t1) - std::sin(k * t2)) / (std::numbers::pi * k);
  return c;
}

/// exp(-H^2 / (2 sigma_E^2)) psi to function accuracy `tolerance` on the
/// padded Lanczos spectral interval.
inline StateVector chebyshev_gaussian_filter(const SparseHermitian& h, const StateVector& psi,
                                             double sigma_e, std::optional<SpectralBounds> bounds = std::nullopt,
                                             double tolerance = 1e-8) {
  require(sigma_e > 0.0, ErrorKind::input, "sigma_E must be positive");
  const SpectralBounds b = bounds.value_or(estimate_spectral_bounds(h));
  const double inv = 1.0 / (2.0 * sigma_e * sigma_e);
  const ChebyshevSeries s = chebyshev_expand([inv](double e) { return std::exp(-e * e * inv); }, b, tolerance);
  return chebyshev_apply(h, s, psi);
}

/// Smooth window indicator: 1/2 [erf((E - E_c + dE)/w) - erf((E - E_c - dE)/w)].
inline double soft_window(double e, const EnergyWindow& w, double edge) {
  return 0.5 * (std::erf((e - w.center + w.half_width) / edge) -
                std::erf((e - w.center - w.half_width) / edge));
}

/// Chebyshev replacement for the exact window projector when the
/// dimension exceeds the diagonalization cap. Edges have width `edge`
/// (default dE/20); the result is not idempotent.
class SoftWindowProjector {
 public:
  SoftWindowProjector(const SparseHermitian& h0, EnergyWindow window, std::optional<double> edge = std::nullopt,
                      std::optional<SpectralBounds> bounds = std::nullopt, double tolerance = 1e-8)
      : h0_(h0), window_(window), edge_(edge.value_or(window.half_width / 20.0)) {
    require(window.half_width > 0.0 && std::isfinite(window.half_width), ErrorKind::input,
            "soft window needs a finite positive half-width");
    require(edge_ > 0.0, ErrorKind::input, "edge width must be positive");
    const SpectralBounds b = bounds.value_or(estimate_spectral_bounds(h0));
    series_ = chebyshev_expand([w = window_, e = edge_](double x) { return soft_window(x, w, e); }, b,
                               tolerance, 1 << 16);
  }

  double edge_width() const { return edge_; }
  const ChebyshevSeries& series() const { return series_; }
  StateVector apply(const StateVector& psi) const { return chebyshev_apply(h0_, series_, psi); }

  LinearMap handle() const {
    return [self = *this](const StateVector& psi) { return self.apply(psi); };
  }

 private:
  SparseHermitian h0_;
  EnergyWindow window_;
  double edge_;
  ChebyshevSeries series_;
};

}  // namespace typpert
