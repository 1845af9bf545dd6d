#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "typpert/error.hpp"
#include "typpert/format.hpp"
#include "typpert/kernels.hpp"
#include "typpert/nelder_mead.hpp"
#include "typpert/parallel.hpp"
#include "typpert/timeseries.hpp"

namespace typpert {

/// Mean over the final `fraction` of the samples.
inline double estimate_longtime(const TimeSeries& s, double fraction = 0.2) {
  require(!s.empty(), ErrorKind::input, "empty series");
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::input, "fraction must lie in (0, 1]");
  const std::size_t n = s.size();
  const auto tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  double sum = 0.0;
  for (std::size_t k = n - tail; k < n; ++k) sum += s.values[k];
  return sum / static_cast<double>(tail);
}

/// Earliest t after which C~(t) = [C(t) - C_inf] / [C(0) - C_inf] stays
/// below `threshold`. The crossing is interpolated linearly inside the grid
/// interval that follows the last violation.
inline double relaxation_time(const TimeSeries& s, double longtime, double threshold = 0.01) {
  require(s.size() >= 2, ErrorKind::input, "series too short");
  const double c0 = s.values.front() - longtime;
  require(c0 != 0.0, ErrorKind::normalization, "C(0) equals the long-time value");
  const std::size_t n = s.size();
  auto ct = [&](std::size_t k) { return (s.values[k] - longtime) / c0; };
  std::size_t last = n;  // last index with C~ >= threshold
  for (std::size_t k = n; k-- > 0;)
    if (ct(k) >= threshold) {
      last = k;
      break;
    }
  const std::size_t tail_start = n - std::max<std::size_t>(1, n / 10);
  if (last == n) return s.times.front();
  if (last >= tail_start)
    throw Error(ErrorKind::no_relaxation, "C~ is not below " + format_short(threshold) +
                                              " over the final 10% of the horizon; extend t_max");
  const double a = ct(last), b = ct(last + 1);
  const double frac = (a - threshold) / (a - b);
  return s.times[last] + frac * (s.times[last + 1] - s.times[last]);
}

/// (1 / (tau num(0)^2)) int_0^tau |pred - num|^2 dt, trapezoidal on the
/// shared grid; the last partial interval uses the linear interpolant of
/// the integrand.
inline double deviation(const TimeSeries& pred, const TimeSeries& num, double tau) {
  require(same_grid(pred, num), ErrorKind::input, "deviation needs identical time grids");
  require(num.size() >= 2, ErrorKind::input, "series too short");
  require(tau > 0.0 && tau <= num.times.back() * (1.0 + 1e-12), ErrorKind::input, "tau outside the horizon");
  const double n0 = num.values.front();
  require(n0 != 0.0, ErrorKind::normalization, "num(0) vanishes");
  auto sq = [&](std::size_t k) {
    const double d = pred.values[k] - num.values[k];
    return d * d;
  };
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < num.size(); ++k) {
    const double t0 = num.times[k], t1 = num.times[k + 1];
    if (t0 >= tau) break;
    if (t1 <= tau) {
      integral += 0.5 * (sq(k) + sq(k + 1)) * (t1 - t0);
    } else {
      const double f = (tau - t0) / (t1 - t0);
      const double end = sq(k) + f * (sq(k + 1) - sq(k));
      integral += 0.5 * (sq(k) + end) * (tau - t0);
    }
  }
  return integral / (tau * n0 * n0);
}

enum class LongtimeMode { tail_mean, free };
enum class Weighting { inverse_lambda, inverse_lambda_squared };
enum class FitMode { fit, fixed };

struct KernelFitOptions {
  FitMode mode = FitMode::fit;
  LongtimeMode longtime = LongtimeMode::tail_mean;
  Weighting weighting = Weighting::inverse_lambda;
  double tail_fraction = 0.2;
  double relaxation_threshold = 0.01;
  std::optional<double> tau;  // fixed integration horizon for every lambda
  // fixed mode
  ResponseParams fixed_params;
  double fixed_alpha = 1.0;
  // coarse grid + simplex
  int grid_points = 32;
  double sigma2_lower = 1e-6, sigma2_upper = 1.0;
  double delta_v_lower = 1e-2, delta_v_upper = 1e2;
  double alpha_lower = 1e-6, alpha_upper = 1e4;
  SimplexOptions simplex{0.1, 1e-6, 5000};
};

struct LambdaDeviation {
  double lambda = 0.0;
  double tau = 0.0;
  bool tau_from_horizon = false;  // no relaxation inside the horizon
  double longtime = 0.0;
  double deviation = 0.0;         // prediction vs numerics
  double delta0 = 0.0;            // unperturbed vs numerics
};

struct FitResult {
  KernelKind kind = KernelKind::g1;
  ResponseParams params;   // lambda unused
  double alpha = 0.0;      // ad-hoc kernels
  std::vector<LambdaDeviation> per_lambda;
  double total = 0.0;
  int trace_length = 0;    // objective evaluations
  bool converged = true;
  std::string unconstrained;  // parameters the data cannot pin down
};

namespace detail {

struct FitCurve {
  double lambda;
  const TimeSeries* num;
  double tau;
  bool tau_from_horizon;
  double tail;
  std::vector<double> weights;  // trapezoid weights on [0, tau]
};

inline std::vector<double> trapezoid_weights(const std::vector<double>& t, double tau) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double t0 = t[k], t1 = t[k + 1];
    if (t0 >= tau) break;
    if (t1 <= tau) {
      w[k] += 0.5 * (t1 - t0);
      w[k + 1] += 0.5 * (t1 - t0);
    } else {
      // linear interpolant on [t0, tau] distributes onto both nodes
      const double h = tau - t0, f = h / (t1 - t0);
      w[k] += 0.5 * h * (2.0 - f);
      w[k + 1] += 0.5 * h * f;
    }
  }
  return w;
}

}  // namespace detail

/// Fits a response kernel to a family of perturbed curves, minimizing
/// sum_i Delta(lambda_i) / lambda_i (or / lambda_i^2). lambda = 0 entries
/// are ignored.
inline FitResult fit_kernel(KernelKind family, const TimeSeries& unperturbed,
                            const std::map<double, TimeSeries>& perturbed, double epsilon,
                            const KernelFitOptions& opts = {}) {
  require(epsilon > 0.0, ErrorKind::input, "epsilon must be > 0");
  std::vector<detail::FitCurve> curves;
  for (const auto& [lambda, num] : perturbed) {
    if (lambda == 0.0) continue;
    require(lambda > 0.0, ErrorKind::input, "lambda must be >= 0");
    require(same_grid(num, unperturbed), ErrorKind::input, "all series must share one grid");
    detail::FitCurve c{lambda, &num, 0.0, false, estimate_longtime(num, opts.tail_fraction), {}};
    if (opts.tau) {
      c.tau = *opts.tau;
    } else {
      try {
        c.tau = relaxation_time(num, c.tail, opts.relaxation_threshold);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_relaxation) throw;
        c.tau = num.times.back();
        c.tau_from_horizon = true;
      }
      if (c.tau <= 0.0) c.tau = num.dt();
    }
    c.weights = detail::trapezoid_weights(num.times, c.tau);
    curves.push_back(std::move(c));
  }
  require(!curves.empty(), ErrorKind::input, "need at least one lambda > 0");

  // Delta for one curve at given kernel values; the free long-time value
  // solves a one-dimensional linear least-squares problem.
  auto curve_deviation = [&](const detail::FitCurve& c, const std::vector<double>& g2, double& longtime) {
    const auto& u = unperturbed.values;
    const auto& y = c.num->values;
    longtime = c.tail;
    if (opts.longtime == LongtimeMode::free) {
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) {
        if (c.weights[k] == 0.0) continue;
        const double a = 1.0 - g2[k];
        num += c.weights[k] * a * (y[k] - g2[k] * u[k]);
        den += c.weights[k] * a * a;
      }
      if (den > 1e-300) longtime = num / den;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (c.weights[k] == 0.0) continue;
      const double d = longtime + g2[k] * (u[k] - longtime) - y[k];
      s += c.weights[k] * d * d;
    }
    return s / (c.tau * y.front() * y.front());
  };
  auto weight = [&](double lambda) {
    return opts.weighting == Weighting::inverse_lambda ? 1.0 / lambda : 1.0 / (lambda * lambda);
  };
  auto kernel_sq = [&](const Kernel& k, const ResponseParams& p, const detail::FitCurve& c) {
    const ResponseParams pl = p.with_lambda(c.lambda);
    std::vector<double> g2(c.num->size());
    for (std::size_t i = 0; i < g2.size(); ++i) {
      const double g = evaluate(k, c.num->times[i], pl);
      g2[i] = g * g;
    }
    return g2;
  };
  // x holds log parameters: (log sigma2_0, log delta_v) or (log alpha)
  auto unpack = [&](const std::vector<double>& x, Kernel& k, ResponseParams& p) {
    k.kind = family;
    p.epsilon = epsilon;
    if (is_adhoc(family)) {
      k.alpha = std::exp(x[0]);
    } else {
      p.sigma2_0 = std::exp(x[0]);
      p.delta_v = std::exp(x[1]);
    }
  };
  std::atomic<int> evaluations{0};
  auto objective = [&](const std::vector<double>& x) {
    ++evaluations;
    Kernel k;
    ResponseParams p;
    unpack(x, k, p);
    double total = 0.0;
    double lt = 0.0;
    for (const auto& c : curves) total += weight(c.lambda) * curve_deviation(c, kernel_sq(k, p, c), lt);
    return total;
  };

  FitResult res;
  res.kind = family;
  std::vector<double> best;
  if (opts.mode == FitMode::fixed) {
    if (is_adhoc(family)) best = {std::log(opts.fixed_alpha)};
    else best = {std::log(opts.fixed_params.sigma2_0), std::log(opts.fixed_params.delta_v)};
  } else {
    const int n = opts.grid_points;
    require(n >= 2, ErrorKind::input, "grid needs at least two points per axis");
    auto axis = [n](double lo, double hi, int i) { return std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1); };
    std::vector<std::vector<double>> cand;
    if (is_adhoc(family)) {
      for (int i = 0; i < n; ++i) cand.push_back({axis(opts.alpha_lower, opts.alpha_upper, i)});
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          cand.push_back({axis(opts.sigma2_lower, opts.sigma2_upper, i), axis(opts.delta_v_lower, opts.delta_v_upper, j)});
    }
    const std::vector<double> vals = parallel_map(cand.size(), [&](std::size_t i) { return objective(cand[i]); });
    std::size_t arg = 0;
    for (std::size_t i = 1; i < vals.size(); ++i)
      if (vals[i] < vals[arg]) arg = i;
    SimplexOptions so = opts.simplex;
    so.initial_step = std::max(so.initial_step,
                               is_adhoc(family) ? (std::log(opts.alpha_upper) - std::log(opts.alpha_lower)) / (n - 1)
                                                : (std::log(opts.sigma2_upper) - std::log(opts.sigma2_lower)) / (n - 1));
    const SimplexResult sr = nelder_mead(objective, cand[arg], so);
    best = sr.x;
    res.converged = sr.converged;
  }

  Kernel k;
  unpack(best, k, res.params);
  res.alpha = is_adhoc(family) ? k.alpha : 0.0;
  res.params.lambda = 0.0;
  for (const auto& c : curves) {
    LambdaDeviation d;
    d.lambda = c.lambda;
    d.tau = c.tau;
    d.tau_from_horizon = c.tau_from_horizon;
    d.deviation = curve_deviation(c, kernel_sq(k, res.params, c), d.longtime);
    d.delta0 = deviation(unperturbed, *c.num, c.tau);
    res.total += weight(c.lambda) * d.deviation;
    res.per_lambda.push_back(d);
  }
  res.trace_length = evaluations.load();
  if (family == KernelKind::g1) res.unconstrained = "delta_v";
  else if (family == KernelKind::g2) res.unconstrained = "sigma2_0/delta_v split (only their product enters)";
  if (opts.mode == FitMode::fit && !res.converged)
    throw Error(ErrorKind::fit_failure, "simplex did not reach its diameter floor; best total " +
                                            format_short(res.total) + " at sigma2_0=" +
                                            format_short(res.params.sigma2_0) + " delta_v=" +
                                            format_short(res.params.delta_v) + " alpha=" + format_short(res.alpha));
  return res;
}

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kHbar = 1.054571817e-34;    // J s

struct MesoscopicEstimate {
  double omega_rel = 0.0;        // 1/s
  std::vector<double> products;  // omega_rel * tau_i
};

/// omega_rel = sqrt(k_B C_v) 2 T / hbar
inline MesoscopicEstimate mesoscopic_estimate(double heat_capacity, double temperature,
                                              const std::vector<double>& taus = {}) {
  require(heat_capacity > 0.0 && temperature > 0.0, ErrorKind::input, "C_v and T must be > 0");
  MesoscopicEstimate m;
  m.omega_rel = std::sqrt(kBoltzmann * heat_capacity) * 2.0 * temperature / kHbar;
  for (double t : taus) m.products.push_back(m.omega_rel * t);
  return m;
}

/// width_i * tau for dimensionless model units.
inline std::vector<double> width_time_products(const std::vector<double>& widths, double tau) {
  std::vector<double> out;
  for (double w : widths) out.push_back(w * tau);
  return out;
}

}  // namespace typpert
