#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "typpert/error.hpp"

namespace typpert {

struct SimplexOptions {
  double initial_step = 0.1;     // per coordinate
  double tolerance = 1e-6;       // simplex diameter floor, relative to max(1, |x_best|)
  int max_iterations = 5000;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2). Ties are
/// broken by vertex index, so the run is deterministic.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> start, const SimplexOptions& opts = {}) {
  const std::size_t n = start.size();
  require(n >= 1, ErrorKind::input, "nothing to optimize");
  SimplexResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? INFINITY : v;
  };

  std::vector<std::vector<double>> pts(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opts.initial_step;
  std::vector<double> val(n + 1);
  for (std::size_t i = 0; i <= n; ++i) val[i] = eval(pts[i]);
  std::vector<std::size_t> order(n + 1);

  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k) d = std::max(d, std::abs(pts[order[i]][k] - pts[order[0]][k]));
    return d;
  };
  auto scale = [&] {
    double s = 1.0;
    for (double x : pts[order[0]]) s = std::max(s, std::abs(x));
    return s;
  };

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    if (diameter() <= opts.tolerance * scale()) {
      res.converged = true;
      break;
    }
    const std::size_t worst = order[n], second = order[n - 1], best = order[0];
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[order[i]][k] / static_cast<double>(n);
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
      return x;
    };
    const std::vector<double> xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < val[best]) {
      const std::vector<double> xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const std::vector<double> xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      std::vector<double>& p = pts[order[i]];
      for (std::size_t k = 0; k < n; ++k) p[k] = pts[best][k] + 0.5 * (p[k] - pts[best][k]);
      val[order[i]] = eval(p);
    }
  }
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
  res.x = pts[order[0]];
  res.value = val[order[0]];
  return res;
}

}  // namespace typpert
