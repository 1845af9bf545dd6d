#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "typpert/error.hpp"

namespace typpert {

struct SeriesMetadata {
  std::string model;
  double lambda = 0.0;
  std::string window;
  std::uint64_t seed = 0;
  std::string normalization = "none";
};

/// Uniformly sampled trace <A(t)>, hbar = 1. `stderr_` is empty when the
/// values carry no sampling error.
struct TimeSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> stderr_;
  SeriesMetadata meta;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  bool has_errors() const { return !stderr_.empty(); }

  /// Throws unless the grid is uniform and strictly increasing and all values are finite.
  void validate() const {
    require(values.size() == times.size(), ErrorKind::input, "times/values length mismatch");
    require(stderr_.empty() || stderr_.size() == times.size(), ErrorKind::input,
            "stderr length mismatch");
    for (double v : values) require(std::isfinite(v), ErrorKind::input, "non-finite series value");
    if (times.size() < 2) return;
    const double h = dt();
    require(h > 0.0, ErrorKind::input, "time grid must be strictly increasing");
    for (std::size_t k = 1; k < times.size(); ++k)
      require(std::abs(times[k] - times[k - 1] - h) <= 1e-9 * std::max(1.0, std::abs(times[k])),
              ErrorKind::input, "time grid must be uniform");
  }
};

/// t_k = k dt for k = 0..round(t_max / dt).
inline std::vector<double> uniform_grid(double t_max, double dt) {
  require(dt > 0.0 && t_max >= 0.0 && std::isfinite(t_max), ErrorKind::input, "bad time grid");
  const auto n = static_cast<std::size_t>(std::llround(t_max / dt));
  std::vector<double> t(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

inline bool same_grid(const TimeSeries& a, const TimeSeries& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, std::abs(a.times[k]))) return false;
  return true;
}

}  // namespace typpert
