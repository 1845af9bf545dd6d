#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "typpert/error.hpp"
#include "typpert/format.hpp"
#include "typpert/krylov.hpp"
#include "typpert/models.hpp"
#include "typpert/parallel.hpp"
#include "typpert/spectrum.hpp"
#include "typpert/timeseries.hpp"
#include "typpert/typicality.hpp"

namespace typpert {

enum class DynamicsMethod { ed, krylov_typicality };
enum class SeriesNormalization { initial_one, none };

inline std::string to_string(DynamicsMethod m) { return m == DynamicsMethod::ed ? "ed" : "krylov_typicality"; }
inline std::string to_string(SeriesNormalization n) { return n == SeriesNormalization::initial_one ? "initial_one" : "none"; }

struct ExperimentPlan {
  ModelSpec model;
  std::vector<double> lambdas{0.0};
  std::optional<EnergyWindow> window;
  std::optional<GaussianFilter> filter;
  double t_max = 100.0;
  double dt = 0.05;
  DynamicsMethod method = DynamicsMethod::ed;
  std::size_t samples = 16;
  std::uint64_t seed = 1;
  KrylovOptions krylov;
  std::size_t ed_cap = kDefaultEdCap;
  bool allow_soft_window = true;
  SeriesNormalization normalization = SeriesNormalization::initial_one;

  void validate() const {
    require(!lambdas.empty(), ErrorKind::config, "lambda list is empty");
    for (double l : lambdas) require(l >= 0.0 && std::isfinite(l), ErrorKind::config, "lambda must be >= 0");
    require(dt > 0.0 && t_max > 0.0 && std::isfinite(t_max), ErrorKind::config, "bad time grid");
    require(samples >= 1, ErrorKind::config, "samples must be >= 1");
    (void)initial_state_spec(model, window, filter);
  }

  /// Sorted, de-duplicated lambdas with 0 inserted if missing. Returns true when 0 was added.
  bool ensure_reference() {
    std::sort(lambdas.begin(), lambdas.end());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
    if (!lambdas.empty() && lambdas.front() == 0.0) return false;
    lambdas.insert(lambdas.begin(), 0.0);
    return true;
  }
};

inline std::string describe_window(const ExperimentPlan& p) {
  if (p.filter) return "gaussian sigma_E=" + format_short(p.filter->sigma_e);
  if (p.window && !p.window->unbounded())
    return "E=" + format_short(p.window->center) + " dE=" + format_short(p.window->half_width);
  return "none";
}

/// Divides by the value at t = 0 (errors scale along).
inline TimeSeries normalize_series(const TimeSeries& s, SeriesNormalization mode) {
  if (mode == SeriesNormalization::none) return s;
  require(!s.empty() && s.values.front() != 0.0, ErrorKind::normalization, "series starts at zero");
  TimeSeries out = s;
  const double c = s.values.front();
  for (double& v : out.values) v /= c;
  for (double& e : out.stderr_) e /= std::abs(c);
  out.meta.normalization = to_string(mode);
  return out;
}

/// Exact Tr{rho A(t)} (pure scheme) or Tr{A(t) B} / D (two-vector scheme)
/// from the full eigendecomposition of H.
inline TimeSeries exact_dynamics(const Preparation& prep, const SparseHermitian& a, const Spectrum& h,
                                 const std::vector<double>& times) {
  require(h.has_vectors(), ErrorKind::input, "exact dynamics needs eigenvectors");
  const auto n = static_cast<Eigen::Index>(h.dim());
  const Eigen::MatrixXcd u = h.vectors(0, h.dim());
  Eigen::MatrixXcd r(n, n);  // <n| R |m> with R = rho or B / D
  if (prep.scheme == Scheme::pure) {
    Eigen::MatrixXcd w(n, n);
    for (Eigen::Index m = 0; m < n; ++m) w.col(m) = prep.adjoint(u.col(m));
    r = w.adjoint() * w;
    const double tr = r.trace().real();
    require(tr > 0.0, ErrorKind::normalization, "preparation has zero trace");
    r /= tr;
  } else {
    Eigen::MatrixXcd bu(n, n);
    for (Eigen::Index m = 0; m < n; ++m) bu.col(m) = prep.apply(u.col(m));
    r = u.adjoint() * bu / static_cast<double>(n);
  }
  const Eigen::MatrixXcd au = a.matrix() * u;
  const Eigen::MatrixXcd at = u.adjoint() * au;
  // M_mn = A_mn R_nm; value(t) = sum_mn M_mn e^{i (E_m - E_n) t}
  const Eigen::MatrixXcd mm = at.cwiseProduct(r.transpose());
  TimeSeries ts;
  ts.times = times;
  ts.values.resize(times.size());
  Eigen::VectorXcd phase(n);
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (Eigen::Index m = 0; m < n; ++m) phase[m] = std::exp(Complex(0.0, h.eigenvalues[m] * times[k]));
    const Complex v = phase.transpose() * (mm * phase.conjugate());
    require(std::abs(v.imag()) < 1e-9 * std::max(1.0, std::abs(v.real())), ErrorKind::input,
            "expectation value acquired an imaginary part " + format_short(v.imag()));
    ts.values[k] = v.real();
  }
  return ts;
}

struct DynamicsResult {
  std::map<double, TimeSeries> series;
  std::vector<std::string> warnings;
  std::size_t dim = 0;
  std::string preparation;
  std::optional<double> soft_edge;
};

/// One series per lambda; the window or filter is always built from H0 and
/// the evolution uses H0 + lambda V.
inline DynamicsResult run_dynamics(ExperimentPlan plan) {
  DynamicsResult res;
  if (plan.ensure_reference()) res.warnings.push_back("lambda = 0 was missing and has been added");
  plan.validate();
  const Model model = build_model(plan.model);
  const StateSpec spec = initial_state_spec(plan.model, plan.window, plan.filter);
  const std::vector<double> times = uniform_grid(plan.t_max, plan.dt);
  res.dim = model.h0.dim();
  res.preparation = describe(spec);

  const bool ed = plan.method == DynamicsMethod::ed;
  require(!ed || model.h0.dim() <= plan.ed_cap, ErrorKind::capacity,
          "dimension " + std::to_string(model.h0.dim()) + " exceeds the exact-diagonalization cap");
  RealizeOptions ro;
  ro.ed_cap = plan.ed_cap;
  ro.allow_soft_window = plan.allow_soft_window;
  std::shared_ptr<const Spectrum> h0_spectrum;
  const bool needs_h0 = !std::holds_alternative<Autocorrelation>(spec) &&
                        !(std::holds_alternative<ProjectedShiftedObservable>(spec) &&
                          std::get<ProjectedShiftedObservable>(spec).window.unbounded());
  if (model.h0.dim() <= plan.ed_cap && (ed || needs_h0)) {
    h0_spectrum = std::make_shared<const Spectrum>(exact_diag(model.h0, true, plan.ed_cap));
    ro.h0_spectrum = h0_spectrum;
  }
  const Preparation prep = realize(model, spec, ro);
  res.soft_edge = prep.soft_edge;
  if (prep.soft_edge) res.warnings.push_back("soft energy window with edge width " + format_short(*prep.soft_edge));

  auto label = [&](TimeSeries ts, double lambda) {
    ts.meta.model = to_string(plan.model.kind) + " L=" + std::to_string(plan.model.L);
    ts.meta.lambda = lambda;
    ts.meta.window = describe_window(plan);
    ts.meta.seed = ed ? 0 : plan.seed;
    return normalize_series(ts, plan.normalization);
  };

  if (ed) {
    const std::vector<TimeSeries> out = parallel_map(plan.lambdas.size(), [&](std::size_t i) {
      const double l = plan.lambdas[i];
      try {
        if (l == 0.0) return label(exact_dynamics(prep, model.observable, *h0_spectrum, times), l);
        const Spectrum s = exact_diag(model.hamiltonian(l), true, plan.ed_cap);
        return label(exact_dynamics(prep, model.observable, s, times), l);
      } catch (const Error& e) {
        throw Error(e.kind(), "lambda=" + format_short(l) + ": " + e.what());
      }
    });
    for (std::size_t i = 0; i < out.size(); ++i) res.series.emplace(plan.lambdas[i], out[i]);
    return res;
  }
  for (double l : plan.lambdas) {
    try {
      const SparseHermitian h = l == 0.0 ? model.h0 : model.hamiltonian(l);
      TimeSeries ts = estimate_expectation(model.observable, prep, krylov_propagator(h, plan.krylov), times,
                                           plan.samples, plan.seed);
      res.series.emplace(l, label(std::move(ts), l));
    } catch (const Error& e) {
      throw Error(e.kind(), "lambda=" + format_short(l) + ": " + e.what());
    }
  }
  return res;
}

}  // namespace typpert
