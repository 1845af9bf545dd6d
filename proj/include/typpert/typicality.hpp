#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "typpert/chebyshev.hpp"
#include "typpert/krylov.hpp"
#include "typpert/models.hpp"
#include "typpert/parallel.hpp"
#include "typpert/sparse.hpp"
#include "typpert/spectrum.hpp"
#include "typpert/timeseries.hpp"

namespace typpert {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of sample i: base XOR hash(i).
inline std::uint64_t sample_seed(std::uint64_t base, std::uint64_t i) { return base ^ splitmix64(i); }

/// i.i.d. complex standard normal amplitudes, normalized (Haar on the sphere).
inline StateVector random_state(std::size_t dim, std::uint64_t seed) {
  require(dim >= 1, ErrorKind::input, "random_state needs dim >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  StateVector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v[i] = Complex(re, im);
  }
  return v / v.norm();
}

/// How a density matrix enters the sampling.
///  pure:       rho = B B^dagger / Tr{B B^dagger}, sampled with psi = B phi.
///  two_vector: Tr{A(t) B} / D with <phi(t)| A |(B phi)(t)>.
enum class Scheme { pure, two_vector };

struct Preparation {
  Scheme scheme = Scheme::pure;
  LinearMap apply;                  // B
  LinearMap adjoint;                // B^dagger
  std::optional<double> trace;      // Tr{B B^dagger} when known exactly
  std::string description;
  std::optional<double> soft_edge;  // set when a Chebyshev soft window stands in for P
};

inline Preparation identity_preparation(std::size_t dim) {
  Preparation p;
  p.apply = [](const StateVector& v) { return v; };
  p.adjoint = p.apply;
  p.trace = static_cast<double>(dim);
  p.description = "maximally_mixed";
  return p;
}

struct RealizeOptions {
  std::shared_ptr<const Spectrum> h0_spectrum;  // with vectors; computed when absent and dim <= ed_cap
  std::size_t ed_cap = kDefaultEdCap;
  bool allow_soft_window = true;
  double chebyshev_tolerance = 1e-8;
};

namespace detail {

inline std::shared_ptr<const Spectrum> h0_spectrum_for(const Model& m, const RealizeOptions& o) {
  if (o.h0_spectrum) {
    require(o.h0_spectrum->has_vectors(), ErrorKind::input, "H0 spectrum lacks eigenvectors");
    return o.h0_spectrum;
  }
  if (m.h0.dim() > o.ed_cap) return nullptr;
  return std::make_shared<const Spectrum>(exact_diag(m.h0, true, o.ed_cap));
}

inline LinearMap diagonal_map(Eigen::VectorXd d) {
  return [d = std::move(d)](const StateVector& v) -> StateVector { return d.cast<Complex>().cwiseProduct(v); };
}

}  // namespace detail

/// Turns a declarative initial-state spec into the sampling operator B.
inline Preparation realize(const Model& model, const StateSpec& spec, const RealizeOptions& opts = {}) {
  Preparation prep;
  prep.description = describe(spec);

  if (std::holds_alternative<Autocorrelation>(spec)) {
    prep.scheme = Scheme::two_vector;
    const SparseHermitian a = model.observable;
    prep.apply = [a](const StateVector& v) { return a.apply(v); };
    prep.adjoint = prep.apply;
    return prep;
  }

  if (const auto* s = std::get_if<ProjectedShiftedObservable>(&spec)) {
    require(model.observable.is_diagonal(), ErrorKind::specification,
            "projected shifted preparation needs a diagonal observable");
    const Eigen::VectorXd diag = model.observable.real_diagonal();
    const double kappa = diag.minCoeff();
    const Eigen::VectorXd x = (diag.array() - kappa).max(0.0).matrix();
    const Eigen::VectorXd root = x.cwiseSqrt();
    const LinearMap sqrt_x = detail::diagonal_map(root);

    if (s->window.unbounded()) {
      prep.apply = sqrt_x;
      prep.adjoint = sqrt_x;
      prep.trace = x.sum();
      return prep;
    }
    if (auto spectrum = detail::h0_spectrum_for(model, opts)) {
      const WindowProjector p(spectrum, s->window);
      const LinearMap ph = p.handle();
      prep.apply = [ph, sqrt_x](const StateVector& v) { return ph(sqrt_x(v)); };
      prep.adjoint = [ph, sqrt_x](const StateVector& v) { return sqrt_x(ph(v)); };
      prep.trace = p.trace_of(SparseHermitian::diagonal(x));
      return prep;
    }
    require(opts.allow_soft_window, ErrorKind::capability,
            "dimension " + std::to_string(model.h0.dim()) +
                " exceeds the diagonalization cap and soft windows are disabled");
    const SoftWindowProjector p(model.h0, s->window, std::nullopt, std::nullopt, opts.chebyshev_tolerance);
    const LinearMap ph = p.handle();
    prep.apply = [ph, sqrt_x](const StateVector& v) { return ph(sqrt_x(v)); };
    prep.adjoint = [ph, sqrt_x](const StateVector& v) { return sqrt_x(ph(v)); };
    prep.soft_edge = p.edge_width();
    return prep;
  }

  const auto& f = std::get<FilteredSpinUpPair>(spec);
  const Eigen::VectorXd pa = spin_up_projector(model, f.site_a_i, f.site_a_j).real_diagonal();
  const Eigen::VectorXd pb = spin_up_projector(model, f.site_b_i, f.site_b_j).real_diagonal();
  const Eigen::VectorXd pp = pa.cwiseProduct(pb);
  const LinearMap proj = detail::diagonal_map(pp);
  const double inv = 1.0 / (2.0 * f.filter.sigma_e * f.filter.sigma_e);
  LinearMap filt;
  if (auto spectrum = detail::h0_spectrum_for(model, opts)) {
    filt = [spectrum, inv](const StateVector& v) {
      return spectrum->apply_function([inv](double e) { return std::exp(-e * e * inv); }, v);
    };
    // Tr{F^2 P} = sum_k e^{-E_k^2 / sigma^2} <k|P|k>
    double tr = 0.0;
    for (std::size_t k = 0; k < spectrum->dim(); ++k) {
      const StateVector u = spectrum->vector(k);
      const double e = spectrum->eigenvalues[static_cast<Eigen::Index>(k)];
      tr += std::exp(-2.0 * e * e * inv) * (u.cwiseAbs2().cwiseProduct(pp)).sum();
    }
    prep.trace = tr;
  } else {
    const SpectralBounds b = estimate_spectral_bounds(model.h0);
    const ChebyshevSeries series =
        chebyshev_expand([inv](double e) { return std::exp(-e * e * inv); }, b, opts.chebyshev_tolerance);
    const SparseHermitian h0 = model.h0;
    filt = [h0, series](const StateVector& v) { return chebyshev_apply(h0, series, v); };
  }
  prep.apply = [filt, proj](const StateVector& v) { return filt(proj(v)); };
  prep.adjoint = [filt, proj](const StateVector& v) { return proj(filt(v)); };
  return prep;
}

/// psi -> exp(-i H dt) psi.
using Propagator = std::function<StateVector(const StateVector&, double)>;

inline Propagator krylov_propagator(const SparseHermitian& h, KrylovOptions opts = {}) {
  return [h, opts](const StateVector& v, double dt) { return krylov_propagate(h, v, dt, opts); };
}

inline Propagator exact_propagator(std::shared_ptr<const Spectrum> s) {
  require(s && s->has_vectors(), ErrorKind::input, "exact propagator needs eigenvectors");
  return [s](const StateVector& v, double dt) {
    StateVector c = s->to_eigenbasis(v);
    for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(Complex(0.0, -s->eigenvalues[k] * dt));
    return s->from_eigenbasis(c);
  };
}

enum class Normalization {
  ratio,        // mean(num) / mean(norm); zero variance for A = 1
  exact_trace,  // D mean(num) / Tr{B B^dagger}; unbiased, needs the trace
};

struct EstimateOptions {
  Normalization normalization = Normalization::ratio;
};

namespace detail {

struct SampleTrace {
  std::vector<double> num;
  double norm = 0.0;
};

// mean and standard error of the columns in sample order
inline void column_stats(const std::vector<std::vector<double>>& x, std::vector<double>& mean,
                         std::vector<double>& se) {
  const std::size_t n = x.size(), t = x.front().size();
  mean.assign(t, 0.0);
  se.assign(t, 0.0);
  for (std::size_t k = 0; k < t; ++k) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = x[i][k];
    const double m = pairwise_sum(col) / static_cast<double>(n);
    mean[k] = m;
    if (n > 1) {
      for (double& c : col) c = (c - m) * (c - m);
      se[k] = std::sqrt(pairwise_sum(col) / static_cast<double>(n - 1) / static_cast<double>(n));
    }
  }
}

}  // namespace detail

/// Typicality estimate of Tr{rho A(t)} (pure scheme) or Tr{A(t) B}/D
/// (two-vector scheme) on a uniform grid, with per-point standard errors.
inline TimeSeries estimate_expectation(const SparseHermitian& a, const Preparation& prep,
                                       const Propagator& evolve, const std::vector<double>& times,
                                       std::size_t samples, std::uint64_t seed,
                                       const EstimateOptions& opts = {}) {
  require(samples >= 1, ErrorKind::input, "need at least one sample");
  require(!times.empty(), ErrorKind::input, "empty time grid");
  require(prep.apply != nullptr, ErrorKind::capability, "preparation is not realizable");
  require(prep.scheme == Scheme::two_vector || opts.normalization == Normalization::ratio || prep.trace,
          ErrorKind::capability, "exact-trace normalization needs Tr{B B^dagger}");
  const std::size_t dim = a.dim();

  auto run = [&](std::size_t i) {
    detail::SampleTrace out;
    out.num.resize(times.size());
    const StateVector phi = random_state(dim, sample_seed(seed, i));
    if (prep.scheme == Scheme::two_vector) {
      StateVector left = phi, right = prep.apply(phi);
      out.norm = 1.0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        if (k > 0) {
          const double dt = times[k] - times[k - 1];
          left = evolve(left, dt);
          right = evolve(right, dt);
        }
        out.num[k] = left.dot(a.apply(right)).real();
      }
    } else {
      StateVector psi = prep.apply(phi);
      out.norm = psi.squaredNorm();
      double t_prev = 0.0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] != t_prev) psi = evolve(psi, times[k] - t_prev);
        t_prev = times[k];
        out.num[k] = psi.dot(a.apply(psi)).real();
      }
    }
    return out;
  };
  const std::vector<detail::SampleTrace> traces = parallel_map(samples, run);

  TimeSeries ts;
  ts.times = times;
  ts.meta.seed = seed;
  std::vector<std::vector<double>> x(samples);
  if (prep.scheme == Scheme::two_vector) {
    for (std::size_t i = 0; i < samples; ++i) x[i] = traces[i].num;
    detail::column_stats(x, ts.values, ts.stderr_);
    return ts;
  }
  if (opts.normalization == Normalization::exact_trace) {
    const double scale = static_cast<double>(dim) / *prep.trace;
    for (std::size_t i = 0; i < samples; ++i) {
      x[i] = traces[i].num;
      for (double& v : x[i]) v *= scale;
    }
    detail::column_stats(x, ts.values, ts.stderr_);
    return ts;
  }
  // ratio of means, delta-method error
  std::vector<double> norms(samples);
  for (std::size_t i = 0; i < samples; ++i) norms[i] = traces[i].norm;
  const double mean_norm = pairwise_sum(norms) / static_cast<double>(samples);
  require(mean_norm > 0.0, ErrorKind::normalization, "prepared states vanish");
  for (std::size_t i = 0; i < samples; ++i) x[i] = traces[i].num;
  std::vector<double> mean_num, unused;
  detail::column_stats(x, mean_num, unused);
  ts.values.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) ts.values[k] = mean_num[k] / mean_norm;
  for (std::size_t i = 0; i < samples; ++i)
    for (std::size_t k = 0; k < times.size(); ++k) x[i][k] = (x[i][k] - ts.values[k] * norms[i]) / mean_norm;
  std::vector<double> resid_mean;
  detail::column_stats(x, resid_mean, ts.stderr_);
  return ts;
}

/// Exact Tr{rho Y} (pure scheme) or Tr{Y B} / D (two-vector scheme) by
/// summation over the standard basis. Small dimensions only.
inline double exact_weighted_trace(const Preparation& prep, const SparseHermitian& y) {
  const auto n = static_cast<Eigen::Index>(y.dim());
  double num = 0.0, den = 0.0;
  StateVector e = StateVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e[i] = 1.0;
    const StateVector b = prep.apply(e);
    if (prep.scheme == Scheme::two_vector) {
      num += y.apply(b)[i].real();
    } else {
      num += b.dot(y.apply(b)).real();
      den += b.squaredNorm();
    }
    e[i] = 0.0;
  }
  if (prep.scheme == Scheme::two_vector) return num / static_cast<double>(n);
  require(den > 0.0, ErrorKind::normalization, "preparation has zero trace");
  return num / den;
}

/// Uniform-bin density on [lower, upper].
struct Histogram {
  double lower = 0.0;
  double upper = 1.0;
  std::vector<double> weights;
  bool normalized = false;

  std::size_t bins() const { return weights.size(); }
  double bin_width() const { return (upper - lower) / static_cast<double>(weights.size()); }
  double center(std::size_t k) const { return lower + (static_cast<double>(k) + 0.5) * bin_width(); }
  std::size_t bin_of(double x) const {
    const auto k = static_cast<long long>(std::floor((x - lower) / bin_width()));
    return static_cast<std::size_t>(std::clamp<long long>(k, 0, static_cast<long long>(bins()) - 1));
  }
  double integral() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s * bin_width();
  }

  /// Rescales so that sum(weight) * bin_width = 1.
  void normalize() {
    double s = 0.0;
    for (double w : weights) s += w;
    require(s > 0.0, ErrorKind::normalization, "histogram has no weight");
    const double f = 1.0 / (s * bin_width());
    for (double& w : weights) w *= f;
    normalized = true;
  }

  /// `bin_center,density` lines with a header.
  void write_csv(std::ostream& os) const {
    os << "bin_center,density\n";
    for (std::size_t k = 0; k < bins(); ++k) os << format_double(center(k)) << ',' << format_double(weights[k]) << '\n';
  }
};

/// Half the L1 distance between two normalized histograms on the same bins.
inline double total_variation(const Histogram& a, const Histogram& b) {
  require(a.bins() == b.bins(), ErrorKind::input, "histograms differ in bin count");
  double s = 0.0;
  for (std::size_t k = 0; k < a.bins(); ++k) s += std::abs(a.weights[k] - b.weights[k]);
  return 0.5 * s * a.bin_width();
}

struct Range {
  double lower = 0.0;
  double upper = 0.0;
};

namespace detail {

inline Range padded_range(double lo, double hi) {
  if (hi > lo) return {lo, hi};
  const double pad = std::max(0.5, 1e-6 * std::abs(lo));
  return {lo - pad, hi + pad};
}

inline Histogram binned(const Eigen::VectorXd& x, const Eigen::VectorXd& w, std::size_t bins, Range r) {
  Histogram h;
  h.lower = r.lower;
  h.upper = r.upper;
  h.weights.assign(bins, 0.0);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] >= r.lower && x[i] <= r.upper) h.weights[h.bin_of(x[i])] += w[i];
  h.normalize();
  return h;
}

}  // namespace detail

enum class SpectralMethod { ed, typicality };

struct HistogramOptions {
  std::optional<Range> range;          // default: [E_min, E_max] (ED) or Lanczos extremes
  std::size_t samples = 20;
  int chebyshev_order = 4096;
  std::size_t ed_cap = kDefaultEdCap;
};

namespace detail {

// Damped Chebyshev moments -> bin weights, negative ringing clipped.
inline Histogram histogram_from_moments(const std::vector<double>& mu, const SpectralBounds& b,
                                        std::size_t bins, Range r) {
  const int order = static_cast<int>(mu.size()) - 1;
  const std::vector<double> g = jackson_damping(order);
  Histogram h;
  h.lower = r.lower;
  h.upper = r.upper;
  h.weights.assign(bins, 0.0);
  for (std::size_t k = 0; k < bins; ++k) {
    const double e1 = r.lower + static_cast<double>(k) * h.bin_width();
    const double e2 = e1 + h.bin_width();
    const std::vector<double> c = indicator_coefficients((e1 - b.center()) / b.half_width(),
                                                         (e2 - b.center()) / b.half_width(), order);
    double w = 0.5 * c[0] * g[0] * mu[0];
    for (int n = 1; n <= order; ++n) w += c[n] * g[n] * mu[n];
    h.weights[k] = std::max(w, 0.0);
  }
  h.normalize();
  return h;
}

// E_phi <B phi| T_n |B phi> over `samples` Haar vectors, deterministic order.
inline std::vector<double> sampled_moments(const SparseHermitian& h, const SpectralBounds& b,
                                           const LinearMap& prep, int order, std::size_t samples,
                                           std::uint64_t seed) {
  const auto per_sample = parallel_map(samples, [&](std::size_t i) {
    const StateVector psi = prep(random_state(h.dim(), sample_seed(seed, i)));
    const std::vector<Complex> mu = chebyshev_moments(h, b, psi, psi, order);
    Eigen::VectorXd re(order + 1);
    for (int n = 0; n <= order; ++n) re[n] = mu[n].real();
    return re;
  });
  const Eigen::VectorXd total = pairwise_sum(per_sample);
  return std::vector<double>(total.data(), total.data() + total.size());
}

inline SpectralBounds typicality_bounds(const SparseHermitian& h, const std::optional<Range>& r) {
  SpectralBounds b = estimate_spectral_bounds(h);
  if (r) {
    const double w = r->upper - r->lower;
    b.lower = std::min(b.lower, r->lower - 0.05 * w);
    b.upper = std::max(b.upper, r->upper + 0.05 * w);
  }
  return b;
}

inline Range ritz_range(const SparseHermitian& h) {
  const SpectralBounds p = estimate_spectral_bounds(h, 100, 0.0);
  return padded_range(p.lower, p.upper);
}

}  // namespace detail

/// Normalized density of states.
inline Histogram dos_histogram(const SparseHermitian& h, std::size_t bins, SpectralMethod method,
                               std::uint64_t seed, const HistogramOptions& opts = {}) {
  require(bins >= 10, ErrorKind::input, "need at least 10 bins");
  if (method == SpectralMethod::ed) {
    const Spectrum s = exact_diag(h, false, opts.ed_cap);
    const Range r = opts.range.value_or(detail::padded_range(s.eigenvalues[0], s.eigenvalues[s.eigenvalues.size() - 1]));
    return detail::binned(s.eigenvalues, Eigen::VectorXd::Ones(s.eigenvalues.size()), bins, r);
  }
  const SpectralBounds b = detail::typicality_bounds(h, opts.range);
  const Range r = opts.range.value_or(detail::ritz_range(h));
  const auto mu = detail::sampled_moments(h, b, [](const StateVector& v) { return v; },
                                          opts.chebyshev_order, opts.samples, seed);
  return detail::histogram_from_moments(mu, b, bins, r);
}

/// Normalized level-population density of rho = B B^dagger / Tr in the eigenbasis of h.
inline Histogram ldos_histogram(const Preparation& prep, const SparseHermitian& h, std::size_t bins,
                                SpectralMethod method, std::uint64_t seed, const HistogramOptions& opts = {}) {
  require(bins >= 10, ErrorKind::input, "need at least 10 bins");
  require(prep.scheme == Scheme::pure, ErrorKind::specification,
          "LDOS needs a density-matrix preparation");
  if (method == SpectralMethod::ed) {
    const Spectrum s = exact_diag(h, true, opts.ed_cap);
    const auto n = static_cast<Eigen::Index>(s.dim());
    const std::vector<double> w = parallel_map(s.dim(), [&](std::size_t k) {
      return prep.adjoint(s.vector(k)).squaredNorm();
    });
    const Range r = opts.range.value_or(detail::padded_range(s.eigenvalues[0], s.eigenvalues[n - 1]));
    return detail::binned(s.eigenvalues, Eigen::Map<const Eigen::VectorXd>(w.data(), n), bins, r);
  }
  const SpectralBounds b = detail::typicality_bounds(h, opts.range);
  const Range r = opts.range.value_or(detail::ritz_range(h));
  const auto mu = detail::sampled_moments(h, b, prep.apply, opts.chebyshev_order, opts.samples, seed);
  return detail::histogram_from_moments(mu, b, bins, r);
}

}  // namespace typpert
