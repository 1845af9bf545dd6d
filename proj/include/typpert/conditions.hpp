#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "typpert/error.hpp"
#include "typpert/format.hpp"
#include "typpert/kernels.hpp"
#include "typpert/parallel.hpp"
#include "typpert/sparse.hpp"
#include "typpert/spectrum.hpp"
#include "typpert/typicality.hpp"

namespace typpert {

/// P V P - (Tr{PVP} / Tr{P}) P, expressed in the window eigenbasis (rank x rank).
inline DenseMatrix windowed_traceless(const SparseHermitian& v, const WindowProjector& p,
                                      std::size_t cap = kDefaultEdCap) {
  require(p.rank() >= 2, ErrorKind::window, "window holds fewer than two levels");
  require(p.rank() <= cap, ErrorKind::capacity, "window rank exceeds the diagonalization cap");
  const Eigen::MatrixXcd u = p.basis_vectors();
  const Eigen::MatrixXcd vu = v.matrix() * u;
  DenseMatrix w = u.adjoint() * vu;
  w = 0.5 * (w + w.adjoint()).eval();
  const Complex shift = w.trace() / static_cast<double>(w.rows());
  w.diagonal().array() -= shift.real();
  w.diagonal().imag().setZero();
  return w;
}

/// Independent fair sign per unordered pair {m, n}, diagonal included.
inline DenseMatrix sign_randomize(const DenseMatrix& v, std::uint64_t seed) {
  require(v.rows() == v.cols(), ErrorKind::input, "matrix must be square");
  std::mt19937_64 rng(seed);
  DenseMatrix out = v;
  for (Eigen::Index n = 0; n < v.cols(); ++n)
    for (Eigen::Index m = 0; m <= n; ++m) {
      if ((rng() >> 63) == 0) continue;
      out(m, n) = -v(m, n);
      out(n, m) = -v(n, m);
    }
  return out;
}

/// sup |F_a - F_b| between the empirical CDFs of two samples.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), ErrorKind::input, "KS statistic of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline std::vector<double> eigenvalues_of(const DenseMatrix& a) {
  const Spectrum s = exact_diag_dense(a, false);
  return std::vector<double>(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size());
}

struct SpectralComparison {
  double ks_statistic = 0.0;
  std::vector<double> eigenvalues_a, eigenvalues_b;
  Histogram histogram_a, histogram_b;  // shared bins
};

inline SpectralComparison spectral_compare(const DenseMatrix& a, const DenseMatrix& b, std::size_t bins = 50,
                                           std::size_t cap = kDefaultEdCap) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::input, "spectral_compare dimension mismatch");
  require(static_cast<std::size_t>(a.rows()) <= cap, ErrorKind::capacity, "dimension exceeds the cap");
  SpectralComparison c;
  c.eigenvalues_a = eigenvalues_of(a);
  c.eigenvalues_b = eigenvalues_of(b);
  c.ks_statistic = ks_statistic(c.eigenvalues_a, c.eigenvalues_b);
  const double lo = std::min(c.eigenvalues_a.front(), c.eigenvalues_b.front());
  const double hi = std::max(c.eigenvalues_a.back(), c.eigenvalues_b.back());
  const Range r = detail::padded_range(lo, hi);
  const auto n = static_cast<Eigen::Index>(c.eigenvalues_a.size());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  c.histogram_a = detail::binned(Eigen::Map<const Eigen::VectorXd>(c.eigenvalues_a.data(), n), ones, bins, r);
  c.histogram_b = detail::binned(Eigen::Map<const Eigen::VectorXd>(c.eigenvalues_b.data(), n), ones, bins, r);
  return c;
}

/// Real symmetric Gaussian matrix: off-diagonal variance `variance`, diagonal 2 x variance.
inline DenseMatrix goe_matrix(std::size_t dim, std::uint64_t seed, double variance = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double sd = std::sqrt(variance);
  const auto n = static_cast<Eigen::Index>(dim);
  DenseMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double x = (i == j ? std::sqrt(2.0) : 1.0) * sd * normal(rng);
      g(i, j) = x;
      g(j, i) = x;
    }
  return g;
}

/// `quantile` of the KS statistic between a GOE(dim) spectrum and that of its
/// sign-randomized copy, over `realizations` draws.
inline double ks_null_threshold(std::size_t dim, std::size_t realizations, std::uint64_t seed,
                                double quantile = 0.95) {
  require(realizations >= 1, ErrorKind::input, "need at least one realization");
  std::vector<double> ks = parallel_map(realizations, [&](std::size_t i) {
    const std::uint64_t s = sample_seed(seed, i);
    const DenseMatrix g = goe_matrix(dim, s);
    return ks_statistic(eigenvalues_of(g), eigenvalues_of(sign_randomize(g, splitmix64(s))));
  });
  std::sort(ks.begin(), ks.end());
  const auto k = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(ks.size()))) - 1;
  return ks[std::min(k, ks.size() - 1)];
}

/// (2 / (pi R^2)) sqrt(R^2 - E^2) on [-R, R].
inline double wigner_semicircle(double e, double radius) {
  require(radius > 0.0, ErrorKind::input, "radius must be > 0");
  if (std::abs(e) >= radius) return 0.0;
  return 2.0 / (std::numbers::pi * radius * radius) * std::sqrt(radius * radius - e * e);
}

/// R = 2 sqrt(<E^2>) matches the semicircle's second moment R^2 / 4.
inline double semicircle_radius(const std::vector<double>& eigenvalues) {
  require(!eigenvalues.empty(), ErrorKind::input, "no eigenvalues");
  double m2 = 0.0;
  for (double e : eigenvalues) m2 += e * e;
  return 2.0 * std::sqrt(m2 / static_cast<double>(eigenvalues.size()));
}

/// dE sqrt(L_small / L_large)
inline double scale_window(double half_width, int l_from, int l_to) {
  require(l_from > 0 && l_to > 0, ErrorKind::input, "sizes must be positive");
  return half_width * std::sqrt(static_cast<double>(l_from) / static_cast<double>(l_to));
}

enum class ProfileFamily { exponential, lorentzian };

inline std::string to_string(ProfileFamily f) { return f == ProfileFamily::exponential ? "exponential" : "lorentzian"; }

inline double profile_value(ProfileFamily f, double omega, double sigma2_0, double delta_v) {
  return f == ProfileFamily::exponential ? exponential_profile(omega, sigma2_0, delta_v)
                                         : lorentz_profile(omega, sigma2_0, delta_v);
}

struct ProfileFit {
  ProfileFamily family = ProfileFamily::exponential;
  double sigma2_0 = 0.0;
  double delta_v = 0.0;
  double residual = 0.0;  // sum (f - y)^2 * bin width over the fitted bins
  std::size_t bins_used = 0;
};

/// sigma^2(omega) on uniform bins over [0, omega_max].
struct ProfileEstimate {
  double bin_width = 0.0;
  std::vector<double> sigma2;         // mean |V_mu nu|^2 per bin
  std::vector<std::size_t> counts;    // matrix elements per bin
  std::vector<double> coarse;         // moving average of sigma2
  std::vector<bool> excluded;         // near-diagonal bins left out of fits
  std::size_t dropped = 0;            // pairs with omega beyond the last bin
  std::optional<ProfileFit> exponential, lorentzian;

  std::size_t bins() const { return sigma2.size(); }
  double omega(std::size_t k) const { return (static_cast<double>(k) + 0.5) * bin_width; }

  void write_csv(std::ostream& os) const {
    os << "omega,sigma2,coarse,count,excluded\n";
    for (std::size_t k = 0; k < bins(); ++k)
      os << format_double(omega(k)) << ',' << format_double(sigma2[k]) << ',' << format_double(coarse[k]) << ','
         << counts[k] << ',' << (excluded[k] ? 1 : 0) << '\n';
  }
};

struct ProfileOptions {
  std::size_t bins = 40;
  std::optional<double> omega_max;     // default: largest gap among the selected levels
  std::optional<LevelRange> levels;    // default: all levels
  std::size_t smoothing = 5;           // moving-average window in bins
  std::size_t excluded_bins = 3;       // omega below this many bin widths is not fitted
};

/// Centered moving average with a window of `w` bins, shrunk at the edges.
inline std::vector<double> moving_average(const std::vector<double>& y, std::size_t w) {
  const auto n = static_cast<long long>(y.size());
  const long long h = static_cast<long long>(w / 2);
  std::vector<double> out(y.size());
  for (long long k = 0; k < n; ++k) {
    const long long a = std::max(0LL, k - h), b = std::min(n - 1, k + h);
    double s = 0.0;
    for (long long j = a; j <= b; ++j) s += y[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(k)] = s / static_cast<double>(b - a + 1);
  }
  return out;
}

/// Bins |V_mu nu|^2 of V in the H0 eigenbasis by omega = |E_mu - E_nu|, all
/// ordered pairs of the selected levels (diagonal included).
inline ProfileEstimate perturbation_profile(const SparseHermitian& v, const Spectrum& spec0,
                                            const ProfileOptions& opts = {}) {
  require(spec0.has_vectors(), ErrorKind::input, "profile needs eigenvectors of H0");
  require(opts.bins >= 1, ErrorKind::input, "need at least one bin");
  const LevelRange r = opts.levels.value_or(LevelRange{0, spec0.dim()});
  require(r.count >= 1 && r.first + r.count <= spec0.dim(), ErrorKind::input, "level range out of bounds");
  const auto f = static_cast<Eigen::Index>(r.first), n = static_cast<Eigen::Index>(r.count);
  const Eigen::VectorXd e = spec0.eigenvalues.segment(f, n);

  Eigen::MatrixXd mag2;
  if (spec0.real() && v.is_real()) mag2 = spec0.transform_real(v, r.first, r.count).array().square();
  else mag2 = spec0.transform(v, r.first, r.count).cwiseAbs2();

  ProfileEstimate p;
  const double omega_max = opts.omega_max.value_or(e[n - 1] - e[0]);
  const double width = omega_max > 0.0 ? omega_max / static_cast<double>(opts.bins) : 1.0;
  p.bin_width = width;
  std::vector<double> sum(opts.bins, 0.0);
  p.counts.assign(opts.bins, 0);
  for (Eigen::Index b = 0; b < n; ++b)
    for (Eigen::Index a = 0; a < n; ++a) {
      const double w = std::abs(e[a] - e[b]);
      auto k = static_cast<std::size_t>(w / width);
      if (k == opts.bins && w <= omega_max) k = opts.bins - 1;  // omega_max itself
      if (k >= opts.bins) {
        ++p.dropped;
        continue;
      }
      sum[k] += mag2(a, b);
      ++p.counts[k];
    }
  p.sigma2.resize(opts.bins);
  for (std::size_t k = 0; k < opts.bins; ++k)
    p.sigma2[k] = p.counts[k] ? sum[k] / static_cast<double>(p.counts[k]) : 0.0;
  p.coarse = moving_average(p.sigma2, opts.smoothing);
  p.excluded.assign(opts.bins, false);
  for (std::size_t k = 0; k < std::min(opts.excluded_bins, opts.bins); ++k) p.excluded[k] = true;
  return p;
}

struct ProfileFitOptions {
  bool use_coarse = false;
  std::size_t min_bins = 10;
};

/// Least-squares fit of sigma2_0 * shape(omega / delta_v). For fixed delta_v
/// the amplitude is linear and solved exactly; delta_v by log-grid scan and
/// golden-section refinement.
inline ProfileFit fit_profile(const ProfileEstimate& p, ProfileFamily family, const ProfileFitOptions& opts = {}) {
  std::vector<double> x, y;
  const std::vector<double>& src = opts.use_coarse ? p.coarse : p.sigma2;
  for (std::size_t k = 0; k < p.bins(); ++k)
    if (!p.excluded[k] && p.counts[k] > 0) {
      x.push_back(p.omega(k));
      y.push_back(src[k]);
    }
  require(x.size() >= opts.min_bins, ErrorKind::input,
          "only " + std::to_string(x.size()) + " usable bins for the profile fit");
  require(std::any_of(y.begin(), y.end(), [](double v) { return v != 0.0; }), ErrorKind::fit_failure,
          "profile is identically zero");

  auto solve = [&](double log_dv, double& amp) {
    const double dv = std::exp(log_dv);
    double fy = 0.0, ff = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double s = profile_value(family, x[i], 1.0, dv);
      fy += s * y[i];
      ff += s * s;
    }
    amp = ff > 0.0 ? std::max(fy / ff, 0.0) : 0.0;
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = amp * profile_value(family, x[i], 1.0, dv) - y[i];
      r += d * d;
    }
    return r;
  };

  const double lo = std::log(p.bin_width * 1e-2), hi = std::log(x.back() * 1e3);
  const int grid = 600;
  double best = INFINITY, best_log = lo, amp = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double l = lo + (hi - lo) * i / grid;
    const double r = solve(l, amp);
    if (r < best) {
      best = r;
      best_log = l;
    }
  }
  const double step = (hi - lo) / grid;
  double a = best_log - step, b = best_log + step;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = solve(c, amp), fd = solve(d, amp);
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = solve(c, amp);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = solve(d, amp);
    }
  }
  ProfileFit fit;
  fit.family = family;
  const double l = 0.5 * (a + b);
  fit.residual = solve(l, fit.sigma2_0) * p.bin_width;
  fit.delta_v = std::exp(l);
  fit.bins_used = x.size();
  return fit;
}

/// sqrt(Tr{H^2} / D)
inline double energy_scale(const SparseHermitian& h) {
  require(h.dim() > 0, ErrorKind::input, "empty operator");
  return h.frobenius_norm() / std::sqrt(static_cast<double>(h.dim()));
}

struct SignRandomizationResult {
  EnergyWindow window;
  std::size_t rank = 0;
  double ks = 0.0;
  double null_threshold = 0.0;  // 95th percentile of the GOE(rank) self-test
  double radius = 0.0;          // semicircle radius from the second moment
  SpectralComparison comparison;
  bool correlated() const { return ks > null_threshold; }
};

/// Windowed traceless V against its sign-randomized copy, with a null
/// threshold calibrated on GOE matrices of the same rank.
inline SignRandomizationResult sign_randomization_check(const SparseHermitian& v,
                                                        std::shared_ptr<const Spectrum> spec0,
                                                        const EnergyWindow& window, std::uint64_t seed,
                                                        std::size_t null_realizations = 200, std::size_t bins = 50,
                                                        std::size_t cap = kDefaultEdCap) {
  const WindowProjector p(std::move(spec0), window);
  const DenseMatrix w = windowed_traceless(v, p, cap);
  SignRandomizationResult r;
  r.window = window;
  r.rank = p.rank();
  r.comparison = spectral_compare(w, sign_randomize(w, seed), bins, cap);
  r.ks = r.comparison.ks_statistic;
  r.null_threshold = ks_null_threshold(r.rank, null_realizations, splitmix64(seed ^ 0x6f65ULL));
  r.radius = semicircle_radius(r.comparison.eigenvalues_a);
  return r;
}

}  // namespace typpert
