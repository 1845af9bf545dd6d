#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "typpert/error.hpp"
#include "typpert/format.hpp"
#include "typpert/models.hpp"
#include "typpert/sparse.hpp"

namespace typpert {

inline constexpr std::size_t kDefaultEdCap = 20000;

/// Eigenvalues in ascending order and, optionally, the orthonormal
/// eigenvectors as columns. Real symmetric input keeps real vectors.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  std::optional<Eigen::MatrixXd> real_vectors;
  std::optional<Eigen::MatrixXcd> complex_vectors;

  std::size_t dim() const { return static_cast<std::size_t>(eigenvalues.size()); }
  bool has_vectors() const { return real_vectors.has_value() || complex_vectors.has_value(); }
  bool real() const { return real_vectors.has_value(); }

  StateVector vector(std::size_t k) const {
    require_vectors();
    const auto c = static_cast<Eigen::Index>(k);
    if (real_vectors) return real_vectors->col(c).cast<Complex>();
    return complex_vectors->col(c);
  }

  /// Columns [first, first + count) of the eigenvector matrix.
  Eigen::MatrixXcd vectors(std::size_t first, std::size_t count) const {
    require_vectors();
    const auto f = static_cast<Eigen::Index>(first), n = static_cast<Eigen::Index>(count);
    if (real_vectors) return real_vectors->middleCols(f, n).cast<Complex>();
    return complex_vectors->middleCols(f, n);
  }

  /// Coefficients U^dagger psi.
  StateVector to_eigenbasis(const StateVector& psi) const {
    require_vectors();
    if (real_vectors) {
      StateVector out(psi.size());
      out.real() = real_vectors->transpose() * psi.real();
      out.imag() = real_vectors->transpose() * psi.imag();
      return out;
    }
    return complex_vectors->adjoint() * psi;
  }

  /// U c.
  StateVector from_eigenbasis(const StateVector& c) const {
    require_vectors();
    if (real_vectors) {
      StateVector out(c.size());
      out.real() = *real_vectors * c.real();
      out.imag() = *real_vectors * c.imag();
      return out;
    }
    return *complex_vectors * c;
  }

  /// f(H) psi = U f(E) U^dagger psi.
  StateVector apply_function(const std::function<double(double)>& f, const StateVector& psi) const {
    StateVector c = to_eigenbasis(psi);
    for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= f(eigenvalues[k]);
    return from_eigenbasis(c);
  }

  /// U_S^dagger A U_S for the contiguous eigenvector block S = [first, first + count).
  Eigen::MatrixXcd transform(const SparseHermitian& a, std::size_t first, std::size_t count) const {
    const Eigen::MatrixXcd u = vectors(first, count);
    const Eigen::MatrixXcd au = a.matrix() * u;
    return u.adjoint() * au;
  }
  Eigen::MatrixXcd transform(const SparseHermitian& a) const { return transform(a, 0, dim()); }

  /// Real-arithmetic variant for real vectors and a real operator.
  Eigen::MatrixXd transform_real(const SparseHermitian& a, std::size_t first, std::size_t count) const {
    require(real_vectors.has_value(), ErrorKind::input, "transform_real needs real eigenvectors");
    const Eigen::SparseMatrix<double, Eigen::RowMajor> ar = a.matrix().real();
    const auto f = static_cast<Eigen::Index>(first), n = static_cast<Eigen::Index>(count);
    const Eigen::MatrixXd au = ar * real_vectors->middleCols(f, n);
    return real_vectors->middleCols(f, n).transpose() * au;
  }

  /// One eigenvalue per line.
  void write_eigenvalues(std::ostream& os) const {
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) os << format_double(eigenvalues[k]) << '\n';
  }

 private:
  void require_vectors() const {
    require(has_vectors(), ErrorKind::input, "spectrum was computed without eigenvectors");
  }
};

namespace detail {

inline Spectrum syevr_real(Eigen::MatrixXd a, bool want_vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  Spectrum s;
  s.eigenvalues.resize(n);
  if (n == 0) return s;
  Eigen::MatrixXd z;
  if (want_vectors) z.resize(n, n);
  lapack_int found = 0;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'A', 'L', n,
                                         a.data(), n, 0.0, 0.0, 0, 0, 0.0, &found,
                                         s.eigenvalues.data(), want_vectors ? z.data() : nullptr, n,
                                         support.data());
  require(info == 0 && found == n, ErrorKind::input, "LAPACK dsyevr failed, info " + std::to_string(info));
  if (want_vectors) s.real_vectors = std::move(z);
  return s;
}

inline Spectrum heevr_complex(Eigen::MatrixXcd a, bool want_vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  Spectrum s;
  s.eigenvalues.resize(n);
  if (n == 0) return s;
  Eigen::MatrixXcd z;
  if (want_vectors) z.resize(n, n);
  lapack_int found = 0;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'A', 'L', n,
                                         a.data(), n, 0.0, 0.0, 0, 0, 0.0, &found,
                                         s.eigenvalues.data(), want_vectors ? z.data() : nullptr, n,
                                         support.data());
  require(info == 0 && found == n, ErrorKind::input, "LAPACK zheevr failed, info " + std::to_string(info));
  if (want_vectors) s.complex_vectors = std::move(z);
  return s;
}

}  // namespace detail

/// Full spectrum of a dense Hermitian matrix (LAPACK ?syevr / ?heevr).
/// Real input keeps real eigenvectors.
inline Spectrum exact_diag_dense(const Eigen::MatrixXcd& a, bool want_vectors) {
  require(a.rows() == a.cols(), ErrorKind::input, "matrix must be square");
  if (a.size() > 0 && a.imag().cwiseAbs().maxCoeff() == 0.0)
    return detail::syevr_real(a.real(), want_vectors);
  return detail::heevr_complex(a, want_vectors);
}

/// Exact diagonalization of a sparse Hermitian operator up to `cap` states.
inline Spectrum exact_diag(const SparseHermitian& h, bool want_vectors,
                           std::size_t cap = kDefaultEdCap) {
  require(h.dim() <= cap, ErrorKind::capacity,
          "dimension " + std::to_string(h.dim()) + " exceeds the exact-diagonalization cap " +
              std::to_string(cap));
  // real operators never materialize a complex dense copy
  if (h.is_real()) return detail::syevr_real(Eigen::MatrixXd(h.matrix().real()), want_vectors);
  return detail::heevr_complex(h.to_dense(), want_vectors);
}

/// Index range [first, first + count) of eigenvalues with |E - center| < half_width.
struct LevelRange {
  std::size_t first = 0;
  std::size_t count = 0;
};

inline LevelRange levels_in_window(const Eigen::VectorXd& sorted, const EnergyWindow& w) {
  if (w.unbounded()) return {0, static_cast<std::size_t>(sorted.size())};
  const double* b = sorted.data();
  const double* e = b + sorted.size();
  // strict inequality on both ends
  const double* lo = std::upper_bound(b, e, w.center - w.half_width);
  const double* hi = std::lower_bound(b, e, w.center + w.half_width);
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo - b), static_cast<std::size_t>(hi - lo)};
}

/// Projector onto the eigenvectors of H0 with |E - E_c| < dE, realized
/// through the exact eigenbasis. Idempotent and Hermitian by construction.
class WindowProjector {
 public:
  WindowProjector(std::shared_ptr<const Spectrum> spectrum, EnergyWindow window)
      : spectrum_(std::move(spectrum)), window_(window) {
    require(window.half_width > 0.0, ErrorKind::input, "window half-width must be positive");
    range_ = levels_in_window(spectrum_->eigenvalues, window);
    require(range_.count > 0, ErrorKind::empty_window,
            "no eigenvalue within " + format_short(window.half_width) + " of " +
                format_short(window.center));
    if (!is_identity()) {
      require(spectrum_->has_vectors(), ErrorKind::input, "window projector needs eigenvectors");
      basis_ = spectrum_->vectors(range_.first, range_.count);
    }
  }

  bool is_identity() const { return range_.count == spectrum_->dim(); }
  std::size_t rank() const { return range_.count; }
  LevelRange range() const { return range_; }
  const EnergyWindow& window() const { return window_; }
  const Spectrum& spectrum() const { return *spectrum_; }

  StateVector apply(const StateVector& psi) const {
    if (is_identity()) return psi;
    return basis_ * (basis_.adjoint() * psi);
  }

  /// Orthonormal columns spanning the window (D x rank).
  Eigen::MatrixXcd basis_vectors() const {
    if (is_identity()) return spectrum_->vectors(0, spectrum_->dim());
    return basis_;
  }

  /// Tr{P X P} for a Hermitian X.
  double trace_of(const SparseHermitian& x) const {
    if (is_identity()) return x.trace().real();
    const Eigen::MatrixXcd xb = x.matrix() * basis_;
    return (basis_.adjoint() * xb).trace().real();
  }

  LinearMap handle() const {
    return [self = *this](const StateVector& psi) { return self.apply(psi); };
  }

 private:
  std::shared_ptr<const Spectrum> spectrum_;
  EnergyWindow window_;
  LevelRange range_;
  Eigen::MatrixXcd basis_;
};

/// Mean level spacing (E_max - E_min) / (N - 1) over the levels in `window`.
inline double mean_level_spacing(const Spectrum& spec, std::optional<EnergyWindow> window = std::nullopt) {
  const LevelRange r = levels_in_window(spec.eigenvalues, window.value_or(EnergyWindow{}));
  require(r.count >= 2, ErrorKind::window, "need at least two levels to define a spacing");
  const auto f = static_cast<Eigen::Index>(r.first);
  const auto l = static_cast<Eigen::Index>(r.first + r.count - 1);
  return (spec.eigenvalues[l] - spec.eigenvalues[f]) / static_cast<double>(r.count - 1);
}

/// Contiguous block holding the central `fraction` of the levels.
inline LevelRange central_levels(std::size_t dim, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::input, "fraction must lie in (0, 1]");
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(dim)));
  return {(dim - count) / 2, count};
}

}  // namespace typpert
