#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "typpert/error.hpp"
#include "typpert/sparse.hpp"

namespace typpert {

struct KrylovOptions {
  int order = 30;            // Krylov dimension m_K
  double tolerance = 1e-10;  // per-step error bound relative to |psi|
  int max_halvings = 60;     // dt may shrink by at most 2^-max_halvings
};

struct PropagationStats {
  int substeps = 0;
  double error_estimate = 0.0;  // sum of accepted per-substep estimates
};

namespace detail {

/// Lanczos with full reorthogonalization. Returns the number of basis
/// vectors built (< order on an invariant subspace).
inline int lanczos_basis(const SparseHermitian& h, const StateVector& start, int order,
                         Eigen::MatrixXcd& q, std::vector<double>& alpha, std::vector<double>& beta) {
  const auto n = static_cast<Eigen::Index>(h.dim());
  const int m = static_cast<int>(std::min<Eigen::Index>(order, n));
  q.resize(n, m + 1);
  alpha.assign(m, 0.0);
  beta.assign(m, 0.0);
  q.col(0) = start / start.norm();
  StateVector w(n);
  const double scale = std::max(1.0, h.max_row_sum());
  for (int j = 0; j < m; ++j) {
    h.apply(q.col(j), w);
    alpha[j] = q.col(j).dot(w).real();
    // two passes of classical Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass) {
      const StateVector coeff = q.leftCols(j + 1).adjoint() * w;
      w.noalias() -= q.leftCols(j + 1) * coeff;
    }
    beta[j] = w.norm();
    if (beta[j] <= 1e-13 * scale) {
      alpha.resize(j + 1);
      beta.resize(j + 1);
      beta[j] = 0.0;
      return j + 1;
    }
    q.col(j + 1) = w / beta[j];
  }
  return m;
}

}  // namespace detail

/// psi(t + dt) = exp(-i H dt) psi via a Lanczos basis of dimension
/// `order`; dt is split into halved sub-steps whenever the a posteriori
/// error estimate exceeds the tolerance.
inline StateVector krylov_propagate(const SparseHermitian& h, const StateVector& psi, double dt,
                                    const KrylovOptions& opts = {}, PropagationStats* stats = nullptr) {
  require(std::isfinite(dt), ErrorKind::input, "time step must be finite");
  require(opts.order >= 2, ErrorKind::input, "Krylov order must be at least 2");
  require(static_cast<std::size_t>(psi.size()) == h.dim(), ErrorKind::input, "state dimension mismatch");
  if (dt == 0.0) return psi;
  const double norm = psi.norm();
  if (norm == 0.0) return psi;

  StateVector current = psi;
  double remaining = dt;
  double step = dt;
  Eigen::MatrixXcd q;
  std::vector<double> alpha, beta;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;

  while (remaining != 0.0) {
    const int m = detail::lanczos_basis(h, current, opts.order, q, alpha, beta);
    Eigen::VectorXd diag(m), off(std::max(m - 1, 0));
    for (int j = 0; j < m; ++j) diag[j] = alpha[j];
    for (int j = 0; j + 1 < m; ++j) off[j] = beta[j];
    tri.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    const Eigen::VectorXd& theta = tri.eigenvalues();
    const Eigen::MatrixXd& z = tri.eigenvectors();
    const double residual_beta = beta[m - 1];

    if (std::abs(step) > std::abs(remaining)) step = remaining;
    int halvings = 0;
    Eigen::VectorXcd c(m);
    double err = 0.0;
    for (;;) {
      for (int k = 0; k < m; ++k) c[k] = std::exp(Complex(0.0, -theta[k] * step)) * z(0, k);
      c = z.cast<Complex>() * c;
      err = residual_beta * std::abs(c[m - 1]);
      if (err <= opts.tolerance) break;
      if (++halvings > opts.max_halvings)
        throw Error(ErrorKind::propagation,
                    "Krylov step did not converge; achieved residual " + std::to_string(err));
      step *= 0.5;
    }
    current = norm * (q.leftCols(m) * c);
    remaining -= step;
    if (std::abs(remaining) < 1e-15 * std::abs(dt)) remaining = 0.0;
    if (stats) {
      ++stats->substeps;
      stats->error_estimate += err;
    }
    // try a larger step again next time
    if (halvings == 0) step = remaining;
    else step *= 2.0;
  }
  return current;
}

struct SpectralBounds {
  double lower = 0.0;
  double upper = 0.0;
  double center() const { return 0.5 * (upper + lower); }
  double half_width() const { return 0.5 * (upper - lower); }
  bool contains(double e) const { return e >= lower && e <= upper; }
};

/// Extremal Ritz values of `iterations` Lanczos steps, padded on both
/// sides by `padding` times the estimated width.
inline SpectralBounds estimate_spectral_bounds(const SparseHermitian& h, int iterations = 100,
                                               double padding = 0.05, std::uint64_t seed = 0x5eed) {
  require(h.dim() > 0, ErrorKind::bounds, "empty operator");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  StateVector start(static_cast<Eigen::Index>(h.dim()));
  for (Eigen::Index i = 0; i < start.size(); ++i) start[i] = Complex(normal(rng), normal(rng));
  Eigen::MatrixXcd q;
  std::vector<double> alpha, beta;
  const int m = detail::lanczos_basis(h, start, iterations, q, alpha, beta);
  Eigen::VectorXd diag(m), off(std::max(m - 1, 0));
  for (int j = 0; j < m; ++j) diag[j] = alpha[j];
  for (int j = 0; j + 1 < m; ++j) off[j] = beta[j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  tri.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  const double lo = tri.eigenvalues()[0];
  const double hi = tri.eigenvalues()[m - 1];
  require(std::isfinite(lo) && std::isfinite(hi), ErrorKind::bounds, "non-finite Ritz values");
  double width = hi - lo;
  if (width <= 0.0) width = std::max(1.0, std::abs(hi));
  return {lo - padding * width, hi + padding * width};
}

}  // namespace typpert
