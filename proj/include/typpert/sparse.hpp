#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "typpert/basis.hpp"
#include "typpert/error.hpp"
#include "typpert/format.hpp"

namespace typpert {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// Applies a linear operator to a state (projector handles, filters, ...).
using LinearMap = std::function<StateVector(const StateVector&)>;

/// Compressed sparse Hermitian operator on a sector basis. Immutable after
/// construction; copies share nothing mutable and may be read concurrently.
class SparseHermitian {
 public:
  SparseHermitian() = default;

  SparseHermitian(SparseMatrix m, std::shared_ptr<const SectorBasis> basis = nullptr)
      : matrix_(std::move(m)), basis_(std::move(basis)) {
    require(matrix_.rows() == matrix_.cols(), ErrorKind::input, "operator must be square");
    matrix_.makeCompressed();
  }

  static SparseHermitian from_dense(const DenseMatrix& d, double drop_below = 0.0) {
    std::vector<Eigen::Triplet<Complex>> t;
    for (Eigen::Index r = 0; r < d.rows(); ++r)
      for (Eigen::Index c = 0; c < d.cols(); ++c)
        if (std::abs(d(r, c)) > drop_below) t.emplace_back(r, c, d(r, c));
    SparseMatrix m(d.rows(), d.cols());
    m.setFromTriplets(t.begin(), t.end());
    return SparseHermitian(std::move(m));
  }

  static SparseHermitian diagonal(const Eigen::VectorXd& diag,
                                  std::shared_ptr<const SectorBasis> basis = nullptr) {
    SparseMatrix m(diag.size(), diag.size());
    std::vector<Eigen::Triplet<Complex>> t;
    for (Eigen::Index i = 0; i < diag.size(); ++i)
      if (diag[i] != 0.0) t.emplace_back(i, i, diag[i]);
    m.setFromTriplets(t.begin(), t.end());
    return SparseHermitian(std::move(m), std::move(basis));
  }

  static SparseHermitian identity(std::size_t dim,
                                  std::shared_ptr<const SectorBasis> basis = nullptr) {
    return diagonal(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim)), std::move(basis));
  }

  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t nnz() const { return static_cast<std::size_t>(matrix_.nonZeros()); }
  const SparseMatrix& matrix() const { return matrix_; }
  const std::shared_ptr<const SectorBasis>& basis() const { return basis_; }

  StateVector apply(const StateVector& v) const { return matrix_ * v; }
  void apply(const StateVector& v, StateVector& out) const { out.noalias() = matrix_ * v; }

  DenseMatrix to_dense() const { return DenseMatrix(matrix_); }

  bool is_real() const {
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it)
        if (it.value().imag() != 0.0) return false;
    return true;
  }

  bool is_diagonal() const {
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it)
        if (it.row() != it.col() && it.value() != Complex{}) return false;
    return true;
  }

  Eigen::VectorXd real_diagonal() const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(matrix_.rows());
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it)
        if (it.row() == it.col()) d[it.row()] += it.value().real();
    return d;
  }

  Complex trace() const {
    Complex t{};
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it)
        if (it.row() == it.col()) t += it.value();
    return t;
  }

  /// max |A_mn - conj(A_nm)| over stored entries.
  double hermiticity_error() const {
    const SparseMatrix adj = matrix_.adjoint();
    const SparseMatrix diff = matrix_ - adj;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
        worst = std::max(worst, std::abs(it.value()));
    return worst;
  }

  double frobenius_norm() const { return matrix_.norm(); }

  /// Upper bound on the spectral radius (max absolute row sum).
  double max_row_sum() const {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
      double s = 0.0;
      for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) s += std::abs(it.value());
      worst = std::max(worst, s);
    }
    return worst;
  }

  /// this + scale * other; both must live on the same basis dimension.
  SparseHermitian plus(const SparseHermitian& other, double scale = 1.0) const {
    require(dim() == other.dim(), ErrorKind::input, "dimension mismatch in operator sum");
    SparseMatrix m = matrix_ + Complex(scale) * other.matrix_;
    m.prune(Complex{});
    return SparseHermitian(std::move(m), basis_);
  }

  SparseHermitian scaled(double s) const {
    return SparseHermitian(SparseMatrix(Complex(s) * matrix_), basis_);
  }

  /// Sparse triplet text format: header `dim nnz`, then `row col re im`, 0-based.
  void write_triplets(std::ostream& os) const {
    os << dim() << ' ' << nnz() << '\n';
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it)
        os << it.row() << ' ' << it.col() << ' ' << format_double(it.value().real()) << ' '
           << format_double(it.value().imag()) << '\n';
  }

  static SparseHermitian read_triplets(std::istream& is) {
    std::size_t dim = 0, nnz = 0;
    require(static_cast<bool>(is >> dim >> nnz), ErrorKind::input, "bad triplet header");
    std::vector<Eigen::Triplet<Complex>> t;
    t.reserve(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
      long long r = 0, c = 0;
      double re = 0, im = 0;
      require(static_cast<bool>(is >> r >> c >> re >> im), ErrorKind::input,
              "truncated triplet list");
      require(r >= 0 && c >= 0 && static_cast<std::size_t>(r) < dim &&
                  static_cast<std::size_t>(c) < dim,
              ErrorKind::input, "triplet index out of range");
      t.emplace_back(r, c, Complex(re, im));
    }
    SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setFromTriplets(t.begin(), t.end());
    return SparseHermitian(std::move(m));
  }

 private:
  SparseMatrix matrix_;
  std::shared_ptr<const SectorBasis> basis_;
};

/// Frobenius norm of the commutator [A, B] for general sparse matrices.
inline double commutator_norm(const SparseMatrix& a, const SparseMatrix& b) {
  const SparseMatrix ab = a * b;
  const SparseMatrix ba = b * a;
  return SparseMatrix(ab - ba).norm();
}

inline double commutator_norm(const SparseHermitian& a, const SparseHermitian& b) {
  return commutator_norm(a.matrix(), b.matrix());
}

}  // namespace typpert
