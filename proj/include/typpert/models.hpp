#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "typpert/basis.hpp"
#include "typpert/error.hpp"
#include "typpert/sparse.hpp"

namespace typpert {

/// Accumulates spin-1/2 two-site and one-site terms on a basis and emits a
/// sparse operator. Every term preserves total Sz, so the sector is closed.
class OperatorBuilder {
 public:
  explicit OperatorBuilder(std::shared_ptr<const SectorBasis> basis) : basis_(std::move(basis)) {}

  /// c * Sz_i
  OperatorBuilder& sz(int i, double c) {
    check_site(i);
    for (std::size_t a = 0; a < basis_->dim(); ++a)
      add(a, a, c * spin_z(basis_->state(a), i));
    return *this;
  }

  /// c * Sz_i Sz_j
  OperatorBuilder& szsz(int i, int j, double c) {
    check_pair(i, j);
    for (std::size_t a = 0; a < basis_->dim(); ++a) {
      const Bitstring s = basis_->state(a);
      add(a, a, c * spin_z(s, i) * spin_z(s, j));
    }
    return *this;
  }

  /// c * (Sx_i Sx_j + Sy_i Sy_j) = (c/2)(S+_i S-_j + S-_i S+_j)
  OperatorBuilder& exchange(int i, int j, double c) {
    check_pair(i, j);
    for_each_flip(i, j, [&](std::size_t to, std::size_t from, bool) { add(to, from, 0.5 * c); });
    return *this;
  }

  /// c * S_i . S_j
  OperatorBuilder& heisenberg(int i, int j, double c) {
    szsz(i, j, c);
    return exchange(i, j, c);
  }

  /// c * (Sx_i Sy_j - Sy_i Sx_j) = (i c/2)(S+_i S-_j - S-_i S+_j)
  OperatorBuilder& current(int i, int j, double c) {
    check_pair(i, j);
    for_each_flip(i, j, [&](std::size_t to, std::size_t from, bool raises_i) {
      add(to, from, Complex(0.0, raises_i ? 0.5 * c : -0.5 * c));
    });
    return *this;
  }

  /// c * 1
  OperatorBuilder& constant(double c) {
    for (std::size_t a = 0; a < basis_->dim(); ++a) add(a, a, c);
    return *this;
  }

  SparseHermitian build() const {
    const auto n = static_cast<Eigen::Index>(basis_->dim());
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets_.begin(), triplets_.end());
    m.prune(Complex{});
    return SparseHermitian(std::move(m), basis_);
  }

 private:
  static double spin_z(Bitstring s, int site) { return SectorBasis::spin_up(s, site) ? 0.5 : -0.5; }

  void check_site(int i) const {
    require(i >= 0 && i < basis_->num_spins(), ErrorKind::size,
            "site " + std::to_string(i) + " outside the system");
  }
  void check_pair(int i, int j) const {
    check_site(i);
    check_site(j);
    require(i != j, ErrorKind::input, "two-site term needs distinct sites");
  }

  void add(std::size_t r, std::size_t c, Complex v) {
    if (v != Complex{})
      triplets_.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), v);
  }

  // Visits every basis state with antiparallel spins on (i, j); `raises_i`
  // is true when the flip takes site i from down to up.
  template <typename F>
  void for_each_flip(int i, int j, F&& f) const {
    const Bitstring mask = (Bitstring{1} << i) | (Bitstring{1} << j);
    for (std::size_t a = 0; a < basis_->dim(); ++a) {
      const Bitstring s = basis_->state(a);
      const bool ui = SectorBasis::spin_up(s, i);
      if (ui == SectorBasis::spin_up(s, j)) continue;
      auto b = basis_->lookup(s ^ mask);
      if (b) f(*b, a, !ui);
    }
  }

  std::shared_ptr<const SectorBasis> basis_;
  std::vector<Eigen::Triplet<Complex>> triplets_;
};

enum class ModelKind { cross_ladder, chain_ladder, lattice };
enum class Boundary { periodic, open };
/// `literal` sums i, j over 1..L-1 as written; `all_nn` keeps every
/// nearest-neighbour bond of the open lattice.
enum class LatticeBonds { literal, all_nn };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::cross_ladder: return "cross_ladder";
    case ModelKind::chain_ladder: return "chain_ladder";
    case ModelKind::lattice: return "lattice";
  }
  return "?";
}
inline std::string to_string(LatticeBonds b) {
  return b == LatticeBonds::literal ? "literal" : "all_nn";
}

struct ModelSpec {
  ModelKind kind = ModelKind::cross_ladder;
  int L = 5;
  std::optional<Boundary> boundary;  // unset: ladders periodic, lattice open
  bool includes_symmetry_breaker = true;
  LatticeBonds lattice_bonds = LatticeBonds::literal;

  Boundary resolved_boundary() const {
    return boundary.value_or(kind == ModelKind::lattice ? Boundary::open : Boundary::periodic);
  }

  int num_spins() const { return kind == ModelKind::lattice ? L * L : 2 * L; }
};

/// A built model: unperturbed Hamiltonian, perturbation and observable, all
/// on the smallest-|Sz| sector.
struct Model {
  ModelSpec spec;
  std::shared_ptr<const SectorBasis> basis;
  SparseHermitian h0;
  SparseHermitian v;
  SparseHermitian observable;
  std::string observable_name;

  SparseHermitian hamiltonian(double lambda) const { return h0.plus(v, lambda); }
};

/// Ladder site (l, j), l in 1..L (periodic), leg j in {1, 2}: bit (l-1) + L(j-1).
inline int ladder_site(int L, int l, int leg) {
  const int wrapped = ((l - 1) % L + L) % L;
  return wrapped + L * (leg - 1);
}

/// Lattice site (i, j), both in 1..L: bit (i-1) L + (j-1).
inline int lattice_site(int L, int i, int j) { return (i - 1) * L + (j - 1); }

/// Symmetry breaker -0.16 Sz_{1,1} + 0.2 Sz_{4,2} + 0.1 Sz_{5,2}.
inline void add_symmetry_breaker(OperatorBuilder& b, int L) {
  b.sz(ladder_site(L, 1, 1), -0.16).sz(ladder_site(L, 4, 2), 0.2).sz(ladder_site(L, 5, 2), 0.1);
}

namespace detail {

inline std::shared_ptr<const SectorBasis> ladder_basis(int L, std::optional<SectorBasis> basis) {
  require(L >= 5, ErrorKind::size,
          "ladder models need L >= 5 so the symmetry-breaking sites exist, got L = " +
              std::to_string(L));
  if (basis) {
    require(basis->num_spins() == 2 * L, ErrorKind::input, "basis does not match 2L spins");
    return std::make_shared<const SectorBasis>(std::move(*basis));
  }
  return std::make_shared<const SectorBasis>(SectorBasis::with_total_sz(2 * L, 0));
}

inline void add_legs(OperatorBuilder& b, int L) {
  for (int leg = 1; leg <= 2; ++leg)
    for (int l = 1; l <= L; ++l) b.heisenberg(ladder_site(L, l, leg), ladder_site(L, l + 1, leg), 1.0);
}

}  // namespace detail

/// Periodic Heisenberg ladder with symmetry breaker; perturbation adds the
/// diagonal cross couplings; observable is the slowest rung-magnetization mode.
/// `basis` overrides the Sz = 0 sector (e.g. the full space for symmetry tests).
inline Model build_cross_ladder(int L, std::optional<SectorBasis> basis = std::nullopt,
                                bool symmetry_breaker = true) {
  auto b = detail::ladder_basis(L, std::move(basis));
  Model m;
  m.spec = {ModelKind::cross_ladder, L, Boundary::periodic, symmetry_breaker, LatticeBonds::literal};
  m.basis = b;

  OperatorBuilder h(b);
  if (symmetry_breaker) add_symmetry_breaker(h, L);
  detail::add_legs(h, L);
  for (int l = 1; l <= L; ++l) h.heisenberg(ladder_site(L, l, 1), ladder_site(L, l, 2), 1.0);
  m.h0 = h.build();

  OperatorBuilder v(b);
  for (int l = 1; l <= L; ++l) {
    v.szsz(ladder_site(L, l, 1), ladder_site(L, l + 1, 2), 1.0);
    v.szsz(ladder_site(L, l, 2), ladder_site(L, l + 1, 1), 1.0);
  }
  m.v = v.build();

  OperatorBuilder sq(b);
  for (int l = 1; l <= L; ++l) {
    const double c = std::cos(2.0 * std::numbers::pi * l / L);
    sq.sz(ladder_site(L, l, 1), c).sz(ladder_site(L, l, 2), c);
  }
  m.observable = sq.build();
  m.observable_name = "S_q";
  return m;
}

/// Two decoupled periodic Heisenberg chains plus symmetry breaker; the
/// perturbation is the rung coupling; observable is the leg spin current.
inline Model build_chain_ladder(int L, std::optional<SectorBasis> basis = std::nullopt,
                                bool symmetry_breaker = true) {
  auto b = detail::ladder_basis(L, std::move(basis));
  Model m;
  m.spec = {ModelKind::chain_ladder, L, Boundary::periodic, symmetry_breaker, LatticeBonds::literal};
  m.basis = b;

  OperatorBuilder h(b);
  if (symmetry_breaker) add_symmetry_breaker(h, L);
  detail::add_legs(h, L);
  m.h0 = h.build();

  OperatorBuilder v(b);
  for (int l = 1; l <= L; ++l) v.heisenberg(ladder_site(L, l, 1), ladder_site(L, l, 2), 1.0);
  m.v = v.build();

  OperatorBuilder j(b);
  for (int leg = 1; leg <= 2; ++leg)
    for (int l = 1; l <= L; ++l) j.current(ladder_site(L, l, leg), ladder_site(L, l + 1, leg), 1.0);
  m.observable = j.build();
  m.observable_name = "J";
  return m;
}

/// L x L lattice: 0.16 Sz_{1,2} + 4 sum (S.S) on horizontal and vertical
/// bonds; perturbation is the 4 (SxSx + SySy) diagonal coupling; observable
/// 4 Sz_{2,2} Sz_{3,3} (needs L >= 3; for L = 2 the observable is left empty).
/// Periodic wraps every bond and both diagonals; `bonds` then has no effect.
inline Model build_lattice(int L, LatticeBonds bonds = LatticeBonds::literal,
                           std::optional<SectorBasis> basis = std::nullopt,
                           Boundary boundary = Boundary::open) {
  require(L >= 2, ErrorKind::size, "lattice needs L >= 2, got L = " + std::to_string(L));
  require(boundary == Boundary::open || L >= 3, ErrorKind::size, "periodic lattice needs L >= 3");
  const int n = L * L;
  std::shared_ptr<const SectorBasis> b;
  if (basis) {
    require(basis->num_spins() == n, ErrorKind::input, "basis does not match L^2 spins");
    b = std::make_shared<const SectorBasis>(std::move(*basis));
  } else {
    b = std::make_shared<const SectorBasis>(SectorBasis::smallest(n));
  }

  Model m;
  m.spec = {ModelKind::lattice, L, boundary, true, bonds};
  m.basis = b;
  auto s = [L](int i, int j) { return lattice_site(L, (i - 1) % L + 1, (j - 1) % L + 1); };
  const bool periodic = boundary == Boundary::periodic;

  OperatorBuilder h(b);
  h.sz(s(1, 2), 0.16);
  if (periodic) {
    for (int i = 1; i <= L; ++i)
      for (int j = 1; j <= L; ++j) {
        h.heisenberg(s(i, j), s(i, j + 1), 4.0);
        h.heisenberg(s(i, j), s(i + 1, j), 4.0);
      }
  } else if (bonds == LatticeBonds::literal) {
    for (int i = 1; i <= L - 1; ++i)
      for (int j = 1; j <= L - 1; ++j) {
        h.heisenberg(s(i, j), s(i, j + 1), 4.0);
        h.heisenberg(s(i, j), s(i + 1, j), 4.0);
      }
  } else {
    for (int i = 1; i <= L; ++i)
      for (int j = 1; j <= L; ++j) {
        if (j < L) h.heisenberg(s(i, j), s(i, j + 1), 4.0);
        if (i < L) h.heisenberg(s(i, j), s(i + 1, j), 4.0);
      }
  }
  m.h0 = h.build();

  OperatorBuilder v(b);
  const int last = periodic ? L : L - 1;
  for (int i = 1; i <= last; ++i)
    for (int j = 1; j <= last; ++j) {
      v.exchange(s(i, j), s(i + 1, j + 1), 4.0);
      v.exchange(s(i + 1, j), s(i, j + 1), 4.0);
    }
  m.v = v.build();

  if (L >= 3) {
    m.observable = OperatorBuilder(b).szsz(s(2, 2), s(3, 3), 4.0).build();
  } else {
    m.observable = SparseHermitian(SparseMatrix(b->dim(), b->dim()), b);
  }
  m.observable_name = "O";
  return m;
}

/// The lattice observable 4 Sz_{2,2} Sz_{3,3}; size error when L < 3.
inline const SparseHermitian& lattice_observable(const Model& lattice) {
  require(lattice.spec.kind == ModelKind::lattice, ErrorKind::input, "not a lattice model");
  require(lattice.spec.L >= 3, ErrorKind::size, "observable sites (2,2),(3,3) need L >= 3");
  return lattice.observable;
}

/// Sz_{i,j} + 1/2: projector onto spin up at lattice site (i, j).
inline SparseHermitian spin_up_projector(const Model& lattice, int i, int j) {
  const int L = lattice.spec.L;
  require(lattice.spec.kind == ModelKind::lattice, ErrorKind::input, "not a lattice model");
  require(i >= 1 && i <= L && j >= 1 && j <= L, ErrorKind::size,
          "site (" + std::to_string(i) + "," + std::to_string(j) + ") outside the lattice");
  return OperatorBuilder(lattice.basis).sz(lattice_site(L, i, j), 1.0).constant(0.5).build();
}

/// Number of Heisenberg bonds in the lattice H0 (literal: 2(L-1)^2, all_nn: 2L(L-1), periodic: 2L^2).
inline int lattice_bond_count(int L, LatticeBonds bonds, Boundary boundary = Boundary::open) {
  if (boundary == Boundary::periodic) return 2 * L * L;
  return bonds == LatticeBonds::literal ? 2 * (L - 1) * (L - 1) : 2 * L * (L - 1);
}

inline Model build_model(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::cross_ladder:
    case ModelKind::chain_ladder:
      require(spec.resolved_boundary() == Boundary::periodic, ErrorKind::specification, "ladders are periodic");
      return spec.kind == ModelKind::cross_ladder
                 ? build_cross_ladder(spec.L, std::nullopt, spec.includes_symmetry_breaker)
                 : build_chain_ladder(spec.L, std::nullopt, spec.includes_symmetry_breaker);
    case ModelKind::lattice: {
      require(spec.L >= 3, ErrorKind::size, "lattice observable needs sites (2,2),(3,3): L >= 3");
      return build_lattice(spec.L, spec.lattice_bonds, std::nullopt, spec.resolved_boundary());
    }
  }
  throw Error(ErrorKind::input, "unknown model kind");
}

/// Permutation matrix P with P|s> = |sigma(s)> for a site permutation
/// `new_site[k]` (site k moves to new_site[k]). Not Hermitian in general.
inline SparseMatrix site_permutation(const SectorBasis& basis, const std::vector<int>& new_site) {
  require(static_cast<int>(new_site.size()) == basis.num_spins(), ErrorKind::input,
          "permutation length must equal the spin count");
  std::vector<Eigen::Triplet<Complex>> t;
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    const Bitstring s = basis.state(a);
    Bitstring p = 0;
    for (int k = 0; k < basis.num_spins(); ++k)
      if (SectorBasis::spin_up(s, k)) p |= Bitstring{1} << new_site[k];
    auto b = basis.lookup(p);
    require(b.has_value(), ErrorKind::input, "permutation leaves the basis");
    t.emplace_back(static_cast<Eigen::Index>(*b), static_cast<Eigen::Index>(a), 1.0);
  }
  const auto n = static_cast<Eigen::Index>(basis.dim());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Translation l -> l+1 on the selected ladder legs (1, 2 or both).
inline SparseMatrix ladder_translation(const SectorBasis& basis, int L, bool leg1, bool leg2) {
  std::vector<int> perm(2 * L);
  for (int leg = 1; leg <= 2; ++leg)
    for (int l = 1; l <= L; ++l) {
      const bool move = (leg == 1 && leg1) || (leg == 2 && leg2);
      perm[ladder_site(L, l, leg)] = ladder_site(L, move ? l + 1 : l, leg);
    }
  return site_permutation(basis, perm);
}

// ---------------------------------------------------------------------------
// Initial-state specifications (declarative; realized by the typicality and
// dynamics layers).

struct EnergyWindow {
  double center = 0.0;
  double half_width = std::numeric_limits<double>::infinity();  // dE; infinite = no cut
  bool unbounded() const { return !std::isfinite(half_width); }
};

struct GaussianFilter {
  double sigma_e = 2.0;
};

/// rho ∝ P (A - kappa) P with kappa the smallest eigenvalue of A.
struct ProjectedShiftedObservable {
  EnergyWindow window;
};
/// C(t) = Tr{A(t) A} / D, the zeta -> 0 response of rho ∝ 1 + zeta A.
struct Autocorrelation {};
/// rho ∝ F P+_{2,2} P+_{3,3} F with F = exp(-H0^2 / (2 sigma_E^2)).
struct FilteredSpinUpPair {
  GaussianFilter filter;
  int site_a_i = 2, site_a_j = 2, site_b_i = 3, site_b_j = 3;
};

using StateSpec = std::variant<ProjectedShiftedObservable, Autocorrelation, FilteredSpinUpPair>;

inline std::string describe(const StateSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ProjectedShiftedObservable>)
          return "projected_shifted_observable";
        else if constexpr (std::is_same_v<T, Autocorrelation>)
          return "autocorrelation";
        else
          return "filtered_spin_up_pair";
      },
      spec);
}

inline StateSpec initial_state_spec(const ModelSpec& model, std::optional<EnergyWindow> window,
                                    std::optional<GaussianFilter> filter) {
  switch (model.kind) {
    case ModelKind::cross_ladder:
      require(!filter, ErrorKind::specification, "cross_ladder takes an energy window, not a filter");
      if (window)
        require(window->half_width > 0.0, ErrorKind::specification, "window half-width must be > 0");
      return ProjectedShiftedObservable{window.value_or(EnergyWindow{})};
    case ModelKind::chain_ladder:
      require(!filter && !window, ErrorKind::specification,
              "chain_ladder uses the unfiltered current autocorrelation");
      return Autocorrelation{};
    case ModelKind::lattice:
      require(!window, ErrorKind::specification, "lattice takes a Gaussian filter, not a window");
      require(!filter || filter->sigma_e > 0.0, ErrorKind::specification, "sigma_E must be > 0");
      require(model.L >= 3, ErrorKind::size, "lattice preparation needs sites (2,2),(3,3)");
      return FilteredSpinUpPair{filter.value_or(GaussianFilter{})};
  }
  throw Error(ErrorKind::specification, "unknown model kind");
}

}  // namespace typpert
