#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "typpert/models.hpp"
#include "typpert/spectrum.hpp"

using namespace typpert;

namespace {

SparseHermitian total_sz(const std::shared_ptr<const SectorBasis>& b) {
  OperatorBuilder ob(b);
  for (int i = 0; i < b->num_spins(); ++i) ob.sz(i, 1.0);
  return ob.build();
}

double binomial(int n, int k) { return std::round(std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0))); }

}  // namespace

TEST(SectorBasis, DimensionIsBinomial) {
  for (int n = 1; n <= 14; ++n)
    for (int up = 0; up <= n; ++up) {
      const SectorBasis b = SectorBasis::with_total_sz(n, 2 * up - n);
      EXPECT_EQ(static_cast<double>(b.dim()), binomial(n, up));
    }
}

TEST(SectorBasis, StatesIncreaseAndLookupInverts) {
  const SectorBasis b = SectorBasis::with_total_sz(12, 0);
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (i > 0) EXPECT_LT(b.state(i - 1), b.state(i));
    EXPECT_EQ(b.lookup(b.state(i)).value(), i);
  }
  EXPECT_FALSE(b.lookup(0b1).has_value());
}

TEST(SectorBasis, ParityMismatchIsEmptySector) {
  try {
    (void)SectorBasis::with_total_sz(9, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_sector);
  }
}

TEST(CrossLadder, DimensionsAndHermiticity) {
  const Model m = build_cross_ladder(5);
  EXPECT_EQ(m.basis->dim(), 252u);
  for (const auto* op : {&m.h0, &m.v, &m.observable}) {
    EXPECT_EQ(op->dim(), 252u);
    EXPECT_LT(op->hermiticity_error(), 1e-12);
  }
  EXPECT_TRUE(m.observable.is_diagonal());
}

TEST(CrossLadder, CommutesWithTotalSzOnFullSpace) {
  const Model m = build_cross_ladder(5, SectorBasis::full(10));
  const SparseHermitian sz = total_sz(m.basis);
  EXPECT_EQ(commutator_norm(m.h0, sz), 0.0);
  EXPECT_EQ(commutator_norm(m.v, sz), 0.0);
  EXPECT_EQ(commutator_norm(m.observable, sz), 0.0);
}

TEST(CrossLadder, SymmetryBreakerLiftsDegeneracies) {
  const Model m = build_cross_ladder(5);
  const Spectrum s = exact_diag(m.h0, false);
  double gap = INFINITY;
  for (Eigen::Index k = 1; k < s.eigenvalues.size(); ++k) gap = std::min(gap, s.eigenvalues[k] - s.eigenvalues[k - 1]);
  EXPECT_GT(gap, 1e-8);
  // without it the translation-invariant ladder is degenerate
  const Spectrum s0 = exact_diag(build_cross_ladder(5, std::nullopt, false).h0, false);
  double gap0 = INFINITY;
  for (Eigen::Index k = 1; k < s0.eigenvalues.size(); ++k) gap0 = std::min(gap0, s0.eigenvalues[k] - s0.eigenvalues[k - 1]);
  EXPECT_LT(gap0, 1e-10);
}

TEST(CrossLadder, ObservableMatchesCosineMode) {
  const int L = 5;
  const Model m = build_cross_ladder(L);
  const Eigen::VectorXd d = m.observable.real_diagonal();
  for (std::size_t a = 0; a < m.basis->dim(); ++a) {
    double expect = 0.0;
    for (int l = 1; l <= L; ++l)
      for (int leg = 1; leg <= 2; ++leg)
        expect += std::cos(2.0 * std::numbers::pi * l / L) *
                  (SectorBasis::spin_up(m.basis->state(a), ladder_site(L, l, leg)) ? 0.5 : -0.5);
    EXPECT_NEAR(d[static_cast<Eigen::Index>(a)], expect, 1e-14);
  }
}

TEST(Ladders, SmallSizesRejected) {
  for (int L : {3, 4}) {
    try {
      (void)build_cross_ladder(L);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::size);
    }
    EXPECT_THROW((void)build_chain_ladder(L), Error);
  }
}

TEST(ChainLadder, CurrentIsImaginaryHermitianTraceless) {
  const Model m = build_chain_ladder(5);
  EXPECT_EQ(m.observable.dim(), 252u);
  EXPECT_LT(m.h0.hermiticity_error(), 1e-12);
  EXPECT_LT(m.v.hermiticity_error(), 1e-12);
  EXPECT_LT(m.observable.hermiticity_error(), 1e-12);
  EXPECT_EQ(std::abs(m.observable.trace()), 0.0);
  for (Eigen::Index k = 0; k < m.observable.matrix().outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m.observable.matrix(), k); it; ++it) EXPECT_EQ(it.value().real(), 0.0);
}

TEST(ChainLadder, TranslationSymmetryAndItsBreaking) {
  const int L = 5;
  const Model plain = build_chain_ladder(L, std::nullopt, false);
  const Model broken = build_chain_ladder(L);
  const SparseMatrix t1 = ladder_translation(*plain.basis, L, true, false);
  const SparseMatrix t2 = ladder_translation(*plain.basis, L, false, true);
  EXPECT_LT(commutator_norm(plain.h0.matrix(), t1), 1e-12);
  EXPECT_LT(commutator_norm(plain.h0.matrix(), t2), 1e-12);
  EXPECT_GT(commutator_norm(broken.h0.matrix(), t1), 1e-3);
  // the spin current of isotropic chains is not conserved
  EXPECT_GT(commutator_norm(plain.h0, plain.observable), 1e-3);
}

TEST(Lattice, SectorDimensions) {
  EXPECT_EQ(SectorBasis::full(16).dim(), 65536u);
  EXPECT_EQ(SectorBasis::with_total_sz(16, 0).dim(), 12870u);
  EXPECT_EQ(SectorBasis::smallest(9).dim(), 126u);
  EXPECT_EQ(SectorBasis::smallest(9).twice_total_sz(), 1);
  EXPECT_EQ(central_levels(12870, 0.6).count, 7722u);
}

TEST(Lattice, OperatorsHermitianAndConserving) {
  for (auto bonds : {LatticeBonds::literal, LatticeBonds::all_nn}) {
    const Model m = build_lattice(3, bonds, SectorBasis::full(9));
    const SparseHermitian sz = total_sz(m.basis);
    for (const auto* op : {&m.h0, &m.v, &m.observable}) {
      EXPECT_LT(op->hermiticity_error(), 1e-12);
      EXPECT_EQ(commutator_norm(*op, sz), 0.0);
    }
  }
}

TEST(Lattice, ObservableSpectrum) {
  const Model m = build_lattice(3, LatticeBonds::literal, SectorBasis::full(9));
  const Eigen::VectorXd d = lattice_observable(m).real_diagonal();
  for (Eigen::Index k = 0; k < d.size(); ++k) EXPECT_TRUE(d[k] == 1.0 || d[k] == -1.0);
  EXPECT_NEAR(d.sum(), 0.0, 1e-12);
}

TEST(Lattice, TwoByTwo) {
  const Model m = build_lattice(2, LatticeBonds::all_nn);
  EXPECT_LT(m.h0.hermiticity_error(), 1e-12);
  EXPECT_EQ(m.basis->dim(), 6u);
  try {
    (void)lattice_observable(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::size);
  }
}

TEST(Lattice, BondCounts) {
  for (int L : {3, 4}) {
    EXPECT_EQ(lattice_bond_count(L, LatticeBonds::literal), 2 * (L - 1) * (L - 1));
    EXPECT_EQ(lattice_bond_count(L, LatticeBonds::all_nn), 2 * L * (L - 1));
  }
  // literal reading leaves site (3,3) uncoupled at L = 3
  const Model m = build_lattice(3);
  const SparseHermitian p = spin_up_projector(m, 3, 3);
  EXPECT_LT(commutator_norm(m.h0, p), 1e-12);
  const Model all = build_lattice(3, LatticeBonds::all_nn);
  EXPECT_GT(commutator_norm(all.h0, spin_up_projector(all, 3, 3)), 1e-3);
}

TEST(Lattice, PeriodicVariant) {
  const int L = 3;
  const Model per = build_lattice(L, LatticeBonds::literal, SectorBasis::full(L * L), Boundary::periodic);
  const Model open = build_lattice(L, LatticeBonds::all_nn, SectorBasis::full(L * L));
  EXPECT_EQ(per.spec.resolved_boundary(), Boundary::periodic);
  EXPECT_EQ(lattice_bond_count(L, LatticeBonds::literal, Boundary::periodic), 2 * L * L);
  // all spins up: 0.16 * 1/2 + 4 * 1/4 per bond
  const std::size_t up = *per.basis->lookup((Bitstring{1} << (L * L)) - 1);
  EXPECT_NEAR(per.h0.real_diagonal()[static_cast<Eigen::Index>(up)], 0.08 + 2 * L * L, 1e-12);
  EXPECT_NEAR(open.h0.real_diagonal()[static_cast<Eigen::Index>(up)], 0.08 + 2 * L * (L - 1), 1e-12);

  // column translation commutes with everything but the local field
  std::vector<int> shift(L * L);
  for (int i = 1; i <= L; ++i)
    for (int j = 1; j <= L; ++j) shift[lattice_site(L, i, j)] = lattice_site(L, i, j % L + 1);
  const SparseMatrix t = site_permutation(*per.basis, shift);
  const SparseHermitian field = OperatorBuilder(per.basis).sz(lattice_site(L, 1, 2), 0.16).build();
  EXPECT_LT(commutator_norm(per.h0.plus(field, -1.0).matrix(), t), 1e-12);
  EXPECT_LT(commutator_norm(per.v.matrix(), t), 1e-12);
  EXPECT_GT(commutator_norm(open.h0.plus(field, -1.0).matrix(), t), 1e-3);
  EXPECT_GT(commutator_norm(open.v.matrix(), t), 1e-3);

  EXPECT_THROW((void)build_lattice(2, LatticeBonds::literal, std::nullopt, Boundary::periodic), Error);
  ModelSpec ladder{ModelKind::cross_ladder, 5, Boundary::open};
  EXPECT_THROW((void)build_model(ladder), Error);
  EXPECT_EQ((ModelSpec{ModelKind::lattice, 3}.resolved_boundary()), Boundary::open);
  EXPECT_EQ((ModelSpec{ModelKind::chain_ladder, 5}.resolved_boundary()), Boundary::periodic);
}

TEST(Lattice, SpinUpProjectorIsIdempotent) {
  const Model m = build_lattice(3);
  const SparseHermitian p = spin_up_projector(m, 2, 2);
  const SparseMatrix p2 = p.matrix() * p.matrix();
  EXPECT_EQ(SparseMatrix(p2 - p.matrix()).norm(), 0.0);
  EXPECT_THROW((void)spin_up_projector(m, 4, 1), Error);
}

TEST(Models, PeriodicBondCountPerLeg) {
  // ||S_i.S_j||_F^2 = 3D/16 and distinct bonds are Hilbert-Schmidt orthogonal
  const Model m = build_chain_ladder(5, SectorBasis::full(10), false);
  const double frob2 = m.h0.frobenius_norm() * m.h0.frobenius_norm();
  EXPECT_NEAR(frob2 / (3.0 / 16.0 * 1024.0), 2.0 * 5.0, 1e-9);
}

TEST(Models, BuildsAreDeterministic) {
  const Model a = build_lattice(3), b = build_lattice(3);
  std::ostringstream sa, sb;
  a.h0.write_triplets(sa);
  b.h0.write_triplets(sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Models, TripletRoundTrip) {
  const Model m = build_chain_ladder(5);
  std::stringstream ss;
  m.observable.write_triplets(ss);
  const SparseHermitian back = SparseHermitian::read_triplets(ss);
  EXPECT_EQ(SparseMatrix(back.matrix() - m.observable.matrix()).norm(), 0.0);
}

TEST(InitialStateSpec, LegalCombinations) {
  const ModelSpec cross{ModelKind::cross_ladder, 5};
  const ModelSpec chain{ModelKind::chain_ladder, 5};
  const ModelSpec lattice{ModelKind::lattice, 3, Boundary::open};
  const auto full = initial_state_spec(cross, EnergyWindow{}, std::nullopt);
  ASSERT_TRUE(std::holds_alternative<ProjectedShiftedObservable>(full));
  EXPECT_TRUE(std::get<ProjectedShiftedObservable>(full).window.unbounded());
  EXPECT_EQ(describe(initial_state_spec(chain, std::nullopt, std::nullopt)), "autocorrelation");
  const auto lat = initial_state_spec(lattice, std::nullopt, GaussianFilter{2.0});
  EXPECT_EQ(std::get<FilteredSpinUpPair>(lat).filter.sigma_e, 2.0);

  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::undefined;
  };
  EXPECT_EQ(kind_of([&] { (void)initial_state_spec(chain, EnergyWindow{0.0, 1.0}, std::nullopt); }),
            ErrorKind::specification);
  EXPECT_EQ(kind_of([&] { (void)initial_state_spec(cross, std::nullopt, GaussianFilter{}); }),
            ErrorKind::specification);
  EXPECT_EQ(kind_of([&] { (void)initial_state_spec(lattice, EnergyWindow{0.0, 1.0}, std::nullopt); }),
            ErrorKind::specification);
}

TEST(Models, KappaIsMinimumOfDiagonal) {
  const Model m = build_cross_ladder(5);
  const Spectrum s = exact_diag(m.observable, false);
  EXPECT_DOUBLE_EQ(s.eigenvalues[0], m.observable.real_diagonal().minCoeff());
}
