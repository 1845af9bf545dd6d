#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "typpert/conditions.hpp"

using namespace typpert;

namespace {

std::shared_ptr<const Spectrum> full_spectrum(const SparseHermitian& h) {
  return std::make_shared<const Spectrum>(exact_diag(h, true));
}

/// Diagonal H0 with spacing eps and a banded Gaussian V: Var V_mn = v0 for |E_m - E_n| <= width.
struct Banded {
  SparseHermitian h0, v;
};

Banded banded_pair(std::size_t dim, double eps, double v0, double width, std::uint64_t seed) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = eps * static_cast<double>(i);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(v0));
  std::vector<Eigen::Triplet<Complex>> t;
  const auto band = static_cast<Eigen::Index>(std::floor(width / eps + 1e-9));
  for (Eigen::Index n = 0; n < e.size(); ++n)
    for (Eigen::Index m = std::max<Eigen::Index>(0, n - band); m <= n; ++m) {
      const double x = normal(rng);
      t.emplace_back(m, n, x);
      if (m != n) t.emplace_back(n, m, x);
    }
  SparseMatrix vm(e.size(), e.size());
  vm.setFromTriplets(t.begin(), t.end());
  return {SparseHermitian::diagonal(e), SparseHermitian(std::move(vm))};
}

ProfileEstimate synthetic_profile(ProfileFamily f, double s0, double dv, std::size_t bins, double width) {
  ProfileEstimate p;
  p.bin_width = width;
  for (std::size_t k = 0; k < bins; ++k) p.sigma2.push_back(profile_value(f, (k + 0.5) * width, s0, dv));
  p.counts.assign(bins, 10);
  p.coarse = moving_average(p.sigma2, 5);
  p.excluded.assign(bins, false);
  for (std::size_t k = 0; k < 3; ++k) p.excluded[k] = true;
  return p;
}

}  // namespace

TEST(WindowedTraceless, IdentityProjectorKeepsTracelessV) {
  DenseMatrix h = goe_matrix(30, 1);
  DenseMatrix v = goe_matrix(30, 2);
  v.diagonal().array() -= v.trace() / 30.0;
  const SparseHermitian hs = SparseHermitian::from_dense(h), vs = SparseHermitian::from_dense(v);
  auto spec = full_spectrum(hs);
  const WindowProjector p(spec, EnergyWindow{});
  ASSERT_TRUE(p.is_identity());
  const DenseMatrix w = windowed_traceless(vs, p);
  // back to the site basis
  const Eigen::MatrixXcd u = spec->vectors(0, 30);
  EXPECT_LT((u * w * u.adjoint() - v).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WindowedTraceless, IdentityOperatorVanishes) {
  const SparseHermitian h = SparseHermitian::from_dense(goe_matrix(40, 5));
  auto spec = full_spectrum(h);
  const WindowProjector p(spec, EnergyWindow{0.0, 5.0});
  ASSERT_GE(p.rank(), 2u);
  EXPECT_LT(windowed_traceless(SparseHermitian::identity(40), p).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(WindowedTraceless, CrossLadderWindowIsTraceFree) {
  const Model m = build_cross_ladder(5);
  auto spec = full_spectrum(m.h0);
  const WindowProjector p(spec, EnergyWindow{0.0, scale_window(std::numbers::pi / 2, 13, 5)});
  const DenseMatrix w = windowed_traceless(m.v, p);
  EXPECT_EQ(static_cast<std::size_t>(w.rows()), p.rank());
  EXPECT_LT(std::abs(w.trace()), 1e-12);
  EXPECT_LT((w - w.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WindowedTraceless, RankOneIsAWindowError) {
  const SparseHermitian h = SparseHermitian::diagonal(Eigen::Vector3d(0.0, 1.0, 2.0));
  const WindowProjector p(full_spectrum(h), EnergyWindow{1.0, 0.5});
  try {
    (void)windowed_traceless(h, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::window);
  }
}

TEST(SignRandomize, ZeroAndMagnitudes) {
  EXPECT_EQ(sign_randomize(DenseMatrix::Zero(7, 7), 3), DenseMatrix::Zero(7, 7));
  DenseMatrix v = goe_matrix(50, 9).cast<Complex>();
  v(3, 7) = Complex(0.3, 0.4);
  v(7, 3) = std::conj(v(3, 7));
  for (std::uint64_t seed : {1u, 2u, 77u}) {
    const DenseMatrix s = sign_randomize(v, seed);
    EXPECT_EQ(s.cwiseAbs(), v.cwiseAbs());
    EXPECT_EQ(s, s.adjoint());
  }
  EXPECT_NE(sign_randomize(v, 1), sign_randomize(v, 2));
  EXPECT_EQ(sign_randomize(v, 5), sign_randomize(v, 5));
}

TEST(SignRandomize, SignsAreFair) {
  const DenseMatrix ones = DenseMatrix::Ones(200, 200);
  const DenseMatrix s = sign_randomize(ones, 42);
  const double mean = s.real().sum() / (200.0 * 200.0);
  EXPECT_LT(std::abs(mean), 0.02);
}

TEST(SpectralCompare, Examples) {
  const DenseMatrix a = goe_matrix(40, 3);
  const SpectralComparison same = spectral_compare(a, a);
  EXPECT_EQ(same.ks_statistic, 0.0);
  EXPECT_EQ(same.histogram_a.weights, same.histogram_b.weights);

  Eigen::VectorXd d(10);
  d << 1, 1, 1, 1, 1, -1, -1, -1, -1, -1;
  const DenseMatrix pm = d.asDiagonal().toDenseMatrix().cast<Complex>();
  EXPECT_DOUBLE_EQ(spectral_compare(pm, DenseMatrix::Zero(10, 10)).ks_statistic, 0.5);
  EXPECT_THROW((void)spectral_compare(pm, DenseMatrix::Zero(9, 9)), Error);
}

TEST(SpectralCompare, KsRange) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> a(30), b(17);
    for (double& x : a) x = n(rng);
    for (double& x : b) x = 2.0 * n(rng) + 1.0;
    const double k = ks_statistic(a, b);
    EXPECT_GE(k, 0.0);
    EXPECT_LE(k, 1.0);
    EXPECT_EQ(ks_statistic(a, a), 0.0);
  }
  EXPECT_EQ(ks_statistic({0.0}, {1.0}), 1.0);
}

TEST(SpectralCompare, GoeSelfTest) {
  const DenseMatrix g = goe_matrix(500, 2024);
  EXPECT_LT(spectral_compare(g, sign_randomize(g, 7)).ks_statistic, 0.08);
}

TEST(SpectralCompare, DoubleRandomizationHasTheSameDistribution) {
  std::vector<double> once, twice;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const DenseMatrix g = goe_matrix(200, 100 + r);
    const auto e1 = eigenvalues_of(sign_randomize(g, 1000 + r));
    const auto e2 = eigenvalues_of(sign_randomize(sign_randomize(g, 2000 + r), 3000 + r));
    once.insert(once.end(), e1.begin(), e1.end());
    twice.insert(twice.end(), e2.begin(), e2.end());
  }
  EXPECT_LT(ks_statistic(once, twice), 0.03);
}

TEST(Semicircle, ValuesAndNormalization) {
  const double r = 1.7;
  EXPECT_DOUBLE_EQ(wigner_semicircle(0.0, r), 2.0 / (std::numbers::pi * r));
  EXPECT_EQ(wigner_semicircle(r, r), 0.0);
  EXPECT_EQ(wigner_semicircle(-r, r), 0.0);
  EXPECT_EQ(wigner_semicircle(2 * r, r), 0.0);
  // substitute E = R sin(theta) to remove the endpoint singularity, then Simpson
  const int n = 20000;
  const double h = std::numbers::pi / n;
  auto f = [&](double th) { return wigner_semicircle(r * std::sin(th), r) * r * std::cos(th); };
  double s = f(-std::numbers::pi / 2) + f(std::numbers::pi / 2);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(-std::numbers::pi / 2 + i * h);
  EXPECT_NEAR(s * h / 3.0, 1.0, 1e-10);
}

TEST(Semicircle, RadiusFromSecondMoment) {
  // GOE with off-diagonal variance v has radius 2 sqrt(N v)
  const std::size_t n = 800;
  const auto e = eigenvalues_of(goe_matrix(n, 4, 0.25));
  EXPECT_NEAR(semicircle_radius(e), 2.0 * std::sqrt(n * 0.25), 0.02 * 2.0 * std::sqrt(n * 0.25));
  EXPECT_NEAR(scale_window(1.0, 9, 13), std::sqrt(9.0 / 13.0), 1e-16);
}

TEST(SignRandomizationCheck, ChainLadderSmallestWindowIsCorrelated) {
  const Model m = build_chain_ladder(5);
  auto spec = full_spectrum(m.h0);
  const EnergyWindow w{0.0, 0.2 * energy_scale(m.h0)};
  const SignRandomizationResult r = sign_randomization_check(m.v, spec, w, 11, 200);
  EXPECT_GT(r.rank, 20u);
  EXPECT_GT(r.ks, r.null_threshold);
  EXPECT_TRUE(r.correlated());
}

TEST(Profile, DiagonalPerturbationSitsInTheFirstBin) {
  const Model m = build_cross_ladder(5);
  auto spec = full_spectrum(m.h0);
  // H0 itself is diagonal in its own eigenbasis
  ProfileOptions o;
  o.bins = 20;
  const ProfileEstimate p = perturbation_profile(m.h0, *spec, o);
  EXPECT_GT(p.sigma2[0], 0.0);
  for (std::size_t k = 1; k < p.bins(); ++k) EXPECT_LT(p.sigma2[k], 1e-24) << k;
}

TEST(Profile, BookkeepingAndCoarse) {
  const Banded b = banded_pair(150, 0.02, 1.0, 0.5, 3);
  auto spec = full_spectrum(b.h0);
  ProfileOptions o;
  o.bins = 30;
  o.omega_max = 1.5;
  const ProfileEstimate p = perturbation_profile(b.v, *spec, o);
  std::size_t total = 0;
  for (auto c : p.counts) total += c;
  EXPECT_EQ(total + p.dropped, 150u * 150u);
  EXPECT_GT(p.dropped, 0u);
  EXPECT_EQ(p.coarse, moving_average(p.sigma2, 5));
  for (double s : p.sigma2) EXPECT_GE(s, 0.0);
  EXPECT_TRUE(p.excluded[0] && p.excluded[2] && !p.excluded[3]);
  std::ostringstream os;
  p.write_csv(os);
  EXPECT_EQ(os.str().substr(0, 35), "omega,sigma2,coarse,count,excluded\n");
}

TEST(Profile, BandedRecovery) {
  const double v0 = 0.004, width = 0.995;
  const Banded b = banded_pair(400, 0.01, v0, width, 17);
  auto spec = full_spectrum(b.h0);
  ProfileOptions o;
  o.bins = 40;
  o.omega_max = 2.0;
  const ProfileEstimate p = perturbation_profile(b.v, *spec, o);
  double inside = 0.0;
  for (std::size_t k = 0; k < 19; ++k) inside += p.sigma2[k];
  inside /= 19.0;
  EXPECT_NEAR(inside, v0, 0.05 * v0);
  for (std::size_t k = 20; k < 40; ++k) EXPECT_EQ(p.sigma2[k], 0.0);
}

TEST(Profile, MissingVectorsIsInputError) {
  const SparseHermitian h = SparseHermitian::from_dense(goe_matrix(10, 1));
  const Spectrum s = exact_diag(h, false);
  EXPECT_THROW((void)perturbation_profile(h, s), Error);
}

TEST(ProfileFit, ExactExponential) {
  const ProfileEstimate p = synthetic_profile(ProfileFamily::exponential, 0.005, 7.0, 40, 0.5);
  const ProfileFit f = fit_profile(p, ProfileFamily::exponential);
  EXPECT_NEAR(f.sigma2_0, 0.005, 1e-6 * 0.005);
  EXPECT_NEAR(f.delta_v, 7.0, 1e-6 * 7.0);
  EXPECT_LT(f.residual, 1e-20);
  EXPECT_EQ(f.bins_used, 37u);
  EXPECT_GT(fit_profile(p, ProfileFamily::lorentzian).residual, 1e-12);
}

TEST(ProfileFit, ExactLorentzian) {
  const ProfileEstimate p = synthetic_profile(ProfileFamily::lorentzian, 0.003, 4.0, 40, 0.4);
  const ProfileFit f = fit_profile(p, ProfileFamily::lorentzian);
  EXPECT_NEAR(f.sigma2_0, 0.003, 1e-6 * 0.003);
  EXPECT_NEAR(f.delta_v, 4.0, 1e-6 * 4.0);
  const ProfileFit e = fit_profile(p, ProfileFamily::exponential);
  EXPECT_GT(e.residual, 1e-12);
  EXPECT_GT(e.residual, 1e6 * f.residual);
}

TEST(ProfileFit, Errors) {
  ProfileEstimate zero = synthetic_profile(ProfileFamily::exponential, 0.0, 1.0, 40, 0.5);
  try {
    (void)fit_profile(zero, ProfileFamily::exponential);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::fit_failure);
  }
  const ProfileEstimate few = synthetic_profile(ProfileFamily::exponential, 1.0, 1.0, 12, 0.5);
  try {
    (void)fit_profile(few, ProfileFamily::exponential);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::input);
  }
}
