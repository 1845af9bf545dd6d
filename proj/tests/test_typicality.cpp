#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numeric>

#include "typpert/dynamics.hpp"
#include "typpert/models.hpp"
#include "typpert/parallel.hpp"
#include "typpert/typicality.hpp"

using namespace typpert;

TEST(RandomState, OneDimensional) {
  const StateVector v = random_state(1, 77);
  EXPECT_NEAR(std::abs(v[0]), 1.0, 1e-15);
}

TEST(RandomState, Deterministic) {
  EXPECT_EQ((random_state(50, 9) - random_state(50, 9)).norm(), 0.0);
  EXPECT_GT((random_state(50, 9) - random_state(50, 10)).norm(), 0.1);
  EXPECT_NEAR(random_state(50, 9).norm(), 1.0, 1e-14);
}

TEST(RandomState, ProjectorTraceConcentration) {
  const std::size_t dim = 1000, rank = 100, n = 100;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = random_state(dim, sample_seed(42, i)).head(rank).squaredNorm();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1));
  // Haar: <P> = r/D with variance r (D - r) / (D^2 (D + 1))
  const double sd_exact = std::sqrt(rank * (dim - rank) / (double(dim) * dim * (dim + 1.0)));
  EXPECT_NEAR(sd, sd_exact, 0.3 * sd_exact);
  EXPECT_NEAR(mean, 0.1, 3.0 * sd_exact / std::sqrt(double(n)));
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  const Model m = build_cross_ladder(5);
  const Preparation prep = realize(m, ProjectedShiftedObservable{});
  const auto times = uniform_grid(2.0, 0.5);
  set_thread_count(1);
  const TimeSeries a = estimate_expectation(m.observable, prep, krylov_propagator(m.h0), times, 6, 5);
  set_thread_count(4);
  const TimeSeries b = estimate_expectation(m.observable, prep, krylov_propagator(m.h0), times, 6, 5);
  set_thread_count(0);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(Parallel, PairwiseSumOrder) {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(pairwise_sum(v), (1e16 + 1.0) + (-1e16 + 1.0));
  EXPECT_THROW((void)pairwise_sum(std::vector<double>{}), Error);
}

TEST(EstimateExpectation, IdentityHasNoVariance) {
  const Model m = build_cross_ladder(5);
  const Preparation prep = realize(m, ProjectedShiftedObservable{EnergyWindow{0.0, 1.0}});
  const SparseHermitian one = SparseHermitian::identity(252);
  const TimeSeries ts = estimate_expectation(one, prep, krylov_propagator(m.h0), uniform_grid(3.0, 1.0), 5, 3);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    EXPECT_NEAR(ts.values[k], 1.0, 1e-12);
    EXPECT_LT(ts.stderr_[k], 1e-12);
  }
}

TEST(EstimateExpectation, CurrentAutocorrelationAtZero) {
  const Model m = build_chain_ladder(5);
  const Preparation prep = realize(m, Autocorrelation{});
  const TimeSeries ts = estimate_expectation(m.observable, prep, krylov_propagator(m.h0), {0.0}, 32, 17);
  const SparseMatrix j2 = m.observable.matrix() * m.observable.matrix();
  double tr = 0.0;
  for (Eigen::Index k = 0; k < j2.rows(); ++k) tr += j2.coeff(k, k).real();
  tr /= 252.0;
  EXPECT_NEAR(ts.values[0], tr, 3.0 * ts.stderr_[0]);
  EXPECT_NEAR(exact_weighted_trace(prep, m.observable), tr, 1e-12);
}

TEST(EstimateExpectation, CrossLadderMatchesExactWithinErrors) {
  const Model m = build_cross_ladder(5);
  const Preparation prep = realize(m, ProjectedShiftedObservable{});
  const auto times = uniform_grid(50.0, 0.5);
  const TimeSeries est = estimate_expectation(m.observable, prep, krylov_propagator(m.h0), times, 40, 2024);
  const Spectrum s = exact_diag(m.h0, true);
  const TimeSeries ex = exact_dynamics(prep, m.observable, s, times);
  for (std::size_t k = 0; k < times.size(); ++k) EXPECT_LE(std::abs(est.values[k] - ex.values[k]), 3.0 * est.stderr_[k] + 1e-12) << "t=" << times[k];
}

TEST(EstimateExpectation, ExactTraceScaleIsUnbiased) {
  // mean over many seeds of the exact-trace estimator at t = 0 converges to Tr{rho A}
  const Model m = build_cross_ladder(5);
  const Preparation prep = realize(m, ProjectedShiftedObservable{});
  const double exact = exact_weighted_trace(prep, m.observable);
  EstimateOptions o;
  o.normalization = Normalization::exact_trace;
  const TimeSeries ts = estimate_expectation(m.observable, prep, krylov_propagator(m.h0), {0.0}, 400, 8, o);
  EXPECT_NEAR(ts.values[0], exact, 3.0 * ts.stderr_[0]);
}

TEST(EstimateExpectation, ErrorScalesWithSamples) {
  const Model m = build_cross_ladder(5);
  const Preparation prep = identity_preparation(252);
  const double exact = exact_weighted_trace(prep, m.h0);  // Tr{H0}/D
  std::vector<double> ns{1, 4, 16, 64}, errs;
  for (double n : ns) {
    // rms error over independent repeats
    double sq = 0.0;
    const int repeats = 60;
    for (int r = 0; r < repeats; ++r) {
      EstimateOptions o;
      o.normalization = Normalization::exact_trace;
      const auto ts = estimate_expectation(m.h0, prep, krylov_propagator(m.h0), {0.0},
                                           static_cast<std::size_t>(n), 1000 * r + 7, o);
      const double e = ts.values[0] - exact;
      sq += e * e;
    }
    errs.push_back(std::sqrt(sq / repeats));
  }
  // least-squares slope of log err vs log n
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    mx += std::log(ns[i]) / ns.size();
    my += std::log(errs[i]) / ns.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sxy += (std::log(ns[i]) - mx) * (std::log(errs[i]) - my);
    sxx += (std::log(ns[i]) - mx) * (std::log(ns[i]) - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.1);
}

TEST(EstimateExpectation, ReproducibleAndNeedsSamples) {
  const Model m = build_lattice(3);
  const Preparation prep = realize(m, FilteredSpinUpPair{});
  const auto times = uniform_grid(1.0, 0.25);
  const auto a = estimate_expectation(m.observable, prep, krylov_propagator(m.h0), times, 3, 99);
  const auto b = estimate_expectation(m.observable, prep, krylov_propagator(m.h0), times, 3, 99);
  EXPECT_EQ(a.values, b.values);
  EXPECT_THROW((void)estimate_expectation(m.observable, prep, krylov_propagator(m.h0), times, 0, 99), Error);
}

TEST(Realize, SoftWindowBeyondCapAndCapabilityError) {
  const Model m = build_cross_ladder(5);
  RealizeOptions o;
  o.ed_cap = 100;
  const Preparation soft = realize(m, ProjectedShiftedObservable{EnergyWindow{0.0, 1.0}}, o);
  ASSERT_TRUE(soft.soft_edge.has_value());
  EXPECT_DOUBLE_EQ(*soft.soft_edge, 0.05);
  EXPECT_FALSE(soft.trace.has_value());
  o.allow_soft_window = false;
  try {
    (void)realize(m, ProjectedShiftedObservable{EnergyWindow{0.0, 1.0}}, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::capability);
  }
}

TEST(Realize, LatticeChebyshevMatchesExactFilter) {
  const Model m = build_lattice(3);
  RealizeOptions small;
  small.ed_cap = 10;  // forces the Chebyshev filter
  const Preparation cheb = realize(m, FilteredSpinUpPair{}, small);
  const Preparation ed = realize(m, FilteredSpinUpPair{});
  const StateVector phi = random_state(126, 5);
  EXPECT_LT((cheb.apply(phi) - ed.apply(phi)).norm(), 1e-7);
  ASSERT_TRUE(ed.trace.has_value());
  double tr = 0.0;
  StateVector e = StateVector::Zero(126);
  for (int i = 0; i < 126; ++i) {
    e[i] = 1.0;
    tr += ed.apply(e).squaredNorm();
    e[i] = 0.0;
  }
  EXPECT_NEAR(*ed.trace, tr, 1e-10 * tr);
}

TEST(Histogram, FlatSpectrum) {
  const SparseHermitian h = SparseHermitian::diagonal(Eigen::VectorXd::LinSpaced(1000, 0.0, 1.0));
  const Histogram d = dos_histogram(h, 10, SpectralMethod::ed, 0);
  EXPECT_NEAR(d.integral(), 1.0, 1e-12);
  for (double w : d.weights) EXPECT_NEAR(w, 1.0, 0.2);
}

TEST(Histogram, TwoLevels) {
  // two spins with total Sz = 0: triplet and singlet of the Heisenberg bond
  const auto b = std::make_shared<const SectorBasis>(SectorBasis::with_total_sz(2, 0));
  const SparseHermitian h = OperatorBuilder(b).heisenberg(0, 1, 1.0).build();
  const Histogram d = dos_histogram(h, 10, SpectralMethod::ed, 0);
  int nonzero = 0;
  for (double w : d.weights) nonzero += w > 0.0;
  EXPECT_EQ(nonzero, 2);
  EXPECT_GT(d.weights.front(), 0.0);
  EXPECT_GT(d.weights.back(), 0.0);
  EXPECT_THROW((void)dos_histogram(h, 5, SpectralMethod::ed, 0), Error);
}

TEST(Histogram, TypicalityDosTracksExact) {
  const Model m = build_cross_ladder(5);
  const Histogram ed = dos_histogram(m.h0, 20, SpectralMethod::ed, 0);
  HistogramOptions o;
  o.range = Range{ed.lower, ed.upper};
  o.samples = 20;
  o.chebyshev_order = 8000;
  const Histogram typ = dos_histogram(m.h0, 20, SpectralMethod::typicality, 7, o);
  EXPECT_NEAR(typ.integral(), 1.0, 1e-12);
  EXPECT_LT(total_variation(ed, typ), 0.1);
}

TEST(Histogram, LdosOfEigenstateAndMixedState) {
  const Model m = build_cross_ladder(5);
  const auto s = std::make_shared<const Spectrum>(exact_diag(m.h0, true));
  Preparation eig;
  const StateVector u = s->vector(40);
  eig.apply = [u](const StateVector& v) -> StateVector { return u * u.dot(v); };
  eig.adjoint = eig.apply;
  const Histogram l = ldos_histogram(eig, m.h0, 50, SpectralMethod::ed, 0);
  int nonzero = 0;
  for (double w : l.weights) nonzero += w > 1e-10;
  EXPECT_EQ(nonzero, 1);

  const Histogram dos = dos_histogram(m.h0, 50, SpectralMethod::ed, 0);
  const Histogram mixed = ldos_histogram(identity_preparation(252), m.h0, 50, SpectralMethod::ed, 0);
  EXPECT_LT(total_variation(dos, mixed), 1e-12);
}

TEST(Histogram, LdosConcentratesInWindow) {
  const Model m = build_cross_ladder(5);
  const double dE = std::numbers::pi / 10.0, lambda = 0.1;
  const Preparation prep = realize(m, ProjectedShiftedObservable{EnergyWindow{0.0, dE}});
  const SparseHermitian h = m.hamiltonian(lambda);
  const Histogram l = ldos_histogram(prep, h, 100, SpectralMethod::ed, 0);
  const Spectrum sv = exact_diag(m.v, false);
  const double vnorm = std::max(std::abs(sv.eigenvalues[0]), std::abs(sv.eigenvalues[sv.eigenvalues.size() - 1]));
  const double margin = dE + 4.0 * lambda * vnorm / std::sqrt(252.0);
  double inside = 0.0;
  for (std::size_t k = 0; k < l.bins(); ++k)
    if (std::abs(l.center(k)) <= margin + 0.5 * l.bin_width()) inside += l.weights[k] * l.bin_width();
  EXPECT_GE(inside, 0.95);

  // a narrower window gives a narrower LDOS
  auto spread = [&](double w) {
    const Preparation p = realize(m, ProjectedShiftedObservable{EnergyWindow{0.0, w}});
    const Histogram hh = ldos_histogram(p, h, 100, SpectralMethod::ed, 0);
    double m2 = 0.0;
    for (std::size_t k = 0; k < hh.bins(); ++k) m2 += hh.center(k) * hh.center(k) * hh.weights[k] * hh.bin_width();
    return std::sqrt(m2);
  };
  EXPECT_LT(spread(std::numbers::pi / 10.0), spread(std::numbers::pi / 5.0));
  EXPECT_LT(spread(std::numbers::pi / 5.0), spread(std::numbers::pi / 2.0));
}
