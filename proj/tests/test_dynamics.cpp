#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "typpert/dynamics.hpp"
#include "typpert/metrics.hpp"

using namespace typpert;

namespace {

ExperimentPlan plan_for(ModelKind kind, int L, std::vector<double> lambdas, double t_max, double dt) {
  ExperimentPlan p;
  p.model.kind = kind;
  p.model.L = L;
  p.lambdas = std::move(lambdas);
  p.t_max = t_max;
  p.dt = dt;
  return p;
}

double mean_between(const TimeSeries& s, double a, double b) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s.times[k] >= a && s.times[k] <= b) {
      sum += s.values[k];
      ++n;
    }
  return sum / n;
}

}  // namespace

TEST(Normalize, Examples) {
  TimeSeries s;
  s.times = {0.0, 1.0, 2.0};
  s.values = {2.0, 1.0, -0.5};
  s.stderr_ = {0.2, 0.1, 0.1};
  const TimeSeries n = normalize_series(s, SeriesNormalization::initial_one);
  EXPECT_EQ(n.values, (std::vector<double>{1.0, 0.5, -0.25}));
  EXPECT_EQ(n.stderr_, (std::vector<double>{0.1, 0.05, 0.05}));
  EXPECT_EQ(n.meta.normalization, "initial_one");
  EXPECT_EQ(normalize_series(n, SeriesNormalization::initial_one).values, n.values);
  EXPECT_EQ(normalize_series(s, SeriesNormalization::none).values, s.values);
  s.values[0] = 0.0;
  try {
    (void)normalize_series(s, SeriesNormalization::initial_one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::normalization);
  }
}

TEST(Plan, ReferenceIsInsertedAndValidated) {
  ExperimentPlan p = plan_for(ModelKind::cross_ladder, 5, {0.5, 0.2, 0.5}, 1.0, 0.5);
  EXPECT_TRUE(p.ensure_reference());
  EXPECT_EQ(p.lambdas, (std::vector<double>{0.0, 0.2, 0.5}));
  EXPECT_FALSE(p.ensure_reference());
  p.lambdas = {-1.0};
  EXPECT_THROW(p.validate(), Error);
  p.lambdas = {0.0};
  p.dt = 0.0;
  EXPECT_THROW(p.validate(), Error);

  const DynamicsResult r = run_dynamics(plan_for(ModelKind::cross_ladder, 5, {0.3}, 1.0, 0.5));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.series.count(0.0), 1u);
  EXPECT_EQ(r.dim, 252u);
}

TEST(RunDynamics, ZeroLambdaIsTheUnperturbedReference) {
  ExperimentPlan p = plan_for(ModelKind::cross_ladder, 5, {0.0}, 10.0, 0.1);
  p.seed = 1;
  const DynamicsResult a = run_dynamics(p);
  p.seed = 99;
  const DynamicsResult b = run_dynamics(p);
  const TimeSeries& s = a.series.at(0.0);
  EXPECT_EQ(s.values, b.series.at(0.0).values);
  EXPECT_EQ(s.values.front(), 1.0);

  const Model m = build_cross_ladder(5);
  const Preparation prep = realize(m, ProjectedShiftedObservable{});
  TimeSeries direct = exact_dynamics(prep, m.observable, exact_diag(m.h0, true), s.times);
  direct = normalize_series(direct, SeriesNormalization::initial_one);
  for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(s.values[k], direct.values[k], 1e-12);

  for (KernelKind k : {KernelKind::g1, KernelKind::g2, KernelKind::g3})
    EXPECT_EQ(predict(s, 0.1, Kernel{k}, ResponseParams{0.00502, 7.32, 0.0019, 0.0}).values, s.values);
}

TEST(RunDynamics, EdAndKrylovAgreeWithinErrors) {
  struct Case {
    ModelKind kind;
    int L;
    std::optional<EnergyWindow> window;
  };
  const Case cases[] = {{ModelKind::cross_ladder, 5, std::nullopt},
                        {ModelKind::cross_ladder, 5, EnergyWindow{0.0, std::numbers::pi / 2}},
                        {ModelKind::chain_ladder, 5, std::nullopt}};
  for (const auto& c : cases) {
    ExperimentPlan p = plan_for(c.kind, c.L, {0.0, 0.5}, 50.0, 0.5);
    p.window = c.window;
    const DynamicsResult ed = run_dynamics(p);
    p.method = DynamicsMethod::krylov_typicality;
    p.samples = 32;
    p.seed = 2025;
    const DynamicsResult kr = run_dynamics(p);
    for (double l : p.lambdas) {
      const TimeSeries& e = ed.series.at(l);
      const TimeSeries& k = kr.series.at(l);
      ASSERT_TRUE(k.has_errors());
      if (c.kind == ModelKind::cross_ladder) {
        for (std::size_t i = 0; i < e.size(); ++i)
          EXPECT_LE(std::abs(e.values[i] - k.values[i]), 3.0 * k.stderr_[i] + 1e-10)
              << to_string(c.kind) << " lambda=" << l << " t=" << e.times[i];
      } else {
        // error bars calibrated: rms z near one, no wild outliers
        double z2 = 0.0, zmax = 0.0;
        for (std::size_t i = 1; i < e.size(); ++i) {
          const double z = (k.values[i] - e.values[i]) / k.stderr_[i];
          z2 += z * z;
          zmax = std::max(zmax, std::abs(z));
        }
        const double rms = std::sqrt(z2 / static_cast<double>(e.size() - 1));
        EXPECT_GT(rms, 0.5);
        EXPECT_LT(rms, 1.5);
        EXPECT_LT(zmax, 4.0);
      }
    }
  }
}

TEST(RunDynamics, KrylovFidelity) {
  const Model m = build_cross_ladder(5);
  const SparseHermitian h = m.hamiltonian(0.7);
  const Spectrum s = exact_diag(h, true);
  const StateVector psi = random_state(h.dim(), 5);
  const double t = 50.0;
  const StateVector ex = s.apply_function(
      [](double) { return 1.0; }, psi);  // identity round trip first
  EXPECT_LT((ex - psi).norm(), 1e-12);
  StateVector c = s.to_eigenbasis(psi);
  for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(Complex(0.0, -s.eigenvalues[k] * t));
  const StateVector exact = s.from_eigenbasis(c);
  const StateVector kr = krylov_propagate(h, psi, t);
  EXPECT_GT(std::norm(exact.dot(kr)), 1.0 - 1e-9);
}

TEST(RunDynamics, StrongPerturbationSlowsTheCrossLadder) {
  const DynamicsResult r = run_dynamics(plan_for(ModelKind::cross_ladder, 5, {0.0, 1.0}, 20.0, 0.1));
  // intermediate times, after the common initial drop
  EXPECT_GT(mean_between(r.series.at(1.0), 2.0, 12.0), mean_between(r.series.at(0.0), 2.0, 12.0));
}

TEST(RunDynamics, ChainLadderLongTimeValueDecreases) {
  const DynamicsResult r = run_dynamics(plan_for(ModelKind::chain_ladder, 5, {0.0, 0.25, 1.0}, 100.0, 0.5));
  const double c0 = estimate_longtime(r.series.at(0.0));
  const double c1 = estimate_longtime(r.series.at(0.25));
  const double c2 = estimate_longtime(r.series.at(1.0));
  EXPECT_GT(c0, c1);
  EXPECT_GT(c1, c2);
}

TEST(RunDynamics, CapacityErrors) {
  ExperimentPlan p = plan_for(ModelKind::cross_ladder, 5, {0.0}, 1.0, 0.5);
  p.ed_cap = 100;
  try {
    (void)run_dynamics(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::capacity);
  }
  // a window beyond the cap without soft windows is a capability error
  p.method = DynamicsMethod::krylov_typicality;
  p.window = EnergyWindow{0.0, 1.0};
  p.allow_soft_window = false;
  try {
    (void)run_dynamics(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::capability);
  }
}

TEST(RunDynamics, LatticeFilteredStateIsFinite) {
  ExperimentPlan p = plan_for(ModelKind::lattice, 3, {0.0, 0.5}, 5.0, 0.5);
  p.filter = GaussianFilter{};
  const DynamicsResult r = run_dynamics(p);
  for (const auto& [l, s] : r.series) {
    EXPECT_EQ(s.values.front(), 1.0);
    for (double v : s.values) EXPECT_TRUE(std::isfinite(v));
  }
}
