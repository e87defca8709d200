#include <gtest/gtest.h>

#include <cmath>

#include "commands.hpp"
#include "ree/efficient_price.hpp"
#include "ree/estimation.hpp"

using namespace ree;

namespace {

const Theta kTruth{0.5, 0.3, 0.5, 0.02, 0.03, 0.5, 1.99};
const PriceCoefficients kTypeB{-0.5, 20.0, 5.0, 10.0};

ObservationSeries simulated(const Theta& th, const PriceCoefficients& c, std::size_t T, std::uint64_t seed) {
  return simulate(exact_discretize(params_from_theta(th, 0.05, 0.01), c, 1.0), T, seed).series;
}

EstimationSpec spec_for(EstimationMode mode) {
  EstimationSpec s;
  s.mode = mode;
  s.rate = RateMode{false, 0.05};
  s.xi = 0.01;
  s.theta_init = kTruth;
  s.coeff_init = kTypeB;
  return s;
}

}  // namespace

TEST(LrTest, ReferenceRows) {
  const LrTestResult a = lr_test(540.96, 636.39, 3);
  EXPECT_NEAR(a.statistic, 190.86, 1e-9);
  EXPECT_EQ(a.decision, Rejection::At01);
  EXPECT_NEAR(lr_test(487.17, 638.58, 3).statistic, 302.82, 1e-9);
  const LrTestResult z = lr_test(100.0, 100.0, 3);
  EXPECT_EQ(z.statistic, 0.0);
  EXPECT_EQ(z.decision, Rejection::None);
}

TEST(LrTest, ThresholdsAndLevels) {
  const auto cv = chi2_critical_values(3);
  EXPECT_EQ(cv[0], 7.82);
  EXPECT_EQ(cv[1], 11.35);
  EXPECT_EQ(cv[2], 16.27);
  const auto one = chi2_critical_values(1);
  EXPECT_NEAR(one[0], 3.841459, 1e-6);
  EXPECT_NEAR(one[1], 6.634897, 1e-6);
  EXPECT_NEAR(one[2], 10.827566, 1e-6);
  EXPECT_EQ(lr_test(0.0, 4.0, 3).decision, Rejection::At5);
  EXPECT_EQ(lr_test(0.0, 6.0, 3).decision, Rejection::At1);
  EXPECT_EQ(lr_test(0.0, 3.0, 3).decision, Rejection::None);
  EXPECT_EQ(lr_test(5.0, 0.0, 3).statistic, -10.0);
  EXPECT_EQ(to_string(Rejection::At01), "reject at 0.1%");
}

TEST(LrTest, ShiftInvariance) {
  for (double c : {-1000.0, -3.5, 0.0, 17.25, 1e4}) {
    EXPECT_NEAR(lr_test(540.96 + c, 636.39 + c, 3).statistic, 190.86, 1e-8);
  }
}

TEST(Theta, ArrayRoundTripAndParams) {
  const Theta t{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  const Theta u = Theta::from_array(t.to_array());
  EXPECT_EQ(u.to_array(), t.to_array());
  EXPECT_STREQ(Theta::names()[6], "rho_I");
  const ModelParams p = params_from_theta(t, 0.06, 0.01);
  EXPECT_NEAR(p.rho_I(), 0.7, 1e-14);
  EXPECT_EQ(p.alpha_D, 0.1);
  EXPECT_EQ(p.sigma_Theta, 0.6);
}

TEST(ModeCoefficients, TypeATiesSlopes) {
  const PriceCoefficients free{-3.0, 1.0, 2.0, 3.0};
  const PriceCoefficients a = mode_coefficients(EstimationMode::TypeAConstrained, kTruth, 0.05, 0.01, free);
  const PriceCoefficients e = efficient_coefficients(params_from_theta(kTruth, 0.05, 0.01));
  EXPECT_EQ(a.p0, -3.0);
  EXPECT_DOUBLE_EQ(a.pD0, e.pD0);
  EXPECT_DOUBLE_EQ(a.pD1, e.pD1);
  EXPECT_DOUBLE_EQ(a.pI, e.pI);
  const PriceCoefficients b = mode_coefficients(EstimationMode::TypeBFree, kTruth, 0.05, 0.01, free);
  EXPECT_EQ(b.row(), free.row());
}

TEST(EstimateMl, TinySeriesIsFinite) {
  const ObservationSeries s = simulated(kTruth, kTypeB, 5, 3);
  EstimationSpec spec = spec_for(EstimationMode::TypeBFree);
  spec.optimizer.max_evals = 15;
  spec.optimizer.restarts = 0;
  const EstimationResult r = estimate_ml(s, spec);
  EXPECT_TRUE(std::isfinite(r.loglik));
  EXPECT_FALSE(r.converged);
}

TEST(EstimateMl, ImprovesOnTruthAndReproducesLoglik) {
  const ObservationSeries s = simulated(kTruth, kTypeB, 200, 11);
  const EstimationSpec spec = spec_for(EstimationMode::TypeBFree);
  const EstimationResult r = estimate_ml(s, spec);
  EXPECT_TRUE(r.converged);
  EXPECT_GE(r.loglik, evaluate_loglik(s, kTruth, 0.05, 0.01, kTypeB, spec.kalman) - 1e-6);
  EXPECT_NEAR(evaluate_loglik(s, r.theta_hat, r.r_hat, 0.01, r.coeffs_hat, spec.kalman), r.loglik, 1e-9);
  EXPECT_EQ(r.filtered_states.size(), s.size());
}

TEST(EstimateMl, TypeBNestsTypeA) {
  const Theta truth = kTruth;
  const PriceCoefficients eff = efficient_coefficients(params_from_theta(truth, 0.05, 0.01));
  const ObservationSeries s = simulated(truth, PriceCoefficients{-0.5, eff.pD0, eff.pD1, eff.pI}, 200, 21);
  RunConfig cfg;
  cfg.rate = RateMode{false, 0.05};
  cfg.theta_init = truth;
  cfg.coeff_init = PriceCoefficients{-0.5, eff.pD0, eff.pD1, eff.pI};
  const auto results = cli::estimate_modes(s, cfg, 0.01);
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[0].mode, EstimationMode::TypeAConstrained);
  EXPECT_EQ(results[1].mode, EstimationMode::TypeBFree);
  EXPECT_GE(results[1].loglik, results[0].loglik - 1e-3);
  const PriceCoefficients ca = results[0].coeffs_hat;
  const PriceCoefficients ea = efficient_coefficients(params_from_theta(results[0].theta_hat, 0.05, 0.01));
  EXPECT_NEAR(ca.pD0, ea.pD0, 1e-12 * ea.pD0);
  EXPECT_NEAR(ca.pI, ea.pI, 1e-9 * (1.0 + ea.pI));
}

TEST(EstimateMl, FreeRateStaysAboveTrend) {
  const ObservationSeries s = simulated(kTruth, kTypeB, 120, 5);
  EstimationSpec spec = spec_for(EstimationMode::TypeAConstrained);
  spec.rate = RateMode{true, 0.05};
  spec.optimizer.restarts = 1;
  const EstimationResult r = estimate_ml(s, spec);
  EXPECT_TRUE(r.rate_free);
  EXPECT_GT(r.r_hat, spec.xi);
  EXPECT_TRUE(std::isfinite(r.loglik));
}

TEST(EstimationSpec, RejectsInvalid) {
  const ObservationSeries s = simulated(kTruth, kTypeB, 20, 3);
  EstimationSpec spec = spec_for(EstimationMode::TypeBFree);
  spec.theta_init.rho_I = 2.5;
  EXPECT_THROW(estimate_ml(s, spec), std::invalid_argument);
  spec = spec_for(EstimationMode::TypeBFree);
  spec.rate.r = 0.005;
  EXPECT_THROW(estimate_ml(s, spec), std::invalid_argument);
}
