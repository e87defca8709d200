#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ree/efficient_price.hpp"

using namespace ree;

TEST(EfficientCoefficients, ReferenceSlopes) {
  const PriceCoefficients c = efficient_coefficients(reference_params());
  EXPECT_NEAR(c.pD0, 25.641, 1e-3);
  EXPECT_NEAR(c.pD1, 1.855, 1e-3);
  EXPECT_NEAR(c.pI, 18.446, 1e-3);
}

TEST(EfficientCoefficients, ClosedFormsByHand) {
  const ModelParams p = reference_params();
  const double R = 0.05 - 0.011;
  const PriceCoefficients c = efficient_coefficients(p);
  EXPECT_NEAR(c.pD0, 1.0 / R, 1e-12);
  EXPECT_NEAR(c.pD1, 1.0 / (R + 0.5), 1e-12);
  EXPECT_NEAR(c.pI, 1.0 / R - 1.0 / (R + 0.1), 1e-12);
}

TEST(EfficientCoefficients, ConstantAtReferenceAndLowInformationVolatility) {
  // rho = 2 at the reference set; rho = 0.32 when sigma_I = 0.4.
  EXPECT_NEAR(efficient_coefficients(reference_params()).p0, -20.3137, 1e-3);
  ModelParams p = reference_params();
  p.sigma_I = 0.4;
  EXPECT_NEAR(efficient_coefficients(p).p0, -91.773, 1e-3);
}

TEST(EfficientCoefficients, Limits) {
  ModelParams p = reference_params();
  p.alpha_D = 1e12;
  EXPECT_LT(efficient_coefficients(p).pD1, 1e-11);
  p = reference_params();
  p.alpha_I = 0.0;
  EXPECT_EQ(efficient_coefficients(p).pI, 0.0);
  p = reference_params();
  p.phi = 0.0;
  EXPECT_EQ(efficient_coefficients(p).p0, 0.0);
}

TEST(EfficientCoefficients, RejectsRateBelowTrend) {
  ModelParams p = reference_params();
  p.r = 0.01;
  EXPECT_THROW(efficient_coefficients(p), std::invalid_argument);
}

TEST(EfficientCoefficients, InformationLoadingFormsAgree) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> ur(1e-3, 0.2), ua(0.0, 5.0);
  for (int k = 0; k < 1000; ++k) {
    const double R = ur(g), a = ua(g);
    EXPECT_NEAR(efficient_pI_difference(R, a), efficient_pI_ratio(R, a),
                1e-12 * (1.0 + efficient_pI_ratio(R, a)));
  }
}

TEST(EfficientCoefficients, PriceDriftCancelsDividendFlows) {
  // Under the efficient rule the expected return carries no D0, D1 or I
  // exposure; evaluated elementwise from the drift matrix.
  std::mt19937_64 g(8);
  for (int k = 0; k < 200; ++k) {
    ModelParams p = oracle::random_params(g);
    p.r = 0.05;
    p.xi = 0.011;
    const PriceCoefficients c = efficient_coefficients(p);
    const double pbar[5] = {c.p0, c.pD0, c.pD1, c.pI, 1.0};
    const SystemMatrices m = build_system_matrices(p);
    const double Mrow[5] = {0, 1, 1, 0, 0};
    for (int j : {kD0, kD1, kInfo}) {
      double s = Mrow[j] - (p.r - p.xi) * pbar[j];
      for (int i = 0; i < 5; ++i) s += pbar[i] * m.A(i, j);
      EXPECT_NEAR(s, 0.0, 1e-10);
    }
    const ReturnLoadings l = return_loadings(p, c);
    EXPECT_NEAR(l.S(kD0), 0.0, 1e-10);
    EXPECT_NEAR(l.S(kD1), 0.0, 1e-10);
    EXPECT_NEAR(l.S(kInfo), 0.0, 1e-10);
  }
}

TEST(Classify, EfficientRuleIsTypeA) {
  const ModelParams p = reference_params();
  for (double tol : {1e-12, 1e-4, 1.0}) {
    const EquilibriumClass c = classify(efficient_coefficients(p), p, tol);
    EXPECT_EQ(c.tag, EquilibriumType::TypeA);
    EXPECT_EQ(c.max_coeff_deviation, 0.0);
  }
}

TEST(Classify, HighRiskAversionTopRowIsTypeB) {
  ModelParams p = reference_params();
  p.phi = 1.0;
  const PriceCoefficients row{-2664.632, -89.311, 1.855, -13.384};
  EXPECT_EQ(classify(row, p).tag, EquilibriumType::TypeB);
  EXPECT_EQ(classify(row, p, kDefaultClassifyTol, ClassifyBasis::SlopesOnly).tag, EquilibriumType::TypeB);
}

TEST(Classify, DeviationInOneSlope) {
  const ModelParams p = reference_params();
  const double tol = 1e-4;
  PriceCoefficients c = efficient_coefficients(p);
  c.pI += 10.0 * tol;
  const EquilibriumClass cls = classify(c, p, tol);
  EXPECT_EQ(cls.tag, EquilibriumType::TypeB);
  EXPECT_NEAR(cls.max_coeff_deviation, 10.0 * tol, 1e-12);
  EXPECT_NEAR(cls.max_slope_deviation, 10.0 * tol, 1e-12);
}

TEST(Classify, SlopeBasisIgnoresIntercept) {
  const ModelParams p = reference_params();
  PriceCoefficients c = efficient_coefficients(p);
  c.p0 += 5.0;
  EXPECT_EQ(classify(c, p).tag, EquilibriumType::TypeB);
  EXPECT_EQ(classify(c, p, kDefaultClassifyTol, ClassifyBasis::SlopesOnly).tag, EquilibriumType::TypeA);
}

TEST(Classify, NonFiniteIsTypeB) {
  const ModelParams p = reference_params();
  PriceCoefficients c = efficient_coefficients(p);
  c.pD1 = std::nan("");
  EXPECT_EQ(classify(c, p).tag, EquilibriumType::TypeB);
  EXPECT_THROW(classify(c, p, 0.0), std::invalid_argument);
}
