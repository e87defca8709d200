#pragma once

#include <string>

#include "ree/core_model.hpp"

namespace ree {

// Informationally efficient price rule (closed form).
PriceCoefficients efficient_coefficients(const ModelParams& params);

// Two algebraically identical forms of the information loading.
double efficient_pI_difference(double r_eff, double alpha_I);
double efficient_pI_ratio(double r_eff, double alpha_I);

enum class EquilibriumType { TypeA, TypeB };

std::string to_string(EquilibriumType t);

struct EquilibriumClass {
  EquilibriumType tag = EquilibriumType::TypeB;
  // Largest absolute gap over the four coefficients.
  double max_coeff_deviation = 0.0;
  // Largest absolute gap over the three slopes only.
  double max_slope_deviation = 0.0;
};

inline constexpr double kDefaultClassifyTol = 1e-4;

enum class ClassifyBasis {
  AllCoefficients,  // p0 and the three slopes
  SlopesOnly,       // pD0, pD1, pI
};

// TypeA iff every coefficient in the chosen basis lies within tol of the
// efficient rule.
EquilibriumClass classify(const PriceCoefficients& candidate, const ModelParams& params,
                          double tol = kDefaultClassifyTol,
                          ClassifyBasis basis = ClassifyBasis::AllCoefficients);

}  // namespace ree
