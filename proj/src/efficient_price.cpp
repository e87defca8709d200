#include "ree/efficient_price.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ree {

double efficient_pI_difference(double r_eff, double alpha_I) {
  return 1.0 / r_eff - 1.0 / (r_eff + alpha_I);
}

double efficient_pI_ratio(double r_eff, double alpha_I) {
  return alpha_I / (r_eff * (r_eff + alpha_I));
}

PriceCoefficients efficient_coefficients(const ModelParams& p) {
  if (!(p.r > p.xi)) throw std::invalid_argument("efficient_coefficients: r must exceed xi");
  const double R = p.effective_rate();
  const double rho = p.rho_I();
  const double RaI = R + p.alpha_I;
  const double RaD = R + p.alpha_D;

  PriceCoefficients c;
  c.pD0 = 1.0 / R;
  c.pD1 = 1.0 / RaD;
  c.pI = efficient_pI_ratio(R, p.alpha_I);
  const double permanent =
      (RaI * RaI - 2.0 * R * p.alpha_I * rho) * p.sigma_0 * p.sigma_0 / (R * R * RaI * RaI);
  const double transitory = p.sigma_D * p.sigma_D / (RaD * RaD);
  c.p0 = -(permanent + transitory) * (p.r / R) * p.phi;
  return c;
}

std::string to_string(EquilibriumType t) {
  return t == EquilibriumType::TypeA ? "TypeA" : "TypeB";
}

EquilibriumClass classify(const PriceCoefficients& candidate, const ModelParams& params, double tol,
                          ClassifyBasis basis) {
  if (!(tol > 0.0)) throw std::invalid_argument("classify: tol must be positive");
  const PriceCoefficients e = efficient_coefficients(params);
  EquilibriumClass out;
  out.max_slope_deviation = std::max({std::abs(candidate.pD0 - e.pD0), std::abs(candidate.pD1 - e.pD1),
                                      std::abs(candidate.pI - e.pI)});
  out.max_coeff_deviation = std::max(out.max_slope_deviation, std::abs(candidate.p0 - e.p0));
  const double dev =
      basis == ClassifyBasis::SlopesOnly ? out.max_slope_deviation : out.max_coeff_deviation;
  out.tag = candidate.finite() && dev <= tol ? EquilibriumType::TypeA : EquilibriumType::TypeB;
  return out;
}

}  // namespace ree
