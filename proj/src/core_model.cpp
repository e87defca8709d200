#include "ree/core_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ree/detail/equilibrium_terms.hpp"

namespace ree {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid model parameters: " + what);
}

}  // namespace

double rho_from_sigmas(double sigma_I, double sigma_0) {
  if (!(sigma_0 > 0.0)) throw std::invalid_argument("rho_I: sigma_0 must be positive");
  const double rho = sigma_I * sigma_I / (2.0 * sigma_0 * sigma_0);
  if (!(rho >= 0.0 && rho <= 2.0))
    throw std::invalid_argument("rho_I = " + std::to_string(rho) + " outside [0, 2]");
  return rho;
}

double ModelParams::rho_I() const {
  // A degenerate economy with no permanent-dividend risk carries no information loading.
  if (sigma_0 == 0.0 && sigma_I == 0.0) return 0.0;
  return rho_from_sigmas(sigma_I, sigma_0);
}

void ModelParams::validate() const {
  const double all[] = {r, xi, beta, phi, alpha_D, alpha_I, alpha_Theta,
                        sigma_0, sigma_D, sigma_I, sigma_Theta};
  for (double v : all) require(std::isfinite(v), "non-finite entry");
  require(r > xi, "r must exceed xi");
  require(alpha_D > 0.0, "alpha_D must be positive");
  require(alpha_I > 0.0, "alpha_I must be positive");
  require(alpha_Theta >= 0.0, "alpha_Theta must be non-negative");
  require(phi > 0.0, "phi must be positive");
  require(sigma_0 >= 0.0 && sigma_D >= 0.0 && sigma_I >= 0.0 && sigma_Theta >= 0.0,
          "volatilities must be non-negative");
  (void)rho_I();
}

ModelParams reference_params() { return ModelParams{}; }

SystemMatrices build_system_matrices(const ModelParams& p) {
  const double entries[] = {p.alpha_D, p.alpha_I, p.alpha_Theta, p.sigma_0, p.sigma_D, p.sigma_Theta};
  for (double v : entries) require(std::isfinite(v), "non-finite entry");
  const double rho = p.rho_I();
  SystemMatrices m;
  m.A(kD0, kInfo) = p.alpha_I;
  m.A(kD1, kD1) = -p.alpha_D;
  m.A(kInfo, kInfo) = -p.alpha_I;
  m.A(kNoise, kNoise) = -p.alpha_Theta;

  m.Bhalf(kD0, 0) = p.sigma_0;
  m.Bhalf(kD1, 1) = p.sigma_D;
  m.Bhalf(kInfo, 0) = -rho * p.sigma_0;
  m.Bhalf(kInfo, 2) = std::sqrt(std::max(0.0, 2.0 * rho - rho * rho)) * p.sigma_0;
  m.Bhalf(kNoise, 3) = p.sigma_Theta;
  return m;
}

Row5 PriceCoefficients::row() const {
  Row5 out;
  out << p0, pD0, pD1, pI, 1.0;
  return out;
}

bool PriceCoefficients::finite() const {
  return std::isfinite(p0) && std::isfinite(pD0) && std::isfinite(pD1) && std::isfinite(pI);
}

ReturnLoadings return_loadings(const ModelParams& params, const PriceCoefficients& coeffs) {
  const SystemMatrices sys = build_system_matrices(params);
  const auto terms = detail::loadings<double>(sys, params.effective_rate(), coeffs.row());
  return ReturnLoadings{terms.S, terms.Thalf, terms.T};
}

double instantaneous_price_variance(const ModelParams& params, const PriceCoefficients& coeffs) {
  return return_loadings(params, coeffs).T;
}

StateVector::StateVector(double D0, double D1, double I, double Theta) {
  z_ << 1.0, D0, D1, I, Theta;
}

}  // namespace ree
