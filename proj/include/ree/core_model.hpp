#pragma once

#include <Eigen/Dense>

namespace ree {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Row5 = Eigen::Matrix<double, 1, 5>;
using Row4 = Eigen::Matrix<double, 1, 4>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat54 = Eigen::Matrix<double, 5, 4>;

// State ordering used by every 5-dimensional object.
enum StateIndex : int { kConst = 0, kD0 = 1, kD1 = 2, kInfo = 3, kNoise = 4 };

struct ModelParams {
  double r = 0.05;
  double xi = 0.011;
  double beta = 0.30;
  double phi = 0.5;
  double alpha_D = 0.5;
  double alpha_I = 0.1;
  double alpha_Theta = 0.05;
  double sigma_0 = 0.5;
  double sigma_D = 0.1;
  double sigma_I = 1.0;
  double sigma_Theta = 0.5;

  // Discount rate on the de-trended economy, r - xi.
  double effective_rate() const { return r - xi; }
  double rho_I() const;
  // Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

// Reference parameter set of the numerical section (tables header).
ModelParams reference_params();

double rho_from_sigmas(double sigma_I, double sigma_0);

struct SystemMatrices {
  Mat5 A = Mat5::Zero();
  Mat54 Bhalf = Mat54::Zero();
};

SystemMatrices build_system_matrices(const ModelParams& params);

struct PriceCoefficients {
  double p0 = 0.0;
  double pD0 = 0.0;
  double pD1 = 0.0;
  double pI = 0.0;

  // (p0, pD0, pD1, pI, 1): the noise loading is fixed at one.
  Row5 row() const;
  bool finite() const;
};

struct ReturnLoadings {
  Row5 S = Row5::Zero();
  Row4 Thalf = Row4::Zero();
  double T = 0.0;
};

ReturnLoadings return_loadings(const ModelParams& params, const PriceCoefficients& coeffs);

// Instantaneous variance of dP.
double instantaneous_price_variance(const ModelParams& params, const PriceCoefficients& coeffs);

class StateVector {
 public:
  StateVector(double D0, double D1, double I, double Theta);
  const Vec5& z() const { return z_; }

 private:
  Vec5 z_;
};

}  // namespace ree
