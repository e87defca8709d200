#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ree/core_model.hpp"

namespace ree {

// Exact discrete analog of the continuous model observed at spacing dt.
// For the economy the state is ordered (D0, I, D1, Theta) and the observation
// is (price, dividend); the filter itself accepts any dimensions.
struct StateSpaceModel {
  Eigen::MatrixXd F;
  Eigen::MatrixXd Omega;
  Eigen::VectorXd measurement_intercept;
  Eigen::MatrixXd H;
  double dt = 1.0;

  Eigen::Index state_dim() const { return F.rows(); }
  Eigen::Index obs_dim() const { return H.rows(); }
  void validate() const;
};

enum DiscreteState : int { kDsD0 = 0, kDsInfo = 1, kDsD1 = 2, kDsNoise = 3 };

// 4-state continuous drift and diffusion covariance in discrete-state order.
Eigen::Matrix4d continuous_drift(const ModelParams& params);
Eigen::Matrix4d diffusion_covariance(const ModelParams& params);

StateSpaceModel exact_discretize(const ModelParams& params, const PriceCoefficients& coeffs, double dt);

// Transition and innovation covariance of dz = A z dt + dW, Cov(dW) = Sigma dt,
// over one interval of length dt.
void discretize_ou(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, double dt, Eigen::MatrixXd& F,
                   Eigen::MatrixXd& Omega);

struct SeriesMeta {
  std::string source;
  double xi = 0.0;
  double normalization = 1.0;
  std::string source_hash;
};

struct ObservationSeries {
  std::vector<double> times;
  std::vector<double> price;
  std::vector<double> dividend;
  SeriesMeta meta;

  std::size_t size() const { return times.size(); }
  // Spacing between consecutive observations.
  double dt() const;
  void validate() const;
  // Observations as a 2 x T matrix (price row, dividend row).
  Eigen::MatrixXd as_matrix() const;
};

struct KalmanOptions {
  // With an empty mask the prior covariance at t = 1 is diffuse_variance * I
  // plus Omega. With a mask, the large variance sits on the unit-root
  // direction through each flagged state (stationary states that track it
  // move along) and the deviations start at their stationary covariance.
  double diffuse_variance = 1e6;
  std::vector<bool> diffuse_mask;
  bool include_constant = true;
};

// Mask flagging only the permanent dividend as nonstationary.
std::vector<bool> permanent_dividend_mask();

// Solves V = F V F' + Omega for a stable F.
Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Omega);

// Prior covariance of the state at t = 1.
Eigen::MatrixXd initial_covariance(const StateSpaceModel& model, const KalmanOptions& opt);

struct FilteredState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Throws std::domain_error when an innovation covariance is not positive definite.
double kalman_loglik(const StateSpaceModel& model, const Eigen::MatrixXd& y, const KalmanOptions& opt = {});
double kalman_loglik(const StateSpaceModel& model, const ObservationSeries& series,
                     const KalmanOptions& opt = {});

std::vector<FilteredState> filter_states(const StateSpaceModel& model, const Eigen::MatrixXd& y,
                                         const KalmanOptions& opt = {});
std::vector<FilteredState> filter_states(const StateSpaceModel& model, const ObservationSeries& series,
                                         const KalmanOptions& opt = {});

// Observations and the latent path that generated them.
struct Simulation {
  ObservationSeries series;
  Eigen::MatrixXd states;  // state_dim x T
};

// z_0 = 0, z_t = F z_{t-1} + e_t with e_t ~ N(0, Omega); observations y_t
// from the measurement map. Times are t * dt for t = 1..T.
Simulation simulate(const StateSpaceModel& model, std::size_t T, std::uint64_t seed);

}  // namespace ree
