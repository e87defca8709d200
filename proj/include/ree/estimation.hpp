#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ree/core_model.hpp"
#include "ree/state_space.hpp"

namespace ree {

// Structural parameters estimated from a price/dividend series.
struct Theta {
  double alpha_D = 0.5;
  double alpha_I = 0.3;
  double alpha_Theta = 0.2;
  double sigma_0 = 0.1;
  double sigma_D = 0.1;
  double sigma_Theta = 0.5;
  double rho_I = 0.5;

  static constexpr std::size_t kSize = 7;
  static const std::array<const char*, kSize>& names();
  std::array<double, kSize> to_array() const;
  static Theta from_array(const std::array<double, kSize>& a);
};

// Model parameters implied by theta at the given rate and trend; beta and phi
// do not enter the likelihood.
ModelParams params_from_theta(const Theta& theta, double r, double xi);

enum class EstimationMode { TypeAConstrained, TypeBFree };
std::string to_string(EstimationMode m);

struct RateMode {
  bool free = false;
  double r = 0.05;  // fixed value, or starting value when free
};

struct Bound {
  double lo;
  double hi;
};

struct EstimationBounds {
  Bound alpha{1e-4, 10.0};
  Bound sigma{1e-5, 10.0};
  Bound rho{0.0, 2.0};
  Bound rate_excess{1e-4, 1.0};  // r - xi when the rate is free
  Bound coeff{-1e6, 1e6};
};

struct OptimizerSettings {
  int max_evals = 20000;
  double tol = 1e-7;  // simplex size in transformed coordinates
  int restarts = 3;
  std::uint64_t seed = 7;
};

struct StartPoint {
  Theta theta;
  double r = 0.05;
  PriceCoefficients coeffs;
};

// Prior diffuse only on the permanent dividend; see KalmanOptions.
KalmanOptions default_estimation_kalman();

struct EstimationSpec {
  EstimationMode mode = EstimationMode::TypeBFree;
  RateMode rate{};
  double xi = 0.0;
  Theta theta_init{};
  // p0 is free in both modes; the slopes are only used in TypeB mode.
  PriceCoefficients coeff_init{};
  EstimationBounds bounds{};
  // Further starting points; the simplex runs from each and keeps the best.
  std::vector<StartPoint> extra_starts;
  OptimizerSettings optimizer{};
  KalmanOptions kalman = default_estimation_kalman();

  void validate() const;
};

struct EstimationResult {
  EstimationMode mode = EstimationMode::TypeBFree;
  bool rate_free = false;
  Theta theta_hat;
  double r_hat = 0.0;
  PriceCoefficients coeffs_hat;
  double loglik = 0.0;
  std::vector<FilteredState> filtered_states;
  bool converged = false;
  int n_evals = 0;
};

// Coefficients implied by the mode: TypeA ties the slopes to the efficient rule.
PriceCoefficients mode_coefficients(EstimationMode mode, const Theta& theta, double r, double xi,
                                    const PriceCoefficients& free_coeffs);

double evaluate_loglik(const ObservationSeries& series, const Theta& theta, double r, double xi,
                       const PriceCoefficients& coeffs, const KalmanOptions& opt = default_estimation_kalman());

EstimationResult estimate_ml(const ObservationSeries& series, const EstimationSpec& spec);

enum class Rejection { None, At5, At1, At01 };
std::string to_string(Rejection r);

struct LrTestResult {
  double statistic = 0.0;
  int dof = 3;
  // Critical values at 5%, 1% and 0.1%.
  std::array<double, 3> thresholds{};
  Rejection decision = Rejection::None;
};

// Chi-square critical values; dof 3 uses the conventional rounded table.
std::array<double, 3> chi2_critical_values(int dof);

LrTestResult lr_test(double loglik_A, double loglik_B, int dof = 3);

}  // namespace ree
