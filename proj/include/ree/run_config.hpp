#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ree/estimation.hpp"
#include "ree/market_data.hpp"
#include "ree/riccati_solver.hpp"

namespace ree {

// a:b:n, n evenly spaced points from a to b inclusive.
std::vector<double> parse_grid(const std::string& spec);

enum class ModeSelection { TypeA, TypeB, Both };

struct RunConfig {
  std::uint64_t seed = 20100601;
  bool reproducible = false;
  std::string out_dir = "out";

  ModelParams model = reference_params();
  SolverConfig solver{};

  std::string phi_grid = "0.5:1.0:2";
  std::string sigma_grid = "0.5:1.0:2";

  // Simulation: coefficients default to the efficient rule of `model`.
  std::size_t sim_length = 300;
  double sim_dt = 1.0;
  bool sim_efficient = true;
  PriceCoefficients sim_coeffs{};

  // Estimation.
  std::string data_path;
  ModeSelection mode = ModeSelection::Both;
  RateMode rate{false, 0.05};
  Theta theta_init{};
  PriceCoefficients coeff_init{0.0, 20.0, 1.5, 5.0};
  OptimizerSettings optimizer{};
  bool diffuse_all_states = false;
  double diffuse_variance = 1e6;
  bool include_constant = true;
  int lr_dof = 3;

  // Ingestion.
  std::string raw_path;
  ColumnMapping columns{};
  GrowthMethod growth = GrowthMethod::Log;
  std::optional<double> xi_override;

  // Comparison.
  std::string report_a;
  std::string report_b;

  // Throws std::invalid_argument on unknown keys or malformed values.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  void set(const std::string& section, const std::string& key, const std::string& value);
  // Effective configuration in the same format `parse` accepts.
  std::string dump() const;

  KalmanOptions kalman_options() const;
  EstimationSpec estimation_spec(EstimationMode m, double xi) const;
};

ModeSelection parse_mode(const std::string& s);
RateMode parse_rate(const std::string& s);

}  // namespace ree
