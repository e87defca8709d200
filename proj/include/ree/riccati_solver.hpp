#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ree/core_model.hpp"
#include "ree/efficient_price.hpp"

namespace ree {

struct RiccatiBlocks {
  Mat5 U = Mat5::Zero();
  Mat5 X = Mat5::Zero();
  Mat5 Y = Mat5::Zero();
};

RiccatiBlocks build_riccati_blocks(const ModelParams& params, const PriceCoefficients& coeffs);

// L U L - L X - X' L - Y
Mat5 riccati_residual(const Mat5& L, const RiccatiBlocks& blocks);

// Demand loadings minus the clearing target (1, 0, 0, 0, 1). Only the first
// four components are imposed by the solver; the last one is reported as a
// diagnostic (see CandidateEquilibrium::noise_clearing_gap).
Vec5 clearing_residual(const ModelParams& params, const PriceCoefficients& coeffs, const Mat5& L);

double lambda_closed_form(const ModelParams& params, const Mat5& L);
double essential_utility(const Mat5& L, double lambda);
double optimal_consumption(const ModelParams& params, const Mat5& L, double lambda,
                           const StateVector& z, double wealth);

struct Interval {
  double lo = -10.0;
  double hi = 10.0;
};

struct SolverConfig {
  int n_starts = 1000;
  Interval coeff_range{};
  Interval L_range{};
  int newton_max_iter = 200;
  int max_backtracks = 30;
  double residual_tol = 1e-8;
  double dedupe_tol = 1e-5;
  double classify_tol = kDefaultClassifyTol;
  std::uint64_t rng_seed = 20100601;
  // Adds one start at the efficient coefficients ahead of the random ones.
  bool closed_form_start = true;
  // Jacobian reciprocal condition below which a root is flagged as lying on
  // a solution curve rather than being isolated.
  double isolation_rcond = 1e-12;
  // Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

struct CandidateEquilibrium {
  PriceCoefficients coeffs;
  Mat5 L = Mat5::Zero();
  double lambda = 0.0;
  double essential_utility = 0.0;
  double riccati_residual_norm = 0.0;
  double clearing_residual_norm = 0.0;
  // Demand loading on the noise state minus one.
  double noise_clearing_gap = 0.0;
  double T_value = 0.0;
  EquilibriumClass cls;
  // False when the root sits on a continuum of solutions.
  bool isolated = true;
  double jacobian_rcond = 0.0;
  int hits = 0;
  int first_start = -1;
};

struct StartDiagnostics {
  int start_index = 0;
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;
  std::string outcome;
};

struct SolveReport {
  std::vector<CandidateEquilibrium> candidates;
  std::vector<StartDiagnostics> starts;
};

// Multi-start damped Newton on the Riccati and clearing system; candidates
// sorted by essential utility, highest first.
std::vector<CandidateEquilibrium> solve_candidates(const ModelParams& params, const SolverConfig& config);
SolveReport solve_candidates_with_diagnostics(const ModelParams& params, const SolverConfig& config);

// Refines one starting guess; returns a candidate if it converges and passes
// the acceptance checks.
std::optional<CandidateEquilibrium> solve_from(const ModelParams& params, const PriceCoefficients& coeffs,
                                               const Mat5& L, const SolverConfig& config,
                                               StartDiagnostics* diag = nullptr);

// Recomputes residuals, utility and classification for a given solution.
CandidateEquilibrium evaluate_candidate(const ModelParams& params, const PriceCoefficients& coeffs,
                                        const Mat5& L, double classify_tol = kDefaultClassifyTol);

enum class Dominance { TypeA, TypeB, None };
std::string to_string(Dominance d);

struct SweepRecord {
  double phi = 0.0;
  double sigma_Theta = 0.0;
  std::optional<double> best_typeA_utility;
  std::optional<double> best_typeB_utility;
  Dominance dominant = Dominance::None;
  std::size_t n_candidates = 0;
  std::string error;
};

std::vector<SweepRecord> sweep(const ModelParams& base, const std::vector<double>& phi_grid,
                               const std::vector<double>& sigma_theta_grid, const SolverConfig& config);

SweepRecord summarize_node(double phi, double sigma_Theta, const std::vector<CandidateEquilibrium>& cands);

}  // namespace ree
