#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ree/estimation.hpp"
#include "ree/market_data.hpp"
#include "ree/riccati_solver.hpp"

namespace ree {

// Fixed-precision number formatting shared by every CSV writer.
std::string format_number(double v);

void write_candidates_csv(std::ostream& os, const std::vector<CandidateEquilibrium>& cands);
std::string candidates_json(const std::vector<CandidateEquilibrium>& cands);
// Ranked table: class, utility, p0, pD0, pD1, pI.
void print_candidate_table(std::ostream& os, const std::vector<CandidateEquilibrium>& cands);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records);
std::string sweep_json(const std::vector<SweepRecord>& records);

void write_estimation_csv(std::ostream& os, const std::vector<EstimationResult>& results, std::size_t n_obs);
// Rows keyed by column name; used to compare saved reports.
std::vector<std::map<std::string, std::string>> read_csv_records(const std::string& path);
// Rows: rate assumption; columns: mode, log-likelihood, LR statistic.
void print_estimation_table(std::ostream& os, const std::vector<EstimationResult>& results, int dof);

void print_regression(std::ostream& os, const RegressionReport& r, const std::string& regressor,
                      const std::string& regressand);

}  // namespace ree
