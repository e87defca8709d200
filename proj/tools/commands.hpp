#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ree/estimation.hpp"
#include "ree/run_config.hpp"

namespace ree::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kEmpty = 2 };

// Parses argv, applies flag overrides on top of --config and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct CompareVerdict {
  double loglik_A = 0.0;
  double loglik_B = 0.0;
  LrTestResult lr;
};

// Log-likelihood of the constrained model from report_a and of the free
// model from report_b (rows are matched on the mode column when present).
CompareVerdict compare_reports(const std::string& report_a, const std::string& report_b, int dof);
std::string verdict_line(const CompareVerdict& v);

// Runs the configured estimation modes on a series; TypeB also starts from
// the TypeA optimum so the free fit nests the constrained one.
std::vector<EstimationResult> estimate_modes(const ObservationSeries& series, const RunConfig& cfg, double xi);

}  // namespace ree::cli
