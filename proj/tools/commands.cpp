#include "commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "ree/efficient_price.hpp"
#include "ree/market_data.hpp"
#include "ree/report.hpp"
#include "ree/state_space.hpp"

namespace fs = std::filesystem;

namespace ree::cli {

namespace {

// Thrown for configuration and usage problems (exit code 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string preamble(const RunConfig& cfg, const std::string& command) {
  if (cfg.reproducible) return {};
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return "# generated " + std::string(buf) + " by ree " + command + "\n";
}

fs::path prepare_out(const RunConfig& cfg, const std::string& command) {
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream f(dir / "config.ini", std::ios::binary);
  if (!f) throw UsageError("cannot write to output directory " + dir.string());
  f << preamble(cfg, command) << "# effective configuration; rerun with --config\n" << cfg.dump();
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path not set");
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

SolverConfig solver_config(const RunConfig& cfg) {
  SolverConfig s = cfg.solver;
  s.rng_seed = cfg.seed;
  return s;
}

void validate_model(const RunConfig& cfg) {
  try {
    cfg.model.validate();
    cfg.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate_model(cfg);
  const fs::path dir = prepare_out(cfg, "solve");
  const auto cands = solve_candidates(cfg.model, solver_config(cfg));

  std::ostringstream csv, table;
  csv << preamble(cfg, "solve");
  write_candidates_csv(csv, cands);
  write_file(dir / "candidates.csv", csv.str());
  write_file(dir / "candidates.json", candidates_json(cands) + "\n");
  print_candidate_table(table, cands);
  write_file(dir / "summary.txt", preamble(cfg, "solve") + table.str());
  if (cands.empty()) {
    err << "no candidates\n";
    return kEmpty;
  }
  out << table.str();
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate_model(cfg);
  std::vector<double> phis, sigmas;
  try {
    phis = parse_grid(cfg.phi_grid);
    sigmas = parse_grid(cfg.sigma_grid);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = prepare_out(cfg, "sweep");
  const auto records = sweep(cfg.model, phis, sigmas, solver_config(cfg));
  std::ostringstream csv;
  csv << preamble(cfg, "sweep");
  write_sweep_csv(csv, records);
  write_file(dir / "sweep.csv", csv.str());
  write_file(dir / "sweep.json", sweep_json(records) + "\n");
  out << csv.str();
  std::size_t failed = 0;
  for (const auto& r : records) {
    if (!r.error.empty()) {
      ++failed;
      err << "warning: node phi=" << r.phi << " sigma_theta=" << r.sigma_Theta << " failed: " << r.error << '\n';
    }
  }
  bool any = false;
  for (const auto& r : records) any = any || r.n_candidates > 0;
  return any ? kOk : kEmpty;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  validate_model(cfg);
  if (cfg.sim_length < 1) throw UsageError("simulate.length must be >= 1");
  if (!(cfg.sim_dt > 0.0)) throw UsageError("simulate.dt must be positive");
  const PriceCoefficients coeffs = cfg.sim_efficient ? efficient_coefficients(cfg.model) : cfg.sim_coeffs;
  const StateSpaceModel model = exact_discretize(cfg.model, coeffs, cfg.sim_dt);
  Simulation sim = simulate(model, cfg.sim_length, cfg.seed);
  sim.series.meta.xi = cfg.model.xi;
  const fs::path dir = prepare_out(cfg, "simulate");
  const fs::path path = dir / "series.csv";
  write_series_csv(sim.series, path.string(), preamble(cfg, "simulate"));
  write_series_metadata(sim.series, path.string() + ".meta.json");
  out << "wrote " << sim.series.size() << " observations to " << path.string() << '\n';
  return kOk;
}

int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require_file(cfg.raw_path, "raw data");
  RawSeries raw;
  try {
    raw = load_csv(cfg.raw_path, cfg.columns);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const double xi = cfg.xi_override ? *cfg.xi_override : estimate_growth_rate(raw, cfg.growth);
  const ObservationSeries series = detrend_and_normalize(raw, xi);
  const fs::path dir = prepare_out(cfg, "ingest");
  const fs::path path = dir / "series.csv";
  write_series_csv(series, path.string(), preamble(cfg, "ingest"));
  write_series_metadata(series, path.string() + ".meta.json");

  std::ostringstream summary;
  summary << "observations " << series.size() << ", xi " << format_number(xi) << ", normalization "
          << format_number(series.meta.normalization) << '\n';
  if (series.size() >= 3) {
    print_regression(summary, cointegrating_ols(series, xi, RegressionDirection::DividendOnPrice), "price",
                     "dividend");
    print_regression(summary, cointegrating_ols(series, xi, RegressionDirection::PriceOnDividend), "dividend",
                     "price");
  }
  write_file(dir / "summary.txt", preamble(cfg, "ingest") + summary.str());
  out << summary.str();
  return kOk;
}

std::vector<EstimationResult> estimate_modes(const ObservationSeries& series, const RunConfig& cfg, double xi) {
  std::vector<EstimationResult> results;
  const bool want_a = cfg.mode != ModeSelection::TypeB;
  const bool want_b = cfg.mode != ModeSelection::TypeA;
  std::optional<EstimationResult> a;
  if (want_a) {
    a = estimate_ml(series, cfg.estimation_spec(EstimationMode::TypeAConstrained, xi));
    results.push_back(*a);
  }
  if (want_b) {
    EstimationSpec spec = cfg.estimation_spec(EstimationMode::TypeBFree, xi);
    if (a) spec.extra_starts.push_back({a->theta_hat, a->r_hat, a->coeffs_hat});
    results.push_back(estimate_ml(series, spec));
  }
  return results;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.data_path, "series");
  ObservationSeries series;
  try {
    series = read_series_csv(cfg.data_path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const double xi = cfg.xi_override ? *cfg.xi_override
                    : fs::exists(cfg.data_path + ".meta.json") ? series.meta.xi
                                                                 : cfg.model.xi;
  if (!(cfg.rate.r > xi)) throw UsageError("rate must exceed xi = " + format_number(xi));
  const fs::path dir = prepare_out(cfg, "estimate");
  const auto results = estimate_modes(series, cfg, xi);

  std::ostringstream csv, table;
  csv << preamble(cfg, "estimate");
  write_estimation_csv(csv, results, series.size());
  write_file(dir / "estimation.csv", csv.str());
  print_estimation_table(table, results, cfg.lr_dof);
  write_file(dir / "summary.txt", preamble(cfg, "estimate") + table.str());
  for (const auto& r : results) {
    std::ostringstream fcsv;
    fcsv << preamble(cfg, "estimate") << "time,D0,I,D1,Theta\n";
    for (std::size_t t = 0; t < r.filtered_states.size(); ++t) {
      const auto& m = r.filtered_states[t].mean;
      fcsv << format_number(series.times[t]);
      for (Eigen::Index i = 0; i < m.size(); ++i) fcsv << ',' << format_number(m(i));
      fcsv << '\n';
    }
    write_file(dir / ("filtered_" + to_string(r.mode) + ".csv"), fcsv.str());
    if (!r.converged) err << "warning: " << to_string(r.mode) << " estimation did not converge\n";
  }
  out << table.str();
  return kOk;
}

CompareVerdict compare_reports(const std::string& report_a, const std::string& report_b, int dof) {
  auto pick = [](const std::string& path, const std::string& mode) {
    const auto rows = read_csv_records(path);
    if (rows.empty()) throw UsageError(path + ": no rows");
    const std::map<std::string, std::string>* chosen = &rows.front();
    for (const auto& r : rows) {
      auto it = r.find("mode");
      if (it != r.end() && it->second == mode) chosen = &r;
    }
    auto ll = chosen->find("loglik");
    if (ll == chosen->end()) throw UsageError(path + ": no loglik column");
    return std::stod(ll->second);
  };
  CompareVerdict v;
  v.loglik_A = pick(report_a, "typeA");
  v.loglik_B = pick(report_b, "typeB");
  v.lr = lr_test(v.loglik_A, v.loglik_B, dof);
  return v;
}

std::string verdict_line(const CompareVerdict& v) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "LR statistic %.2f (dof %d): %s", v.lr.statistic, v.lr.dof,
                to_string(v.lr.decision).c_str());
  return buf;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require_file(cfg.report_a, "report A");
  require_file(cfg.report_b, "report B");
  const CompareVerdict v = compare_reports(cfg.report_a, cfg.report_b, cfg.lr_dof);
  out << "loglik A " << format_number(v.loglik_A) << ", loglik B " << format_number(v.loglik_B) << '\n'
      << verdict_line(v) << '\n';
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noisy rational-expectations equilibrium toolkit"};
  app.require_subcommand(1);
  std::string config_path, mode, rate, grid_phi, grid_sigma, out_dir, data, raw;
  std::optional<std::uint64_t> seed;
  std::optional<double> ll_a, ll_b;
  std::vector<std::string> sets, reports;
  bool reproducible = false;
  app.add_option("--config", config_path, "configuration file (key = value sections)");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--reproducible", reproducible, "omit timestamps for byte-stable output");
  app.add_option("--mode", mode, "typeA|typeB|both");
  app.add_option("--rate", rate, "fixed:X or free");
  app.add_option("--grid-phi", grid_phi, "risk-aversion grid a:b:n");
  app.add_option("--grid-sigma", grid_sigma, "noise-volatility grid a:b:n");
  app.add_option("--set", sets, "override section.key=value");
  app.add_option("--data", data, "series CSV for estimate");
  app.add_option("--raw", raw, "raw price/dividend CSV for ingest");

  auto* solve = app.add_subcommand("solve", "rank candidate equilibria");
  auto* sweep_cmd = app.add_subcommand("sweep", "dominance over a (phi, sigma_theta) grid");
  auto* sim = app.add_subcommand("simulate", "simulate a price/dividend series");
  auto* ingest = app.add_subcommand("ingest", "de-trend and normalise raw data");
  auto* estimate = app.add_subcommand("estimate", "maximum-likelihood estimation");
  auto* compare = app.add_subcommand("compare", "likelihood-ratio test of two reports");
  compare->add_option("reports", reports, "report A (constrained) and report B (free)")->expected(0, 2);
  compare->add_option("--loglik-a", ll_a, "constrained log-likelihood");
  compare->add_option("--loglik-b", ll_b, "free log-likelihood");
  for (auto* sc : {solve, sweep_cmd, sim, ingest, estimate, compare}) sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      const auto dot = s.find('.');
      if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw std::invalid_argument("--set expects section.key=value, got '" + s + "'");
      cfg.set(s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (reproducible) cfg.reproducible = true;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!mode.empty()) cfg.mode = parse_mode(mode);
    if (!rate.empty()) cfg.rate = parse_rate(rate);
    if (!grid_phi.empty()) cfg.phi_grid = grid_phi;
    if (!grid_sigma.empty()) cfg.sigma_grid = grid_sigma;
    if (!data.empty()) cfg.data_path = data;
    if (!raw.empty()) cfg.raw_path = raw;
    if (reports.size() == 2) {
      cfg.report_a = reports[0];
      cfg.report_b = reports[1];
    }

    if (*compare && ll_a && ll_b) {
      CompareVerdict v{*ll_a, *ll_b, lr_test(*ll_a, *ll_b, cfg.lr_dof)};
      out << verdict_line(v) << '\n';
      return kOk;
    }
    if (*solve) return cmd_solve(cfg, out, err);
    if (*sweep_cmd) return cmd_sweep(cfg, out, err);
    if (*sim) return cmd_simulate(cfg, out, err);
    if (*ingest) return cmd_ingest(cfg, out, err);
    if (*estimate) return cmd_estimate(cfg, out, err);
    return cmd_compare(cfg, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace ree::cli
