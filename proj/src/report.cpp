#include "ree/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ree {

namespace {

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string label(EquilibriumType t) {
  return t == EquilibriumType::TypeA ? "Equilibrium-Type A" : "Equilibrium-Type B";
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_candidates_csv(std::ostream& os, const std::vector<CandidateEquilibrium>& cands) {
  os << "rank,class,utility,p0,pD0,pD1,pI,lambda,l11,riccati_residual,clearing_residual,"
        "noise_clearing_gap,T,isolated,hits\n";
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    os << i + 1 << ',' << to_string(c.cls.tag) << ',' << format_number(c.essential_utility) << ','
       << format_number(c.coeffs.p0) << ',' << format_number(c.coeffs.pD0) << ',' << format_number(c.coeffs.pD1)
       << ',' << format_number(c.coeffs.pI) << ',' << format_number(c.lambda) << ',' << format_number(c.L(0, 0))
       << ',' << format_number(c.riccati_residual_norm) << ',' << format_number(c.clearing_residual_norm) << ','
       << format_number(c.noise_clearing_gap) << ',' << format_number(c.T_value) << ','
       << (c.isolated ? "true" : "false") << ',' << c.hits << '\n';
  }
}

std::string candidates_json(const std::vector<CandidateEquilibrium>& cands) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : cands) {
    nlohmann::ordered_json j;
    j["class"] = to_string(c.cls.tag);
    j["utility"] = json_number(c.essential_utility);
    j["coefficients"] = {{"p0", c.coeffs.p0}, {"pD0", c.coeffs.pD0}, {"pD1", c.coeffs.pD1}, {"pI", c.coeffs.pI}};
    j["lambda"] = json_number(c.lambda);
    nlohmann::ordered_json L = nlohmann::ordered_json::array();
    for (int r = 0; r < 5; ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int k = 0; k < 5; ++k) row.push_back(c.L(r, k));
      L.push_back(row);
    }
    j["L"] = L;
    j["riccati_residual"] = json_number(c.riccati_residual_norm);
    j["clearing_residual"] = json_number(c.clearing_residual_norm);
    j["noise_clearing_gap"] = json_number(c.noise_clearing_gap);
    j["T"] = json_number(c.T_value);
    j["max_coeff_deviation"] = json_number(c.cls.max_coeff_deviation);
    j["max_slope_deviation"] = json_number(c.cls.max_slope_deviation);
    j["isolated"] = c.isolated;
    j["jacobian_rcond"] = json_number(c.jacobian_rcond);
    j["hits"] = c.hits;
    arr.push_back(j);
  }
  return arr.dump(2);
}

void print_candidate_table(std::ostream& os, const std::vector<CandidateEquilibrium>& cands) {
  os << pad("Equilibrium", 20) << pad("Utility", 11) << pad("p0", 13) << pad("pD0", 11) << pad("pD1", 9)
     << pad("pI", 11) << '\n';
  for (const auto& c : cands) {
    os << pad(label(c.cls.tag), 20) << pad(fixed(c.essential_utility, 2), 11) << pad(fixed(c.coeffs.p0, 3), 13)
       << pad(fixed(c.coeffs.pD0, 3), 11) << pad(fixed(c.coeffs.pD1, 3), 9) << pad(fixed(c.coeffs.pI, 3), 11)
       << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << "phi,sigma_theta,best_typeA_utility,best_typeB_utility,dominant,n_candidates,error\n";
  for (const auto& r : records) {
    std::string err = r.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    os << format_number(r.phi) << ',' << format_number(r.sigma_Theta) << ',' << optional_number(r.best_typeA_utility)
       << ',' << optional_number(r.best_typeB_utility) << ',' << to_string(r.dominant) << ',' << r.n_candidates << ','
       << err << '\n';
  }
}

std::string sweep_json(const std::vector<SweepRecord>& records) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["phi"] = r.phi;
    j["sigma_theta"] = r.sigma_Theta;
    j["best_typeA_utility"] = r.best_typeA_utility ? nlohmann::ordered_json(*r.best_typeA_utility) : nullptr;
    j["best_typeB_utility"] = r.best_typeB_utility ? nlohmann::ordered_json(*r.best_typeB_utility) : nullptr;
    j["dominant"] = to_string(r.dominant);
    j["n_candidates"] = r.n_candidates;
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(j);
  }
  return arr.dump(2);
}

void write_estimation_csv(std::ostream& os, const std::vector<EstimationResult>& results, std::size_t n_obs) {
  os << "mode,rate_mode,r";
  for (const char* n : Theta::names()) os << ',' << n;
  os << ",p0,pD0,pD1,pI,loglik,converged,n_evals,n_obs\n";
  for (const auto& e : results) {
    os << to_string(e.mode) << ',' << (e.rate_free ? "free" : "fixed") << ',' << format_number(e.r_hat);
    for (double v : e.theta_hat.to_array()) os << ',' << format_number(v);
    os << ',' << format_number(e.coeffs_hat.p0) << ',' << format_number(e.coeffs_hat.pD0) << ','
       << format_number(e.coeffs_hat.pD1) << ',' << format_number(e.coeffs_hat.pI) << ',' << format_number(e.loglik)
       << ',' << (e.converged ? "true" : "false") << ',' << e.n_evals << ',' << n_obs << '\n';
  }
}

std::vector<std::map<std::string, std::string>> read_csv_records(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    return out;
  };
  std::string line;
  do {
    if (!std::getline(f, line)) throw std::runtime_error(path + ": empty file");
  } while (line.empty() || line.front() == '#');
  const auto header = split(line);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(f, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

void print_estimation_table(std::ostream& os, const std::vector<EstimationResult>& results, int dof) {
  os << pad("Rate", 14) << pad("Model", 22) << pad("ML", 12) << pad("LR", 12) << '\n';
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& e = results[i];
    const std::string rate = e.rate_free ? "free" : "r=" + fixed(e.r_hat, 4);
    std::string lr;
    if (e.mode == EstimationMode::TypeBFree) {
      for (const auto& a : results)
        if (a.mode == EstimationMode::TypeAConstrained && a.rate_free == e.rate_free) {
          const auto t = lr_test(a.loglik, e.loglik, dof);
          lr = fixed(t.statistic, 2) + std::string(t.decision == Rejection::At01 ? "***"
                                                   : t.decision == Rejection::At1 ? "**"
                                                   : t.decision == Rejection::At5 ? "*"
                                                                                  : "");
        }
    }
    os << pad(rate, 14)
       << pad(e.mode == EstimationMode::TypeAConstrained ? "Equilibrium-Type A" : "Equilibrium-Type B", 22)
       << pad(fixed(e.loglik, 2), 12) << pad(lr, 12) << (e.converged ? "" : "  (not converged)") << '\n';
  }
  const auto th = chi2_critical_values(dof);
  os << "chi2(" << dof << ") critical values: " << fixed(th[0], 2) << " (5%), " << fixed(th[1], 2) << " (1%), "
     << fixed(th[2], 2) << " (0.1%)\n";
}

void print_regression(std::ostream& os, const RegressionReport& r, const std::string& regressor,
                      const std::string& regressand) {
  os << "OLS " << regressand << " on " << regressor << " (HC1 robust standard errors), n = " << r.n << '\n';
  os << pad("", 10) << pad("coef", 12) << pad("robust se", 12) << pad("t", 10) << '\n';
  os << pad(regressor, 10) << pad(fixed(r.slope, 4), 12) << pad(fixed(r.robust_se_slope, 4), 12)
     << pad(fixed(r.t_slope, 2), 10) << '\n';
  if (r.with_intercept)
    os << pad("_cons", 10) << pad(fixed(r.intercept, 4), 12) << pad(fixed(r.robust_se_intercept, 4), 12)
       << pad(fixed(r.t_intercept, 2), 10) << '\n';
  os << "R-squared " << fixed(r.r_squared, 4) << ", implied r " << fixed(r.implied_rate, 4) << '\n';
}

}  // namespace ree
