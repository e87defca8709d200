#include "ree/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace ree {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: " + key + " expects true/false, got '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

// Binds every configurable field of `c` to a section/key pair.
std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f;
  auto real = [&](const char* sec, const char* key, double& ref) {
    const std::string k = std::string(sec) + "." + key;
    f.push_back({sec, key, [&ref, k](const std::string& v) { ref = to_double(k, v); }, [&ref] { return num(ref); }});
  };
  auto integer = [&](const char* sec, const char* key, auto& ref) {
    using T = std::decay_t<decltype(ref)>;
    const std::string k = std::string(sec) + "." + key;
    f.push_back({sec, key, [&ref, k](const std::string& v) { ref = to_int<T>(k, v); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto flag = [&](const char* sec, const char* key, bool& ref) {
    const std::string k = std::string(sec) + "." + key;
    f.push_back({sec, key, [&ref, k](const std::string& v) { ref = to_bool(k, v); },
                 [&ref] { return std::string(ref ? "true" : "false"); }});
  };
  auto text = [&](const char* sec, const char* key, std::string& ref) {
    f.push_back({sec, key, [&ref](const std::string& v) { ref = v; }, [&ref] { return ref; }});
  };

  integer("run", "seed", c.seed);
  flag("run", "reproducible", c.reproducible);
  text("run", "out", c.out_dir);

  ModelParams& m = c.model;
  real("model", "r", m.r);
  real("model", "xi", m.xi);
  real("model", "beta", m.beta);
  real("model", "phi", m.phi);
  real("model", "alpha_D", m.alpha_D);
  real("model", "alpha_I", m.alpha_I);
  real("model", "alpha_Theta", m.alpha_Theta);
  real("model", "sigma_0", m.sigma_0);
  real("model", "sigma_D", m.sigma_D);
  real("model", "sigma_I", m.sigma_I);
  real("model", "sigma_Theta", m.sigma_Theta);

  SolverConfig& s = c.solver;
  integer("solver", "n_starts", s.n_starts);
  real("solver", "coeff_lo", s.coeff_range.lo);
  real("solver", "coeff_hi", s.coeff_range.hi);
  real("solver", "L_lo", s.L_range.lo);
  real("solver", "L_hi", s.L_range.hi);
  integer("solver", "newton_max_iter", s.newton_max_iter);
  integer("solver", "max_backtracks", s.max_backtracks);
  real("solver", "residual_tol", s.residual_tol);
  real("solver", "dedupe_tol", s.dedupe_tol);
  real("solver", "classify_tol", s.classify_tol);
  flag("solver", "closed_form_start", s.closed_form_start);
  real("solver", "isolation_rcond", s.isolation_rcond);
  integer("solver", "threads", s.threads);

  text("sweep", "phi_grid", c.phi_grid);
  text("sweep", "sigma_theta_grid", c.sigma_grid);

  integer("simulate", "length", c.sim_length);
  real("simulate", "dt", c.sim_dt);
  flag("simulate", "efficient", c.sim_efficient);
  real("simulate", "p0", c.sim_coeffs.p0);
  real("simulate", "pD0", c.sim_coeffs.pD0);
  real("simulate", "pD1", c.sim_coeffs.pD1);
  real("simulate", "pI", c.sim_coeffs.pI);

  text("estimation", "data", c.data_path);
  f.push_back({"estimation", "mode", [&c](const std::string& v) { c.mode = parse_mode(v); },
               [&c] {
                 return std::string(c.mode == ModeSelection::TypeA   ? "typeA"
                                    : c.mode == ModeSelection::TypeB ? "typeB"
                                                                     : "both");
               }});
  f.push_back({"estimation", "rate", [&c](const std::string& v) { c.rate = parse_rate(v); },
               [&c] { return c.rate.free ? "free:" + num(c.rate.r) : "fixed:" + num(c.rate.r); }});
  Theta& t = c.theta_init;
  real("estimation", "alpha_D", t.alpha_D);
  real("estimation", "alpha_I", t.alpha_I);
  real("estimation", "alpha_Theta", t.alpha_Theta);
  real("estimation", "sigma_0", t.sigma_0);
  real("estimation", "sigma_D", t.sigma_D);
  real("estimation", "sigma_Theta", t.sigma_Theta);
  real("estimation", "rho_I", t.rho_I);
  real("estimation", "p0", c.coeff_init.p0);
  real("estimation", "pD0", c.coeff_init.pD0);
  real("estimation", "pD1", c.coeff_init.pD1);
  real("estimation", "pI", c.coeff_init.pI);
  integer("estimation", "max_evals", c.optimizer.max_evals);
  real("estimation", "tol", c.optimizer.tol);
  integer("estimation", "restarts", c.optimizer.restarts);
  flag("estimation", "diffuse_all_states", c.diffuse_all_states);
  real("estimation", "diffuse_variance", c.diffuse_variance);
  flag("estimation", "include_constant", c.include_constant);
  integer("estimation", "lr_dof", c.lr_dof);

  text("ingest", "raw", c.raw_path);
  ColumnMapping& col = c.columns;
  text("ingest", "date_column", col.date);
  text("ingest", "price_column", col.price);
  text("ingest", "dividend_column", col.dividend);
  text("ingest", "cpi_column", col.cpi);
  f.push_back({"ingest", "date_format",
               [&col](const std::string& v) {
                 if (v == "auto") col.date_format = DateFormat::Auto;
                 else if (v == "iso") col.date_format = DateFormat::Iso;
                 else if (v == "decimal") col.date_format = DateFormat::Decimal;
                 else if (v == "year.month") col.date_format = DateFormat::YearDotMonth;
                 else throw std::invalid_argument("config: ingest.date_format must be auto|iso|decimal|year.month");
               },
               [&col] {
                 switch (col.date_format) {
                   case DateFormat::Iso: return std::string("iso");
                   case DateFormat::Decimal: return std::string("decimal");
                   case DateFormat::YearDotMonth: return std::string("year.month");
                   default: return std::string("auto");
                 }
               }});
  flag("ingest", "deflate", col.deflate);
  f.push_back({"ingest", "cpi_base",
               [&col](const std::string& v) {
                 if (v.empty()) col.cpi_base.reset();
                 else col.cpi_base = to_double("ingest.cpi_base", v);
               },
               [&col] { return col.cpi_base ? num(*col.cpi_base) : std::string(); }});
  f.push_back({"ingest", "cpi_base_date",
               [&col](const std::string& v) {
                 if (v.empty()) col.cpi_base_date.reset();
                 else col.cpi_base_date = v;
               },
               [&col] { return col.cpi_base_date.value_or(""); }});
  flag("ingest", "january_only", col.january_only);
  f.push_back({"ingest", "growth",
               [&c](const std::string& v) {
                 if (v == "log") c.growth = GrowthMethod::Log;
                 else if (v == "arithmetic") c.growth = GrowthMethod::Arithmetic;
                 else throw std::invalid_argument("config: ingest.growth must be log|arithmetic");
               },
               [&c] { return std::string(c.growth == GrowthMethod::Log ? "log" : "arithmetic"); }});
  f.push_back({"ingest", "xi",
               [&c](const std::string& v) {
                 if (v.empty()) c.xi_override.reset();
                 else c.xi_override = to_double("ingest.xi", v);
               },
               [&c] { return c.xi_override ? num(*c.xi_override) : std::string(); }});

  text("compare", "report_a", c.report_a);
  text("compare", "report_b", c.report_b);
  return f;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(trim(p));
  if (parts.size() == 1) return {to_double("grid", parts[0])};
  if (parts.size() != 3) throw std::invalid_argument("grid '" + spec + "' must be a:b:n");
  const double a = to_double("grid", parts[0]);
  const double b = to_double("grid", parts[1]);
  const int n = to_int<int>("grid", parts[2]);
  if (n < 1) throw std::invalid_argument("grid '" + spec + "' needs n >= 1");
  if (n == 1) return {a};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  out.back() = b;
  return out;
}

ModeSelection parse_mode(const std::string& s) {
  if (s == "typeA") return ModeSelection::TypeA;
  if (s == "typeB") return ModeSelection::TypeB;
  if (s == "both") return ModeSelection::Both;
  throw std::invalid_argument("mode must be typeA|typeB|both, got '" + s + "'");
}

RateMode parse_rate(const std::string& s) {
  if (s == "free") return {true, 0.05};
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  if (colon == std::string::npos || (kind != "fixed" && kind != "free"))
    throw std::invalid_argument("rate must be fixed:X or free[:X], got '" + s + "'");
  return {kind == "free", to_double("rate", s.substr(colon + 1))};
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  for (auto& f : fields(*this))
    if (f.section == section && f.key == key) {
      f.set(value);
      return;
    }
  throw std::invalid_argument("config: unknown key '" + section + "." + key + "'");
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    line = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": key outside a section");
    try {
      c.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse(buf.str());
}

std::string RunConfig::dump() const {
  RunConfig copy = *this;
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields(copy)) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get() << '\n';
  }
  return os.str();
}

KalmanOptions RunConfig::kalman_options() const {
  KalmanOptions k;
  k.diffuse_variance = diffuse_variance;
  k.include_constant = include_constant;
  if (!diffuse_all_states) k.diffuse_mask = permanent_dividend_mask();
  return k;
}

EstimationSpec RunConfig::estimation_spec(EstimationMode m, double xi) const {
  EstimationSpec s;
  s.mode = m;
  s.rate = rate;
  s.xi = xi;
  s.theta_init = theta_init;
  s.coeff_init = coeff_init;
  s.optimizer = optimizer;
  s.optimizer.seed = seed;
  s.kalman = kalman_options();
  return s;
}

}  // namespace ree
