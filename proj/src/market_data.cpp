#include "ree/market_data.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ree {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    else if (ch == ',' && !quoted) {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  out.push_back(trim(cell));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data() + (s.front() == '+' ? 1 : 0);
  const auto res = std::from_chars(begin, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("bad integer");
  return v;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int day_of_year(int y, int m, int d) {
  static const int cum[12] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
  return cum[m - 1] + d + (m > 2 && is_leap(y) ? 1 : 0);
}

// Monthly and annual dates map to exact (month - 1) / 12 offsets so that
// monthly data is equally spaced.
double to_decimal(int y, int m, int d) {
  if (d == 1) return y + (m - 1) / 12.0;
  return y + (day_of_year(y, m, d) - 1) / (is_leap(y) ? 366.0 : 365.0);
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Date parse_date(const std::string& text, DateFormat format) {
  const std::string s = trim(text);
  if (format == DateFormat::Auto) format = s.find('-') != std::string::npos ? DateFormat::Iso : DateFormat::Decimal;
  Date d;
  try {
    switch (format) {
      case DateFormat::Iso: {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        for (std::string p; std::getline(ss, p, '-');) parts.push_back(p);
        if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument("iso");
        d.year = parse_int(parts[0]);
        d.month = parse_int(parts[1]);
        d.day = parts.size() == 3 ? parse_int(parts[2]) : 1;
        break;
      }
      case DateFormat::YearDotMonth: {
        const auto dot = s.find('.');
        d.year = parse_int(s.substr(0, dot));
        if (dot != std::string::npos) {
          std::string mm = s.substr(dot + 1);
          if (mm.size() == 1) mm += "0";  // 1871.1 is October
          d.month = parse_int(mm);
        }
        break;
      }
      default: {
        double v = 0.0;
        if (!parse_double(s, v)) throw std::invalid_argument("decimal");
        d.year = static_cast<int>(std::floor(v));
        d.month = std::min(12, 1 + static_cast<int>(std::floor((v - d.year) * 12.0 + 1e-9)));
        d.decimal_year = v;
        return d;
      }
    }
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("unparseable date '" + s + "'");
  }
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
    throw std::invalid_argument("date out of range '" + s + "'");
  d.decimal_year = to_decimal(d.year, d.month, d.day);
  return d;
}

std::vector<double> RawSeries::times() const {
  std::vector<double> t;
  t.reserve(dates.size());
  for (const auto& d : dates) t.push_back(d.decimal_year);
  return t;
}

void RawSeries::validate() const {
  if (dates.empty()) throw std::invalid_argument("raw series: empty");
  if (price.size() != dates.size() || dividend.size() != dates.size())
    throw std::invalid_argument("raw series: column lengths differ");
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (!(price[i] > 0.0)) throw std::invalid_argument("raw series: non-positive price at row " + std::to_string(i + 1));
    if (!(dividend[i] > 0.0))
      throw std::invalid_argument("raw series: non-positive dividend at row " + std::to_string(i + 1));
    if (i > 0 && !(dates[i].decimal_year > dates[i - 1].decimal_year))
      throw std::invalid_argument("raw series: dates not strictly increasing at row " + std::to_string(i + 1));
  }
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RawSeries parse_csv(const std::string& content, const ColumnMapping& map, const std::string& source) {
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> col;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  const auto header = split_row(line);
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  auto need = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw std::runtime_error(source + ": missing column '" + name + "'");
    return it->second;
  };
  const std::size_t cd = need(map.date), cp = need(map.price), cv = need(map.dividend);
  const bool has_cpi = map.deflate && col.count(map.cpi);
  const std::size_t cc = has_cpi ? col[map.cpi] : 0;

  RawSeries s;
  s.source = source;
  s.source_hash = content_hash(content);
  std::vector<double> cpi;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
    const std::size_t needed = std::max({cd, cp, cv, has_cpi ? cc : 0}) + 1;
    if (cells.size() < needed) throw std::runtime_error(where() + "too few fields");
    Date d;
    try {
      d = parse_date(cells[cd], map.date_format);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where() + e.what());
    }
    double p = 0.0, v = 0.0, c = 0.0;
    if (!parse_double(cells[cp], p)) throw std::runtime_error(where() + "malformed price '" + cells[cp] + "'");
    if (!parse_double(cells[cv], v)) throw std::runtime_error(where() + "malformed dividend '" + cells[cv] + "'");
    if (!(p > 0.0)) throw std::runtime_error(where() + "non-positive price");
    if (!(v > 0.0)) throw std::runtime_error(where() + "non-positive dividend");
    if (has_cpi) {
      if (!parse_double(cells[cc], c) || !(c > 0.0))
        throw std::runtime_error(where() + "malformed or non-positive cpi '" + cells[cc] + "'");
      cpi.push_back(c);
    }
    if (!s.dates.empty() && !(d.decimal_year > s.dates.back().decimal_year))
      throw std::runtime_error(where() + "dates not strictly increasing");
    s.dates.push_back(d);
    s.nominal_price.push_back(p);
    s.nominal_dividend.push_back(v);
  }
  if (s.dates.empty()) throw std::runtime_error(source + ": no data rows");

  s.price = s.nominal_price;
  s.dividend = s.nominal_dividend;
  if (has_cpi) {
    double base = cpi.back();
    if (map.cpi_base) {
      base = *map.cpi_base;
    } else if (map.cpi_base_date) {
      const Date bd = parse_date(*map.cpi_base_date, DateFormat::Iso);
      bool hit = false;
      for (std::size_t i = 0; i < s.dates.size(); ++i)
        if (s.dates[i].year == bd.year && s.dates[i].month == bd.month) {
          base = cpi[i];
          hit = true;
        }
      if (!hit) throw std::runtime_error(source + ": cpi base date " + *map.cpi_base_date + " not in data");
    }
    if (!(base > 0.0)) throw std::runtime_error(source + ": cpi base must be positive");
    for (std::size_t i = 0; i < cpi.size(); ++i) {
      s.price[i] *= base / cpi[i];
      s.dividend[i] *= base / cpi[i];
    }
    s.cpi = std::move(cpi);
    s.cpi_base = base;
  }
  return map.january_only ? select_january(s) : s;
}

RawSeries load_csv(const std::string& path, const ColumnMapping& mapping) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str(), mapping, path);
}

RawSeries select_january(const RawSeries& s) {
  RawSeries out;
  out.source = s.source;
  out.source_hash = s.source_hash;
  out.cpi_base = s.cpi_base;
  if (s.cpi) out.cpi.emplace();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.dates[i].month != 1) continue;
    out.dates.push_back(s.dates[i]);
    out.price.push_back(s.price[i]);
    out.dividend.push_back(s.dividend[i]);
    out.nominal_price.push_back(s.nominal_price[i]);
    out.nominal_dividend.push_back(s.nominal_dividend[i]);
    if (s.cpi) out.cpi->push_back((*s.cpi)[i]);
  }
  return out;
}

double estimate_growth_rate(const RawSeries& s, GrowthMethod method) {
  if (s.size() < 2) throw std::invalid_argument("growth rate: need at least two periods");
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!(s.dividend[i] > 0.0))
      throw std::invalid_argument("growth rate: non-positive dividend at row " + std::to_string(i + 1));
  double acc = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double g = s.dividend[i] / s.dividend[i - 1];
    acc += method == GrowthMethod::Log ? std::log(g) : g - 1.0;
  }
  const double periods = static_cast<double>(s.size() - 1);
  const double mean_dt = (s.dates.back().decimal_year - s.dates.front().decimal_year) / periods;
  return acc / periods / mean_dt;
}

ObservationSeries detrend_and_normalize(const RawSeries& raw, double xi) {
  raw.validate();
  ObservationSeries out;
  out.times = raw.times();
  const double t0 = out.times.front();
  out.price.resize(raw.size());
  out.dividend.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double decay = std::exp(-xi * (out.times[i] - t0));
    out.price[i] = raw.price[i] * decay;
    out.dividend[i] = raw.dividend[i] * decay;
  }
  const double mean = std::accumulate(out.price.begin(), out.price.end(), 0.0) / static_cast<double>(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.price[i] /= mean;
    out.dividend[i] /= mean;
  }
  out.meta.source = raw.source;
  out.meta.source_hash = raw.source_hash;
  out.meta.xi = xi;
  out.meta.normalization = mean;
  return out;
}

void restore_levels(const ObservationSeries& s, std::vector<double>& price, std::vector<double>& dividend) {
  price.resize(s.size());
  dividend.resize(s.size());
  const double t0 = s.times.empty() ? 0.0 : s.times.front();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double grow = s.meta.normalization * std::exp(s.meta.xi * (s.times[i] - t0));
    price[i] = s.price[i] * grow;
    dividend[i] = s.dividend[i] * grow;
  }
}

RegressionReport ols_hc1(const std::vector<double>& x, const std::vector<double>& y, bool with_intercept) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (x.size() != y.size()) throw std::invalid_argument("ols: length mismatch");
  if (n < 3) throw std::invalid_argument("ols: need at least three observations");
  const Eigen::Index k = with_intercept ? 2 : 1;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = x[static_cast<std::size_t>(i)];
    if (with_intercept) X(i, 1) = 1.0;
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd xc = X.col(0).array() - (with_intercept ? X.col(0).mean() : 0.0);
  if (!(xc.squaredNorm() > 0.0)) throw std::invalid_argument("ols: degenerate regressor");

  const Eigen::MatrixXd XtX_inv = (X.transpose() * X).inverse();
  const Eigen::VectorXd b = XtX_inv * X.transpose() * Y;
  const Eigen::VectorXd e = Y - X * b;
  const Eigen::MatrixXd meat = X.transpose() * e.array().square().matrix().asDiagonal() * X;
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  const Eigen::MatrixXd V = (nd / (nd - kd)) * XtX_inv * meat * XtX_inv;
  const double s2 = e.squaredNorm() / (nd - kd);

  RegressionReport r;
  r.n = static_cast<std::size_t>(n);
  r.with_intercept = with_intercept;
  r.slope = b(0);
  r.robust_se_slope = std::sqrt(V(0, 0));
  r.classical_se_slope = std::sqrt(s2 * XtX_inv(0, 0));
  r.t_slope = r.slope / r.robust_se_slope;
  if (with_intercept) {
    r.intercept = b(1);
    r.robust_se_intercept = std::sqrt(V(1, 1));
    r.t_intercept = r.intercept / r.robust_se_intercept;
  }
  const double sst = with_intercept ? (Y.array() - Y.mean()).square().sum() : Y.squaredNorm();
  r.r_squared = sst > 0.0 ? 1.0 - e.squaredNorm() / sst : 1.0;
  return r;
}

RegressionReport cointegrating_ols(const ObservationSeries& s, double xi, RegressionDirection dir,
                                   bool with_intercept) {
  if (s.size() < 3) throw std::invalid_argument("cointegrating_ols: need at least three observations");
  RegressionReport r = dir == RegressionDirection::DividendOnPrice ? ols_hc1(s.price, s.dividend, with_intercept)
                                                                   : ols_hc1(s.dividend, s.price, with_intercept);
  r.implied_rate = dir == RegressionDirection::DividendOnPrice ? r.slope + xi : 1.0 / r.slope + xi;
  return r;
}

void write_series_csv(const ObservationSeries& s, const std::string& path, const std::string& preamble) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << preamble << "time,price,dividend\n";
  for (std::size_t i = 0; i < s.size(); ++i) f << fmt(s.times[i]) << ',' << fmt(s.price[i]) << ',' << fmt(s.dividend[i]) << '\n';
}

void write_series_metadata(const ObservationSeries& s, const std::string& path) {
  nlohmann::ordered_json j;
  j["source"] = s.meta.source;
  j["source_hash"] = s.meta.source_hash;
  j["xi"] = s.meta.xi;
  j["normalization"] = s.meta.normalization;
  j["observations"] = s.size();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

ObservationSeries read_series_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  ObservationSeries s;
  std::string line;
  std::size_t line_no = 0;
  do {
    if (!std::getline(f, line)) throw std::runtime_error(path + ": empty file");
    ++line_no;
  } while (trim(line).empty() || line.front() == '#');
  const auto header = split_row(line);
  if (header.size() < 3 || header[0] != "time" || header[1] != "price" || header[2] != "dividend")
    throw std::runtime_error(path + ": expected header time,price,dividend");
  while (std::getline(f, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto c = split_row(line);
    double t = 0.0, p = 0.0, d = 0.0;
    if (c.size() < 3 || !parse_double(c[0], t) || !parse_double(c[1], p) || !parse_double(c[2], d))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed row");
    s.times.push_back(t);
    s.price.push_back(p);
    s.dividend.push_back(d);
  }
  s.meta.source = path;
  const std::string sidecar = path + ".meta.json";
  if (std::filesystem::exists(sidecar)) {
    std::ifstream m(sidecar);
    const auto j = nlohmann::json::parse(m);
    s.meta.source = j.value("source", path);
    s.meta.source_hash = j.value("source_hash", "");
    s.meta.xi = j.value("xi", 0.0);
    s.meta.normalization = j.value("normalization", 1.0);
  }
  s.validate();
  return s;
}

}  // namespace ree
