#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ree/state_space.hpp"

namespace ree {

struct Date {
  int year = 0;
  int month = 1;  // 1..12
  int day = 1;
  double decimal_year = 0.0;
};

enum class DateFormat {
  Auto,     // ISO-8601 when the field contains '-', decimal year otherwise
  Iso,      // YYYY-MM-DD or YYYY-MM
  Decimal,  // fractional year, e.g. 1990.5
  YearDotMonth,  // YYYY.MM with two-digit month, e.g. 1871.01 or 1871.10
};

struct ColumnMapping {
  std::string date = "date";
  std::string price = "price";
  std::string dividend = "dividend";
  std::string cpi = "cpi";
  DateFormat date_format = DateFormat::Auto;
  // Deflate when the CPI column exists. The base is cpi_base if set, otherwise
  // the CPI at cpi_base_date, otherwise the last observation.
  bool deflate = true;
  std::optional<double> cpi_base;
  std::optional<std::string> cpi_base_date;
  // Keep only January rows of monthly data.
  bool january_only = false;
};

struct RawSeries {
  std::vector<Date> dates;
  std::vector<double> price;     // real when deflated, nominal otherwise
  std::vector<double> dividend;
  std::vector<double> nominal_price;
  std::vector<double> nominal_dividend;
  std::optional<std::vector<double>> cpi;
  std::optional<double> cpi_base;
  std::string source;
  std::string source_hash;

  std::size_t size() const { return dates.size(); }
  std::vector<double> times() const;
  void validate() const;
};

Date parse_date(const std::string& text, DateFormat format);

// Throws std::runtime_error with line numbers for malformed rows.
RawSeries load_csv(const std::string& path, const ColumnMapping& mapping = {});
RawSeries parse_csv(const std::string& content, const ColumnMapping& mapping = {},
                    const std::string& source = "<memory>");

RawSeries select_january(const RawSeries& series);

enum class GrowthMethod { Log, Arithmetic };

// Mean per-period dividend growth annualised by the mean sampling interval.
double estimate_growth_rate(const RawSeries& series, GrowthMethod method = GrowthMethod::Log);

// P = P^u exp(-xi t), D = D^u exp(-xi t) with t in years from the first
// observation, both divided by the mean de-trended price.
ObservationSeries detrend_and_normalize(const RawSeries& series, double xi);

// Inverse of detrend_and_normalize using the stored metadata.
void restore_levels(const ObservationSeries& series, std::vector<double>& price, std::vector<double>& dividend);

enum class RegressionDirection { DividendOnPrice, PriceOnDividend };

struct RegressionReport {
  double slope = 0.0;
  double intercept = 0.0;
  double robust_se_slope = 0.0;
  double robust_se_intercept = 0.0;
  double classical_se_slope = 0.0;
  double t_slope = 0.0;
  double t_intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
  double implied_rate = 0.0;
  bool with_intercept = true;
};

// OLS with HC1 heteroskedasticity-robust standard errors. D = c + (r - xi) P
// gives r = slope + xi; the reverse regression gives r = 1/slope + xi.
RegressionReport cointegrating_ols(const ObservationSeries& series, double xi, RegressionDirection direction,
                                   bool with_intercept = true);
RegressionReport ols_hc1(const std::vector<double>& x, const std::vector<double>& y, bool with_intercept);

// 64-bit FNV-1a digest, hex encoded.
std::string content_hash(const std::string& bytes);

// `preamble` is written verbatim before the header (comment lines start with '#').
void write_series_csv(const ObservationSeries& series, const std::string& path, const std::string& preamble = "");
void write_series_metadata(const ObservationSeries& series, const std::string& path);
// Reads a series written by write_series_csv (and its sidecar when present);
// lines starting with '#' are skipped.
ObservationSeries read_series_csv(const std::string& path);

}  // namespace ree
