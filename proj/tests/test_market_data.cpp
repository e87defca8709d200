#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "ree/market_data.hpp"

using namespace ree;

namespace {

RawSeries annual(const std::vector<double>& price, const std::vector<double>& dividend, int first_year = 1900) {
  std::string csv = "date,price,dividend\n";
  for (std::size_t i = 0; i < price.size(); ++i)
    csv += std::to_string(first_year + static_cast<int>(i)) + "," + std::to_string(price[i]) + "," +
           std::to_string(dividend[i]) + "\n";
  return parse_csv(csv);
}

RawSeries random_raw(std::mt19937_64& g, std::size_t n) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  RawSeries r;
  for (std::size_t i = 0; i < n; ++i) {
    Date d;
    d.year = 1950 + static_cast<int>(i);
    d.decimal_year = d.year;
    r.dates.push_back(d);
    r.price.push_back(10.0 * u(g) * std::exp(0.02 * static_cast<double>(i)));
    r.dividend.push_back(0.4 * u(g) * std::exp(0.02 * static_cast<double>(i)));
  }
  r.nominal_price = r.price;
  r.nominal_dividend = r.dividend;
  return r;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ree_md_" + name)).string();
}

}  // namespace

TEST(ParseCsv, TwoRows) {
  const RawSeries r = parse_csv("date,price,dividend\n2000,10,0.5\n2001,11,0.6\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.price[1], 11.0);
  EXPECT_EQ(r.dividend[0], 0.5);
  EXPECT_DOUBLE_EQ(r.dates[1].decimal_year, 2001.0);
  EXPECT_FALSE(r.source_hash.empty());
}

TEST(ParseCsv, NegativeDividendNamesLine) {
  try {
    parse_csv("date,price,dividend\n2000,10,0.5\n2001,11,-0.6\n", {}, "f.csv");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("f.csv:3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("dividend"), std::string::npos);
  }
}

TEST(ParseCsv, MalformedAndMissing) {
  EXPECT_THROW(parse_csv("date,price\n2000,10\n"), std::runtime_error);
  EXPECT_THROW(parse_csv("date,price,dividend\n2000,abc,0.5\n"), std::runtime_error);
  EXPECT_THROW(parse_csv("date,price,dividend\n2001,10,0.5\n2000,10,0.5\n"), std::runtime_error);
  EXPECT_THROW(parse_csv("date,price,dividend\n"), std::runtime_error);
  EXPECT_THROW(load_csv("/nonexistent/ree.csv"), std::runtime_error);
}

TEST(ParseCsv, CpiDeflation) {
  const std::string csv = "date,price,dividend,cpi\n2000-01,10,1,50\n2000-02,12,1,100\n2000-03,12,1.5,200\n";
  ColumnMapping m;
  m.cpi_base_date = "2000-02";
  const RawSeries r = parse_csv(csv, m);
  ASSERT_TRUE(r.cpi.has_value());
  EXPECT_DOUBLE_EQ(r.price[0], 10.0 * 100.0 / 50.0);
  EXPECT_DOUBLE_EQ(r.price[2], 12.0 * 100.0 / 200.0);
  EXPECT_DOUBLE_EQ(r.dividend[2], 1.5 * 0.5);
  EXPECT_DOUBLE_EQ(r.nominal_price[2], 12.0);
  m.cpi_base_date.reset();
  m.cpi_base = 25.0;
  EXPECT_DOUBLE_EQ(parse_csv(csv, m).price[1], 12.0 * 0.25);
  m.deflate = false;
  EXPECT_DOUBLE_EQ(parse_csv(csv, m).price[1], 12.0);
}

TEST(ParseCsv, CustomColumnsAndJanuary) {
  const std::string csv = "Date,P,D\n1871.01,4.44,0.26\n1871.02,4.5,0.26\n1872.01,4.86,0.3\n1872.10,5.0,0.3\n";
  ColumnMapping m;
  m.date = "Date";
  m.price = "P";
  m.dividend = "D";
  m.date_format = DateFormat::YearDotMonth;
  m.january_only = true;
  const RawSeries r = parse_csv(csv, m);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.dates[1].year, 1872);
  EXPECT_EQ(r.dates[1].month, 1);
  EXPECT_EQ(parse_date("1872.10", DateFormat::YearDotMonth).month, 10);
  EXPECT_EQ(parse_date("1990-07-15", DateFormat::Auto).month, 7);
  EXPECT_DOUBLE_EQ(parse_date("1990.5", DateFormat::Decimal).decimal_year, 1990.5);
  EXPECT_THROW(parse_date("19x0", DateFormat::Auto), std::invalid_argument);
}

TEST(GrowthRate, ConstantAndDoubling) {
  EXPECT_DOUBLE_EQ(estimate_growth_rate(annual({1, 1, 1, 1}, {2, 2, 2, 2})), 0.0);
  EXPECT_NEAR(estimate_growth_rate(annual({1, 1, 1, 1}, {1, 2, 4, 8})), std::log(2.0), 1e-6);
  EXPECT_NEAR(estimate_growth_rate(annual({1, 1, 1}, {1, 2, 4}), GrowthMethod::Arithmetic), 1.0, 1e-6);
}

TEST(GrowthRate, MonthlyIsAnnualised) {
  std::string csv = "date,price,dividend\n";
  for (int m = 1; m <= 12; ++m)
    csv += "2000-" + std::string(m < 10 ? "0" : "") + std::to_string(m) + ",1," +
           std::to_string(std::exp(0.03 * (m - 1) / 12.0)) + "\n";
  EXPECT_NEAR(estimate_growth_rate(parse_csv(csv)), 0.03, 1e-5);
}

TEST(Detrend, NormalizationAndIdentity) {
  std::mt19937_64 g(1);
  const RawSeries r = random_raw(g, 50);
  const ObservationSeries s = detrend_and_normalize(r, 0.0);
  double mean = 0.0;
  for (double p : s.price) mean += p;
  EXPECT_NEAR(mean / 50.0, 1.0, 1e-12);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_NEAR(s.price[i] * s.meta.normalization, r.price[i], 1e-12 * r.price[i]);
    EXPECT_NEAR(s.dividend[i] * s.meta.normalization, r.dividend[i], 1e-12 * r.dividend[i]);
  }
  EXPECT_EQ(s.meta.xi, 0.0);
}

TEST(Detrend, ExponentialTrendCancels) {
  const double xi = 0.0115;
  std::vector<double> p, d;
  for (int i = 0; i < 30; ++i) {
    p.push_back(std::exp(xi * i));
    d.push_back(0.05 * std::exp(xi * i));
  }
  std::string csv = "date,price,dividend\n";
  for (int i = 0; i < 30; ++i) {
    char row[96];
    std::snprintf(row, sizeof row, "%d,%.17g,%.17g\n", 1900 + i, p[i], d[i]);
    csv += row;
  }
  const ObservationSeries s = detrend_and_normalize(parse_csv(csv), xi);
  for (double v : s.price) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_NEAR(s.meta.normalization, 1.0, 1e-12);
}

TEST(Detrend, ScaleEquivarianceAndRoundTrip) {
  std::mt19937_64 g(2);
  for (int k = 0; k < 20; ++k) {
    RawSeries r = random_raw(g, 40);
    const double xi = 0.005 * k;
    const ObservationSeries a = detrend_and_normalize(r, xi);
    RawSeries scaled = r;
    for (auto& v : scaled.price) v *= 3.7;
    for (auto& v : scaled.dividend) v *= 3.7;
    const ObservationSeries b = detrend_and_normalize(scaled, xi);
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a.price[i], b.price[i], 1e-13);
      EXPECT_NEAR(a.dividend[i], b.dividend[i], 1e-13);
      mean += a.price[i];
    }
    EXPECT_NEAR(mean / static_cast<double>(a.size()), 1.0, 1e-12);
    std::vector<double> P, D;
    restore_levels(a, P, D);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(P[i] / r.price[i], 1.0, 1e-10);
      EXPECT_NEAR(D[i] / r.dividend[i], 1.0, 1e-10);
    }
  }
}

TEST(Ols, ExactLine) {
  ObservationSeries s;
  for (int i = 0; i < 20; ++i) {
    s.times.push_back(i);
    s.price.push_back(0.5 + 0.05 * i);
    s.dividend.push_back(0.073 + 0.0126 * s.price.back());
  }
  const RegressionReport r = cointegrating_ols(s, 0.0115, RegressionDirection::DividendOnPrice);
  EXPECT_NEAR(r.slope, 0.0126, 1e-12);
  EXPECT_NEAR(r.intercept, 0.073, 1e-12);
  EXPECT_NEAR(r.implied_rate, 0.0241, 1e-12);
  EXPECT_NEAR(r.r_squared, 1.0, 1e-12);
  const RegressionReport q = cointegrating_ols(s, 0.0115, RegressionDirection::PriceOnDividend);
  EXPECT_NEAR(q.slope, 1.0 / 0.0126, 1e-6);
  EXPECT_NEAR(q.implied_rate, 0.0241, 1e-10);
}

TEST(Ols, ProportionalWithoutIntercept) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10};
  const RegressionReport r = ols_hc1(x, y, false);
  EXPECT_NEAR(r.slope, 2.0, 1e-14);
  EXPECT_EQ(r.intercept, 0.0);
  EXPECT_NEAR(r.r_squared, 1.0, 1e-14);
  EXPECT_NEAR(r.robust_se_slope, 0.0, 1e-12);
}

TEST(Ols, InterceptAbsorbsShift) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> z;
  std::vector<double> x, y, y2;
  for (int i = 0; i < 100; ++i) {
    x.push_back(z(g));
    y.push_back(0.3 * x.back() + z(g));
    y2.push_back(y.back() + 5.0);
  }
  const RegressionReport a = ols_hc1(x, y, true), b = ols_hc1(x, y2, true);
  EXPECT_NEAR(a.slope, b.slope, 1e-12);
  EXPECT_NEAR(a.robust_se_slope, b.robust_se_slope, 1e-12);
  EXPECT_NEAR(b.intercept - a.intercept, 5.0, 1e-12);
}

TEST(Ols, RobustCloseToClassicalUnderHomoskedasticity) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> z;
  std::vector<double> x, y;
  for (int i = 0; i < 10000; ++i) {
    x.push_back(z(g));
    y.push_back(1.0 + 0.5 * x.back() + z(g));
  }
  const RegressionReport r = ols_hc1(x, y, true);
  EXPECT_NEAR(r.robust_se_slope / r.classical_se_slope, 1.0, 0.10);
}

TEST(Ols, Errors) {
  EXPECT_THROW(ols_hc1({1, 1, 1, 1}, {1, 2, 3, 4}, true), std::invalid_argument);
  EXPECT_THROW(ols_hc1({1, 2}, {1, 2}, true), std::invalid_argument);
}

TEST(ContentHash, Fnv1aVectors) {
  EXPECT_EQ(content_hash(""), "cbf29ce484222325");
  EXPECT_EQ(content_hash("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(content_hash("foobar"), "85944171f73967e8");
}

TEST(SeriesCsv, RoundTripWithMetadata) {
  ObservationSeries s;
  for (int i = 0; i < 5; ++i) {
    s.times.push_back(1.0 + i);
    s.price.push_back(1.0 / 3.0 + i);
    s.dividend.push_back(std::exp(-i) / 7.0);
  }
  s.meta.xi = 0.0115;
  s.meta.normalization = 123.456;
  s.meta.source = "unit";
  const std::string path = temp_path("series.csv");
  write_series_csv(s, path, "# comment line\n");
  write_series_metadata(s, path + ".meta.json");
  const ObservationSeries r = read_series_csv(path);
  EXPECT_EQ(r.times, s.times);
  EXPECT_EQ(r.price, s.price);
  EXPECT_EQ(r.dividend, s.dividend);
  EXPECT_EQ(r.meta.xi, 0.0115);
  EXPECT_EQ(r.meta.normalization, 123.456);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".meta.json");
}
