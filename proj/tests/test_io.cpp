#include <doctest.h>

#include "esn/error.hpp"
#include "esn/io.hpp"
#include "esn/summary.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace esn;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("esn_test_" + name)).string();
}

}  // namespace

TEST_CASE("RFC-4180 parsing") {
  const CsvTable t = parse_csv("a,\"b,c\",d\r\n1,\"say \"\"hi\"\"\",\r\n2,\"multi\nline\",x\n");
  REQUIRE(t.header.size() == 3);
  CHECK(t.header[1] == "b,c");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(t.rows[0][2].empty());
  CHECK(t.rows[1][1] == "multi\nline");
  CHECK_THROWS_AS(parse_csv(""), DataError);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), DataError);
  CHECK_THROWS_AS(parse_csv("a\n\"open\n"), DataError);
  CHECK(parse_csv(format_csv(t)).rows == t.rows);
}

TEST_CASE("doubles survive a text round trip") {
  for (double v : {0.1, -1e-300, 6.02214076e23, M_PI, 5e-324}) CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("matrix CSV round trip") {
  Mat m(3, 2);
  m << 1.5, -2.0, M_PI, 1e-12, 0.0, 7.0;
  const std::string p = temp_path("m.csv");
  write_matrix_csv(p, m);
  CHECK(read_matrix_csv(p) == m);
  std::FILE* f = std::fopen(p.c_str(), "w");
  std::fputs("y1\n1.0\nnot-a-number\n", f);
  std::fclose(f);
  CHECK_THROWS_AS(read_matrix_csv(p), DataError);
  std::remove(p.c_str());
  CHECK_THROWS_AS(read_matrix_csv(temp_path("does_not_exist.csv")), DataError);
}

TEST_CASE("selection data CSV round trip with empty outcome fields") {
  EsnsmData d;
  d.x = Mat(3, 2);
  d.x << 1, 0.5, 1, -0.25, 1, 2;
  d.s = {1, 0, 1};
  d.y = Mat(3, 1);
  d.y << 4.25, kMissing, -1.0;
  const std::string p = temp_path("sel.csv");
  write_esnsm_csv(p, d);
  const EsnsmData r = read_esnsm_csv(p);
  CHECK(r.x == d.x);
  CHECK(r.s == d.s);
  CHECK(std::isnan(r.y(1, 0)));
  CHECK(r.y(0, 0) == 4.25);
  std::FILE* f = std::fopen(p.c_str(), "w");
  std::fputs("x1,s,y1\n1,0,3.0\n", f);  // censored row carrying an outcome
  std::fclose(f);
  CHECK_THROWS_AS(read_esnsm_csv(p), DataError);
  std::remove(p.c_str());
}

TEST_CASE("posterior summaries") {
  std::vector<double> v = {1, 2, 3, 4, 5};
  CHECK(quantile_sorted(v, 0.5) == 3.0);
  CHECK(quantile_sorted(v, 0.25) == 2.0);
  CHECK(quantile_sorted(v, 0.1) == doctest::Approx(1.4));
  Rng rng(1);
  Mat draws(20000, 2);
  for (int i = 0; i < 20000; ++i) {
    draws(i, 0) = 3.0 + 2.0 * std_normal(rng);
    draws(i, 1) = std::exp(0.5 * std_normal(rng));  // lognormal: mode exp(-0.25)
  }
  const auto s = summarize(draws, {"a", "b"});
  CHECK(s[0].mean == doctest::Approx(3.0).epsilon(0.02));
  CHECK(s[0].sd == doctest::Approx(2.0).epsilon(0.02));
  CHECK(s[0].q025 == doctest::Approx(3.0 - 1.959964 * 2).epsilon(0.03));
  CHECK(s[0].mode == doctest::Approx(3.0).epsilon(0.05));
  CHECK(s[1].mode == doctest::Approx(std::exp(-0.25)).epsilon(0.06));
  for (const auto& p : s) {
    CHECK(p.q025 <= p.median);
    CHECK(p.median <= p.q975);
    CHECK(p.sd >= 0);
  }
  CHECK(percent_deviation(0.8, 1.0).value() == doctest::Approx(-20.0));
  CHECK(percent_deviation(-3.1, -2.0).value() == doctest::Approx(55.0));
  CHECK_FALSE(percent_deviation(1.0, 0.0).has_value());
  // Silverman: 0.9 min(sd, IQR/1.34) n^-1/5
  std::vector<double> w(draws.rows());
  for (int i = 0; i < draws.rows(); ++i) w[i] = draws(i, 0);
  CHECK(silverman_bandwidth(w) == doctest::Approx(0.9 * 2.0 * std::pow(20000.0, -0.2)).epsilon(0.03));
}
