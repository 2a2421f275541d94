#include <catch_amalgamated.hpp>

#include <sstream>

#include "chartevo/series_io.hpp"
#include "chartevo/types.hpp"
#include "support.hpp"

using namespace chartevo;

TEST_CASE("dates parse, print and order") {
  const Date d = Date::parse("2016-02-29");
  CHECK(d.to_string() == "2016-02-29");
  CHECK(d == Date::from_ymd(2016, 2, 29));
  CHECK(Date::from_ymd(1970, 1, 1) == Date(0));
  CHECK(Date::from_ymd(1970, 1, 1).weekday() == 3);  // Thursday
  CHECK(Date::parse("2024-01-01").weekday() == 0);
  CHECK(d + 1 == Date::parse("2016-03-01"));
  CHECK(Date::parse("2015-12-31") < d);
  CHECK_THROWS_AS(Date::parse("2015-02-30"), FormatError);
  CHECK_THROWS_AS(Date::parse("2015/01/01"), FormatError);
  CHECK_THROWS_AS(Date::parse(""), FormatError);
}

TEST_CASE("date formatting round trips over many days") {
  for (std::int32_t n = 10000; n < 22000; n += 37) {
    const Date d(n);
    CHECK(Date::parse(d.to_string()) == d);
  }
}

TEST_CASE("date ranges are inclusive") {
  const DateRange r{Date::parse("2015-01-01"), Date::parse("2015-12-31")};
  CHECK(r.contains(Date::parse("2015-01-01")));
  CHECK(r.contains(Date::parse("2015-12-31")));
  CHECK_FALSE(r.contains(Date::parse("2016-01-01")));
  CHECK(r.overlaps({Date::parse("2015-12-31"), Date::parse("2016-02-01")}));
  CHECK_FALSE(r.overlaps({Date::parse("2016-01-01"), Date::parse("2016-02-01")}));
}

TEST_CASE("split names") {
  CHECK(parse_split("training") == Split::training);
  CHECK(parse_split("train") == Split::training);
  CHECK(parse_split("validation") == Split::validation);
  CHECK(parse_split("test") == Split::test);
  CHECK(to_string(Split::validation) == "validation");
  CHECK_THROWS_AS(parse_split("holdout"), ConfigError);
}

TEST_CASE("price series validation") {
  PriceSeries s{"A", {Date(1), Date(2)}, {1.0, 2.0}};
  CHECK_NOTHROW(s.validate());
  s.dates = {Date(2), Date(1)};
  CHECK_THROWS_AS(s.validate(), FormatError);
  s.dates = {Date(1)};
  CHECK_THROWS_AS(s.validate(), FormatError);
}

TEST_CASE("chart accessors") {
  Chart c;
  c.value(3, 1) = 2.5;
  CHECK(c.values[7] == 2.5);
  c.source_id = "X";
  c.entry_date = Date::parse("2016-05-02");
  CHECK(c.id() == "X@2016-05-02");
  c.returns[20] = 0.1;
  CHECK(c.forward_return(20) == 0.1);
  CHECK_FALSE(c.forward_return(50).has_value());
}

TEST_CASE("series csv parsing") {
  std::istringstream in("date,close\n# comment\n2016-01-04,100.5\n2016-01-05,101\n\n");
  const PriceSeries s = read_series_csv(in, "A", "mem");
  REQUIRE(s.size() == 2);
  CHECK(s.closes[1] == 101.0);
  CHECK(s.dates[0] == Date::parse("2016-01-04"));

  std::istringstream bad("date,close\n2016-01-04,abc\n");
  try {
    read_series_csv(bad, "A", "mem.csv");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("mem.csv:2") != std::string::npos);
  }
  std::istringstream unsorted("2016-01-05,1\n2016-01-04,1\n");
  CHECK_THROWS_AS(read_series_csv(unsorted, "A", "mem"), FormatError);
}

TEST_CASE("series csv write/read round trip is exact") {
  chartevo::Rng rng(4);
  const auto s = testing::random_walk(rng, "RW", 300);
  std::stringstream buf;
  write_series_csv(buf, s);
  const auto back = read_series_csv(buf, "RW", "mem");
  CHECK(back.dates == s.dates);
  CHECK(back.closes == s.closes);
}

TEST_CASE("series directory with and without manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "chartevo_series_dir";
  std::filesystem::remove_all(dir);
  chartevo::Rng rng(5);
  std::vector<PriceSeries> set{testing::random_walk(rng, "B", 40), testing::random_walk(rng, "A", 40)};
  write_series_dir(dir, set);
  auto loaded = load_series_dir(dir);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].instrument_id == "B");
  CHECK(loaded[0].closes == set[0].closes);

  std::filesystem::remove(dir / "manifest.json");
  loaded = load_series_dir(dir);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].instrument_id == "A");  // sorted by file name without a manifest
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_series_dir(dir), FormatError);
}
