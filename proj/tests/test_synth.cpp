#include <catch_amalgamated.hpp>

#include <cmath>

#include "chartevo/series_io.hpp"
#include "chartevo/synth.hpp"
#include "support.hpp"

using namespace chartevo;

TEST_CASE("synthetic series are business-day, positive and deterministic") {
  SynthConfig c;
  c.n_instruments = 4;
  c.motif.injection_rate = 0.01;
  const auto a = generate(c);
  const auto b = generate(c);
  REQUIRE(a.series.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.series[i].closes == b.series[i].closes);
    CHECK(a.series[i].size() == c.n_days);
    CHECK(a.series[i].closes[0] == c.initial_price);
    for (const Date d : a.series[i].dates) CHECK(d.weekday() < 5);
    for (double p : a.series[i].closes) CHECK(p > 0.0);
  }
  CHECK(a.series[0].instrument_id == "SYN0000");
  c.seed = 2;
  CHECK(generate(c).series[0].closes != a.series[0].closes);
}

TEST_CASE("no motifs without injection") {
  SynthConfig c;
  c.n_instruments = 2;
  CHECK(generate(c).ground_truth.empty());
}

TEST_CASE("planted sites carry the configured forward drift") {
  SynthConfig c;
  c.n_instruments = 40;
  c.motif.injection_rate = 0.02;
  c.volatility = 0.01;
  const auto out = generate(c);
  REQUIRE(out.ground_truth.size() > 200);
  double sum = 0.0;
  for (const auto& r : out.ground_truth) {
    const auto& s = out.series[static_cast<std::size_t>(std::stoi(r.instrument_id.substr(3)))];
    const std::size_t e = *s.index_of(r.entry_date);
    sum += std::log(s.closes[e + 20] / s.closes[e]);
    CHECK(r.horizon == 20);
    CHECK(*s.index_of(r.motif_start) + 31 == e);
  }
  const double n = static_cast<double>(out.ground_truth.size());
  const double sigma = c.volatility * std::sqrt(20.0) / std::sqrt(n);
  CHECK(std::abs(sum / n - c.motif.drift) < 3.0 * sigma);
}

TEST_CASE("ground truth json round trip and directory output") {
  SynthConfig c;
  c.n_instruments = 2;
  c.motif.injection_rate = 0.02;
  const auto out = generate(c);
  const auto back = ground_truth_from_json(ground_truth_to_json(c, out.ground_truth));
  REQUIRE(back.size() == out.ground_truth.size());
  CHECK(back.front().entry_date == out.ground_truth.front().entry_date);

  const auto dir = std::filesystem::temp_directory_path() / "chartevo_synth_dir";
  std::filesystem::remove_all(dir);
  write_synth_dir(dir, c, out);
  CHECK(std::filesystem::exists(dir / "ground_truth.json"));
  const auto loaded = load_series_dir(dir);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[1].closes == out.series[1].closes);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synth configuration validation") {
  SynthConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_days = 100;
  CHECK_THROWS_AS(c.validate(253), ConfigError);
  c = {};
  c.motif.injection_rate = 2.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.volatility = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_motif_shape("sideways"), ConfigError);
}
