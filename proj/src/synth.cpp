#include "chartevo/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "chartevo/parallel.hpp"
#include "chartevo/random.hpp"
#include "chartevo/series_io.hpp"

namespace chartevo {

std::string_view to_string(MotifShape shape) {
  return shape == MotifShape::soaring ? "soaring" : "falling";
}

MotifShape parse_motif_shape(std::string_view text) {
  if (text == "soaring") return MotifShape::soaring;
  if (text == "falling") return MotifShape::falling;
  throw ConfigError("unknown motif shape '" + std::string(text) + "'");
}

void SynthConfig::validate(std::size_t min_days) const {
  if (n_instruments < 1) throw ConfigError("n_instruments must be >= 1");
  if (n_days < 2) throw ConfigError("n_days must be >= 2");
  if (n_days < min_days) {
    throw ConfigError("n_days must cover smoothing + slice window + max horizon (" +
                      std::to_string(min_days) + " days)");
  }
  if (!(volatility >= 0.0) || !std::isfinite(volatility)) {
    throw ConfigError("volatility must be non-negative");
  }
  if (!(initial_price > 0.0)) throw ConfigError("initial_price must be positive");
  if (!(motif.injection_rate >= 0.0 && motif.injection_rate <= 1.0)) {
    throw ConfigError("injection_rate must lie in [0, 1]");
  }
  if (motif.length < 1 || motif.horizon < 1) {
    throw ConfigError("motif length and horizon must be >= 1");
  }
}

namespace {

std::vector<Date> business_days(Date start, std::size_t n) {
  std::vector<Date> out;
  out.reserve(n);
  Date d = start;
  while (out.size() < n) {
    if (d.weekday() < 5) out.push_back(d);
    d = d + 1;
  }
  return out;
}

struct InstrumentPath {
  PriceSeries series;
  std::vector<InjectionRecord> injections;
};

InstrumentPath generate_instrument(const SynthConfig& config, std::size_t index,
                                   const std::vector<Date>& dates) {
  InstrumentPath path;
  char id[32];
  std::snprintf(id, sizeof id, "SYN%04zu", index);
  path.series.instrument_id = id;
  path.series.dates = dates;

  Rng rng(derive_seed(derive_seed(config.seed, "synth"), index, 0));
  const std::size_t n = config.n_days;
  std::vector<double> steps(n, 0.0);
  std::normal_distribution<double> noise(0.0, config.volatility);
  for (std::size_t d = 1; d < n; ++d) steps[d] = noise(rng);

  const MotifSpec& m = config.motif;
  const auto len = static_cast<std::size_t>(m.length);
  const auto horizon = static_cast<std::size_t>(m.horizon);
  const double ramp = (m.shape == MotifShape::soaring ? 1.0 : -1.0) * m.amplitude /
                      static_cast<double>(len);
  std::size_t d = 1;
  while (m.injection_rate > 0.0 && d + len + horizon < n) {
    if (!bernoulli(rng, m.injection_rate)) {
      ++d;
      continue;
    }
    for (std::size_t t = d; t < d + len; ++t) steps[t] += ramp;
    const std::size_t entry = d + len;
    for (std::size_t t = entry + 1; t <= entry + horizon; ++t) {
      steps[t] += m.drift / static_cast<double>(horizon);
    }
    path.injections.push_back({path.series.instrument_id, dates[d - 1], dates[entry], m.horizon,
                               m.drift});
    d = entry + horizon + 1;
  }

  path.series.closes.resize(n);
  path.series.closes[0] = config.initial_price;
  double log_move = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    log_move += steps[t];
    path.series.closes[t] = config.initial_price * std::exp(log_move);
  }
  return path;
}

}  // namespace

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  const auto dates = business_days(config.start_date, config.n_days);
  std::vector<InstrumentPath> paths(config.n_instruments);
  parallel_for(config.n_instruments, 0, [&](std::size_t i) {
    paths[i] = generate_instrument(config, i, dates);
  });
  SynthOutput out;
  for (auto& p : paths) {
    out.series.push_back(std::move(p.series));
    for (auto& r : p.injections) out.ground_truth.push_back(std::move(r));
  }
  return out;
}

nlohmann::json ground_truth_to_json(const SynthConfig& config,
                                    const std::vector<InjectionRecord>& records) {
  nlohmann::json j;
  j["format"] = "chartevo-ground-truth";
  j["version"] = 1;
  j["motif"] = {{"shape", to_string(config.motif.shape)},
                {"injection_rate", config.motif.injection_rate},
                {"drift", config.motif.drift},
                {"horizon", config.motif.horizon},
                {"length", config.motif.length},
                {"amplitude", config.motif.amplitude}};
  auto& sites = j["injections"] = nlohmann::json::array();
  for (const auto& r : records) {
    sites.push_back({{"instrument_id", r.instrument_id},
                     {"motif_start", r.motif_start.to_string()},
                     {"entry_date", r.entry_date.to_string()},
                     {"horizon", r.horizon},
                     {"drift", r.drift}});
  }
  return j;
}

std::vector<InjectionRecord> ground_truth_from_json(const nlohmann::json& j) {
  std::vector<InjectionRecord> out;
  try {
    for (const auto& s : j.at("injections")) {
      out.push_back({s.at("instrument_id").get<std::string>(),
                     Date::parse(s.at("motif_start").get<std::string>()),
                     Date::parse(s.at("entry_date").get<std::string>()),
                     s.at("horizon").get<int>(), s.at("drift").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad ground truth document: ") + e.what());
  }
  return out;
}

std::vector<std::filesystem::path> write_synth_dir(const std::filesystem::path& dir,
                                                   const SynthConfig& config,
                                                   const SynthOutput& output) {
  auto written = write_series_dir(dir, output.series);
  const auto truth = dir / "ground_truth.json";
  std::ofstream out(truth);
  if (!out) throw FormatError("cannot write '" + truth.string() + "'");
  out << ground_truth_to_json(config, output.ground_truth).dump(2) << '\n';
  written.push_back(truth);
  return written;
}

}  // namespace chartevo
