#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chartevo/types.hpp"

namespace chartevo {

enum class MotifShape { soaring, falling };

std::string_view to_string(MotifShape shape);
MotifShape parse_motif_shape(std::string_view text);

struct MotifSpec {
  MotifShape shape = MotifShape::soaring;
  /// Per-day probability of starting a motif (sites never overlap).
  double injection_rate = 0.0;
  /// Total log drift added over the `horizon` days after the motif.
  double drift = 0.08;
  int horizon = 20;
  int length = 30;
  /// Total log move of the motif ramp.
  double amplitude = 0.25;

  bool operator==(const MotifSpec&) const = default;
};

struct SynthConfig {
  std::size_t n_instruments = 10;
  std::size_t n_days = 1560;
  double volatility = 0.02;
  double initial_price = 10000.0;
  std::uint64_t seed = 1;
  Date start_date = Date::from_ymd(2011, 1, 3);
  MotifSpec motif;

  /// Throws ConfigError; `min_days` is the preprocessing history requirement.
  void validate(std::size_t min_days = 0) const;
  bool operator==(const SynthConfig&) const = default;
};

/// One planted motif. `entry_date` is the first day after the motif, i.e. the entry day
/// of the chart whose window ends on the motif's last day.
struct InjectionRecord {
  std::string instrument_id;
  Date motif_start;
  Date entry_date;
  int horizon = 0;
  double drift = 0.0;
};

struct SynthOutput {
  std::vector<PriceSeries> series;
  std::vector<InjectionRecord> ground_truth;
};

/// Geometric random walk over business days, with multiplicative motif ramps followed by
/// forward drift at injected sites. Pure function of the config.
SynthOutput generate(const SynthConfig& config);

nlohmann::json ground_truth_to_json(const SynthConfig& config,
                                    const std::vector<InjectionRecord>& records);
std::vector<InjectionRecord> ground_truth_from_json(const nlohmann::json& j);

/// Series CSVs + manifest.json + ground_truth.json.
std::vector<std::filesystem::path> write_synth_dir(const std::filesystem::path& dir,
                                                   const SynthConfig& config,
                                                   const SynthOutput& output);

}  // namespace chartevo
