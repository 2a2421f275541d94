#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "chartevo/evaluator.hpp"
#include "chartevo/neat.hpp"
#include "chartevo/preprocess.hpp"
#include "chartevo/search.hpp"
#include "chartevo/synth.hpp"

namespace chartevo {

// Section (de)serialization. The *_from_json functions apply a patch on top of `base`:
// keys that are present override, missing keys keep base values, unknown keys raise
// ConfigError naming the offending key.
nlohmann::json to_json(const PreprocessConfig& c);
PreprocessConfig preprocess_config_from_json(const nlohmann::json& j, PreprocessConfig base = {});
nlohmann::json to_json(const EvolutionConfig& c);
EvolutionConfig evolution_config_from_json(const nlohmann::json& j, EvolutionConfig base = {});
nlohmann::json to_json(const EvalConfig& c);
EvalConfig eval_config_from_json(const nlohmann::json& j, EvalConfig base = {});
nlohmann::json to_json(const SearchConfig& c);
SearchConfig search_config_from_json(const nlohmann::json& j, SearchConfig base = {});
nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base = {});

/// Everything a run needs. Component seeds are not configured directly: they are named
/// sub-streams of `seed` (see finalize_seeds).
struct AppConfig {
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  PreprocessConfig preprocess;
  EvolutionConfig evolution;
  EvalConfig eval;
  SearchConfig search;
  SynthConfig synth;
};

nlohmann::json to_json(const AppConfig& c);
AppConfig app_config_from_json(const nlohmann::json& j, AppConfig base = {});

/// Command-line values; each one set wins over the config file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<int> k;
  std::optional<std::string> substrate;
  std::optional<std::size_t> population;
  std::optional<int> generations;
  std::optional<double> dropout_retain;
};

/// Precedence: CLI override > config file > built-in default.
AppConfig resolve_config(const nlohmann::json* file_doc, const ConfigOverrides& overrides);
AppConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const ConfigOverrides& overrides);

/// Sets evolution.rng_seed, eval.seed and synth.seed from the top-level seed, and
/// copies `workers` into the evaluator.
void finalize_seeds(AppConfig& c);

nlohmann::json read_json_file(const std::filesystem::path& file);

}  // namespace chartevo
