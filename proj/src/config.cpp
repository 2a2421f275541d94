#include "chartevo/config.hpp"

#include <fstream>
#include <set>

#include "chartevo/random.hpp"

namespace chartevo {

namespace {

using nlohmann::json;

// Reads known keys out of one JSON object and rejects the rest.
class Patch {
 public:
  Patch(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw ConfigError("config section '" + section_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + path(key) + "': " + e.what());
    }
  }

  template <typename T, typename Parse>
  void get_parsed(const char* key, T& out, Parse parse) {
    std::string text;
    if (!j_.contains(key)) return;
    get(key, text);
    try {
      out = parse(text);
    } catch (const Error& e) {
      throw ConfigError("config key '" + path(key) + "': " + e.what());
    }
  }

  const json* sub(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string path(const std::string& key) const {
    return section_.empty() ? key : section_ + "." + key;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + path(item.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

json range_to_json(const DateRange& r) { return json::array({r.first.to_string(), r.last.to_string()}); }

DateRange range_from_json(const json& j, const std::string& name) {
  try {
    if (!j.is_array() || j.size() != 2) throw ConfigError("expected [first, last]");
    return {Date::parse(j.at(0).get<std::string>()), Date::parse(j.at(1).get<std::string>())};
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + name + "': " + e.what());
  }
}

}  // namespace

json to_json(const PreprocessConfig& c) {
  return {{"smoothing_window", c.smoothing_window},
          {"slice_window", c.slice_window},
          {"downsample_factor", c.downsample_factor},
          {"channel2_scale", c.channel2_scale},
          {"horizons", c.horizons},
          {"limit_threshold", c.limit_threshold},
          {"split_ranges",
           {{"training", range_to_json(c.split_ranges.training)},
            {"validation", range_to_json(c.split_ranges.validation)},
            {"test", range_to_json(c.split_ranges.test)}}}};
}

PreprocessConfig preprocess_config_from_json(const json& j, PreprocessConfig c) {
  Patch p(j, "preprocess");
  p.get("smoothing_window", c.smoothing_window);
  p.get("slice_window", c.slice_window);
  p.get("downsample_factor", c.downsample_factor);
  p.get("channel2_scale", c.channel2_scale);
  p.get("horizons", c.horizons);
  p.get("limit_threshold", c.limit_threshold);
  if (const json* ranges = p.sub("split_ranges")) {
    Patch r(*ranges, "preprocess.split_ranges");
    for (Split s : {Split::training, Split::validation, Split::test}) {
      const std::string name(to_string(s));
      if (const json* v = r.sub(name.c_str())) {
        DateRange& target = s == Split::training     ? c.split_ranges.training
                            : s == Split::validation ? c.split_ranges.validation
                                                     : c.split_ranges.test;
        target = range_from_json(*v, r.path(name));
      }
    }
    r.finish();
  }
  p.finish();
  return c;
}

json to_json(const EvolutionConfig& c) {
  return {{"population_size", c.population_size},
          {"generations", c.generations},
          {"decay_factor", c.decay_factor},
          {"threshold_growth", c.threshold_growth},
          {"overspeciation_factor", c.overspeciation_factor},
          {"max_species", c.max_species},
          {"initial_compat_threshold", c.initial_compat_threshold},
          {"compat",
           {{"excess", c.compat.excess}, {"disjoint", c.compat.disjoint}, {"weight", c.compat.weight}}},
          {"mutation",
           {{"add_node", c.mutation.add_node},
            {"add_connection", c.mutation.add_connection},
            {"perturb_weight", c.mutation.perturb_weight},
            {"replace_weight", c.mutation.replace_weight}}},
          {"crossover_rate", c.crossover_rate},
          {"elitism", c.elitism},
          {"elitism_min_species_size", c.elitism_min_species_size},
          {"survival_fraction", c.survival_fraction},
          {"stagnation_limit", c.stagnation_limit},
          {"weight_limit", c.weight_limit},
          {"perturb_power", c.perturb_power},
          {"replace_range", c.replace_range},
          {"rng_seed", c.rng_seed}};
}

EvolutionConfig evolution_config_from_json(const json& j, EvolutionConfig c) {
  Patch p(j, "evolution");
  p.get("population_size", c.population_size);
  p.get("generations", c.generations);
  p.get("decay_factor", c.decay_factor);
  p.get("threshold_growth", c.threshold_growth);
  p.get("overspeciation_factor", c.overspeciation_factor);
  p.get("max_species", c.max_species);
  p.get("initial_compat_threshold", c.initial_compat_threshold);
  if (const json* compat = p.sub("compat")) {
    Patch q(*compat, "evolution.compat");
    q.get("excess", c.compat.excess);
    q.get("disjoint", c.compat.disjoint);
    q.get("weight", c.compat.weight);
    q.finish();
  }
  if (const json* m = p.sub("mutation")) {
    Patch q(*m, "evolution.mutation");
    q.get("add_node", c.mutation.add_node);
    q.get("add_connection", c.mutation.add_connection);
    q.get("perturb_weight", c.mutation.perturb_weight);
    q.get("replace_weight", c.mutation.replace_weight);
    q.finish();
  }
  p.get("crossover_rate", c.crossover_rate);
  p.get("elitism", c.elitism);
  p.get("elitism_min_species_size", c.elitism_min_species_size);
  p.get("survival_fraction", c.survival_fraction);
  p.get("stagnation_limit", c.stagnation_limit);
  p.get("weight_limit", c.weight_limit);
  p.get("perturb_power", c.perturb_power);
  p.get("replace_range", c.replace_range);
  p.get("rng_seed", c.rng_seed);
  p.finish();
  return c;
}

json to_json(const EvalConfig& c) {
  return {{"k", c.k},
          {"alpha", c.alpha},
          {"dropout_retain", c.dropout_retain},
          {"dropout_enabled", c.dropout_enabled},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"workers", c.workers}};
}

EvalConfig eval_config_from_json(const json& j, EvalConfig c) {
  Patch p(j, "eval");
  p.get("k", c.k);
  p.get("alpha", c.alpha);
  p.get("dropout_retain", c.dropout_retain);
  p.get("dropout_enabled", c.dropout_enabled);
  p.get("batch_size", c.batch_size);
  p.get("seed", c.seed);
  p.get("workers", c.workers);
  p.finish();
  return c;
}

json to_json(const SearchConfig& c) {
  return {{"substrate", c.substrate},
          {"scaling", to_string(c.scaling)},
          {"activation", to_string(c.activation)},
          {"full_validation", c.full_validation},
          {"run_name", c.run_name}};
}

SearchConfig search_config_from_json(const json& j, SearchConfig c) {
  Patch p(j, "search");
  p.get("substrate", c.substrate);
  p.get_parsed("scaling", c.scaling, parse_weight_scaling);
  p.get_parsed("activation", c.activation, parse_hidden_activation);
  p.get("full_validation", c.full_validation);
  p.get("run_name", c.run_name);
  p.finish();
  return c;
}

json to_json(const SynthConfig& c) {
  return {{"n_instruments", c.n_instruments},
          {"n_days", c.n_days},
          {"volatility", c.volatility},
          {"initial_price", c.initial_price},
          {"seed", c.seed},
          {"start_date", c.start_date.to_string()},
          {"motif",
           {{"shape", to_string(c.motif.shape)},
            {"injection_rate", c.motif.injection_rate},
            {"drift", c.motif.drift},
            {"horizon", c.motif.horizon},
            {"length", c.motif.length},
            {"amplitude", c.motif.amplitude}}}};
}

SynthConfig synth_config_from_json(const json& j, SynthConfig c) {
  Patch p(j, "synth");
  p.get("n_instruments", c.n_instruments);
  p.get("n_days", c.n_days);
  p.get("volatility", c.volatility);
  p.get("initial_price", c.initial_price);
  p.get("seed", c.seed);
  p.get_parsed("start_date", c.start_date, Date::parse);
  if (const json* m = p.sub("motif")) {
    Patch q(*m, "synth.motif");
    q.get_parsed("shape", c.motif.shape, parse_motif_shape);
    q.get("injection_rate", c.motif.injection_rate);
    q.get("drift", c.motif.drift);
    q.get("horizon", c.motif.horizon);
    q.get("length", c.motif.length);
    q.get("amplitude", c.motif.amplitude);
    q.finish();
  }
  p.finish();
  return c;
}

json to_json(const AppConfig& c) {
  return {{"seed", c.seed},
          {"workers", c.workers},
          {"preprocess", to_json(c.preprocess)},
          {"evolution", to_json(c.evolution)},
          {"eval", to_json(c.eval)},
          {"search", to_json(c.search)},
          {"synth", to_json(c.synth)}};
}

AppConfig app_config_from_json(const json& j, AppConfig c) {
  Patch p(j, "");
  p.get("seed", c.seed);
  p.get("workers", c.workers);
  if (const json* s = p.sub("preprocess")) c.preprocess = preprocess_config_from_json(*s, c.preprocess);
  if (const json* s = p.sub("evolution")) c.evolution = evolution_config_from_json(*s, c.evolution);
  if (const json* s = p.sub("eval")) c.eval = eval_config_from_json(*s, c.eval);
  if (const json* s = p.sub("search")) c.search = search_config_from_json(*s, c.search);
  if (const json* s = p.sub("synth")) c.synth = synth_config_from_json(*s, c.synth);
  p.finish();
  return c;
}

namespace {

AppConfig default_app_config() {
  AppConfig c;
  c.eval.dropout_enabled = true;
  return c;
}

void reject_section_seeds(const json& doc) {
  const std::pair<const char*, const char*> seeds[] = {
      {"evolution", "rng_seed"}, {"eval", "seed"}, {"synth", "seed"}};
  for (const auto& [section, key] : seeds) {
    if (doc.contains(section) && doc[section].is_object() && doc[section].contains(key)) {
      throw ConfigError(std::string("config key '") + section + "." + key +
                        "' is derived from the top-level 'seed'; set 'seed' instead");
    }
  }
}

}  // namespace

AppConfig resolve_config(const json* file_doc, const ConfigOverrides& o) {
  AppConfig c = default_app_config();
  if (file_doc) {
    reject_section_seeds(*file_doc);
    c = app_config_from_json(*file_doc, c);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.k) c.eval.k = *o.k;
  if (o.substrate) c.search.substrate = *o.substrate;
  if (o.population) c.evolution.population_size = *o.population;
  if (o.generations) c.evolution.generations = *o.generations;
  if (o.dropout_retain) c.eval.dropout_retain = *o.dropout_retain;
  finalize_seeds(c);
  return c;
}

AppConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const ConfigOverrides& overrides) {
  if (!file) return resolve_config(static_cast<const json*>(nullptr), overrides);
  const json doc = read_json_file(*file);
  return resolve_config(&doc, overrides);
}

void finalize_seeds(AppConfig& c) {
  c.evolution.rng_seed = derive_seed(c.seed, "evolution");
  c.eval.seed = derive_seed(c.seed, "eval");
  c.synth.seed = derive_seed(c.seed, "synth");
  c.eval.workers = c.workers;
}

json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open '" + file.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

}  // namespace chartevo
