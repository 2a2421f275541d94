// chartevo: chart-pattern search command line.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "chartevo/config.hpp"
#include "chartevo/corpus_io.hpp"
#include "chartevo/manifest.hpp"
#include "chartevo/preprocess.hpp"
#include "chartevo/search.hpp"
#include "chartevo/series_io.hpp"
#include "chartevo/synth.hpp"

namespace fs = std::filesystem;
using namespace chartevo;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kFormat = 3, kMissing = 4, kStructural = 5, kInternal = 10 };

struct MissingFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw MissingFile(std::string(what) + " not found: " + p.string());
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("chartevo");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("CHARTEVO_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("CHARTEVO_LOG_LEVEL='{}' not recognised; using info", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

struct Common {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file");
  app->add_option("--seed", c.seed, "Top-level seed (overrides config)");
  app->add_option("--workers", c.workers, "Worker threads, 0 = all cores");
}

AppConfig resolve(const Common& c, ConfigOverrides o) {
  o.seed = c.seed;
  o.workers = c.workers;
  std::optional<fs::path> file;
  if (c.config) {
    require_exists(*c.config, "config file");
    file = *c.config;
  }
  return resolve_config(file, o);
}

RunManifest begin_manifest(const std::vector<std::string>& argv, const AppConfig& cfg,
                           json arguments) {
  RunManifest m;
  m.command = argv;
  m.config = to_json(cfg);
  m.seed = cfg.seed;
  m.arguments = std::move(arguments);
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(const fs::path& file, RunManifest& m) {
  m.finished_at = utc_timestamp();
  m.status = "completed";
  write_manifest(file, m);
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw FormatError("cannot write '" + file.string() + "'");
  return out;
}

void write_json(const fs::path& file, const json& j) { open_out(file) << j.dump(2) << '\n'; }

std::size_t min_series_days(const PreprocessConfig& p) {
  int max_k = 0;
  for (int k : p.horizons) max_k = std::max(max_k, k);
  return static_cast<std::size_t>(p.smoothing_window + p.slice_window + 1 + max_k);
}

// ---- synth ----

int cmd_synth(const std::vector<std::string>& argv, const Common& common, const std::string& out) {
  AppConfig cfg = resolve(common, {});
  cfg.synth.validate(min_series_days(cfg.preprocess));
  fs::create_directories(out);
  RunManifest m = begin_manifest(argv, cfg, {{"out", out}});
  write_manifest(fs::path(out) / "run_manifest.json", m);
  const auto output = generate(cfg.synth);
  write_synth_dir(out, cfg.synth, output);
  spdlog::info("wrote {} series ({} planted motifs) to {}", output.series.size(),
               output.ground_truth.size(), out);
  finish_manifest(fs::path(out) / "run_manifest.json", m);
  return kOk;
}

// ---- preprocess ----

int cmd_preprocess(const std::vector<std::string>& argv, const Common& common,
                   const std::string& input, const std::string& out) {
  require_exists(input, "input directory");
  AppConfig cfg = resolve(common, {});
  cfg.preprocess.validate();
  fs::create_directories(out);
  RunManifest m = begin_manifest(argv, cfg, {{"input", input}, {"out", out}});
  m.inputs = digest_tree(input);
  write_manifest(fs::path(out) / "run_manifest.json", m);
  const auto series = load_series_dir(input);
  const Corpus corpus = build_corpus(series, cfg.preprocess, cfg.workers);
  save_corpus(out, corpus);
  spdlog::info("corpus: training {}, validation {}, test {} charts", corpus.training.size(),
               corpus.validation.size(), corpus.test.size());
  finish_manifest(fs::path(out) / "run_manifest.json", m);
  return kOk;
}

// ---- search / resume ----

Corpus load_corpus_checked(const fs::path& dir) {
  require_exists(dir, "corpus directory");
  for (Split s : {Split::training, Split::validation, Split::test}) {
    require_exists(dataset_path(dir, s), "corpus file");
  }
  return load_corpus(dir);
}

std::vector<InputDigest> corpus_digests(const fs::path& dir) {
  std::vector<InputDigest> out;
  for (Split s : {Split::training, Split::validation, Split::test}) {
    out.push_back(digest_file(dataset_path(dir, s)));
  }
  return out;
}

fs::path checkpoint_file(const fs::path& run, int generation) {
  char name[32];
  std::snprintf(name, sizeof name, "gen_%04d.json", generation);
  return run / "checkpoints" / name;
}

void write_history(const fs::path& run, const std::vector<GenerationRecord>& history) {
  auto out = open_out(run / "history.tsv");
  write_history_tsv(out, history);
}

void drive(SearchEngine& engine, const fs::path& run, int keep_checkpoints) {
  fs::create_directories(run / "checkpoints");
  while (!engine.finished()) {
    engine.step();
    const int g = engine.history().back().generation;
    write_json(checkpoint_file(run, g), engine.checkpoint());
    if (keep_checkpoints > 0 && g - keep_checkpoints >= 0) {
      fs::remove(checkpoint_file(run, g - keep_checkpoints));
    }
    write_history(run, engine.history());
    const auto& r = engine.history().back();
    spdlog::info("generation {:>4}: train best {:.6f} mean {:.6f} species {} matches {}", g,
                 r.train_best, r.train_mean, r.species_count, r.champion_matches);
  }
}

void write_outputs(const fs::path& run, const SearchRun& result, const Corpus& corpus) {
  write_history(run, result.history);
  write_json(run / "pattern_genome.json", result.selected.genome.to_json());
  write_json(run / "pattern_phenotype.json", result.selected.phenotype.to_json());
  {
    auto out = open_out(run / "overlay_test.csv");
    const auto n = export_overlay(out, result.selected.phenotype, corpus.test);
    spdlog::info("overlay: {} matched test charts", n);
  }
  const std::string name = result.search.run_name + "_" + std::to_string(result.eval.k);
  {
    auto out = open_out(run / "results.csv");
    out << results_header(result.eval.k) << '\n' << results_row(name, result.selected.scores) << '\n';
  }
  json report = to_json(result.selected);
  report["pattern"] = name;
  report["substrate"] = result.search.substrate;
  write_json(run / "report.json", report);
  std::cout << results_header(result.eval.k) << '\n'
            << results_row(name, result.selected.scores) << '\n';
}

int cmd_search(const std::vector<std::string>& argv, const Common& common,
               const std::string& corpus_dir, std::optional<std::string> substrate,
               std::optional<int> k, std::optional<std::size_t> population,
               std::optional<int> generations, const std::string& out, int keep_checkpoints) {
  ConfigOverrides o;
  o.substrate = substrate;
  o.k = k;
  o.population = population;
  o.generations = generations;
  AppConfig cfg = resolve(common, o);
  cfg.evolution.validate();
  cfg.eval.validate();
  cfg.search.validate();
  const Corpus corpus = load_corpus_checked(corpus_dir);
  if (corpus.training.charts.empty()) throw ConfigError("training split is empty");

  const fs::path run(out);
  fs::create_directories(run);
  RunManifest m = begin_manifest(argv, cfg, {{"corpus", fs::absolute(corpus_dir).string()},
                                             {"out", out},
                                             {"keep_checkpoints", keep_checkpoints}});
  m.inputs = corpus_digests(corpus_dir);
  write_manifest(run / "run_manifest.json", m);

  const PackedCorpus packed = PackedCorpus::pack(corpus, cfg.eval.k);
  SearchEngine engine(packed, cfg.evolution, cfg.eval, cfg.search);
  drive(engine, run, keep_checkpoints);
  write_outputs(run, engine.finish(), corpus);
  finish_manifest(run / "run_manifest.json", m);
  return kOk;
}

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  std::optional<fs::path> best;
  if (!fs::exists(dir)) return best;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    if (!best || e.path().filename() > best->filename()) best = e.path();
  }
  return best;
}

int cmd_resume(const std::string& run_dir, std::optional<std::string> checkpoint) {
  const fs::path run(run_dir);
  require_exists(run / "run_manifest.json", "run manifest");
  RunManifest m = manifest_from_json(read_json_file(run / "run_manifest.json"));
  const std::string corpus_dir = m.arguments.at("corpus").get<std::string>();
  const int keep = m.arguments.value("keep_checkpoints", 0);
  fs::path ckpt;
  if (checkpoint) {
    ckpt = *checkpoint;
    require_exists(ckpt, "checkpoint");
  } else {
    auto latest = latest_checkpoint(run / "checkpoints");
    if (!latest) throw MissingFile("no checkpoint found in " + (run / "checkpoints").string());
    ckpt = *latest;
  }
  const Corpus corpus = load_corpus_checked(corpus_dir);
  const auto digests = corpus_digests(corpus_dir);
  for (std::size_t i = 0; i < digests.size() && i < m.inputs.size(); ++i) {
    if (digests[i].fnv1a64 != m.inputs[i].fnv1a64) {
      throw ConfigError("corpus file " + digests[i].path + " changed since the run started");
    }
  }
  const json doc = read_json_file(ckpt);
  const int k = doc.at("eval_config").at("k").get<int>();
  const PackedCorpus packed = PackedCorpus::pack(corpus, k);
  SearchEngine engine = SearchEngine::resume(packed, doc);
  spdlog::info("resuming {} at generation {}", run.string(), engine.next_generation());
  m.arguments["resumed_from"] = ckpt.string();
  m.status = "resumed";
  write_manifest(run / "run_manifest.json", m);
  drive(engine, run, keep);
  write_outputs(run, engine.finish(), corpus);
  finish_manifest(run / "run_manifest.json", m);
  return kOk;
}

// ---- evaluate / export-overlay ----

struct PatternSource {
  std::optional<std::string> genome;
  std::optional<std::string> phenotype;
};

PhenotypeNetwork load_pattern(const PatternSource& src, const AppConfig& cfg) {
  if (src.genome.has_value() == src.phenotype.has_value()) {
    throw ConfigError("give exactly one of --genome or --phenotype");
  }
  if (src.phenotype) {
    require_exists(*src.phenotype, "phenotype file");
    return PhenotypeNetwork::from_json(read_json_file(*src.phenotype));
  }
  require_exists(*src.genome, "genome file");
  const CppnGenome genome = CppnGenome::from_json(read_json_file(*src.genome));
  return express(genome, substrate_by_name(cfg.search.substrate), cfg.search.scaling,
                 cfg.search.activation);
}

Dataset load_split(const std::string& corpus_dir, const std::string& split) {
  require_exists(corpus_dir, "corpus directory");
  const fs::path file = dataset_path(corpus_dir, parse_split(split));
  require_exists(file, "corpus file");
  return load_dataset(file);
}

int cmd_evaluate(const std::vector<std::string>& argv, const Common& common,
                 const std::string& corpus_dir, const std::string& split, const PatternSource& src,
                 std::optional<std::string> substrate, std::optional<int> k,
                 const std::string& out) {
  ConfigOverrides o;
  o.substrate = substrate;
  o.k = k;
  AppConfig cfg = resolve(common, o);
  const Dataset data = load_split(corpus_dir, split);
  const PhenotypeNetwork net = load_pattern(src, cfg);

  fs::create_directories(out);
  RunManifest m = begin_manifest(argv, cfg, {{"corpus", corpus_dir}, {"split", split}, {"out", out}});
  m.inputs.push_back(digest_file(dataset_path(corpus_dir, parse_split(split))));
  m.inputs.push_back(digest_file(src.genome ? *src.genome : *src.phenotype));
  write_manifest(fs::path(out) / "run_manifest.json", m);

  EvalConfig eval = cfg.eval;
  eval.dropout_enabled = false;
  const PackedDataset packed = PackedDataset::pack(data, eval.k);
  const FitnessReport report = fitness(net, packed, eval);
  const auto flags = forward(net, packed, nullptr, eval.batch_size);
  {
    auto ids = open_out(fs::path(out) / "matches.txt");
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (flags[i] && packed.has_return[i]) ids << data.charts[i].id() << '\n';
    }
  }
  json j = to_json(report);
  j["split"] = to_string(data.split);
  write_json(fs::path(out) / "report.json", j);
  std::cout << j.dump(2) << '\n';
  finish_manifest(fs::path(out) / "run_manifest.json", m);
  return kOk;
}

int cmd_overlay(const std::vector<std::string>& argv, const Common& common,
                const std::string& corpus_dir, const std::string& split, const PatternSource& src,
                std::optional<std::string> substrate, const std::string& out) {
  ConfigOverrides o;
  o.substrate = substrate;
  AppConfig cfg = resolve(common, o);
  const Dataset data = load_split(corpus_dir, split);
  const PhenotypeNetwork net = load_pattern(src, cfg);
  fs::create_directories(out);
  RunManifest m = begin_manifest(argv, cfg, {{"corpus", corpus_dir}, {"split", split}, {"out", out}});
  m.inputs.push_back(digest_file(dataset_path(corpus_dir, parse_split(split))));
  write_manifest(fs::path(out) / "run_manifest.json", m);
  auto file = open_out(fs::path(out) / ("overlay_" + std::string(to_string(data.split)) + ".csv"));
  const auto n = export_overlay(file, net, data);
  spdlog::info("overlay: {} matched charts", n);
  finish_manifest(fs::path(out) / "run_manifest.json", m);
  return kOk;
}

// ---- table ----

int cmd_table(const std::vector<std::string>& runs, std::optional<std::string> out) {
  std::vector<ResultEntry> entries;
  std::vector<int> ks;
  for (const auto& r : runs) {
    const fs::path file = fs::path(r) / "report.json";
    require_exists(file, "run report");
    const json j = read_json_file(file);
    ResultEntry e;
    const std::string name = j.at("pattern").get<std::string>();
    e.scores.training = fitness_report_from_json(j.at("training"));
    e.scores.validation = fitness_report_from_json(j.at("validation"));
    e.scores.test = fitness_report_from_json(j.at("test"));
    const int k = e.scores.training.k;
    // pattern names carry the horizon as a suffix; the table row is per pattern family
    const auto cut = name.rfind('_');
    e.pattern = (cut != std::string::npos && name.substr(cut + 1) == std::to_string(k))
                    ? name.substr(0, cut)
                    : name;
    if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
    entries.push_back(std::move(e));
  }
  std::sort(ks.begin(), ks.end());
  const std::string table = results_table(entries, ks);
  if (out) {
    open_out(*out) << table;
  }
  std::cout << table;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  const std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"chartevo: evolve chart-pattern detectors with HyperNEAT"};
  app.set_version_flag("--version", std::string(CHARTEVO_VERSION));
  app.require_subcommand(1);

  Common common;
  std::string out, input, corpus, split = "test", run_dir;
  std::optional<std::string> substrate, checkpoint, table_out;
  std::optional<int> k, generations;
  std::optional<std::size_t> population;
  int keep_checkpoints = 0;
  PatternSource pattern;
  std::vector<std::string> table_runs;

  auto* synth = app.add_subcommand("synth", "Generate synthetic price series with planted motifs");
  add_common(synth, common);
  synth->add_option("--out", out, "Output directory")->required();

  auto* prep = app.add_subcommand("preprocess", "Build a chart corpus from price series");
  add_common(prep, common);
  prep->add_option("--input", input, "Series directory")->required();
  prep->add_option("--out", out, "Corpus output directory")->required();

  auto* search = app.add_subcommand("search", "Evolve a chart pattern");
  add_common(search, common);
  search->add_option("--corpus", corpus, "Corpus directory")->required();
  search->add_option("--substrate", substrate, "template | network | deep")
      ->check(CLI::IsMember({"template", "network", "deep"}));
  search->add_option("--k", k, "Return horizon in days");
  search->add_option("--population", population, "Population size");
  search->add_option("--generations", generations, "Number of generations");
  search->add_option("--keep-checkpoints", keep_checkpoints,
                     "Keep only the newest N checkpoints (0 = all)");
  search->add_option("--out", out, "Run directory")->required();

  auto* resume = app.add_subcommand("resume", "Continue a search from a checkpoint");
  resume->add_option("--run", run_dir, "Run directory")->required();
  resume->add_option("--checkpoint", checkpoint, "Checkpoint file (default: newest)");

  auto add_pattern = [&](CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--corpus", corpus, "Corpus directory")->required();
    sub->add_option("--split", split, "training | validation | test");
    sub->add_option("--genome", pattern.genome, "CPPN genome JSON");
    sub->add_option("--phenotype", pattern.phenotype, "Phenotype network JSON");
    sub->add_option("--substrate", substrate, "Substrate used to express a genome")
        ->check(CLI::IsMember({"template", "network", "deep"}));
    sub->add_option("--out", out, "Output directory")->required();
  };
  auto* evaluate = app.add_subcommand("evaluate", "Score a pattern on one corpus split");
  add_pattern(evaluate);
  evaluate->add_option("--k", k, "Return horizon in days");

  auto* overlay = app.add_subcommand("export-overlay", "Export the charts a pattern matches");
  add_pattern(overlay);

  auto* table = app.add_subcommand("table", "Merge run reports into a results table");
  table->add_option("runs", table_runs, "Run directories")->required();
  table->add_option("--out", table_out, "CSV output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) return cmd_synth(args, common, out);
    if (*prep) return cmd_preprocess(args, common, input, out);
    if (*search) {
      return cmd_search(args, common, corpus, substrate, k, population, generations, out,
                        keep_checkpoints);
    }
    if (*resume) return cmd_resume(run_dir, checkpoint);
    if (*evaluate) return cmd_evaluate(args, common, corpus, split, pattern, substrate, k, out);
    if (*overlay) return cmd_overlay(args, common, corpus, split, pattern, substrate, out);
    if (*table) return cmd_table(table_runs, table_out);
  } catch (const MissingFile& e) {
    spdlog::error("missing file: {}", e.what());
    return kMissing;
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kConfig;
  } catch (const FormatError& e) {
    spdlog::error("format error: {}", e.what());
    return kFormat;
  } catch (const StructuralError& e) {
    spdlog::error("structural error: {}", e.what());
    return kStructural;
  } catch (const json::exception& e) {
    spdlog::error("format error: malformed JSON: {}", e.what());
    return kFormat;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("i/o error: {}", e.what());
    return kFormat;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternal;
  }
  return kOk;
}
