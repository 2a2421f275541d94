#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chartevo/evaluator.hpp"
#include "chartevo/neat.hpp"
#include "chartevo/substrate.hpp"

namespace chartevo {

struct SearchConfig {
  std::string substrate = "network";
  WeightScaling scaling = WeightScaling::he;
  HiddenActivation activation = HiddenActivation::relu;
  /// Also evaluate the whole population on validation every generation (curves only).
  bool full_validation = false;
  std::string run_name = "nnp";

  void validate() const;
  bool operator==(const SearchConfig&) const = default;
};

struct GenerationRecord {
  int generation = 0;
  std::size_t species_count = 0;
  double threshold = 0.0;
  double train_best = 0.0;
  double train_mean = 0.0;
  std::size_t champion_matches = 0;
  /// Filled in during model selection.
  std::optional<double> champion_validation;
  std::optional<double> validation_best;
  std::optional<double> validation_mean;
};

struct PatternScores {
  FitnessReport training;
  FitnessReport validation;
  FitnessReport test;
};

struct SelectedPattern {
  int generation = 0;
  CppnGenome genome;
  PhenotypeNetwork phenotype;
  PatternScores scores;
};

struct SearchRun {
  EvolutionConfig evolution;
  EvalConfig eval;
  SearchConfig search;
  std::vector<GenerationRecord> history;
  std::vector<CppnGenome> champions;
  SelectedPattern selected;
};

struct PackedCorpus {
  PackedDataset training;
  PackedDataset validation;
  PackedDataset test;

  static PackedCorpus pack(const Corpus& corpus, int k);
};

/// Generation-by-generation driver, so runs can be checkpointed and resumed.
/// Generation g evaluates the current population on training (dropout per EvalConfig),
/// records its champion, and evolves unless g is the last generation.
class SearchEngine {
 public:
  SearchEngine(const PackedCorpus& corpus, EvolutionConfig evolution, EvalConfig eval,
               SearchConfig search);

  bool finished() const { return finished_; }
  int next_generation() const { return evolver_.generation(); }
  const std::vector<GenerationRecord>& history() const { return history_; }
  const Evolver& evolver() const { return evolver_; }

  void step();
  /// Validation-based selection over generation champions; test is scored once, on
  /// the selected pattern only.
  SearchRun finish() const;

  nlohmann::json checkpoint() const;
  static SearchEngine resume(const PackedCorpus& corpus, const nlohmann::json& checkpoint);

 private:
  SearchEngine(const PackedCorpus& corpus, Evolver evolver, EvalConfig eval, SearchConfig search);

  std::vector<PhenotypeNetwork> express_population() const;

  const PackedCorpus* corpus_;
  Evolver evolver_;
  EvalConfig eval_;
  SearchConfig search_;
  SubstrateSpec substrate_;
  std::vector<GenerationRecord> history_;
  std::vector<CppnGenome> champions_;
  int zero_streak_ = 0;
  bool finished_ = false;
};

/// Full run. `on_generation` (optional) is called after every completed generation.
SearchRun run_search(const Corpus& corpus, const EvolutionConfig& evolution,
                     const EvalConfig& eval, const SearchConfig& search,
                     const std::function<void(const SearchEngine&)>& on_generation = {});

/// Tab-separated, fixed %.17g formatting.
void write_history_tsv(std::ostream& out, const std::vector<GenerationRecord>& history);

/// `pattern,train<k>,valid<k>,test<k>` with fitness values in units of 1e-2.
std::string results_header(int k);
std::string results_row(const std::string& name, const PatternScores& scores);

struct ResultEntry {
  std::string pattern;
  PatternScores scores;
};

/// One row per pattern and three columns per k, in `ks` order. A missing (pattern, k)
/// pair leaves its cells empty.
std::string results_table(const std::vector<ResultEntry>& entries, const std::vector<int>& ks);

/// Every matched chart's two channels, 32 rows per chart:
/// `chart_id,step,daily_change,change_to_last_day`. Returns the number of charts written.
std::size_t export_overlay(std::ostream& out, const PhenotypeNetwork& pattern,
                           const Dataset& dataset);

nlohmann::json to_json(const SelectedPattern& pattern);

}  // namespace chartevo
