#include "chartevo/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <spdlog/spdlog.h>

#include "chartevo/config.hpp"
#include "chartevo/parallel.hpp"

namespace chartevo {

void SearchConfig::validate() const { substrate_by_name(substrate); }

PackedCorpus PackedCorpus::pack(const Corpus& corpus, int k) {
  return {PackedDataset::pack(corpus.training, k), PackedDataset::pack(corpus.validation, k),
          PackedDataset::pack(corpus.test, k)};
}

SearchEngine::SearchEngine(const PackedCorpus& corpus, EvolutionConfig evolution, EvalConfig eval,
                           SearchConfig search)
    : SearchEngine(corpus, Evolver(std::move(evolution)), std::move(eval), std::move(search)) {}

SearchEngine::SearchEngine(const PackedCorpus& corpus, Evolver evolver, EvalConfig eval,
                           SearchConfig search)
    : corpus_(&corpus),
      evolver_(std::move(evolver)),
      eval_(std::move(eval)),
      search_(std::move(search)),
      substrate_(substrate_by_name(search_.substrate)) {
  eval_.validate();
  if (corpus.training.size() == 0) throw ConfigError("training split is empty");
  if (corpus.training.k != eval_.k) throw ConfigError("corpus packed for a different k");
}

std::vector<PhenotypeNetwork> SearchEngine::express_population() const {
  const auto& pop = evolver_.population();
  std::vector<PhenotypeNetwork> nets(pop.size());
  parallel_for(pop.size(), eval_.workers, [&](std::size_t i) {
    nets[i] = express(pop[i], substrate_, search_.scaling, search_.activation);
  });
  return nets;
}

void SearchEngine::step() {
  if (finished_) return;
  const int generation = evolver_.generation();
  const auto nets = express_population();
  const auto reports = evaluate_population(nets, corpus_->training, eval_, generation);

  std::vector<double> fitness(reports.size());
  std::size_t champion = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    fitness[i] = reports[i].fitness;
    sum += fitness[i];
    if (fitness[i] > fitness[champion]) champion = i;
  }

  GenerationRecord rec;
  rec.generation = generation;
  rec.train_best = fitness[champion];
  rec.train_mean = sum / static_cast<double>(fitness.size());
  rec.champion_matches = reports[champion].match_count;
  if (search_.full_validation) {
    EvalConfig plain = eval_;
    plain.dropout_enabled = false;
    const auto val = evaluate_population(nets, corpus_->validation, plain, generation);
    double best = -std::numeric_limits<double>::infinity();
    double vsum = 0.0;
    for (const auto& r : val) {
      best = std::max(best, r.fitness);
      vsum += r.fitness;
    }
    rec.validation_best = best;
    rec.validation_mean = vsum / static_cast<double>(val.size());
  }
  champions_.push_back(evolver_.population()[champion]);

  const bool all_zero = std::all_of(fitness.begin(), fitness.end(), [](double f) { return f == 0.0; });
  zero_streak_ = all_zero ? zero_streak_ + 1 : 0;
  if (zero_streak_ == 20) {
    spdlog::warn("fitness has been zero for the whole population for 20 generations");
  }

  if (generation < evolver_.config().generations) {
    const auto summary = evolver_.advance(fitness);
    rec.species_count = summary.species_count;
    rec.threshold = summary.threshold;
  } else {
    int scratch_id = 0;
    rec.threshold = evolver_.threshold();
    rec.species_count = speciate(evolver_.population(), evolver_.species(), rec.threshold,
                                 evolver_.config().compat, scratch_id)
                            .size();
    finished_ = true;
  }
  spdlog::debug("generation {}: best {:.6g} mean {:.6g} species {} matches {}", generation,
                rec.train_best, rec.train_mean, rec.species_count, rec.champion_matches);
  history_.push_back(rec);
}

SearchRun SearchEngine::finish() const {
  if (champions_.empty()) throw StructuralError("search has not evaluated any generation");
  SearchRun run;
  run.evolution = evolver_.config();
  run.eval = eval_;
  run.search = search_;
  run.history = history_;
  run.champions = champions_;

  EvalConfig plain = eval_;
  plain.dropout_enabled = false;
  std::vector<PhenotypeNetwork> nets(champions_.size());
  parallel_for(champions_.size(), eval_.workers, [&](std::size_t i) {
    nets[i] = express(champions_[i], substrate_, search_.scaling, search_.activation);
  });
  const auto validation = evaluate_population(nets, corpus_->validation, plain);
  std::size_t best = 0;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    run.history[i].champion_validation = validation[i].fitness;
    if (validation[i].fitness > validation[best].fitness) best = i;
  }

  run.selected.generation = run.history[best].generation;
  run.selected.genome = champions_[best];
  run.selected.phenotype = nets[best];
  run.selected.scores.training = fitness(nets[best], corpus_->training, plain);
  run.selected.scores.validation = validation[best];
  run.selected.scores.test = fitness(nets[best], corpus_->test, plain);
  return run;
}

nlohmann::json SearchEngine::checkpoint() const {
  nlohmann::json j;
  j["format"] = "chartevo-checkpoint";
  j["version"] = 1;
  j["evolution_config"] = to_json(evolver_.config());
  j["eval_config"] = to_json(eval_);
  j["search_config"] = to_json(search_);
  j["evolver"] = evolver_.to_json();
  j["finished"] = finished_;
  j["zero_streak"] = zero_streak_;
  auto& hist = j["history"] = nlohmann::json::array();
  for (const auto& r : history_) {
    nlohmann::json row = {{"generation", r.generation},       {"species_count", r.species_count},
                          {"threshold", r.threshold},         {"train_best", r.train_best},
                          {"train_mean", r.train_mean},       {"champion_matches", r.champion_matches}};
    if (r.validation_best) row["validation_best"] = *r.validation_best;
    if (r.validation_mean) row["validation_mean"] = *r.validation_mean;
    hist.push_back(std::move(row));
  }
  auto& champs = j["champions"] = nlohmann::json::array();
  for (const auto& g : champions_) champs.push_back(g.to_json());
  return j;
}

SearchEngine SearchEngine::resume(const PackedCorpus& corpus, const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != "chartevo-checkpoint") {
      throw FormatError("not a chartevo checkpoint");
    }
    EvolutionConfig evo = evolution_config_from_json(j.at("evolution_config"));
    SearchEngine engine(corpus, Evolver::from_json(j.at("evolver"), evo),
                        eval_config_from_json(j.at("eval_config")),
                        search_config_from_json(j.at("search_config")));
    engine.finished_ = j.at("finished").get<bool>();
    engine.zero_streak_ = j.at("zero_streak").get<int>();
    for (const auto& row : j.at("history")) {
      GenerationRecord r;
      r.generation = row.at("generation").get<int>();
      r.species_count = row.at("species_count").get<std::size_t>();
      r.threshold = row.at("threshold").get<double>();
      r.train_best = row.at("train_best").get<double>();
      r.train_mean = row.at("train_mean").get<double>();
      r.champion_matches = row.at("champion_matches").get<std::size_t>();
      if (row.contains("validation_best")) r.validation_best = row["validation_best"].get<double>();
      if (row.contains("validation_mean")) r.validation_mean = row["validation_mean"].get<double>();
      engine.history_.push_back(r);
    }
    for (const auto& g : j.at("champions")) engine.champions_.push_back(CppnGenome::from_json(g));
    return engine;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint: ") + e.what());
  }
}

SearchRun run_search(const Corpus& corpus, const EvolutionConfig& evolution,
                     const EvalConfig& eval, const SearchConfig& search,
                     const std::function<void(const SearchEngine&)>& on_generation) {
  if (corpus.training.size() == 0) throw ConfigError("training split is empty");
  const PackedCorpus packed = PackedCorpus::pack(corpus, eval.k);
  SearchEngine engine(packed, evolution, eval, search);
  while (!engine.finished()) {
    engine.step();
    if (on_generation) on_generation(engine);
  }
  return engine.finish();
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_optional(const std::optional<double>& v) { return v ? fmt_double(*v) : "NA"; }

}  // namespace

void write_history_tsv(std::ostream& out, const std::vector<GenerationRecord>& history) {
  out << "generation\tspecies\tthreshold\ttrain_best\ttrain_mean\tchampion_matches"
         "\tchampion_validation\tvalidation_best\tvalidation_mean\n";
  for (const auto& r : history) {
    out << r.generation << '\t' << r.species_count << '\t' << fmt_double(r.threshold) << '\t'
        << fmt_double(r.train_best) << '\t' << fmt_double(r.train_mean) << '\t'
        << r.champion_matches << '\t' << fmt_optional(r.champion_validation) << '\t'
        << fmt_optional(r.validation_best) << '\t' << fmt_optional(r.validation_mean) << '\n';
  }
}

std::string results_header(int k) {
  const std::string ks = std::to_string(k);
  return "pattern,train" + ks + ",valid" + ks + ",test" + ks;
}

namespace {

std::string fmt_percent(double fitness) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", fitness * 100.0);
  return buf;
}

}  // namespace

std::string results_row(const std::string& name, const PatternScores& scores) {
  return name + "," + fmt_percent(scores.training.fitness) + "," +
         fmt_percent(scores.validation.fitness) + "," + fmt_percent(scores.test.fitness);
}

std::string results_table(const std::vector<ResultEntry>& entries, const std::vector<int>& ks) {
  std::string out = "pattern";
  for (int k : ks) {
    const std::string s = std::to_string(k);
    out += ",train" + s + ",valid" + s + ",test" + s;
  }
  out += '\n';
  std::vector<std::string> names;
  for (const auto& e : entries) {
    if (std::find(names.begin(), names.end(), e.pattern) == names.end()) names.push_back(e.pattern);
  }
  for (const auto& name : names) {
    out += name;
    for (int k : ks) {
      auto it = std::find_if(entries.begin(), entries.end(), [&](const ResultEntry& e) {
        return e.pattern == name && e.scores.training.k == k;
      });
      if (it == entries.end()) {
        out += ",,,";
      } else {
        out += "," + fmt_percent(it->scores.training.fitness) + "," +
               fmt_percent(it->scores.validation.fitness) + "," +
               fmt_percent(it->scores.test.fitness);
      }
    }
    out += '\n';
  }
  return out;
}

std::size_t export_overlay(std::ostream& out, const PhenotypeNetwork& pattern,
                           const Dataset& dataset) {
  out << "chart_id,step,daily_change,change_to_last_day\n";
  const PackedDataset packed = PackedDataset::pack(dataset, 1);
  const auto flags = forward(pattern, packed);
  std::size_t written = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (!flags[i]) continue;
    const Chart& c = dataset.charts[i];
    const std::string id = c.id();
    for (std::size_t step = 0; step < kChartSteps; ++step) {
      out << id << ',' << step << ',' << fmt_double(c.value(step, 0)) << ','
          << fmt_double(c.value(step, 1)) << '\n';
    }
    ++written;
  }
  return written;
}

nlohmann::json to_json(const SelectedPattern& pattern) {
  return {{"generation", pattern.generation},
          {"training", to_json(pattern.scores.training)},
          {"validation", to_json(pattern.scores.validation)},
          {"test", to_json(pattern.scores.test)}};
}

}  // namespace chartevo
