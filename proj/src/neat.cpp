#include "chartevo/neat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

namespace chartevo {

MutationRates MutationRates::decayed(double factor, int generation) const {
  const double scale = std::pow(factor, generation);
  return {add_node * scale, add_connection * scale, perturb_weight * scale,
          replace_weight * scale};
}

void EvolutionConfig::validate() const {
  auto rate = [](double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
  };
  if (population_size < 2) throw ConfigError("population_size must be >= 2");
  if (generations < 0) throw ConfigError("generations must be >= 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw ConfigError("decay_factor must lie in (0, 1]");
  }
  if (!(threshold_growth > 0.0) || !(overspeciation_factor > 0.0)) {
    throw ConfigError("threshold growth factors must be positive");
  }
  if (!(initial_compat_threshold > 0.0)) {
    throw ConfigError("initial_compat_threshold must be positive");
  }
  if (max_species < 1) throw ConfigError("max_species must be >= 1");
  rate(mutation.add_node, "add_node rate");
  rate(mutation.add_connection, "add_connection rate");
  rate(mutation.perturb_weight, "perturb_weight rate");
  rate(mutation.replace_weight, "replace_weight rate");
  rate(crossover_rate, "crossover_rate");
  if (!(survival_fraction > 0.0 && survival_fraction <= 1.0)) {
    throw ConfigError("survival_fraction must lie in (0, 1]");
  }
  if (stagnation_limit < 1) throw ConfigError("stagnation_limit must be >= 1");
  if (!(weight_limit > 0.0) || !(perturb_power >= 0.0) || !(replace_range > 0.0)) {
    throw ConfigError("weight ranges must be positive");
  }
  if (compat.excess < 0 || compat.disjoint < 0 || compat.weight < 0) {
    throw ConfigError("compatibility coefficients must be non-negative");
  }
}

double compatibility(const CppnGenome& a, const CppnGenome& b,
                     const CompatibilityCoefficients& c) {
  const auto& ga = a.connections();
  const auto& gb = b.connections();
  const int max_a = ga.empty() ? -1 : ga.back().innovation;
  const int max_b = gb.empty() ? -1 : gb.back().innovation;
  std::size_t excess = 0;
  std::size_t disjoint = 0;
  std::size_t matching = 0;
  double weight_diff = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  auto count_unmatched = [&](int innovation, int other_max) {
    if (innovation > other_max) {
      ++excess;
    } else {
      ++disjoint;
    }
  };
  while (i < ga.size() || j < gb.size()) {
    if (j == gb.size() || (i < ga.size() && ga[i].innovation < gb[j].innovation)) {
      count_unmatched(ga[i++].innovation, max_b);
    } else if (i == ga.size() || gb[j].innovation < ga[i].innovation) {
      count_unmatched(gb[j++].innovation, max_a);
    } else {
      weight_diff += std::fabs(ga[i].weight - gb[j].weight);
      ++matching;
      ++i;
      ++j;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>({ga.size(), gb.size(), 1}));
  const double mean_diff = matching ? weight_diff / static_cast<double>(matching) : 0.0;
  return c.excess * static_cast<double>(excess) / n +
         c.disjoint * static_cast<double>(disjoint) / n + c.weight * mean_diff;
}

std::vector<Species> speciate(std::span<const CppnGenome> population,
                              std::vector<Species> previous, double threshold,
                              const CompatibilityCoefficients& coefficients,
                              int& next_species_id) {
  std::vector<Species> species = std::move(previous);
  for (auto& s : species) s.members.clear();
  for (std::size_t i = 0; i < population.size(); ++i) {
    bool placed = false;
    for (auto& s : species) {
      if (compatibility(population[i], s.representative, coefficients) < threshold) {
        s.members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) {
      Species s;
      s.id = next_species_id++;
      s.representative = population[i];
      s.members.push_back(i);
      species.push_back(std::move(s));
    }
  }
  std::erase_if(species, [](const Species& s) { return s.members.empty(); });
  return species;
}

double adjust_threshold(double threshold, std::size_t species_count,
                        const EvolutionConfig& config) {
  double t = threshold * config.threshold_growth;
  if (species_count > config.max_species) t *= config.overspeciation_factor;
  return t;
}

double ThresholdSchedule::value(const EvolutionConfig& config) const {
  return initial * std::pow(config.threshold_growth, generations) *
         std::pow(config.overspeciation_factor, overspeciation_events);
}

void ThresholdSchedule::advance(std::size_t species_count, const EvolutionConfig& config) {
  ++generations;
  if (species_count > config.max_species) ++overspeciation_events;
}

CppnGenome crossover(const CppnGenome& a, const CppnGenome& b, double fitness_a,
                     double fitness_b, Rng& rng) {
  const bool a_fitter = fitness_a > fitness_b || (fitness_a == fitness_b && bernoulli(rng, 0.5));
  const CppnGenome& fit = a_fitter ? a : b;
  const CppnGenome& other = a_fitter ? b : a;
  const auto& other_genes = other.connections();
  std::vector<ConnectionGene> genes;
  genes.reserve(fit.connections().size());
  for (const ConnectionGene& g : fit.connections()) {
    auto it = std::lower_bound(other_genes.begin(), other_genes.end(), g.innovation,
                               [](const ConnectionGene& c, int v) { return c.innovation < v; });
    if (it == other_genes.end() || it->innovation != g.innovation) {
      genes.push_back(g);
      continue;
    }
    ConnectionGene child = bernoulli(rng, 0.5) ? g : *it;
    if (!g.enabled || !it->enabled) {
      child.enabled = !bernoulli(rng, 0.75);
    } else {
      child.enabled = true;
    }
    genes.push_back(child);
  }
  // Every gene is structurally present in `fit`, so the child cannot contain a cycle;
  // the validating constructor re-checks it.
  return CppnGenome(fit.nodes(), std::move(genes));
}

CppnGenome mutate(CppnGenome genome, const MutationRates& rates, const MutationLimits& limits,
                  InnovationTracker& innovations, Rng& rng, MutationEvents* events) {
  MutationEvents ev;
  if (bernoulli(rng, rates.perturb_weight)) {
    ev.perturbed = true;
    for (auto& c : genome.mutable_connections()) {
      if (bernoulli(rng, rates.replace_weight)) {
        c.weight = uniform(rng, -limits.replace_range, limits.replace_range);
      } else {
        c.weight += uniform(rng, -limits.perturb_power, limits.perturb_power);
      }
    }
  }
  if (bernoulli(rng, rates.add_connection)) {
    std::vector<std::pair<int, int>> candidates;
    for (const auto& from : genome.nodes()) {
      if (from.role == NodeRole::output) continue;
      for (const auto& to : genome.nodes()) {
        if (to.role == NodeRole::input || from.id == to.id) continue;
        if (genome.has_connection(from.id, to.id) || genome.creates_cycle(from.id, to.id)) {
          continue;
        }
        candidates.emplace_back(from.id, to.id);
      }
    }
    if (!candidates.empty()) {
      const auto [from, to] = candidates[pick_index(rng, candidates.size())];
      genome.add_connection({innovations.connection_innovation(from, to), from, to,
                             uniform(rng, -limits.replace_range, limits.replace_range), true});
      ev.added_connection = true;
    }
  }
  if (bernoulli(rng, rates.add_node)) {
    std::vector<std::size_t> enabled;
    const auto& conns = genome.connections();
    for (std::size_t i = 0; i < conns.size(); ++i) {
      if (conns[i].enabled) enabled.push_back(i);
    }
    if (!enabled.empty()) {
      ConnectionGene& split = genome.mutable_connections()[enabled[pick_index(rng, enabled.size())]];
      split.enabled = false;
      const ConnectionGene old = split;
      const int hidden = innovations.split_node(old.innovation, genome.nodes());
      const Activation fn = kHiddenActivations[pick_index(rng, kHiddenActivations.size())];
      genome.add_node({hidden, NodeRole::hidden, fn});
      genome.add_connection(
          {innovations.connection_innovation(old.from, hidden), old.from, hidden, 1.0, true});
      genome.add_connection(
          {innovations.connection_innovation(hidden, old.to), hidden, old.to, old.weight, true});
      ev.added_node = true;
    }
  }
  for (auto& c : genome.mutable_connections()) {
    c.weight = std::clamp(c.weight, -limits.weight_limit, limits.weight_limit);
  }
  if (events) *events = ev;
  return genome;
}

std::vector<std::size_t> apportion(std::span<const double> shares, std::size_t total) {
  std::vector<std::size_t> seats(shares.size(), 0);
  if (shares.empty()) return seats;
  double sum = 0.0;
  for (double s : shares) sum += s;
  std::vector<double> exact(shares.size());
  for (std::size_t i = 0; i < shares.size(); ++i) {
    exact[i] = (sum > 0.0 && std::isfinite(sum))
                   ? shares[i] / sum * static_cast<double>(total)
                   : static_cast<double>(total) / static_cast<double>(shares.size());
  }
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    seats[i] = static_cast<std::size_t>(std::floor(exact[i]));
    assigned += seats[i];
  }
  std::vector<std::size_t> order(exact.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return exact[a] - std::floor(exact[a]) > exact[b] - std::floor(exact[b]);
  });
  // Rounding in the division can leave assigned above total by a seat; trim from the
  // smallest remainders first.
  for (auto it = order.rbegin(); assigned > total && it != order.rend(); ++it) {
    if (seats[*it] > 0) {
      --seats[*it];
      --assigned;
    }
  }
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
    ++seats[order[k]];
    ++assigned;
  }
  return seats;
}

Evolver::Evolver(EvolutionConfig config) : config_(std::move(config)), rng_(config_.rng_seed) {
  config_.validate();
  threshold_.initial = config_.initial_compat_threshold;
  population_.reserve(config_.population_size);
  for (std::size_t i = 0; i < config_.population_size; ++i) {
    population_.push_back(CppnGenome::minimal(rng_, innovations_));
  }
}

MutationRates Evolver::current_rates() const {
  return config_.mutation.decayed(config_.decay_factor, generation_);
}

GenerationSummary Evolver::advance(std::span<const double> fitness) {
  if (fitness.size() != population_.size()) {
    throw StructuralError("fitness vector does not match population size");
  }
  for (double f : fitness) {
    if (!std::isfinite(f)) throw StructuralError("non-finite fitness");
  }
  GenerationSummary summary;
  summary.generation = generation_;
  summary.threshold = threshold();

  species_ = speciate(population_, std::move(species_), summary.threshold, config_.compat,
                      next_species_id_);
  summary.species_count = species_.size();

  const std::size_t champion = static_cast<std::size_t>(
      std::max_element(fitness.begin(), fitness.end()) - fitness.begin());
  std::size_t champion_species = 0;
  for (std::size_t s = 0; s < species_.size(); ++s) {
    auto& sp = species_[s];
    double best = fitness[sp.members.front()];
    for (std::size_t m : sp.members) {
      best = std::max(best, fitness[m]);
      if (m == champion) champion_species = s;
    }
    if (!sp.has_fitness || best > sp.best_fitness) {
      sp.best_fitness = best;
      sp.stagnation = 0;
      sp.has_fitness = true;
    } else {
      ++sp.stagnation;
    }
  }

  const bool all_stagnant = std::all_of(species_.begin(), species_.end(), [&](const Species& s) {
    return s.stagnation >= config_.stagnation_limit;
  });
  std::vector<Species> survivors;
  std::size_t champion_survivor = 0;
  for (std::size_t s = 0; s < species_.size(); ++s) {
    const bool keep = s == champion_species || species_[s].stagnation < config_.stagnation_limit;
    if (!keep) {
      ++summary.stagnant_removed;
      continue;
    }
    if (s == champion_species) champion_survivor = survivors.size();
    survivors.push_back(std::move(species_[s]));
  }
  if (all_stagnant) {
    summary.restarted = true;
    survivors = {std::move(survivors[champion_survivor])};
    champion_survivor = 0;
    survivors[0].stagnation = 0;
    spdlog::info("generation {}: every species stagnant; restarting from the champion's species",
                 generation_);
  }

  double min_fitness = fitness[0];
  for (double f : fitness) min_fitness = std::min(min_fitness, f);
  const double shift = min_fitness < 0.0 ? -min_fitness + 1e-12 : 0.0;
  std::vector<double> shares(survivors.size());
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    double sum = 0.0;
    for (std::size_t m : survivors[s].members) sum += fitness[m] + shift;
    shares[s] = sum / static_cast<double>(survivors[s].members.size());
  }
  std::vector<std::size_t> quota = apportion(shares, config_.population_size);
  if (quota[champion_survivor] == 0) {
    const auto donor = static_cast<std::size_t>(std::max_element(quota.begin(), quota.end()) -
                                                quota.begin());
    --quota[donor];
    ++quota[champion_survivor];
  }

  const MutationRates rates = current_rates();
  const MutationLimits limits{config_.weight_limit, config_.perturb_power, config_.replace_range};
  innovations_.begin_generation();
  std::vector<CppnGenome> next;
  next.reserve(config_.population_size);
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    std::vector<std::size_t> ranked = survivors[s].members;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    std::size_t elites = ranked.size() >= config_.elitism_min_species_size
                             ? std::min(config_.elitism, quota[s])
                             : 0;
    if (s == champion_survivor) elites = std::max<std::size_t>(elites, 1);
    elites = std::min({elites, quota[s], ranked.size()});
    for (std::size_t e = 0; e < elites; ++e) next.push_back(population_[ranked[e]]);

    const std::size_t pool = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::ceil(config_.survival_fraction * static_cast<double>(ranked.size()))));
    for (std::size_t k = elites; k < quota[s]; ++k) {
      CppnGenome child;
      if (pool >= 2 && bernoulli(rng_, config_.crossover_rate)) {
        const std::size_t p1 = pick_index(rng_, pool);
        std::size_t p2 = pick_index(rng_, pool - 1);
        if (p2 >= p1) ++p2;
        child = crossover(population_[ranked[p1]], population_[ranked[p2]], fitness[ranked[p1]],
                          fitness[ranked[p2]], rng_);
      } else {
        child = population_[ranked[pick_index(rng_, pool)]];
      }
      next.push_back(mutate(std::move(child), rates, limits, innovations_, rng_));
    }
  }

  for (auto& sp : survivors) {
    sp.representative = population_[sp.members[pick_index(rng_, sp.members.size())]];
    sp.members.clear();
  }
  species_ = std::move(survivors);
  population_ = std::move(next);
  threshold_.advance(summary.species_count, config_);
  ++generation_;
  return summary;
}

namespace {

nlohmann::json species_to_json(const Species& s) {
  return {{"id", s.id},
          {"representative", s.representative.to_json()},
          {"best_fitness", s.best_fitness},
          {"stagnation", s.stagnation},
          {"has_fitness", s.has_fitness}};
}

}  // namespace

nlohmann::json Evolver::to_json() const {
  nlohmann::json j;
  j["generation"] = generation_;
  j["next_species_id"] = next_species_id_;
  j["threshold"] = {{"initial", threshold_.initial},
                    {"generations", threshold_.generations},
                    {"overspeciation_events", threshold_.overspeciation_events}};
  std::ostringstream rng_state;
  rng_state << rng_;
  j["rng_state"] = rng_state.str();
  j["innovations"] = innovations_.to_json();
  auto& pop = j["population"] = nlohmann::json::array();
  for (const auto& g : population_) pop.push_back(g.to_json());
  auto& sp = j["species"] = nlohmann::json::array();
  for (const auto& s : species_) sp.push_back(species_to_json(s));
  return j;
}

Evolver Evolver::from_json(const nlohmann::json& j, EvolutionConfig config) {
  config.validate();
  Evolver e;
  e.config_ = std::move(config);
  try {
    e.generation_ = j.at("generation").get<int>();
    e.next_species_id_ = j.at("next_species_id").get<int>();
    const auto& t = j.at("threshold");
    e.threshold_ = {t.at("initial").get<double>(), t.at("generations").get<int>(),
                    t.at("overspeciation_events").get<int>()};
    std::istringstream rng_state(j.at("rng_state").get<std::string>());
    rng_state >> e.rng_;
    if (!rng_state) throw FormatError("bad rng state in checkpoint");
    e.innovations_ = InnovationTracker::from_json(j.at("innovations"));
    for (const auto& g : j.at("population")) e.population_.push_back(CppnGenome::from_json(g));
    for (const auto& s : j.at("species")) {
      Species sp;
      sp.id = s.at("id").get<int>();
      sp.representative = CppnGenome::from_json(s.at("representative"));
      sp.best_fitness = s.at("best_fitness").get<double>();
      sp.stagnation = s.at("stagnation").get<int>();
      sp.has_fitness = s.at("has_fitness").get<bool>();
      e.species_.push_back(std::move(sp));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("bad evolver checkpoint: ") + ex.what());
  }
  if (e.population_.size() != e.config_.population_size) {
    throw FormatError("checkpoint population size does not match configuration");
  }
  return e;
}

}  // namespace chartevo
