#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "chartevo/cppn.hpp"
#include "chartevo/random.hpp"

namespace chartevo {

struct MutationRates {
  double add_node = 0.03;
  double add_connection = 0.05;
  /// Probability that a genome's weights are perturbed at all.
  double perturb_weight = 0.8;
  /// Within a perturb event, per-connection chance of replacement instead of a nudge.
  double replace_weight = 0.1;

  /// Every rate multiplied by factor^generation.
  MutationRates decayed(double factor, int generation) const;
  bool operator==(const MutationRates&) const = default;
};

struct CompatibilityCoefficients {
  double excess = 1.0;
  double disjoint = 1.0;
  double weight = 0.4;
  bool operator==(const CompatibilityCoefficients&) const = default;
};

struct EvolutionConfig {
  std::size_t population_size = 1000;
  int generations = 200;
  double decay_factor = 0.999;
  double threshold_growth = 1.001;
  double overspeciation_factor = 1.1;
  std::size_t max_species = 100;
  double initial_compat_threshold = 3.0;
  CompatibilityCoefficients compat;
  MutationRates mutation;
  double crossover_rate = 0.75;
  std::size_t elitism = 1;
  /// Species smaller than this copy no elite (the global champion is always kept).
  std::size_t elitism_min_species_size = 5;
  /// Fraction of each species (best first) eligible as parents.
  double survival_fraction = 0.2;
  int stagnation_limit = 15;
  double weight_limit = 3.0;
  double perturb_power = 0.5;
  double replace_range = 1.0;
  std::uint64_t rng_seed = 1;

  void validate() const;
  bool operator==(const EvolutionConfig&) const = default;
};

/// delta = c1 E / N + c2 D / N + c3 * mean |dw| over matching genes,
/// N = larger connection-gene count (at least 1).
double compatibility(const CppnGenome& a, const CppnGenome& b,
                     const CompatibilityCoefficients& c);

struct Species {
  int id = 0;
  CppnGenome representative;
  std::vector<std::size_t> members;
  double best_fitness = 0.0;
  int stagnation = 0;
  bool has_fitness = false;

  bool operator==(const Species&) const = default;
};

/// Greedy assignment: each genome joins the first species (in list order) whose
/// representative is within `threshold`, else founds a new species with itself as
/// representative. `previous` supplies representatives carried over; species left
/// without members are dropped.
std::vector<Species> speciate(std::span<const CppnGenome> population,
                              std::vector<Species> previous, double threshold,
                              const CompatibilityCoefficients& coefficients, int& next_species_id);

/// One generation step: threshold * growth, and * overspeciation_factor when
/// species_count > max_species.
double adjust_threshold(double threshold, std::size_t species_count, const EvolutionConfig& config);

/// Threshold kept in closed form: initial * growth^g * overspeciation^m.
struct ThresholdSchedule {
  double initial = 3.0;
  int generations = 0;
  int overspeciation_events = 0;

  double value(const EvolutionConfig& config) const;
  void advance(std::size_t species_count, const EvolutionConfig& config);
  bool operator==(const ThresholdSchedule&) const = default;
};

/// Matching genes come from either parent at random; disjoint and excess genes from the
/// fitter parent (a coin flip picks it on ties). Genes disabled in either parent stay
/// disabled with probability 0.75.
CppnGenome crossover(const CppnGenome& a, const CppnGenome& b, double fitness_a,
                     double fitness_b, Rng& rng);

struct MutationLimits {
  double weight_limit = 3.0;
  double perturb_power = 0.5;
  double replace_range = 1.0;
};

struct MutationEvents {
  bool perturbed = false;
  bool added_connection = false;
  bool added_node = false;
};

/// Weight perturbation, add-connection (acyclic pairs only, no-op if none), and
/// add-node by splitting an enabled connection, each with its own probability.
CppnGenome mutate(CppnGenome genome, const MutationRates& rates, const MutationLimits& limits,
                  InnovationTracker& innovations, Rng& rng, MutationEvents* events = nullptr);

/// Largest-remainder apportionment of `total` seats by non-negative `shares`. Falls back
/// to equal shares when they sum to zero.
std::vector<std::size_t> apportion(std::span<const double> shares, std::size_t total);

struct GenerationSummary {
  int generation = 0;
  std::size_t species_count = 0;
  double threshold = 0.0;
  std::size_t stagnant_removed = 0;
  bool restarted = false;
};

/// Population state of one NEAT run. advance() consumes the fitness of the current
/// population and replaces it with the next generation.
class Evolver {
 public:
  explicit Evolver(EvolutionConfig config);

  const EvolutionConfig& config() const { return config_; }
  const std::vector<CppnGenome>& population() const { return population_; }
  const std::vector<Species>& species() const { return species_; }
  int generation() const { return generation_; }
  double threshold() const { return threshold_.value(config_); }
  const ThresholdSchedule& threshold_schedule() const { return threshold_; }
  MutationRates current_rates() const;
  const InnovationTracker& innovations() const { return innovations_; }

  GenerationSummary advance(std::span<const double> fitness);

  nlohmann::json to_json() const;
  static Evolver from_json(const nlohmann::json& j, EvolutionConfig config);

 private:
  Evolver() = default;

  EvolutionConfig config_;
  std::vector<CppnGenome> population_;
  std::vector<Species> species_;
  InnovationTracker innovations_;
  ThresholdSchedule threshold_;
  Rng rng_;
  int generation_ = 0;
  int next_species_id_ = 0;
};

}  // namespace chartevo
