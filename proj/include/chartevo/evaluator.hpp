#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "chartevo/substrate.hpp"
#include "chartevo/types.hpp"

namespace chartevo {

struct EvalConfig {
  int k = 20;
  double alpha = 100000.0;
  double dropout_retain = 0.8;
  /// Only ever set for training-split evaluation.
  bool dropout_enabled = false;
  std::size_t batch_size = 4096;
  std::uint64_t seed = 0;
  /// 0 = all available cores.
  std::size_t workers = 0;

  void validate() const;
  bool operator==(const EvalConfig&) const = default;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A dataset flattened for one horizon k: one 64-wide input row per chart.
struct PackedDataset {
  Split split = Split::training;
  int k = 0;
  RowMatrix inputs;
  std::vector<double> returns;
  std::vector<std::uint8_t> has_return;
  std::vector<std::uint8_t> limit_hit;

  std::size_t size() const { return returns.size(); }
  static PackedDataset pack(const Dataset& dataset, int k);
};

/// exp(-6 * match_count / alpha).
double penalty(std::size_t match_count, double alpha);

/// Per hidden layer, 0 for a dropped node and 1/retain for a kept one.
struct DropoutMask {
  std::vector<Eigen::VectorXd> layers;
};

DropoutMask sample_dropout_mask(const PhenotypeNetwork& net, double retain, std::uint64_t seed);
/// Mask seed for one organism in one generation; independent of scheduling.
std::uint64_t dropout_seed(std::uint64_t seed, int generation, std::size_t organism);

/// Output-node preactivation for every chart (limit flags not applied).
std::vector<double> output_preactivations(const PhenotypeNetwork& net, const PackedDataset& data,
                                          const DropoutMask* mask = nullptr,
                                          std::size_t batch_size = 4096);

/// 1 iff preactivation > 0 and the chart is not limit-hit.
std::vector<std::uint8_t> forward(const PhenotypeNetwork& net, const PackedDataset& data,
                                  const DropoutMask* mask = nullptr,
                                  std::size_t batch_size = 4096);

/// Aggregates match flags over charts that carry return[k].
FitnessReport score_matches(std::span<const std::uint8_t> flags, const PackedDataset& data,
                            double alpha);

/// Dropout (if enabled) uses the mask for generation 0, organism 0.
FitnessReport fitness(const PhenotypeNetwork& net, const PackedDataset& data,
                      const EvalConfig& config);
FitnessReport fitness(const PhenotypeNetwork& net, const Dataset& dataset, const EvalConfig& config);

/// Parallel over networks; report i belongs to nets[i].
std::vector<FitnessReport> evaluate_population(std::span<const PhenotypeNetwork> nets,
                                               const PackedDataset& data, const EvalConfig& config,
                                               int generation = 0);

nlohmann::json to_json(const FitnessReport& report);
FitnessReport fitness_report_from_json(const nlohmann::json& j);

}  // namespace chartevo
