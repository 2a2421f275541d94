#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "chartevo/cppn.hpp"

namespace chartevo {

/// Node grid of one layer, written W x H: `width` nodes along x (time axis) and
/// `height` along y (channel axis). Nodes are flattened x-major, index = xi * height + yi,
/// so a 32 x 2 input grid lines up with Chart::values.
struct Grid {
  int width = 1;
  int height = 1;

  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
  bool operator==(const Grid&) const = default;
};

/// Evenly spaced points over [-1, 1] including both ends; a single point sits at 0.
double grid_position(int index, int count);

struct SubstrateSpec {
  std::string name;
  std::vector<Grid> layers;

  std::size_t layer_count() const { return layers.size(); }
  double layer_z(std::size_t layer) const;
  std::vector<Coord> coordinates(std::size_t layer) const;
  std::size_t connection_count() const;
  void validate() const;

  bool operator==(const SubstrateSpec&) const = default;
};

struct StandardSubstrates {
  SubstrateSpec template_substrate;
  SubstrateSpec network;
  SubstrateSpec deep;
};

/// template: 32x2 -> 1x1; network: 32x2 -> 16x12 -> 8x6 -> 1x1;
/// deep: 32x2 -> 16x12 -> 16x6 -> 8x6 -> 4x6 -> 4x3 -> 1x1.
StandardSubstrates standard_substrates();
/// "template", "network" or "deep".
SubstrateSpec substrate_by_name(std::string_view name);

enum class WeightScaling { he, none };
enum class HiddenActivation { relu, sigmoid };

/// sqrt(2 / n_in); 1 when nothing is connected.
double he_scale(std::size_t n_in);

std::string_view to_string(WeightScaling s);
WeightScaling parse_weight_scaling(std::string_view text);
std::string_view to_string(HiddenActivation a);
HiddenActivation parse_hidden_activation(std::string_view text);

struct DenseLayer {
  /// out x in
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Dense MLP discriminant. Hidden layers apply `activation`; the final layer is a
/// single preactivation whose sign decides the match.
struct PhenotypeNetwork {
  std::vector<DenseLayer> layers;
  HiddenActivation activation = HiddenActivation::relu;

  std::size_t input_size() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  std::size_t hidden_layer_count() const { return layers.empty() ? 0 : layers.size() - 1; }
  std::size_t expressed_connections() const;

  nlohmann::json to_json() const;
  static PhenotypeNetwork from_json(const nlohmann::json& j);
  bool operator==(const PhenotypeNetwork& other) const;
};

/// Queries the CPPN for every adjacent-layer node pair. A connection is expressed only
/// when LEO > 0; with he-scaling each expressed weight into node B is multiplied by
/// sqrt(2 / N_in), N_in the number of expressed connections into B.
PhenotypeNetwork express(const CppnGenome& genome, const SubstrateSpec& spec,
                         WeightScaling scaling,
                         HiddenActivation activation = HiddenActivation::relu);
PhenotypeNetwork express(const CompiledCppn& cppn, const SubstrateSpec& spec,
                         WeightScaling scaling,
                         HiddenActivation activation = HiddenActivation::relu);

}  // namespace chartevo
