#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chartevo/random.hpp"
#include "chartevo/types.hpp"

namespace chartevo {

enum class Activation : std::uint8_t { sigmoid, gaussian, sine, linear, absolute };

inline constexpr std::array<Activation, 5> kHiddenActivations = {
    Activation::sigmoid, Activation::gaussian, Activation::sine, Activation::linear,
    Activation::absolute};

double activate(Activation fn, double a);
std::string_view to_string(Activation fn);
Activation parse_activation(std::string_view text);

enum class NodeRole : std::uint8_t { input, hidden, output };

struct NodeGene {
  int id = 0;
  NodeRole role = NodeRole::hidden;
  Activation activation = Activation::linear;

  bool operator==(const NodeGene&) const = default;
};

struct ConnectionGene {
  int innovation = 0;
  int from = 0;
  int to = 0;
  double weight = 0.0;
  bool enabled = true;

  bool operator==(const ConnectionGene&) const = default;
};

struct Coord {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Coord&) const = default;
};

struct CppnOutputs {
  double weight = 0.0;
  double bias = 0.0;
  double leo = 0.0;
};

/// Global historical markers. Connection innovations are keyed by (from, to) for the
/// lifetime of a run, so an id always names the same structure. Node splits are shared
/// only within one generation.
class InnovationTracker {
 public:
  InnovationTracker();

  int connection_innovation(int from, int to);
  /// Hidden node id for splitting connection `innovation` in the current generation.
  /// If the genome already holds the cached id, a fresh one is issued.
  int split_node(int innovation, const std::vector<NodeGene>& genome_nodes);
  void begin_generation();

  int next_node_id() const { return next_node_id_; }
  int next_innovation() const { return next_innovation_; }

  nlohmann::json to_json() const;
  static InnovationTracker from_json(const nlohmann::json& j);

  bool operator==(const InnovationTracker&) const = default;

 private:
  int next_node_id_;
  int next_innovation_ = 0;
  std::map<std::pair<int, int>, int> connections_;
  std::map<int, int> splits_;
};

/// Acyclic CPPN genotype with 7 inputs (x1, y1, z1, x2, y2, z2, bias) and 3 outputs
/// (weight, bias, leo). Node ids 0..6 are inputs, 7..9 outputs, hidden ids start at 10.
/// Connections are kept sorted by innovation id.
class CppnGenome {
 public:
  static constexpr int kInputCount = 7;
  static constexpr int kOutputCount = 3;
  static constexpr int kBiasInput = 6;
  static constexpr int kWeightOutput = 7;
  static constexpr int kBiasOutput = 8;
  static constexpr int kLeoOutput = 9;
  static constexpr int kFirstHiddenId = 10;

  /// Inputs and outputs only, no connections.
  CppnGenome();
  /// Validating constructor; throws StructuralError on bad ids, duplicates or cycles.
  CppnGenome(std::vector<NodeGene> nodes, std::vector<ConnectionGene> connections);

  /// Every input connected to every output, weights uniform in [-1, 1].
  static CppnGenome minimal(Rng& rng, InnovationTracker& innovations);

  const std::vector<NodeGene>& nodes() const { return nodes_; }
  const std::vector<ConnectionGene>& connections() const { return connections_; }
  std::vector<ConnectionGene>& mutable_connections() { return connections_; }

  const NodeGene* find_node(int id) const;
  bool has_connection(int from, int to) const;
  /// True if adding from -> to would close a cycle (disabled connections count).
  bool creates_cycle(int from, int to) const;
  bool is_acyclic() const;

  void add_node(NodeGene node);
  void add_connection(ConnectionGene gene);

  /// Single feedforward pass. Unconnected outputs yield 0.
  CppnOutputs activate(const std::array<double, 7>& inputs) const;

  nlohmann::json to_json() const;
  static CppnGenome from_json(const nlohmann::json& j);

  bool operator==(const CppnGenome&) const = default;

 private:
  void validate() const;

  std::vector<NodeGene> nodes_;
  std::vector<ConnectionGene> connections_;
};

/// A genome flattened into topological order for repeated queries.
class CompiledCppn {
 public:
  explicit CompiledCppn(const CppnGenome& genome);

  CppnOutputs activate(const std::array<double, 7>& inputs) const;

  /// Weight and LEO outputs for the connection a -> b.
  std::pair<double, double> query_connection(const Coord& a, const Coord& b) const;
  /// Bias output for a node, with the partner coordinate zero-filled.
  double query_bias(const Coord& c) const;

 private:
  struct Step {
    Activation activation;
    std::uint32_t first_edge;
    std::uint32_t edge_count;
    std::uint32_t slot;
  };
  struct Edge {
    std::uint32_t source_slot;
    double weight;
  };

  std::vector<Step> steps_;
  std::vector<Edge> edges_;
  std::array<std::int32_t, 3> output_slots_{};
  std::size_t slot_count_ = 0;
};

std::pair<double, double> query_connection(const CppnGenome& genome, const Coord& a,
                                           const Coord& b);
double query_bias(const CppnGenome& genome, const Coord& c);

}  // namespace chartevo
