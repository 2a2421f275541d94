#include "chartevo/cppn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace chartevo {

double activate(Activation fn, double a) {
  switch (fn) {
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-a));
    case Activation::gaussian: return std::exp(-a * a);
    case Activation::sine: return std::sin(a);
    case Activation::linear: return a;
    case Activation::absolute: return std::fabs(a);
  }
  return a;
}

std::string_view to_string(Activation fn) {
  switch (fn) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::gaussian: return "gaussian";
    case Activation::sine: return "sine";
    case Activation::linear: return "linear";
    case Activation::absolute: return "absolute";
  }
  return "linear";
}

Activation parse_activation(std::string_view text) {
  for (Activation fn : kHiddenActivations) {
    if (to_string(fn) == text) return fn;
  }
  throw FormatError("unknown activation '" + std::string(text) + "'");
}

namespace {

std::string_view role_name(NodeRole role) {
  switch (role) {
    case NodeRole::input: return "input";
    case NodeRole::hidden: return "hidden";
    case NodeRole::output: return "output";
  }
  return "hidden";
}

NodeRole parse_role(std::string_view text) {
  if (text == "input") return NodeRole::input;
  if (text == "hidden") return NodeRole::hidden;
  if (text == "output") return NodeRole::output;
  throw FormatError("unknown node role '" + std::string(text) + "'");
}

// Kahn's algorithm; ties broken by node id so the order is deterministic.
// Returns fewer ids than nodes when the graph has a cycle.
std::vector<int> topological_order(const std::vector<NodeGene>& nodes,
                                   const std::vector<ConnectionGene>& connections,
                                   bool enabled_only) {
  std::map<int, int> in_degree;
  std::map<int, std::vector<int>> out_edges;
  for (const auto& n : nodes) in_degree[n.id] = 0;
  for (const auto& c : connections) {
    if (enabled_only && !c.enabled) continue;
    ++in_degree[c.to];
    out_edges[c.from].push_back(c.to);
  }
  std::set<int> ready;
  for (const auto& [id, deg] : in_degree) {
    if (deg == 0) ready.insert(id);
  }
  std::vector<int> order;
  order.reserve(nodes.size());
  while (!ready.empty()) {
    const int id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (int to : out_edges[id]) {
      if (--in_degree[to] == 0) ready.insert(to);
    }
  }
  return order;
}

}  // namespace

InnovationTracker::InnovationTracker() : next_node_id_(CppnGenome::kFirstHiddenId) {
  for (int in = 0; in < CppnGenome::kInputCount; ++in) {
    for (int out = CppnGenome::kWeightOutput; out <= CppnGenome::kLeoOutput; ++out) {
      connection_innovation(in, out);
    }
  }
}

int InnovationTracker::connection_innovation(int from, int to) {
  auto [it, inserted] = connections_.try_emplace({from, to}, next_innovation_);
  if (inserted) ++next_innovation_;
  return it->second;
}

int InnovationTracker::split_node(int innovation, const std::vector<NodeGene>& genome_nodes) {
  auto held = [&](int id) {
    return std::any_of(genome_nodes.begin(), genome_nodes.end(),
                       [id](const NodeGene& n) { return n.id == id; });
  };
  auto it = splits_.find(innovation);
  if (it != splits_.end() && !held(it->second)) return it->second;
  const int id = next_node_id_++;
  if (it == splits_.end()) splits_.emplace(innovation, id);
  return id;
}

void InnovationTracker::begin_generation() { splits_.clear(); }

nlohmann::json InnovationTracker::to_json() const {
  nlohmann::json j;
  j["next_node_id"] = next_node_id_;
  j["next_innovation"] = next_innovation_;
  auto& conns = j["connections"] = nlohmann::json::array();
  for (const auto& [key, id] : connections_) conns.push_back({key.first, key.second, id});
  auto& splits = j["splits"] = nlohmann::json::array();
  for (const auto& [innov, node] : splits_) splits.push_back({innov, node});
  return j;
}

InnovationTracker InnovationTracker::from_json(const nlohmann::json& j) {
  InnovationTracker t;
  try {
    t.next_node_id_ = j.at("next_node_id").get<int>();
    t.next_innovation_ = j.at("next_innovation").get<int>();
    t.connections_.clear();
    for (const auto& c : j.at("connections")) {
      t.connections_[{c.at(0).get<int>(), c.at(1).get<int>()}] = c.at(2).get<int>();
    }
    t.splits_.clear();
    for (const auto& s : j.at("splits")) t.splits_[s.at(0).get<int>()] = s.at(1).get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad innovation tracker record: ") + e.what());
  }
  return t;
}

CppnGenome::CppnGenome() {
  for (int i = 0; i < kInputCount; ++i) nodes_.push_back({i, NodeRole::input, Activation::linear});
  for (int i = kWeightOutput; i <= kLeoOutput; ++i) {
    nodes_.push_back({i, NodeRole::output, Activation::linear});
  }
}

CppnGenome::CppnGenome(std::vector<NodeGene> nodes, std::vector<ConnectionGene> connections)
    : nodes_(std::move(nodes)), connections_(std::move(connections)) {
  std::sort(nodes_.begin(), nodes_.end(),
            [](const NodeGene& a, const NodeGene& b) { return a.id < b.id; });
  std::sort(connections_.begin(), connections_.end(),
            [](const ConnectionGene& a, const ConnectionGene& b) {
              return a.innovation < b.innovation;
            });
  validate();
}

CppnGenome CppnGenome::minimal(Rng& rng, InnovationTracker& innovations) {
  CppnGenome g;
  for (int in = 0; in < kInputCount; ++in) {
    for (int out = kWeightOutput; out <= kLeoOutput; ++out) {
      g.connections_.push_back(
          {innovations.connection_innovation(in, out), in, out, uniform(rng, -1.0, 1.0), true});
    }
  }
  std::sort(g.connections_.begin(), g.connections_.end(),
            [](const ConnectionGene& a, const ConnectionGene& b) {
              return a.innovation < b.innovation;
            });
  return g;
}

void CppnGenome::validate() const {
  std::set<int> ids;
  int inputs = 0;
  int outputs = 0;
  for (const auto& n : nodes_) {
    if (!ids.insert(n.id).second) {
      throw StructuralError("duplicate node id " + std::to_string(n.id));
    }
    const bool is_input_id = n.id >= 0 && n.id < kInputCount;
    const bool is_output_id = n.id >= kWeightOutput && n.id <= kLeoOutput;
    if (is_input_id != (n.role == NodeRole::input) ||
        is_output_id != (n.role == NodeRole::output) || n.id < 0) {
      throw StructuralError("node " + std::to_string(n.id) + " has the wrong role for its id");
    }
    inputs += n.role == NodeRole::input;
    outputs += n.role == NodeRole::output;
  }
  if (inputs != kInputCount || outputs != kOutputCount) {
    throw StructuralError("CPPN needs exactly 7 inputs and 3 outputs");
  }
  std::set<int> innovations;
  std::set<std::pair<int, int>> pairs;
  for (const auto& c : connections_) {
    const NodeGene* from = find_node(c.from);
    const NodeGene* to = find_node(c.to);
    if (!from || !to) {
      throw StructuralError("connection " + std::to_string(c.innovation) +
                            " references a missing node");
    }
    if (from->role == NodeRole::output || to->role == NodeRole::input) {
      throw StructuralError("connection " + std::to_string(c.innovation) +
                            " runs out of an output or into an input");
    }
    if (!innovations.insert(c.innovation).second) {
      throw StructuralError("duplicate innovation id " + std::to_string(c.innovation));
    }
    if (!pairs.insert({c.from, c.to}).second) {
      throw StructuralError("duplicate connection " + std::to_string(c.from) + "->" +
                            std::to_string(c.to));
    }
    if (!std::isfinite(c.weight)) throw StructuralError("non-finite connection weight");
  }
  if (!is_acyclic()) throw StructuralError("CPPN contains a cycle");
}

const NodeGene* CppnGenome::find_node(int id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const NodeGene& n, int v) { return n.id < v; });
  if (it == nodes_.end() || it->id != id) return nullptr;
  return &*it;
}

bool CppnGenome::has_connection(int from, int to) const {
  return std::any_of(connections_.begin(), connections_.end(),
                     [&](const ConnectionGene& c) { return c.from == from && c.to == to; });
}

bool CppnGenome::creates_cycle(int from, int to) const {
  if (from == to) return true;
  // A cycle appears iff `from` is reachable from `to`.
  std::vector<int> stack{to};
  std::set<int> seen{to};
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    for (const auto& c : connections_) {
      if (c.from != node) continue;
      if (c.to == from) return true;
      if (seen.insert(c.to).second) stack.push_back(c.to);
    }
  }
  return false;
}

bool CppnGenome::is_acyclic() const {
  return topological_order(nodes_, connections_, false).size() == nodes_.size();
}

void CppnGenome::add_node(NodeGene node) {
  if (find_node(node.id)) throw StructuralError("node id already present");
  if (node.role != NodeRole::hidden || node.id < kFirstHiddenId) {
    throw StructuralError("only hidden nodes can be added");
  }
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node.id,
                             [](const NodeGene& n, int v) { return n.id < v; });
  nodes_.insert(it, node);
}

void CppnGenome::add_connection(ConnectionGene gene) {
  const NodeGene* from = find_node(gene.from);
  const NodeGene* to = find_node(gene.to);
  if (!from || !to) throw StructuralError("connection references a missing node");
  if (from->role == NodeRole::output || to->role == NodeRole::input) {
    throw StructuralError("connection runs out of an output or into an input");
  }
  if (has_connection(gene.from, gene.to)) throw StructuralError("connection already present");
  if (creates_cycle(gene.from, gene.to)) throw StructuralError("connection would create a cycle");
  auto it = std::lower_bound(connections_.begin(), connections_.end(), gene.innovation,
                             [](const ConnectionGene& c, int v) { return c.innovation < v; });
  if (it != connections_.end() && it->innovation == gene.innovation) {
    throw StructuralError("innovation id already present");
  }
  connections_.insert(it, gene);
}

CppnOutputs CppnGenome::activate(const std::array<double, 7>& inputs) const {
  return CompiledCppn(*this).activate(inputs);
}

nlohmann::json CppnGenome::to_json() const {
  nlohmann::json j;
  j["format"] = "chartevo-cppn";
  j["version"] = 1;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"id", n.id}, {"role", role_name(n.role)},
                     {"activation", to_string(n.activation)}});
  }
  auto& conns = j["connections"] = nlohmann::json::array();
  for (const auto& c : connections_) {
    conns.push_back({{"innovation", c.innovation}, {"from", c.from}, {"to", c.to},
                     {"weight", c.weight}, {"enabled", c.enabled}});
  }
  return j;
}

CppnGenome CppnGenome::from_json(const nlohmann::json& j) {
  std::vector<NodeGene> nodes;
  std::vector<ConnectionGene> conns;
  try {
    if (j.value("format", std::string{}) != "chartevo-cppn") {
      throw FormatError("not a chartevo CPPN genome document");
    }
    for (const auto& n : j.at("nodes")) {
      nodes.push_back({n.at("id").get<int>(), parse_role(n.at("role").get<std::string>()),
                       parse_activation(n.at("activation").get<std::string>())});
    }
    for (const auto& c : j.at("connections")) {
      conns.push_back({c.at("innovation").get<int>(), c.at("from").get<int>(),
                       c.at("to").get<int>(), c.at("weight").get<double>(),
                       c.at("enabled").get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad genome document: ") + e.what());
  }
  return CppnGenome(std::move(nodes), std::move(conns));
}

CompiledCppn::CompiledCppn(const CppnGenome& genome) {
  const auto order = topological_order(genome.nodes(), genome.connections(), true);
  if (order.size() != genome.nodes().size()) {
    throw StructuralError("cycle detected while compiling CPPN");
  }
  std::map<int, std::uint32_t> slot_of;
  for (int i = 0; i < CppnGenome::kInputCount; ++i) slot_of[i] = static_cast<std::uint32_t>(i);
  std::uint32_t next_slot = CppnGenome::kInputCount;
  for (int id : order) {
    if (!slot_of.count(id)) slot_of[id] = next_slot++;
  }
  slot_count_ = next_slot;

  std::map<int, std::vector<const ConnectionGene*>> incoming;
  for (const auto& c : genome.connections()) {
    if (c.enabled) incoming[c.to].push_back(&c);
  }
  for (int id : order) {
    const NodeGene* node = genome.find_node(id);
    if (node->role == NodeRole::input) continue;
    Step step{node->activation, static_cast<std::uint32_t>(edges_.size()), 0, slot_of[id]};
    for (const ConnectionGene* c : incoming[id]) {
      edges_.push_back({slot_of[c->from], c->weight});
      ++step.edge_count;
    }
    steps_.push_back(step);
  }
  output_slots_ = {static_cast<std::int32_t>(slot_of[CppnGenome::kWeightOutput]),
                   static_cast<std::int32_t>(slot_of[CppnGenome::kBiasOutput]),
                   static_cast<std::int32_t>(slot_of[CppnGenome::kLeoOutput])};
}

CppnOutputs CompiledCppn::activate(const std::array<double, 7>& inputs) const {
  thread_local std::vector<double> values;
  values.assign(slot_count_, 0.0);
  std::copy(inputs.begin(), inputs.end(), values.begin());
  for (const Step& step : steps_) {
    double sum = 0.0;
    for (std::uint32_t e = step.first_edge; e < step.first_edge + step.edge_count; ++e) {
      sum += edges_[e].weight * values[edges_[e].source_slot];
    }
    values[step.slot] = chartevo::activate(step.activation, sum);
  }
  return {values[output_slots_[0]], values[output_slots_[1]], values[output_slots_[2]]};
}

std::pair<double, double> CompiledCppn::query_connection(const Coord& a, const Coord& b) const {
  const auto out = activate({a.x, a.y, a.z, b.x, b.y, b.z, 1.0});
  return {out.weight, out.leo};
}

double CompiledCppn::query_bias(const Coord& c) const {
  return activate({c.x, c.y, c.z, 0.0, 0.0, 0.0, 1.0}).bias;
}

std::pair<double, double> query_connection(const CppnGenome& genome, const Coord& a,
                                           const Coord& b) {
  return CompiledCppn(genome).query_connection(a, b);
}

double query_bias(const CppnGenome& genome, const Coord& c) {
  return CompiledCppn(genome).query_bias(c);
}

}  // namespace chartevo
