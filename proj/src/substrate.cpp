#include "chartevo/substrate.hpp"

#include <cmath>

namespace chartevo {

double grid_position(int index, int count) {
  if (count <= 1) return 0.0;
  return -1.0 + 2.0 * static_cast<double>(index) / static_cast<double>(count - 1);
}

double SubstrateSpec::layer_z(std::size_t layer) const {
  return grid_position(static_cast<int>(layer), static_cast<int>(layers.size()));
}

std::vector<Coord> SubstrateSpec::coordinates(std::size_t layer) const {
  const Grid& g = layers.at(layer);
  const double z = layer_z(layer);
  std::vector<Coord> out;
  out.reserve(g.size());
  for (int xi = 0; xi < g.width; ++xi) {
    for (int yi = 0; yi < g.height; ++yi) {
      out.push_back({grid_position(xi, g.width), grid_position(yi, g.height), z});
    }
  }
  return out;
}

std::size_t SubstrateSpec::connection_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) n += layers[i].size() * layers[i + 1].size();
  return n;
}

void SubstrateSpec::validate() const {
  if (layers.size() < 2) throw ConfigError("substrate needs at least an input and an output layer");
  for (const Grid& g : layers) {
    if (g.width < 1 || g.height < 1) throw ConfigError("substrate grids must be non-empty");
  }
  if (layers.back().size() != 1) throw ConfigError("substrate output layer must be 1x1");
}

StandardSubstrates standard_substrates() {
  const Grid input{32, 2};
  const Grid output{1, 1};
  return {
      {"template", {input, output}},
      {"network", {input, {16, 12}, {8, 6}, output}},
      {"deep", {input, {16, 12}, {16, 6}, {8, 6}, {4, 6}, {4, 3}, output}},
  };
}

SubstrateSpec substrate_by_name(std::string_view name) {
  auto all = standard_substrates();
  if (name == "template") return all.template_substrate;
  if (name == "network") return all.network;
  if (name == "deep") return all.deep;
  throw ConfigError("unknown substrate '" + std::string(name) +
                    "' (expected template, network or deep)");
}

double he_scale(std::size_t n_in) {
  return n_in == 0 ? 1.0 : std::sqrt(2.0 / static_cast<double>(n_in));
}

std::string_view to_string(WeightScaling s) { return s == WeightScaling::he ? "he" : "none"; }

WeightScaling parse_weight_scaling(std::string_view text) {
  if (text == "he") return WeightScaling::he;
  if (text == "none") return WeightScaling::none;
  throw ConfigError("unknown weight scaling '" + std::string(text) + "'");
}

std::string_view to_string(HiddenActivation a) {
  return a == HiddenActivation::relu ? "relu" : "sigmoid";
}

HiddenActivation parse_hidden_activation(std::string_view text) {
  if (text == "relu") return HiddenActivation::relu;
  if (text == "sigmoid") return HiddenActivation::sigmoid;
  throw ConfigError("unknown hidden activation '" + std::string(text) + "'");
}

std::size_t PhenotypeNetwork::expressed_connections() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>((l.weights.array() != 0.0).count());
  return n;
}

nlohmann::json PhenotypeNetwork::to_json() const {
  nlohmann::json j;
  j["format"] = "chartevo-phenotype";
  j["version"] = 1;
  j["activation"] = to_string(activation);
  auto& ls = j["layers"] = nlohmann::json::array();
  for (const auto& l : layers) {
    nlohmann::json layer;
    layer["rows"] = l.weights.rows();
    layer["cols"] = l.weights.cols();
    auto& w = layer["weights"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    auto& b = layer["bias"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) b.push_back(l.bias(r));
    ls.push_back(std::move(layer));
  }
  return j;
}

PhenotypeNetwork PhenotypeNetwork::from_json(const nlohmann::json& j) {
  PhenotypeNetwork net;
  try {
    if (j.value("format", std::string{}) != "chartevo-phenotype") {
      throw FormatError("not a chartevo phenotype document");
    }
    net.activation = parse_hidden_activation(j.at("activation").get<std::string>());
    Eigen::Index prev_rows = -1;
    for (const auto& layer : j.at("layers")) {
      const auto rows = layer.at("rows").get<Eigen::Index>();
      const auto cols = layer.at("cols").get<Eigen::Index>();
      const auto& w = layer.at("weights");
      const auto& b = layer.at("bias");
      if (rows < 1 || cols < 1 || static_cast<Eigen::Index>(w.size()) != rows * cols ||
          static_cast<Eigen::Index>(b.size()) != rows || (prev_rows >= 0 && cols != prev_rows)) {
        throw FormatError("phenotype layer shapes are inconsistent");
      }
      DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) l.weights(r, c) = w.at(r * cols + c).get<double>();
        l.bias(r) = b.at(r).get<double>();
      }
      prev_rows = rows;
      net.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad phenotype document: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad phenotype document: ") + e.what());
  }
  if (net.layers.empty() || net.layers.back().weights.rows() != 1) {
    throw FormatError("phenotype must end in a single output node");
  }
  return net;
}

bool PhenotypeNetwork::operator==(const PhenotypeNetwork& other) const {
  if (activation != other.activation || layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
        a.weights != b.weights || a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

PhenotypeNetwork express(const CompiledCppn& cppn, const SubstrateSpec& spec,
                         WeightScaling scaling, HiddenActivation activation) {
  spec.validate();
  PhenotypeNetwork net;
  net.activation = activation;
  std::vector<Coord> prev = spec.coordinates(0);
  for (std::size_t layer = 1; layer < spec.layer_count(); ++layer) {
    std::vector<Coord> cur = spec.coordinates(layer);
    DenseLayer dense{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cur.size()),
                                           static_cast<Eigen::Index>(prev.size())),
                     Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cur.size()))};
    for (std::size_t b = 0; b < cur.size(); ++b) {
      std::size_t expressed = 0;
      const auto row = static_cast<Eigen::Index>(b);
      for (std::size_t a = 0; a < prev.size(); ++a) {
        const auto [w, leo] = cppn.query_connection(prev[a], cur[b]);
        if (leo > 0.0) {
          dense.weights(row, static_cast<Eigen::Index>(a)) = w;
          ++expressed;
        }
      }
      if (scaling == WeightScaling::he && expressed > 0) {
        dense.weights.row(row) *= he_scale(expressed);
      }
      dense.bias(row) = cppn.query_bias(cur[b]);
    }
    net.layers.push_back(std::move(dense));
    prev = std::move(cur);
  }
  return net;
}

PhenotypeNetwork express(const CppnGenome& genome, const SubstrateSpec& spec,
                         WeightScaling scaling, HiddenActivation activation) {
  return express(CompiledCppn(genome), spec, scaling, activation);
}

}  // namespace chartevo
