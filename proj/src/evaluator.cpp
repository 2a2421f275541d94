#include "chartevo/evaluator.hpp"

#include <cmath>

#include "chartevo/parallel.hpp"
#include "chartevo/random.hpp"

namespace chartevo {

void EvalConfig::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(dropout_retain > 0.0 && dropout_retain <= 1.0)) {
    throw ConfigError("dropout_retain must lie in (0, 1]");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

PackedDataset PackedDataset::pack(const Dataset& dataset, int k) {
  PackedDataset p;
  p.split = dataset.split;
  p.k = k;
  const auto n = static_cast<Eigen::Index>(dataset.size());
  p.inputs.resize(n, static_cast<Eigen::Index>(kChartInputs));
  p.returns.assign(dataset.size(), 0.0);
  p.has_return.assign(dataset.size(), 0);
  p.limit_hit.assign(dataset.size(), 0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Chart& c = dataset.charts[i];
    for (std::size_t j = 0; j < kChartInputs; ++j) {
      p.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.values[j];
    }
    if (auto r = c.forward_return(k)) {
      p.returns[i] = *r;
      p.has_return[i] = 1;
    }
    p.limit_hit[i] = c.limit_hit ? 1 : 0;
  }
  return p;
}

double penalty(std::size_t match_count, double alpha) {
  return std::exp(-6.0 * static_cast<double>(match_count) / alpha);
}

std::uint64_t dropout_seed(std::uint64_t seed, int generation, std::size_t organism) {
  return derive_seed(derive_seed(seed, "dropout"), static_cast<std::uint64_t>(generation),
                     organism);
}

DropoutMask sample_dropout_mask(const PhenotypeNetwork& net, double retain, std::uint64_t seed) {
  Rng rng(seed);
  DropoutMask mask;
  for (std::size_t l = 0; l < net.hidden_layer_count(); ++l) {
    const auto n = net.layers[l].weights.rows();
    Eigen::VectorXd m(n);
    for (Eigen::Index i = 0; i < n; ++i) m(i) = bernoulli(rng, retain) ? 1.0 / retain : 0.0;
    mask.layers.push_back(std::move(m));
  }
  return mask;
}

std::vector<double> output_preactivations(const PhenotypeNetwork& net, const PackedDataset& data,
                                          const DropoutMask* mask, std::size_t batch_size) {
  if (net.layers.empty() || net.input_size() != static_cast<std::size_t>(data.inputs.cols())) {
    throw StructuralError("phenotype input size " + std::to_string(net.input_size()) +
                          " does not match chart width " + std::to_string(data.inputs.cols()));
  }
  if (net.layers.back().weights.rows() != 1) {
    throw StructuralError("phenotype must have a single output node");
  }
  if (mask && mask->layers.size() != net.hidden_layer_count()) {
    throw StructuralError("dropout mask does not match phenotype depth");
  }
  const std::size_t n = data.size();
  std::vector<double> out(n);
  batch_size = std::max<std::size_t>(1, batch_size);
  Eigen::MatrixXd act;
  Eigen::MatrixXd next;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const auto rows = static_cast<Eigen::Index>(std::min(batch_size, n - start));
    act = data.inputs.middleRows(static_cast<Eigen::Index>(start), rows);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const DenseLayer& layer = net.layers[l];
      next.noalias() = act * layer.weights.transpose();
      next.rowwise() += layer.bias.transpose();
      if (l + 1 < net.layers.size()) {
        if (net.activation == HiddenActivation::relu) {
          next = next.cwiseMax(0.0);
        } else {
          next = (1.0 + (-next.array()).exp()).inverse().matrix();
        }
        if (mask) next.array().rowwise() *= mask->layers[l].transpose().array();
      }
      act.swap(next);
    }
    for (Eigen::Index r = 0; r < rows; ++r) out[start + static_cast<std::size_t>(r)] = act(r, 0);
  }
  return out;
}

std::vector<std::uint8_t> forward(const PhenotypeNetwork& net, const PackedDataset& data,
                                  const DropoutMask* mask, std::size_t batch_size) {
  const auto pre = output_preactivations(net, data, mask, batch_size);
  std::vector<std::uint8_t> flags(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    flags[i] = (pre[i] > 0.0 && !data.limit_hit[i]) ? 1 : 0;
  }
  return flags;
}

FitnessReport score_matches(std::span<const std::uint8_t> flags, const PackedDataset& data,
                            double alpha) {
  FitnessReport report;
  report.k = data.k;
  double sum = 0.0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] && data.has_return[i] && !data.limit_hit[i]) {
      ++report.match_count;
      sum += data.returns[i];
    }
  }
  report.penalty = penalty(report.match_count, alpha);
  if (report.match_count > 0) {
    report.mean_log_return = sum / static_cast<double>(report.match_count);
    report.fitness = report.mean_log_return * report.penalty;
  }
  return report;
}

namespace {

FitnessReport fitness_with_seed(const PhenotypeNetwork& net, const PackedDataset& data,
                                const EvalConfig& config, std::uint64_t mask_seed) {
  if (config.dropout_enabled && config.dropout_retain < 1.0) {
    const DropoutMask mask = sample_dropout_mask(net, config.dropout_retain, mask_seed);
    return score_matches(forward(net, data, &mask, config.batch_size), data, config.alpha);
  }
  return score_matches(forward(net, data, nullptr, config.batch_size), data, config.alpha);
}

}  // namespace

FitnessReport fitness(const PhenotypeNetwork& net, const PackedDataset& data,
                      const EvalConfig& config) {
  config.validate();
  if (data.k != config.k) throw ConfigError("packed dataset horizon does not match config.k");
  return fitness_with_seed(net, data, config, dropout_seed(config.seed, 0, 0));
}

FitnessReport fitness(const PhenotypeNetwork& net, const Dataset& dataset,
                      const EvalConfig& config) {
  return fitness(net, PackedDataset::pack(dataset, config.k), config);
}

std::vector<FitnessReport> evaluate_population(std::span<const PhenotypeNetwork> nets,
                                               const PackedDataset& data, const EvalConfig& config,
                                               int generation) {
  config.validate();
  if (data.k != config.k) throw ConfigError("packed dataset horizon does not match config.k");
  std::vector<FitnessReport> reports(nets.size());
  parallel_for(nets.size(), config.workers, [&](std::size_t i) {
    reports[i] = fitness_with_seed(nets[i], data, config, dropout_seed(config.seed, generation, i));
  });
  return reports;
}

nlohmann::json to_json(const FitnessReport& r) {
  return {{"k", r.k},
          {"match_count", r.match_count},
          {"mean_log_return", r.mean_log_return},
          {"penalty", r.penalty},
          {"fitness", r.fitness}};
}

FitnessReport fitness_report_from_json(const nlohmann::json& j) {
  try {
    return {j.at("match_count").get<std::size_t>(), j.at("mean_log_return").get<double>(),
            j.at("penalty").get<double>(), j.at("fitness").get<double>(), j.at("k").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad fitness report: ") + e.what());
  }
}

}  // namespace chartevo
