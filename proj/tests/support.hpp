// Shared fixtures and independent reference implementations for the test suites.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "chartevo/cppn.hpp"
#include "chartevo/evaluator.hpp"
#include "chartevo/neat.hpp"
#include "chartevo/preprocess.hpp"
#include "chartevo/substrate.hpp"
#include "chartevo/types.hpp"

namespace testing {

using namespace chartevo;

inline std::vector<Date> weekdays(Date start, std::size_t n) {
  std::vector<Date> out;
  for (Date d = start; out.size() < n; d = d + 1) {
    if (d.weekday() < 5) out.push_back(d);
  }
  return out;
}

inline PriceSeries random_walk(Rng& rng, std::string id, std::size_t n,
                               Date start = Date::from_ymd(2011, 1, 3), double vol = 0.02) {
  PriceSeries s;
  s.instrument_id = std::move(id);
  s.dates = weekdays(start, n);
  std::normal_distribution<double> noise(0.0, vol);
  double p = 5000.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) p *= std::exp(noise(rng));
    s.closes.push_back(p);
  }
  return s;
}

inline Chart random_chart(Rng& rng, int index, std::initializer_list<int> ks = {20}) {
  Chart c;
  std::normal_distribution<double> v(0.0, 0.01);
  for (auto& x : c.values) x = v(rng);
  for (int k : ks) c.returns[k] = v(rng) * 5.0;
  c.entry_date = Date(16000 + index);
  c.source_id = "R" + std::to_string(index % 7);
  c.limit_hit = bernoulli(rng, 0.05);
  return c;
}

inline Dataset random_dataset(Rng& rng, std::size_t n, Split split = Split::training) {
  Dataset d;
  d.split = split;
  for (std::size_t i = 0; i < n; ++i) {
    d.charts.push_back(random_chart(rng, static_cast<int>(i)));
    if (i % 97 == 13) d.charts.back().returns.clear();  // unlabeled chart
  }
  return d;
}

/// Minimal genome pushed through several rounds of structural mutation.
inline CppnGenome random_genome(Rng& rng, InnovationTracker& tracker, int rounds = 12) {
  CppnGenome g = CppnGenome::minimal(rng, tracker);
  MutationRates rates{0.5, 0.6, 0.9, 0.2};
  for (int i = 0; i < rounds; ++i) g = mutate(std::move(g), rates, {}, tracker, rng);
  return g;
}

/// Plain recursion with memoization over enabled connections.
inline CppnOutputs recursive_eval(const CppnGenome& g, const std::array<double, 7>& in) {
  std::map<int, double> memo;
  std::function<double(int)> value = [&](int id) -> double {
    if (id < CppnGenome::kInputCount) return in[static_cast<std::size_t>(id)];
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    double sum = 0.0;
    for (const auto& c : g.connections()) {
      if (c.enabled && c.to == id) sum += c.weight * value(c.from);
    }
    const double out = activate(g.find_node(id)->activation, sum);
    memo[id] = out;
    return out;
  };
  return {value(CppnGenome::kWeightOutput), value(CppnGenome::kBiasOutput),
          value(CppnGenome::kLeoOutput)};
}

/// Scalar forward pass of one chart, no Eigen expressions.
inline double scalar_preactivation(const PhenotypeNetwork& net, const Chart& c,
                                   const DropoutMask* mask = nullptr) {
  std::vector<double> x(c.values.begin(), c.values.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    std::vector<double> y(static_cast<std::size_t>(layer.weights.rows()));
    for (std::size_t o = 0; o < y.size(); ++o) {
      double s = layer.bias(static_cast<Eigen::Index>(o));
      for (std::size_t i = 0; i < x.size(); ++i) {
        s += layer.weights(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) * x[i];
      }
      y[o] = s;
    }
    if (l + 1 < net.layers.size()) {
      for (std::size_t o = 0; o < y.size(); ++o) {
        y[o] = net.activation == HiddenActivation::relu ? std::max(0.0, y[o])
                                                        : 1.0 / (1.0 + std::exp(-y[o]));
        if (mask) y[o] *= mask->layers[l](static_cast<Eigen::Index>(o));
      }
    }
    x = std::move(y);
  }
  return x.at(0);
}

/// Fitness straight from its definition, one chart at a time.
inline FitnessReport brute_force_fitness(const PhenotypeNetwork& net, const Dataset& d, int k,
                                         double alpha, const DropoutMask* mask = nullptr) {
  FitnessReport r;
  r.k = k;
  double sum = 0.0;
  for (const auto& c : d.charts) {
    const auto it = c.returns.find(k);
    if (it == c.returns.end() || c.limit_hit) continue;
    if (scalar_preactivation(net, c, mask) > 0.0) {
      ++r.match_count;
      sum += it->second;
    }
  }
  r.penalty = std::exp(-6.0 * static_cast<double>(r.match_count) / alpha);
  if (r.match_count > 0) {
    r.mean_log_return = sum / static_cast<double>(r.match_count);
    r.fitness = r.mean_log_return * r.penalty;
  }
  return r;
}

/// Phenotype with every weight drawn independently (no CPPN involved).
inline PhenotypeNetwork random_network(Rng& rng, const SubstrateSpec& spec, double scale = 0.3) {
  PhenotypeNetwork net;
  std::normal_distribution<double> w(0.0, scale);
  for (std::size_t l = 1; l < spec.layers.size(); ++l) {
    DenseLayer layer;
    const auto in = static_cast<Eigen::Index>(spec.layers[l - 1].size());
    const auto out = static_cast<Eigen::Index>(spec.layers[l].size());
    layer.weights = Eigen::MatrixXd::NullaryExpr(out, in, [&] { return w(rng); });
    layer.bias = Eigen::VectorXd::NullaryExpr(out, [&] { return w(rng) * 0.1; });
    net.layers.push_back(std::move(layer));
  }
  return net;
}

struct WindowRef {
  std::size_t start;  // index into the smoothed series
  std::size_t entry;  // raw index of the entry day
};

/// Every slice position of the smoothed series, and which of them can become a chart:
/// one with a smoothed value before it and a raw day after it.
inline std::vector<WindowRef> enumerate_windows(std::size_t raw_len, int w, int s,
                                                std::size_t* total = nullptr) {
  std::vector<WindowRef> out;
  const long smoothed_len = static_cast<long>(raw_len) - w + 1;
  const long count = smoothed_len - s + 1;
  if (total) *total = count > 0 ? static_cast<std::size_t>(count) : 0;
  for (long start = 0; start < count; ++start) {
    const long last_raw = start + s - 1 + (w - 1);
    const long entry = last_raw + 1;
    if (start >= 1 && entry < static_cast<long>(raw_len)) {
      out.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(entry)});
    }
  }
  return out;
}

}  // namespace testing

namespace testing {

/// Pooled activation variance per layer over `samples` standard-normal inputs:
/// [input, hidden 1 (post-ReLU), ..., output preactivation].
inline std::vector<double> layer_variances(const chartevo::PhenotypeNetwork& net, Rng& rng,
                                           int samples) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(samples, 64, [&] { return z(rng); });
  auto pooled_var = [](const Eigen::MatrixXd& m) {
    const double mean = m.mean();
    return (m.array() - mean).square().mean();
  };
  std::vector<double> out{pooled_var(x)};
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Eigen::MatrixXd y = x * net.layers[l].weights.transpose();
    y.rowwise() += net.layers[l].bias.transpose();
    if (l + 1 < net.layers.size()) y = y.cwiseMax(0.0);
    out.push_back(pooled_var(y));
    x = std::move(y);
  }
  return out;
}

/// Fully connected network with unit-variance weights, optionally He-scaled, zero biases.
inline chartevo::PhenotypeNetwork ungated_network(Rng& rng, const chartevo::SubstrateSpec& spec,
                                                  bool he) {
  auto net = random_network(rng, spec, 1.0);
  for (auto& l : net.layers) {
    if (he) l.weights *= chartevo::he_scale(static_cast<std::size_t>(l.weights.cols()));
    l.bias.setZero();
  }
  return net;
}

}  // namespace testing
