// Population evaluation throughput at several worker counts.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "chartevo/evaluator.hpp"
#include "chartevo/search.hpp"

using namespace chartevo;

int main(int argc, char** argv) {
  const std::size_t charts = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20000;
  const std::size_t organisms = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 64;
  const std::string substrate = argc > 3 ? argv[3] : "network";

  Rng rng(7);
  Dataset data;
  data.charts.resize(charts);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (std::size_t i = 0; i < charts; ++i) {
    auto& c = data.charts[i];
    for (auto& v : c.values) v = noise(rng);
    c.returns[20] = noise(rng);
    c.entry_date = Date(static_cast<std::int32_t>(i));
    c.source_id = "B";
  }
  const PackedDataset packed = PackedDataset::pack(data, 20);

  InnovationTracker tracker;
  std::vector<PhenotypeNetwork> nets;
  const auto spec = substrate_by_name(substrate);
  for (std::size_t i = 0; i < organisms; ++i) {
    nets.push_back(express(CppnGenome::minimal(rng, tracker), spec, WeightScaling::he,
                           HiddenActivation::relu));
  }

  std::printf("charts=%zu organisms=%zu substrate=%s\n", charts, organisms, substrate.c_str());
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t w = 1; w <= hw; w *= 2) {
    EvalConfig cfg;
    cfg.workers = w;
    cfg.dropout_enabled = true;
    const auto t0 = std::chrono::steady_clock::now();
    const auto reports = evaluate_population(nets, packed, cfg);
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("workers=%zu  %.3f s  %.0f chart-evals/s  (first fitness %.6g)\n", w, s,
                static_cast<double>(charts * organisms) / s, reports[0].fitness);
  }
}
