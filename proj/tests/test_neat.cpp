#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <set>

#include "chartevo/neat.hpp"
#include "support.hpp"

using namespace chartevo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<NodeGene> io_nodes() { return CppnGenome().nodes(); }

// Genome over the fixed I/O nodes whose connections are input i -> output 7 + (i % 3).
CppnGenome genes(std::initializer_list<std::pair<int, double>> innov_weight) {
  std::vector<ConnectionGene> c;
  for (auto [innov, w] : innov_weight) {
    c.push_back({innov, innov % 7, 7 + (innov / 7) % 3, w, true});
  }
  return CppnGenome(io_nodes(), c);
}

// Deterministic fitness: rewards a particular weight pattern and structure.
double toy_fitness(const CppnGenome& g) {
  double s = 0.0;
  for (const auto& c : g.connections()) {
    if (c.enabled) s += (c.to == CppnGenome::kLeoOutput ? 1.0 : -0.2) * c.weight;
  }
  return s + 0.05 * static_cast<double>(g.nodes().size());
}

std::vector<double> score(const std::vector<CppnGenome>& pop) {
  std::vector<double> f;
  for (const auto& g : pop) f.push_back(toy_fitness(g));
  return f;
}

EvolutionConfig small_config(std::uint64_t seed = 3) {
  EvolutionConfig c;
  c.population_size = 60;
  c.generations = 50;
  c.rng_seed = seed;
  c.mutation = {0.2, 0.3, 0.8, 0.1};
  return c;
}

}  // namespace

TEST_CASE("compatibility hand values") {
  const CompatibilityCoefficients c{1.0, 1.0, 0.4};
  const CppnGenome base = genes({{0, 0.1}, {1, 0.2}, {2, 0.3}, {3, 0.4}, {4, 0.5},
                                 {5, 0.6}, {6, 0.7}, {7, 0.8}});
  CHECK(compatibility(base, base, c) == 0.0);
  const CppnGenome longer = genes({{0, 0.1}, {1, 0.2}, {2, 0.3}, {3, 0.4}, {4, 0.5},
                                   {5, 0.6}, {6, 0.7}, {7, 0.8}, {8, 0.9}, {9, 1.0}});
  // two excess genes, N = 10
  CHECK_THAT(compatibility(longer, base, c), WithinAbs(0.2, 1e-15));
  CHECK(compatibility(longer, base, c) == compatibility(base, longer, c));

  const CppnGenome a = genes({{0, 0.0}, {1, 0.0}});
  const CppnGenome b = genes({{0, 0.5}, {1, -1.5}});
  CHECK_THAT(compatibility(a, b, c), WithinAbs(0.4, 1e-15));

  // disjoint: the gap in the middle
  const CppnGenome d1 = genes({{0, 0.0}, {1, 0.0}, {4, 0.0}});
  const CppnGenome d2 = genes({{0, 0.0}, {2, 0.0}, {4, 0.0}});
  CHECK_THAT(compatibility(d1, d2, {1.0, 2.0, 0.4}), WithinAbs(2.0 * 2.0 / 3.0, 1e-15));
  CHECK(compatibility(CppnGenome(), CppnGenome(), c) == 0.0);
}

TEST_CASE("speciation extremes") {
  Rng rng(5);
  InnovationTracker t;
  std::vector<CppnGenome> pop;
  for (int i = 0; i < 30; ++i) pop.push_back(CppnGenome::minimal(rng, t));
  int next = 0;
  CHECK(speciate(pop, {}, std::numeric_limits<double>::infinity(), {}, next).size() == 1);
  next = 0;
  const auto each = speciate(pop, {}, 0.0, {}, next);
  CHECK(each.size() == pop.size());
  std::set<int> ids;
  for (const auto& s : each) ids.insert(s.id);
  CHECK(ids.size() == pop.size());
}

TEST_CASE("speciation matches an independent greedy assignment") {
  Rng rng(6);
  InnovationTracker t;
  std::vector<CppnGenome> pop;
  for (int i = 0; i < 50; ++i) pop.push_back(testing::random_genome(rng, t, static_cast<int>(i % 6)));
  const CompatibilityCoefficients c{};
  for (double threshold : {0.3, 0.8, 1.5, 3.0}) {
    // carry two representatives over from a "previous generation"
    std::vector<Species> previous(2);
    previous[0].id = 100;
    previous[0].representative = testing::random_genome(rng, t, 3);
    previous[1].id = 101;
    previous[1].representative = pop[7];
    int next = 200;
    const auto got = speciate(pop, previous, threshold, c, next);

    std::vector<std::pair<CppnGenome, std::vector<std::size_t>>> ref;
    for (const auto& p : previous) ref.push_back({p.representative, {}});
    for (std::size_t i = 0; i < pop.size(); ++i) {
      std::size_t s = 0;
      while (s < ref.size() && !(compatibility(pop[i], ref[s].first, c) < threshold)) ++s;
      if (s == ref.size()) ref.push_back({pop[i], {}});
      ref[s].second.push_back(i);
    }
    std::erase_if(ref, [](const auto& r) { return r.second.empty(); });
    REQUIRE(got.size() == ref.size());
    std::vector<int> owner(pop.size(), -1);
    for (std::size_t s = 0; s < got.size(); ++s) {
      CHECK(got[s].members == ref[s].second);
      for (std::size_t m : got[s].members) {
        CHECK(owner[m] == -1);
        owner[m] = static_cast<int>(s);
      }
    }
    CHECK(std::count(owner.begin(), owner.end(), -1) == 0);
  }
}

TEST_CASE("threshold adjustment") {
  const EvolutionConfig c;
  CHECK_THAT(adjust_threshold(3.0, 50, c), WithinRel(3.003, 1e-15));
  CHECK_THAT(adjust_threshold(3.0, 101, c), WithinRel(3.3033, 1e-15));
  CHECK_THAT(adjust_threshold(3.0, 100, c), WithinRel(3.003, 1e-15));
  ThresholdSchedule s{3.0};
  for (int g = 0; g < 100; ++g) s.advance(g % 10 == 0 ? 150 : 20, c);
  CHECK(s.value(c) == 3.0 * std::pow(1.001, 100) * std::pow(1.1, 10));
}

TEST_CASE("decayed mutation rates") {
  const MutationRates r{0.03, 0.05, 0.8, 0.1};
  const auto d = r.decayed(0.999, 100);
  const double f = std::pow(0.999, 100);
  CHECK_THAT(f, WithinAbs(0.9048, 1e-4));
  CHECK_THAT(d.perturb_weight, WithinAbs(0.8 * f, 1e-12));
  CHECK_THAT(d.add_node, WithinAbs(0.03 * f, 1e-12));
  CHECK_THAT(d.add_connection, WithinAbs(0.05 * f, 1e-12));
  CHECK_THAT(d.replace_weight, WithinAbs(0.1 * f, 1e-12));
  CHECK(r.decayed(0.999, 0) == r);
}

TEST_CASE("largest remainder apportionment") {
  const std::vector<double> two_to_one{2.0, 1.0};
  for (std::size_t total : {3u, 10u, 100u, 1000u, 7u}) {
    const auto q = apportion(two_to_one, total);
    CHECK(q[0] + q[1] == total);
    CHECK(std::abs(static_cast<double>(q[0]) - 2.0 * static_cast<double>(total) / 3.0) <= 1.0);
  }
  CHECK(apportion(std::vector<double>{0.0, 0.0, 0.0}, 10) == std::vector<std::size_t>{4, 3, 3});
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> shares(1 + pick_index(rng, 20));
    for (auto& s : shares) s = uniform(rng, 0.0, 1.0);
    const std::size_t total = 1 + pick_index(rng, 2000);
    const auto q = apportion(shares, total);
    double sum = 0.0;
    for (double s : shares) sum += s;
    std::size_t n = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      n += q[i];
      CHECK(std::abs(static_cast<double>(q[i]) - shares[i] / sum * static_cast<double>(total)) < 1.0 + 1e-9);
    }
    CHECK(n == total);
  }
}

TEST_CASE("crossover inheritance rules") {
  Rng rng(8);
  InnovationTracker t;
  const CppnGenome p = testing::random_genome(rng, t, 6);
  for (int i = 0; i < 20; ++i) {
    const CppnGenome child = crossover(p, p, 1.0, 0.5, rng);
    REQUIRE(child.connections().size() == p.connections().size());
    for (std::size_t k = 0; k < p.connections().size(); ++k) {
      CHECK(child.connections()[k].innovation == p.connections()[k].innovation);
      CHECK(child.connections()[k].weight == p.connections()[k].weight);
    }
    CHECK(child.nodes() == p.nodes());
  }

  CppnGenome fitter = p;
  fitter = mutate(fitter, {0, 1, 0, 0}, {}, t, rng);  // one extra connection gene
  REQUIRE(fitter.connections().size() == p.connections().size() + 1);
  const int extra = fitter.connections().back().innovation;
  for (int i = 0; i < 20; ++i) {
    const CppnGenome child = crossover(p, fitter, 0.1, 0.9, rng);
    CHECK(std::any_of(child.connections().begin(), child.connections().end(),
                      [&](const ConnectionGene& g) { return g.innovation == extra; }));
    CHECK(crossover(fitter, p, 0.1, 0.9, rng).connections().size() == p.connections().size());
  }

  for (int i = 0; i < 200; ++i) {
    const CppnGenome a = testing::random_genome(rng, t, 8);
    const CppnGenome b = testing::random_genome(rng, t, 8);
    const CppnGenome child = crossover(a, b, 0.5, 0.5, rng);
    REQUIRE(child.is_acyclic());
    std::set<int> uni;
    for (const auto& g : a.connections()) uni.insert(g.innovation);
    for (const auto& g : b.connections()) uni.insert(g.innovation);
    for (const auto& g : child.connections()) CHECK(uni.contains(g.innovation));
  }
}

TEST_CASE("genes disabled in a parent stay disabled three times in four") {
  Rng rng(9);
  InnovationTracker t;
  CppnGenome a = CppnGenome::minimal(rng, t);
  CppnGenome b = a;
  b.mutable_connections()[0].enabled = false;
  const int n = 20000;
  int disabled = 0;
  for (int i = 0; i < n; ++i) {
    if (!crossover(a, b, 1.0, 0.0, rng).connections()[0].enabled) ++disabled;
  }
  const double sigma = std::sqrt(n * 0.75 * 0.25);
  CHECK(std::abs(disabled - 0.75 * n) < 3.0 * sigma);
}

TEST_CASE("mutation with all rates zero leaves the genome unchanged") {
  Rng rng(10);
  InnovationTracker t;
  const CppnGenome g = testing::random_genome(rng, t, 5);
  CHECK(mutate(g, {0, 0, 0, 0}, {}, t, rng) == g);
}

TEST_CASE("add-node splits a connection") {
  Rng rng(11);
  InnovationTracker t;
  const CppnGenome g = CppnGenome::minimal(rng, t);
  MutationEvents ev;
  const CppnGenome m = mutate(g, {1, 0, 0, 0}, {}, t, rng, &ev);
  REQUIRE(ev.added_node);
  REQUIRE(m.nodes().size() == g.nodes().size() + 1);
  const NodeGene& h = m.nodes().back();
  CHECK(h.role == NodeRole::hidden);
  const ConnectionGene* old = nullptr;
  for (const auto& c : m.connections()) {
    if (!c.enabled) old = &c;
  }
  REQUIRE(old != nullptr);
  bool in = false, out = false;
  for (const auto& c : m.connections()) {
    if (c.from == old->from && c.to == h.id) in = c.weight == 1.0 && c.enabled;
    if (c.from == h.id && c.to == old->to) out = c.weight == old->weight && c.enabled;
  }
  CHECK(in);
  CHECK(out);
  CHECK(m.connections().size() == g.connections().size() + 2);
}

TEST_CASE("add-connection frequency matches the binomial expectation") {
  Rng rng(12);
  InnovationTracker t;
  const CppnGenome seed = mutate(CppnGenome::minimal(rng, t), {1, 0, 0, 0}, {}, t, rng);
  const int n = 10000;
  int added = 0;
  for (int i = 0; i < n; ++i) {
    MutationEvents ev;
    const CppnGenome m = mutate(seed, {0, 0.05, 0, 0}, {}, t, rng, &ev);
    if (ev.added_connection) {
      ++added;
      REQUIRE(m.connections().size() == seed.connections().size() + 1);
      REQUIRE(m.is_acyclic());
    }
  }
  const double sigma = std::sqrt(n * 0.05 * 0.95);
  CHECK(std::abs(added - 0.05 * n) < 3.0 * sigma);
}

TEST_CASE("add-connection is a no-op when no acyclic pair is free") {
  Rng rng(13);
  InnovationTracker t;
  const CppnGenome g = CppnGenome::minimal(rng, t);
  MutationEvents ev;
  CHECK(mutate(g, {0, 1, 0, 0}, {}, t, rng, &ev) == g);
  CHECK_FALSE(ev.added_connection);
}

TEST_CASE("same structural innovation gets the same id within a generation") {
  Rng rng(14);
  InnovationTracker t;
  const CppnGenome g = CppnGenome::minimal(rng, t);
  // splitting the same connection in two genomes of one generation
  std::map<int, std::set<int>> hidden_by_split;
  for (int i = 0; i < 200; ++i) {
    const CppnGenome m = mutate(g, {1, 0, 0, 0}, {}, t, rng);
    const ConnectionGene* old = nullptr;
    for (const auto& c : m.connections()) {
      if (!c.enabled) old = &c;
    }
    hidden_by_split[old->innovation].insert(m.nodes().back().id);
  }
  for (const auto& [innov, ids] : hidden_by_split) CHECK(ids.size() == 1);
}

TEST_CASE("weight perturbation stays in range") {
  Rng rng(15);
  InnovationTracker t;
  const CppnGenome g = CppnGenome::minimal(rng, t);
  for (int i = 0; i < 200; ++i) {
    const CppnGenome m = mutate(g, {0, 0, 1, 0}, {}, t, rng);
    for (std::size_t k = 0; k < g.connections().size(); ++k) {
      CHECK(std::abs(m.connections()[k].weight - g.connections()[k].weight) <= 0.5);
    }
    const CppnGenome r = mutate(g, {0, 0, 1, 1}, {}, t, rng);
    for (const auto& c : r.connections()) CHECK(std::abs(c.weight) <= 1.0);
  }
  CppnGenome big = g;
  for (auto& c : big.mutable_connections()) c.weight = 2.9;
  for (const auto& c : mutate(big, {0, 0, 1, 0}, {}, t, rng).connections()) {
    CHECK(c.weight <= 3.0);
  }
}

TEST_CASE("50-generation fuzz keeps invariants") {
  Evolver ev(small_config());
  double best = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < 50; ++g) {
    const auto& pop = ev.population();
    REQUIRE(pop.size() == 60);
    for (const auto& genome : pop) REQUIRE(genome.is_acyclic());
    const auto f = score(pop);
    const double gen_best = *std::max_element(f.begin(), f.end());
    CHECK(gen_best >= best);
    best = gen_best;
    const auto champion = pop[static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin())];
    const auto summary = ev.advance(f);
    CHECK(summary.generation == g);
    CHECK(std::find(ev.population().begin(), ev.population().end(), champion) != ev.population().end());
    CHECK(ev.threshold() == 3.0 * std::pow(1.001, g + 1) *
                                std::pow(1.1, ev.threshold_schedule().overspeciation_events));
    CHECK_THAT(ev.current_rates().add_node, WithinAbs(0.2 * std::pow(0.999, g + 1), 1e-12));
  }
  CHECK(ev.generation() == 50);
}

TEST_CASE("evolution is deterministic for a seed") {
  Evolver a(small_config(17));
  Evolver b(small_config(17));
  Evolver c(small_config(18));
  for (int g = 0; g < 15; ++g) {
    a.advance(score(a.population()));
    b.advance(score(b.population()));
    c.advance(score(c.population()));
  }
  CHECK(a.population() == b.population());
  CHECK(a.to_json() == b.to_json());
  CHECK_FALSE(a.population() == c.population());
}

TEST_CASE("evolver checkpoint resumes the same trajectory") {
  Evolver a(small_config(19));
  for (int g = 0; g < 5; ++g) a.advance(score(a.population()));
  Evolver b = Evolver::from_json(nlohmann::json::parse(a.to_json().dump()), small_config(19));
  for (int g = 0; g < 5; ++g) {
    a.advance(score(a.population()));
    b.advance(score(b.population()));
  }
  CHECK(a.population() == b.population());
  CHECK(a.species() == b.species());
  auto wrong = small_config(19);
  wrong.population_size = 10;
  CHECK_THROWS_AS(Evolver::from_json(a.to_json(), wrong), FormatError);
}

TEST_CASE("negative and constant fitness keep the population size") {
  EvolutionConfig cfg = small_config(20);
  cfg.stagnation_limit = 3;
  Evolver ev(cfg);
  for (int g = 0; g < 12; ++g) {
    std::vector<double> f(ev.population().size(), -1.0);
    const auto s = ev.advance(f);
    REQUIRE(ev.population().size() == cfg.population_size);
    if (g >= 3) CHECK(s.species_count >= 1);
  }
  std::vector<double> bad(ev.population().size(), 0.0);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ev.advance(bad), StructuralError);
  CHECK_THROWS_AS(ev.advance(std::vector<double>(3, 0.0)), StructuralError);
}

TEST_CASE("oversized species counts grow the threshold faster") {
  EvolutionConfig cfg = small_config(21);
  cfg.initial_compat_threshold = 1e-9;  // every genome its own species
  cfg.max_species = 10;
  Evolver ev(cfg);
  const auto s = ev.advance(score(ev.population()));
  CHECK(s.species_count > 10);
  CHECK(ev.threshold_schedule().overspeciation_events == 1);
  CHECK(ev.threshold() == 1e-9 * 1.001 * 1.1);
}

TEST_CASE("configuration validation") {
  EvolutionConfig c;
  CHECK_NOTHROW(c.validate());
  c.population_size = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.mutation.add_node = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.decay_factor = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
