#include <catch_amalgamated.hpp>

#include <cmath>
#include <thread>

#include "chartevo/cppn.hpp"
#include "support.hpp"

using namespace chartevo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<NodeGene> io_nodes() { return CppnGenome().nodes(); }

std::array<double, 7> random_inputs(Rng& rng) {
  std::array<double, 7> in{};
  for (int i = 0; i < 6; ++i) in[static_cast<std::size_t>(i)] = uniform(rng, -1, 1);
  in[6] = 1.0;
  return in;
}

}  // namespace

TEST_CASE("activation functions at 0 and +-1") {
  const double e = std::exp(1.0);
  CHECK(activate(Activation::sigmoid, 0.0) == 0.5);
  CHECK_THAT(activate(Activation::sigmoid, 1.0), WithinRel(1.0 / (1.0 + 1.0 / e), 1e-15));
  CHECK_THAT(activate(Activation::sigmoid, -1.0), WithinRel(1.0 / (1.0 + e), 1e-15));
  CHECK(activate(Activation::gaussian, 0.0) == 1.0);
  CHECK_THAT(activate(Activation::gaussian, 1.0), WithinRel(1.0 / e, 1e-15));
  CHECK_THAT(activate(Activation::gaussian, -1.0), WithinRel(1.0 / e, 1e-15));
  CHECK(activate(Activation::sine, 0.0) == 0.0);
  CHECK_THAT(activate(Activation::sine, 1.0), WithinRel(0.8414709848078965, 1e-15));
  CHECK_THAT(activate(Activation::sine, -1.0), WithinRel(-0.8414709848078965, 1e-15));
  CHECK(activate(Activation::linear, 0.0) == 0.0);
  CHECK(activate(Activation::linear, 1.0) == 1.0);
  CHECK(activate(Activation::linear, -1.0) == -1.0);
  CHECK(activate(Activation::absolute, 0.0) == 0.0);
  CHECK(activate(Activation::absolute, 1.0) == 1.0);
  CHECK(activate(Activation::absolute, -1.0) == 1.0);
  for (Activation a : kHiddenActivations) CHECK(parse_activation(to_string(a)) == a);
  CHECK_THROWS_AS(parse_activation("tanh"), FormatError);
}

TEST_CASE("empty genome outputs zero everywhere") {
  const CppnGenome g;
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto o = g.activate(random_inputs(rng));
    CHECK(o.weight == 0.0);
    CHECK(o.bias == 0.0);
    CHECK(o.leo == 0.0);
  }
  const auto [w, leo] = query_connection(g, {-1, 0, 0}, {1, 0, 0});
  CHECK(w == 0.0);
  CHECK(leo == 0.0);
  CHECK(query_bias(g, {0.3, 0.2, 0.1}) == 0.0);
}

TEST_CASE("bias to weight output passes the weight through") {
  const CppnGenome g(io_nodes(), {{0, CppnGenome::kBiasInput, CppnGenome::kWeightOutput, 0.7, true},
                                  {1, CppnGenome::kBiasInput, CppnGenome::kBiasOutput, -1.25, true}});
  const auto [w, leo] = query_connection(g, {0.1, 0.2, 0.3}, {0.4, 0.5, 0.6});
  CHECK(w == 0.7);
  CHECK(leo == 0.0);
  CHECK(query_bias(g, {0.9, -0.9, 0.0}) == -1.25);
}

TEST_CASE("hand-built x2 - x1 genome") {
  std::vector<NodeGene> nodes = io_nodes();
  nodes.push_back({10, NodeRole::hidden, Activation::linear});
  const CppnGenome g(nodes, {{0, 0, 10, -1.0, true},
                             {1, 3, 10, 1.0, true},
                             {2, 10, CppnGenome::kWeightOutput, 1.0, true}});
  const auto [w, leo] = query_connection(g, {-1, 0, 0}, {1, 0, 0});
  CHECK(w == 2.0);
  CHECK(leo == 0.0);
  const CompiledCppn compiled(g);
  CHECK(compiled.query_connection({0.5, 0, 0}, {-0.25, 0, 0}).first == -0.75);
}

TEST_CASE("query_bias zero-fills the partner coordinate") {
  // weight_out = x2 + y2 + z2: zero for any bias query
  const CppnGenome g(io_nodes(), {{0, 3, CppnGenome::kBiasOutput, 1.0, true},
                                  {1, 4, CppnGenome::kBiasOutput, 1.0, true},
                                  {2, 5, CppnGenome::kBiasOutput, 1.0, true},
                                  {3, 0, CppnGenome::kBiasOutput, 2.0, true}});
  CHECK(query_bias(g, {0.25, 0.5, 0.75}) == 0.5);
}

TEST_CASE("topological evaluation equals the recursive oracle on 1000 random genomes") {
  Rng rng(42);
  InnovationTracker tracker;
  std::size_t with_hidden = 0;
  for (int t = 0; t < 1000; ++t) {
    const CppnGenome g = testing::random_genome(rng, tracker, 2 + t % 15);
    REQUIRE(g.is_acyclic());
    if (g.nodes().size() > 10) ++with_hidden;
    const CompiledCppn compiled(g);
    for (int q = 0; q < 5; ++q) {
      const auto in = random_inputs(rng);
      const auto ref = testing::recursive_eval(g, in);
      const auto a = g.activate(in);
      const auto b = compiled.activate(in);
      REQUIRE_THAT(a.weight, WithinAbs(ref.weight, 1e-12));
      REQUIRE_THAT(a.bias, WithinAbs(ref.bias, 1e-12));
      REQUIRE_THAT(a.leo, WithinAbs(ref.leo, 1e-12));
      REQUIRE(b.weight == a.weight);
      REQUIRE(b.bias == a.bias);
      REQUIRE(b.leo == a.leo);
    }
  }
  CHECK(with_hidden > 500);
}

TEST_CASE("disabling a connection is the same as removing it") {
  Rng rng(43);
  InnovationTracker tracker;
  for (int t = 0; t < 100; ++t) {
    const CppnGenome g = testing::random_genome(rng, tracker, 8);
    const std::size_t idx = pick_index(rng, g.connections().size());
    auto disabled_conns = g.connections();
    disabled_conns[idx].enabled = false;
    auto removed_conns = g.connections();
    removed_conns.erase(removed_conns.begin() + static_cast<long>(idx));
    const CppnGenome disabled(g.nodes(), disabled_conns);
    const CppnGenome removed(g.nodes(), removed_conns);
    const auto in = random_inputs(rng);
    const auto a = disabled.activate(in);
    const auto b = removed.activate(in);
    CHECK(a.weight == b.weight);
    CHECK(a.bias == b.bias);
    CHECK(a.leo == b.leo);
  }
}

TEST_CASE("validating constructor rejects malformed genomes") {
  auto nodes = io_nodes();
  nodes.push_back({10, NodeRole::hidden, Activation::sine});
  nodes.push_back({11, NodeRole::hidden, Activation::sine});
  CHECK_THROWS_AS(CppnGenome(nodes, {{0, 10, 11, 1, true}, {1, 11, 10, 1, true}}), StructuralError);
  // a disabled edge still counts: re-enabling it must never create a cycle
  CHECK_THROWS_AS(CppnGenome(nodes, {{0, 10, 11, 1, true}, {1, 11, 10, 1, false}}), StructuralError);
  CHECK_THROWS_AS(CppnGenome(nodes, {{0, 0, 42, 1, true}}), StructuralError);
  CHECK_THROWS_AS(CppnGenome(nodes, {{0, 7, 10, 1, true}}), StructuralError);  // out of an output
  CHECK_THROWS_AS(CppnGenome(nodes, {{0, 10, 2, 1, true}}), StructuralError);  // into an input
  CHECK_THROWS_AS(CppnGenome(nodes, {{0, 0, 7, 1, true}, {0, 1, 7, 1, true}}), StructuralError);
  CHECK_THROWS_AS(CppnGenome(nodes, {{0, 0, 7, 1, true}, {1, 0, 7, 1, true}}), StructuralError);
  CHECK_THROWS_AS(CppnGenome(nodes, {{0, 10, 10, 1, true}}), StructuralError);
  CppnGenome ok(nodes, {{0, 0, 10, 1, true}, {1, 10, 11, 1, true}});
  CHECK(ok.creates_cycle(11, 10));
  CHECK_FALSE(ok.creates_cycle(0, 11));
  CHECK_THROWS_AS(ok.add_connection({2, 11, 10, 1, true}), StructuralError);
}

TEST_CASE("minimal genome is fully connected with weights in [-1, 1]") {
  Rng rng(44);
  InnovationTracker tracker;
  const CppnGenome g = CppnGenome::minimal(rng, tracker);
  CHECK(g.nodes().size() == 10);
  CHECK(g.connections().size() == 21);
  for (const auto& c : g.connections()) {
    CHECK(c.enabled);
    CHECK(std::abs(c.weight) <= 1.0);
  }
  const CppnGenome h = CppnGenome::minimal(rng, tracker);
  for (std::size_t i = 0; i < 21; ++i) {
    CHECK(g.connections()[i].innovation == h.connections()[i].innovation);
  }
}

TEST_CASE("genome json round trip") {
  Rng rng(45);
  InnovationTracker tracker;
  for (int t = 0; t < 50; ++t) {
    const CppnGenome g = testing::random_genome(rng, tracker, 10);
    const auto text = g.to_json().dump();
    CHECK(CppnGenome::from_json(nlohmann::json::parse(text)) == g);
  }
  CHECK_THROWS_AS(CppnGenome::from_json(nlohmann::json::parse(R"({"format":"x"})")), FormatError);
  CHECK_THROWS_AS(CppnGenome::from_json(nlohmann::json::parse("[]")), FormatError);
}

TEST_CASE("innovation tracker reuses structural ids") {
  InnovationTracker t;
  const int a = t.connection_innovation(0, 10);
  CHECK(t.connection_innovation(0, 10) == a);
  CHECK(t.connection_innovation(10, 7) != a);
  const auto nodes = CppnGenome().nodes();
  const int n1 = t.split_node(3, nodes);
  CHECK(t.split_node(3, nodes) == n1);
  auto with = nodes;
  with.push_back({n1, NodeRole::hidden, Activation::sine});
  CHECK(t.split_node(3, with) != n1);
  t.begin_generation();
  CHECK(t.split_node(3, nodes) != n1);
  CHECK(InnovationTracker::from_json(t.to_json()) == t);
}

TEST_CASE("compiled cppn is reentrant across threads") {
  Rng rng(46);
  InnovationTracker tracker;
  const CppnGenome g = testing::random_genome(rng, tracker, 14);
  const CompiledCppn c(g);
  std::vector<std::array<double, 7>> inputs;
  for (int i = 0; i < 2000; ++i) inputs.push_back(random_inputs(rng));
  std::vector<double> expect;
  for (const auto& in : inputs) expect.push_back(c.activate(in).weight);
  std::vector<double> got(inputs.size());
  {
    std::vector<std::jthread> threads;
    for (int w = 0; w < 4; ++w) {
      threads.emplace_back([&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < inputs.size(); i += 4) {
          got[i] = c.activate(inputs[i]).weight;
        }
      });
    }
  }
  CHECK(got == expect);
}
