#include <doctest.h>

#include <cmath>

#include "flipctl/error.hpp"
#include "flipctl/kernel_search.hpp"
#include "flipctl/oracle.hpp"
#include "support.hpp"

using namespace flipctl;

namespace {

/// Two disjoint copies of the example 2 block, each with its own input.
Network twin_example2() {
  return parse_network(R"(nodes: 6
inputs: 2
x1' = x1 & (x2 | x3) | !x1 & (x2 ^ x3)
x2' = x1 | !x1 & (x2 | x3)
x3' = !(x1 & x2 & x3 & u1) & (x3 | (x1 | !(x2 & u1)) & (!x1 | (x1 ^ x2) | u1))
x4' = x4 & (x5 | x6) | !x4 & (x5 ^ x6)
x5' = x4 | !x4 & (x5 | x6)
x6' = !(x4 & x5 & x6 & u2) & (x6 | (x4 | !(x5 & u2)) & (!x4 | (x4 ^ x5) | u2))
)");
}

std::vector<State> everything_but(int n, State t) {
  std::vector<State> out;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) {
    if (x != t.bits) out.push_back(State{x});
  }
  return out;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("product graph successors agree with the network") {
    const Network net = testsupport::example_network(2);
    const ProductGraph g(net, {1, 3});
    CHECK(g.action_count() == 8);
    for (std::uint64_t x = 0; x < 8; ++x) {
      for (ActionIndex a = 0; a < g.action_count(); ++a) {
        CHECK(g.successor(State{x}, a) ==
              net.step_flipped(State{x}, g.actions().input(a), g.actions().flips(a)));
      }
    }
  }

  TEST_CASE("example 2 with {1,2}: reachable, witnesses are valid shortest paths") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    const ProductGraph g(net, {1, 2});
    const ReachabilityReport r = bfs_reachable(g, p.spec);
    CHECK(r.all_reachable);
    REQUIRE(r.witnesses.size() == 7);
    for (const Witness& w : r.witnesses) {
      CHECK(w.reachable);
      CHECK(w.path.size() <= 7);
      State x = w.x0;
      for (const PlanStep& s : w.path) {
        CHECK(s.from == x);
        CHECK(s.to == g.successor(x, s.action));
        x = s.to;
      }
      CHECK(p.spec.is_target(x));
    }
  }

  TEST_CASE("example 2 with a single flippable node is not reachable") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    for (int node : {1, 2, 3}) {
      const ReachabilityReport r = bfs_reachable(ProductGraph(net, {node}), p.spec);
      CHECK_FALSE(r.all_reachable);
      for (const Witness& w : r.witnesses) {
        CHECK(w.reachable == testsupport::brute_reachable(net, p.spec, {node}, w.x0));
      }
    }
  }

  TEST_CASE("initial states inside Md need no steps") {
    const Network net = testsupport::example_network(2);
    std::vector<State> all;
    for (std::uint64_t x = 0; x < 8; ++x) all.push_back(State{x});
    const ReachabilitySpec spec(3, all, all);
    const ReachabilityReport r = bfs_reachable(ProductGraph(net, {}), spec);
    CHECK(r.all_reachable);
    for (const Witness& w : r.witnesses) CHECK(w.path.empty());
    const MinFlipPlan plan = min_flip_path(ProductGraph(net, {}), spec, State{3});
    CHECK(plan.reachable);
    CHECK(plan.cost == PathCost{0, 0});
    CHECK(plan.path.empty());
  }

  TEST_CASE("minimum-flip costs equal the dynamic program over action sequences") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    for (const FlipSet& b : {FlipSet{1, 2}, FlipSet{2, 3}, FlipSet{1, 2, 3}, FlipSet{1}}) {
      const ProductGraph g(net, b);
      const auto costs = min_flip_costs(g, p.spec);
      const auto truth = testsupport::brute_min_flip(net, p.spec, b);
      for (std::uint64_t x = 0; x < 8; ++x) {
        CAPTURE(x);
        REQUIRE(costs[x].has_value() == truth[x].reachable);
        if (!truth[x].reachable) continue;
        CHECK(costs[x]->flips == truth[x].flips);
        CHECK(costs[x]->steps == truth[x].steps);
        const MinFlipPlan plan = min_flip_path(g, p.spec, State{x});
        CHECK(plan.cost == *costs[x]);
        CHECK(plan.path.size() == costs[x]->steps);
        std::uint64_t flips = 0;
        for (const PlanStep& s : plan.path) flips += g.actions().flip_count(s.action);
        CHECK(flips == costs[x]->flips);
      }
    }
  }

  TEST_CASE("minimum-flip costs on random networks") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 60; ++i) {
      const int n = std::uniform_int_distribution<int>(2, 4)(rng);
      const int m = std::uniform_int_distribution<int>(1, 2)(rng);
      const Network net = testsupport::random_network(n, m, rng);
      const ReachabilitySpec spec(n, testsupport::random_states(n, rng, 4),
                                  testsupport::random_states(n, rng, 2));
      const FlipSet b = testsupport::random_flip_set(n, 2, rng);
      const auto costs = min_flip_costs(ProductGraph(net, b), spec);
      const auto truth = testsupport::brute_min_flip(net, spec, b);
      for (std::uint64_t x = 0; x < costs.size(); ++x) {
        REQUIRE(costs[x].has_value() == truth[x].reachable);
        if (costs[x]) CHECK(*costs[x] == PathCost{truth[x].flips, truth[x].steps});
      }
    }
  }

  TEST_CASE("enlarging B never raises the cost") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    for (int k = 0; k < 3; ++k) {
      for (const FlipSet& b : enumerate_subsets({1, 2, 3}, k)) {
        const auto small = min_flip_costs(ProductGraph(net, b), p.spec);
        for (const FlipSet& big : enumerate_subsets({1, 2, 3}, k + 1)) {
          if (!is_subset(b, big)) continue;
          const auto large = min_flip_costs(ProductGraph(net, big), p.spec);
          for (std::uint64_t x = 0; x < 8; ++x) {
            if (small[x]) {
              REQUIRE(large[x]);
              CHECK(*large[x] <= *small[x]);
            }
          }
        }
      }
    }
  }

  TEST_CASE("reach-only value iteration: 100 one step out, 99 two steps out") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    const ProductGraph g(net, {1, 2});
    const ValueIterationResult vi = value_iteration(g, p.spec, ReachOnly{}, 0.99);
    CHECK(vi.converged);
    const auto truth = testsupport::brute_min_flip(net, p.spec, {1, 2});
    for (std::uint64_t x = 0; x < 8; ++x) {
      for (ActionIndex a = 0; a < g.action_count(); ++a) {
        if (p.spec.is_target(g.successor(State{x}, a)) && !p.spec.is_target(State{x})) {
          CHECK(vi.value(State{x}, a) == doctest::Approx(100.0));
        }
      }
    }
    // A state whose fastest route takes two steps.
    bool found = false;
    for (std::uint64_t x = 0; x < 8; ++x) {
      bool one_step = false;
      for (ActionIndex a = 0; a < g.action_count(); ++a) {
        one_step = one_step || p.spec.is_target(g.successor(State{x}, a));
      }
      if (one_step || p.spec.is_target(State{x})) continue;
      bool two_steps = false;
      for (ActionIndex a = 0; a < g.action_count(); ++a) {
        const State y = g.successor(State{x}, a);
        for (ActionIndex b = 0; b < g.action_count(); ++b) {
          two_steps = two_steps || p.spec.is_target(g.successor(y, b));
        }
      }
      if (!two_steps) continue;
      found = true;
      CHECK(vi.max_value(State{x}) == doctest::Approx(99.0));
    }
    CHECK(found);
  }

  TEST_CASE("flip-penalty value iteration: greedy rollouts match the minimum-flip plans") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    const ProductGraph g(net, {1, 2});
    const ValueIterationResult vi = value_iteration(g, p.spec, FlipPenalty{8.0, {}}, 1.0);
    CHECK(vi.converged);
    const auto costs = min_flip_costs(g, p.spec);
    for (State x0 : p.spec.initial()) {
      State x = x0;
      PathCost cost;
      while (!p.spec.is_target(x) && cost.steps < 20) {
        const ActionIndex a = vi.greedy_action(x);
        cost.flips += g.actions().flip_count(a);
        ++cost.steps;
        x = g.successor(x, a);
      }
      CHECK(cost == *costs[x0.bits]);
      // Rewards arrive with the step: the final, arriving step costs only its flips.
      const double expected =
          -8.0 * static_cast<double>(cost.flips) - static_cast<double>(cost.steps - 1);
      CHECK(vi.max_value(x0) == doctest::Approx(expected));
    }
  }

  TEST_CASE("divergent states are flagged under an undiscounted penalty") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    const ValueIterationResult vi = value_iteration(ProductGraph(net, {}), p.spec,
                                                    FlipPenalty{8.0, {}}, 1.0);
    const auto truth = testsupport::brute_min_flip(net, p.spec, {});
    std::size_t unreachable = 0;
    for (std::uint64_t x = 0; x < 8; ++x) unreachable += truth[x].reachable ? 0 : 1;
    CHECK(vi.divergent.size() == unreachable);
    for (State x : vi.divergent) CHECK(std::isinf(vi.max_value(x)));
  }

  TEST_CASE("in-degree set") {
    const Network constant = parse_network("nodes: 1\ninputs: 0\nx1' = 1\n");
    CHECK(in_degree_set(constant) == std::vector<State>{State{1}});
    std::mt19937_64 rng(4);
    for (int i = 0; i < 30; ++i) {
      const int n = std::uniform_int_distribution<int>(1, 5)(rng);
      const Network net = testsupport::random_network(n, 1, rng);
      const auto ids = in_degree_set(net);
      CHECK(ids.size() <= (std::size_t{1} << n));
      const auto truth = testsupport::image_set(net);
      CHECK(ids.size() == truth.size());
      for (State x : ids) CHECK(truth.contains(x.bits));
    }
  }

  TEST_CASE("forward sets and the in-degree bound on example 2") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    const std::size_t in_degree = in_degree_set(net).size();
    for (int k = 0; k <= 3; ++k) {
      for (const FlipSet& b : enumerate_subsets({1, 2, 3}, k)) {
        const ProductGraph g(net, b);
        const auto with_sources = reachable_set(g, p.spec.initial(), true);
        const auto entered = reachable_set(g, p.spec.initial(), false);
        CHECK(with_sources.size() ==
              testsupport::forward_closure(net, b, p.spec.initial(), true).size());
        CHECK(entered.size() ==
              testsupport::forward_closure(net, b, p.spec.initial(), false).size());
        CHECK(entered.size() <= in_degree);
        for (State x : p.spec.initial()) {
          CHECK(std::binary_search(with_sources.begin(), with_sources.end(), x));
        }
      }
    }
  }

  TEST_CASE("absorbing target next to M0") {
    const Network net = parse_network("nodes: 2\ninputs: 0\nx1' = 1\nx2' = 1\n");
    const ProductGraph g(net, {});
    CHECK(reachable_set(g, {State{0}}) == std::vector<State>{State{0}, State{3}});
    CHECK(reachable_set(g, {State{0}}, false) == std::vector<State>{State{3}});
  }

  TEST_CASE("sparse search rows stay within V and M0 on example 2") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    KernelSearchParams params;
    params.variant = SearchVariant::SmallMemory;
    params.training = {.episodes = 100, .max_steps = 10, .beta = 1.0, .omega = 0.6, .gamma = 0.99};
    const FlipSetRun run = train_flip_set(net, p.spec, {1, 2}, params, {});
    CHECK(run.row_count <= reachable_set(ProductGraph(net, {1, 2}), p.spec.initial()).size());
  }

  TEST_CASE("plan text") {
    const Network net = testsupport::example_network(2);
    const ProductGraph g(net, {1, 2});
    const ActionIndex a = g.actions().encode(Input{0}, make_flip_mask(std::vector<int>{1, 2}, 3));
    const std::string text = format_plan({{State{6}, a, g.successor(State{6}, a)}}, g.actions(), 3);
    CHECK(text.find("110") == 0);
    CHECK(text.find("u=0,flip={1,2}") != std::string::npos);
  }

  TEST_CASE("size guard refuses wide networks") {
    std::vector<BoolExpr> updates;
    for (int i = 1; i <= 25; ++i) updates.push_back(BoolExpr::node(i));
    const Network wide(25, 0, std::move(updates));
    CHECK_THROWS_AS(ProductGraph(wide, {}), ResourceRefused);
  }

  TEST_CASE("block oracle equals the exhaustive oracle on two coupled-free copies") {
    const Network net = twin_example2();
    const std::vector<FlipSet> blocks{{1, 2, 3}, {4, 5, 6}};
    CHECK_NOTHROW(verify_block_independence(net, blocks));
    const ReachabilitySpec spec(6, everything_but(6, State{0b001001}), {State{0b001001}});
    for (const FlipSet& b : {FlipSet{1, 2, 4, 5}, FlipSet{2, 3, 4, 5}, FlipSet{1, 2, 5},
                             FlipSet{}, FlipSet{1, 2, 3, 4, 5, 6}}) {
      CAPTURE(format_flip_set(b));
      const auto exact = min_flip_costs(ProductGraph(net, b), spec);
      const auto blocked = block_min_flip(net, spec, b, blocks);
      REQUIRE(blocked.size() == spec.initial().size());
      for (const BlockPlan& plan : blocked) {
        CAPTURE(plan.x0.bits);
        REQUIRE(plan.reachable == exact[plan.x0.bits].has_value());
        if (plan.reachable) CHECK(plan.cost == *exact[plan.x0.bits]);
      }
    }
  }

  TEST_CASE("block independence is checked") {
    const Network coupled = parse_network(
        "nodes: 2\ninputs: 1\nx1' = x2\nx2' = x1 & u1\n");
    CHECK_THROWS_AS(verify_block_independence(coupled, {{1}, {2}}), InvalidArgument);
    const Network shared = parse_network("nodes: 2\ninputs: 1\nx1' = u1\nx2' = u1\n");
    CHECK_THROWS_AS(verify_block_independence(shared, {{1}, {2}}), InvalidArgument);
  }
}
