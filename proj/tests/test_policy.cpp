#include <doctest.h>

#include <deque>
#include <sstream>

#include "flipctl/error.hpp"
#include "flipctl/policy.hpp"
#include "support.hpp"

using namespace flipctl;

namespace {

/// Fewest steps to Md ignoring flip costs, by breadth-first search.
std::vector<int> bfs_steps(const Network& net, const ReachabilitySpec& spec, const FlipSet& b) {
  const std::uint64_t states = std::uint64_t{1} << net.nodes();
  std::vector<int> dist(states, -1);
  // Backward search over the explicit edge list.
  std::vector<std::vector<std::uint64_t>> pred(states);
  for (std::uint64_t x = 0; x < states; ++x) {
    for (auto [y, f] : testsupport::successors(net, b, x)) {
      (void)f;
      pred[y].push_back(x);
    }
  }
  std::deque<std::uint64_t> queue;
  for (State t : spec.targets()) {
    dist[t.bits] = 0;
    queue.push_back(t.bits);
  }
  while (!queue.empty()) {
    const std::uint64_t y = queue.front();
    queue.pop_front();
    for (std::uint64_t x : pred[y]) {
      if (dist[x] < 0) {
        dist[x] = dist[y] + 1;
        queue.push_back(x);
      }
    }
  }
  return dist;
}

Policy constant_policy(const FlipSet& b, int nodes, ActionIndex a) {
  Policy p{b, {}};
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << nodes); ++x) p.actions[x] = a;
  return p;
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("weight bounds") {
    CHECK(weight_bound(StateCountBound{3, 1}) == 7.0);
    CHECK(8.0 > weight_bound(StateCountBound{3, 1}));
    CHECK(weight_bound(RowCountBound{18}) == 18.0);
    CHECK(weight_bound(LongestPathBound{4}) == 4.0);
    CHECK(5.0 > weight_bound(LongestPathBound{4}));
  }

  TEST_CASE("example 1: the counter policy against the two-flip shortcut") {
    const Network net = testsupport::example_network(1);
    const Problem p = testsupport::example_problem(1, net);
    const ActionSpace space(3, 0, {2, 3});
    const Policy slow = constant_policy({2, 3}, 3, 0);
    Policy fast = slow;
    fast.actions[0b000] = space.encode(Input{0}, make_flip_mask(std::vector<int>{2, 3}, 3));

    const PolicyEvalRow a = evaluate_policy(net, p.spec, slow, 10, 1.0).rows.at(0);
    CHECK(a.reached);
    CHECK(a.steps == 4);
    CHECK(a.total_flips == 0);
    CHECK(a.ret == -4.0);
    const PolicyEvalRow b = evaluate_policy(net, p.spec, fast, 10, 1.0).rows.at(0);
    CHECK(b.reached);
    CHECK(b.steps == 1);
    CHECK(b.total_flips == 2);
    CHECK(b.ret == -3.0);
  }

  TEST_CASE("example 2 minimum-flip policy matches the dynamic-programming optimum") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    PolicyParams params;
    params.weight = 8.0;
    const auto truth = testsupport::brute_min_flip(net, p.spec, {1, 2});
    for (std::uint64_t seed : {0u, 1u}) {
      params.seed = seed;
      const PolicyRun run = learn_min_flip_policy(net, p.spec, {1, 2}, params);
      const PolicyEval eval = evaluate_policy(net, p.spec, run.policy, 100, 8.0);
      CHECK(eval.all_reached());
      for (const PolicyEvalRow& row : eval.rows) {
        CAPTURE(row.x0.bits);
        CHECK(row.total_flips == truth[row.x0.bits].flips);
        CHECK(row.steps == truth[row.x0.bits].steps);
        CHECK(row.ret == -8.0 * static_cast<double>(row.total_flips) - static_cast<double>(row.steps));
      }
    }
  }

  TEST_CASE("a start inside Md costs nothing") {
    const Network net = testsupport::example_network(2);
    const ReachabilitySpec spec(3, {State{1}}, {State{1}});
    const PolicyEval eval = evaluate_policy(net, spec, constant_policy({}, 3, 0), 10, 8.0);
    CHECK(eval.rows.at(0).reached);
    CHECK(eval.rows.at(0).steps == 0);
    CHECK(eval.rows.at(0).total_flips == 0);
  }

  TEST_CASE("a looping policy stops unreached at the cap") {
    const Network net = parse_network("nodes: 1\ninputs: 0\nx1' = x1\n");
    const ReachabilitySpec spec(1, {State{0}}, {State{1}});
    const PolicyEvalRow row = evaluate_policy(net, spec, constant_policy({1}, 1, 0), 25, 1.0).rows.at(0);
    CHECK_FALSE(row.reached);
    CHECK(row.steps == 25);
    CHECK_FALSE(row.diagnostic.empty());
  }

  TEST_CASE("minimum-step policy takes breadth-first shortest paths for any discount") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    const std::vector<int> dist = bfs_steps(net, p.spec, {1, 2});
    for (double gamma : {0.99, 0.5}) {
      const TrainingParams training{.episodes = 5000, .max_steps = 10, .beta = 0.01,
                                    .omega = 0.85, .gamma = gamma};
      const PolicyRun run = learn_min_step_policy(net, p.spec, {1, 2}, training, 2);
      const PolicyEval eval = evaluate_policy(net, p.spec, run.policy, 100, 0.0);
      for (const PolicyEvalRow& row : eval.rows) {
        CAPTURE(gamma);
        CAPTURE(row.x0.bits);
        CHECK(row.reached);
        CHECK(static_cast<int>(row.steps) == dist[row.x0.bits]);
      }
    }
  }

  TEST_CASE("adaptive weight never bumps when w already exceeds the row count") {
    const Network net = parse_network("nodes: 1\ninputs: 0\nx1' = !x1\n");
    const ReachabilitySpec spec(1, {State{0}}, {State{1}});
    PolicyParams params;
    params.training.episodes = 50;
    params.weight = 2.0;
    params.weight_step = 1.0;
    const PolicyRun run = learn_min_flip_policy_sparse(net, spec, {1}, params);
    CHECK(run.table.row_count() == 1);
    CHECK(run.weight_bumps == 0);
    CHECK(run.final_weight == 2.0);
  }

  TEST_CASE("adaptive weight ends above the row count") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    PolicyParams params;
    params.weight = 1.0;
    params.weight_step = 2.0;
    const PolicyRun run = learn_min_flip_policy_sparse(net, p.spec, {1, 2}, params);
    CHECK(run.table.storage() == Storage::Sparse);
    CHECK(run.weight_bumps > 0);
    CHECK(run.final_weight > static_cast<double>(run.table.row_count()));
    const auto truth = testsupport::brute_min_flip(net, p.spec, {1, 2});
    for (const PolicyEvalRow& row :
         evaluate_policy(net, p.spec, run.policy, 100, run.final_weight).rows) {
      CHECK(row.total_flips == truth[row.x0.bits].flips);
    }
  }

  TEST_CASE("dense learner insists on an undiscounted flip penalty") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    PolicyParams params;
    params.training.gamma = 0.9;
    CHECK_THROWS_AS(learn_min_flip_policy(net, p.spec, {1, 2}, params), InvalidArgument);
  }

  TEST_CASE("policy text round-trips and the eval CSV has its header") {
    const ActionSpace space(3, 1, {1, 2});
    Policy p{{1, 2}, {{0, 5}, {3, 2}, {7, 0}}};
    std::ostringstream out;
    write_policy(out, p, space);
    CHECK(out.str().find("000 -> u=1 flip={2}") != std::string::npos);
    std::istringstream in(out.str());
    const Policy back = read_policy(in, space);
    CHECK(back.actions == p.actions);
    CHECK(back.flip_set == p.flip_set);

    PolicyEval eval;
    eval.rows.push_back({State{6}, true, 2, 1, -10.0, {}});
    std::ostringstream csv;
    write_eval_csv(csv, eval, 3);
    CHECK(csv.str() == "x0,reached,steps,total_flips,return\n110,1,2,1,-10\n");
  }
}
