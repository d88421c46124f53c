#include <doctest.h>

#include <array>
#include <random>
#include <set>

#include "flipctl/error.hpp"
#include "flipctl/mdp.hpp"
#include "support.hpp"

using namespace flipctl;

namespace {

// Upper 0.1% points of the chi-square distribution.
constexpr double kChi2Df6 = 22.458;

double chi_square(const std::vector<std::size_t>& counts, double expected) {
  double stat = 0.0;
  for (std::size_t c : counts) stat += (c - expected) * (c - expected) / expected;
  return stat;
}

}  // namespace

TEST_SUITE("mdp") {
  TEST_CASE("all-zero action encodes to 0") {
    const ActionSpace space(3, 1, {2, 3});
    CHECK(space.size() == 8);
    CHECK(space.encode(Input{0}, FlipMask{}) == 0);
  }

  TEST_CASE("the 8 actions of m=1, B={2,3} decode to 8 distinct pairs") {
    const ActionSpace space(3, 1, {2, 3});
    std::set<std::pair<std::uint64_t, std::uint64_t>> pairs;
    for (ActionIndex a = 0; a < space.size(); ++a) {
      const FlipMask f = space.flips(a);
      CHECK((f.bits & ~make_flip_mask(std::vector<int>{2, 3}, 3).bits) == 0);
      pairs.emplace(space.input(a).bits, f.bits);
    }
    CHECK(pairs.size() == 8);
  }

  TEST_CASE("B[0] owns the highest local bit") {
    const ActionSpace space(3, 1, {2, 3});
    CHECK(space.flips(0b010) == make_flip_mask(std::vector<int>{2}, 3));
    CHECK(space.flips(0b001) == make_flip_mask(std::vector<int>{3}, 3));
    CHECK(space.input(0b100).bits == 1);
  }

  TEST_CASE("encode, decode and text round-trip on random actions") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
      const int n = std::uniform_int_distribution<int>(1, 8)(rng);
      const int m = std::uniform_int_distribution<int>(0, 3)(rng);
      const FlipSet b = testsupport::random_flip_set(n, 4, rng);
      const ActionSpace space(n, m, b);
      const ActionIndex a = static_cast<ActionIndex>(rng() % space.size());
      CHECK(space.encode(space.input(a), space.flips(a)) == a);
      CHECK(space.parse_action(space.describe(a)) == a);
      CHECK(space.flip_count(a) == space.flips(a).count());
    }
  }

  TEST_CASE("encode rejects flips outside B") {
    const ActionSpace space(3, 1, {2, 3});
    CHECK_THROWS_AS(space.encode(Input{0}, make_flip_mask(std::vector<int>{1}, 3)),
                    InvalidArgument);
    CHECK_THROWS_AS(space.encode(Input{2}, FlipMask{}), InvalidArgument);
  }

  TEST_CASE("reward arithmetic") {
    Transition t;
    t.done = true;
    CHECK(reward(ReachOnly{}, t) == 100.0);
    t.done = false;
    CHECK(reward(ReachOnly{}, t) == 0.0);
    t.flips = 2;
    CHECK(reward(FlipPenalty{8.0, {}}, t) == -17.0);
    t.flips = 0;
    t.done = true;
    CHECK(reward(FlipPenalty{3.5, {}}, t) == 0.0);
  }

  TEST_CASE("example 2: an action from 111 into Md ends the episode with 100") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    const Environment env(net, p.spec, ActionSpace(3, 1, {1, 2, 3}), ReachOnly{});
    // Brute force over the 16 actions with the hand-written dynamics.
    std::optional<ActionIndex> hit;
    for (ActionIndex a = 0; a < 16 && !hit; ++a) {
      const std::uint64_t flipped = 0b111 ^ env.actions().flips(a).bits;
      const auto next = testsupport::example2_step(testsupport::unpack3(flipped),
                                                   env.actions().input(a).bits != 0);
      if (testsupport::pack3(next) == 0b001) hit = a;
    }
    REQUIRE(hit);
    const Transition t = env.step(parse_state("111", 3), *hit);
    CHECK(t.next == parse_state("001", 3));
    CHECK(t.done);
    CHECK(t.reward == 100.0);
    CHECK(t.flips == env.actions().flip_count(*hit));
  }

  TEST_CASE("done holds exactly when the successor is a target, and steps are deterministic") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    const Environment env(net, p.spec, ActionSpace(3, 1, {1, 2}), ReachOnly{});
    for (State x : p.spec.initial()) {
      for (ActionIndex a = 0; a < env.actions().size(); ++a) {
        const Transition t = env.step(x, a);
        CHECK(t.done == p.spec.is_target(t.next));
        const Transition again = env.step(x, a);
        CHECK(again.next == t.next);
        CHECK(again.reward == t.reward);
        CHECK(again.done == t.done);
      }
    }
  }

  TEST_CASE("stepping from a target or a finished episode is refused") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    const Environment env(net, p.spec, ActionSpace(3, 1, {1, 2}), ReachOnly{});
    CHECK_THROWS_AS(env.step(parse_state("001", 3), 0), StateError);
    Episode ep(env, parse_state("001", 3));
    CHECK(ep.done());
    CHECK_THROWS_AS(ep.step(0), StateError);
  }

  TEST_CASE("uniform resets cover M0 evenly") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    Rng rng(99);
    std::vector<std::size_t> counts(8, 0);
    constexpr std::size_t draws = 100000;
    for (std::size_t i = 0; i < draws; ++i) {
      ++counts[reset(p.spec, StartStrategy::Uniform, {}, rng).bits];
    }
    CHECK(counts[0b001] == 0);
    counts.erase(counts.begin() + 1);
    CHECK(chi_square(counts, draws / 7.0) < kChi2Df6);
  }

  TEST_CASE("special initial states") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    Rng rng(1);
    const std::vector<State> one{parse_state("111", 3)};
    for (int i = 0; i < 20; ++i) {
      CHECK(reset(p.spec, StartStrategy::Unresolved, one, rng) == one.front());
      CHECK(p.spec.is_initial(reset(p.spec, StartStrategy::Unresolved, {}, rng)));
    }
  }

  TEST_CASE("default episode cap is 2^n - |Md|") {
    const Network net = testsupport::example_network(2);
    const Problem p = testsupport::example_problem(2, net);
    CHECK(default_max_steps(p.spec) == 7);
  }
}
