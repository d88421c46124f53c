#pragma once

// Exhaustive ground truth for small networks: reachability, lexicographic
// minimum-flip plans, exact action values and the in-degree / forward sets.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "flipctl/qlearn.hpp"

namespace flipctl {

/// Largest n the exhaustive oracle enumerates.
inline constexpr int kOracleMaxNodes = 20;

/// Explicit transition table of the flipped network restricted to a flip set.
/// Refuses n > kOracleMaxNodes or n + m + |B| > kMaxDenseBits.
class ProductGraph {
 public:
  ProductGraph(const Network& net, const FlipSet& flip_set);

  const Network& network() const noexcept { return *net_; }
  const ActionSpace& actions() const noexcept { return actions_; }
  int nodes() const noexcept { return net_->nodes(); }
  std::size_t state_count() const noexcept { return std::size_t{1} << nodes(); }
  std::size_t action_count() const noexcept { return actions_.size(); }

  State successor(State x, ActionIndex a) const {
    return State{succ_[x.bits * action_count() + a]};
  }

 private:
  const Network* net_;
  ActionSpace actions_;
  std::vector<std::uint32_t> succ_;
};

struct PlanStep {
  State from;
  ActionIndex action = 0;
  State to;
};

/// One initial state's verdict and witness path (empty when x0 is in Md).
struct Witness {
  State x0;
  bool reachable = false;
  std::vector<PlanStep> path;
};

struct ReachabilityReport {
  bool all_reachable = false;
  std::vector<Witness> witnesses;  // one per M0 state, in M0 order
};

/// Shortest witnesses; ties between equally short continuations go to the
/// smallest action index.
ReachabilityReport bfs_reachable(const ProductGraph& graph, const ReachabilitySpec& spec);

/// Lexicographic cost (total flips, steps).
struct PathCost {
  std::uint64_t flips = 0;
  std::uint64_t steps = 0;
  friend auto operator<=>(const PathCost&, const PathCost&) = default;
};

struct MinFlipPlan {
  State x0;
  bool reachable = false;
  PathCost cost;
  std::vector<PlanStep> path;
};

/// Cost-to-go to Md for every state, minimizing flips first and steps second.
/// Unreachable states hold std::nullopt.
std::vector<std::optional<PathCost>> min_flip_costs(const ProductGraph& graph,
                                                    const ReachabilitySpec& spec);

/// Optimal plan from x0: at every state the smallest action index that stays
/// on a lexicographically optimal path.
MinFlipPlan min_flip_path(const ProductGraph& graph, const ReachabilitySpec& spec, State x0);
MinFlipPlan min_flip_path(const ProductGraph& graph, const ReachabilitySpec& spec,
                          const std::vector<std::optional<PathCost>>& costs, State x0);

struct ValueIterationResult {
  /// Dense 2^n x |actions| table, row-major. Rows of target states are zero.
  /// Cells whose successor cannot reach Md hold -infinity under gamma = 1.
  std::vector<double> q;
  std::size_t actions = 0;
  /// States that cannot reach Md (flagged only when gamma = 1).
  std::vector<State> divergent;
  /// Sup-norm change of each sweep.
  std::vector<double> deltas;
  bool converged = false;

  double value(State x, ActionIndex a) const { return q[x.bits * actions + a]; }
  double max_value(State x) const;
  ActionIndex greedy_action(State x) const;
};

inline constexpr double kValueIterationTolerance = 1e-10;

/// Synchronous sweeps of the Bellman optimality operator until the sup-norm
/// change drops below `tolerance` or `max_sweeps` is hit.
ValueIterationResult value_iteration(const ProductGraph& graph, const ReachabilitySpec& spec,
                                     const RewardMode& mode, double gamma,
                                     double tolerance = kValueIterationTolerance,
                                     std::size_t max_sweeps = 1'000'000);

/// States with at least one flip-free predecessor (over all inputs), ascending.
std::vector<State> in_degree_set(const Network& net);

/// Forward closure of `sources` in the product graph, ascending. With
/// `include_sources` false only states entered by at least one transition count.
std::vector<State> reachable_set(const ProductGraph& graph, const std::vector<State>& sources,
                                 bool include_sources = true);

/// "x →(u=..,flip={..}) x'" per line.
std::string format_plan(const std::vector<PlanStep>& path, const ActionSpace& actions, int nodes);

// ---------------------------------------------------------------------------
// Block-decomposed oracle for networks declared as independent blocks.

struct BlockPlan {
  State x0;
  bool reachable = false;
  PathCost cost;
};

/// Checks that every update of a block reads only nodes of that block and
/// that no input is read by two blocks. Throws InvalidArgument otherwise.
void verify_block_independence(const Network& net, const std::vector<FlipSet>& blocks);

/// Exact lexicographic (flips, steps) optimum for each initial state. Md must
/// be a single state. Each block gets a time-layered table of the fewest flips
/// reaching its target part in exactly T steps; the tables become periodic,
/// so minimizing the summed cost over one joint period covers every arrival
/// time. Throws ResourceRefused if that period exceeds `max_horizon`.
std::vector<BlockPlan> block_min_flip(const Network& net, const ReachabilitySpec& spec,
                                      const FlipSet& flip_set, const std::vector<FlipSet>& blocks,
                                      std::uint64_t max_horizon = 1 << 16);

}  // namespace flipctl
