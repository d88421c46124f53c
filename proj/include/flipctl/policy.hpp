#pragma once

// Minimum-flip and minimum-step control policies, their rollout evaluation
// and the policy text format.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "flipctl/qlearn.hpp"

namespace flipctl {

/// w must exceed the longest cycle-free path length l into Md.
struct LongestPathBound {
  std::uint64_t length = 0;
};
/// Prior-free version of the path bound: 2^n - |Md|.
struct StateCountBound {
  int nodes = 0;
  std::size_t targets = 0;
};
/// Large-scale version: the number of rows in a sparse table.
struct RowCountBound {
  std::size_t rows = 0;
};
using WeightBound = std::variant<LongestPathBound, StateCountBound, RowCountBound>;

/// Strict lower bound for the flip weight; callers pick w above it.
double weight_bound(const WeightBound& bound);

struct PolicyParams {
  TrainingParams training{.episodes = 30000, .max_steps = 100, .beta = 0.01, .omega = 0.85,
                          .gamma = 1.0};
  double weight = 8.0;
  /// Adaptive increment for the sparse learner; unset keeps w fixed.
  std::optional<double> weight_step;
  std::uint64_t seed = 0;
};

struct PolicyRun {
  Policy policy;
  QTable table;
  double final_weight = 0.0;
  std::size_t weight_bumps = 0;
  /// Episodes that ended in Md.
  std::uint64_t successful_episodes = 0;
};

/// Dense learner under the flip-penalty reward with gamma = 1.
PolicyRun learn_min_flip_policy(const Network& net, const ReachabilitySpec& spec,
                                const FlipSet& flip_set, const PolicyParams& params);

/// Sparse learner. At the start of every episode, while w does not exceed the
/// current row count, w grows by the weight step; the table is kept as is.
PolicyRun learn_min_flip_policy_sparse(const Network& net, const ReachabilitySpec& spec,
                                       const FlipSet& flip_set, const PolicyParams& params);

/// Reach-only reward with gamma < 1, all N episodes; the greedy policy takes
/// the fewest steps.
PolicyRun learn_min_step_policy(const Network& net, const ReachabilitySpec& spec,
                                const FlipSet& flip_set, const TrainingParams& training,
                                std::uint64_t seed, Storage storage = Storage::Dense);

struct PolicyEvalRow {
  State x0;
  bool reached = false;
  std::uint64_t steps = 0;
  std::uint64_t total_flips = 0;
  /// -w * total_flips - steps: every step costs 1, every flip costs w.
  double ret = 0.0;
  /// Why a rollout stopped short, empty otherwise.
  std::string diagnostic;
};

struct PolicyEval {
  std::vector<PolicyEvalRow> rows;  // one per M0 state, in M0 order
  bool all_reached() const noexcept;
};

/// Deterministic rollout from every x0 in M0, at most `cap` steps each.
/// A state without a policy entry ends the rollout as unreached.
PolicyEval evaluate_policy(const Network& net, const ReachabilitySpec& spec,
                           const Policy& policy, std::uint64_t cap, double weight);

/// "<state bits> -> u=<bits> flip={..}" per stored state, preceded by a
/// comment naming the flip set.
void write_policy(std::ostream& out, const Policy& policy, const ActionSpace& actions);
Policy read_policy(std::istream& in, const ActionSpace& actions);

/// "x0,reached,steps,total_flips,return" with a header row.
void write_eval_csv(std::ostream& out, const PolicyEval& eval, int nodes);

}  // namespace flipctl
