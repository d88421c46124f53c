#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "flipctl/boolnet.hpp"

namespace flipctl {

/// Sorted, duplicate-free list of 1-based node indices.
using FlipSet = std::vector<int>;

/// "{1,2,6}"; the empty set prints as "{}".
std::string format_flip_set(const FlipSet& set);
/// Accepts "{1,2}", "1,2", "1 2" or "{}". Result is sorted and deduplicated.
FlipSet parse_flip_set(std::string_view text);
/// True iff every element of `inner` is in `outer` (both sorted).
bool is_subset(const FlipSet& inner, const FlipSet& outer);

/// Initial and target subsets of the state space. Both are nonempty and stored
/// sorted without duplicates.
class ReachabilitySpec {
 public:
  ReachabilitySpec(int nodes, std::vector<State> initial, std::vector<State> targets);

  int nodes() const noexcept { return nodes_; }
  const std::vector<State>& initial() const noexcept { return initial_; }
  const std::vector<State>& targets() const noexcept { return targets_; }
  bool is_target(State x) const { return target_lookup_.contains(x.bits); }
  bool is_initial(State x) const;

 private:
  int nodes_;
  std::vector<State> initial_;
  std::vector<State> targets_;
  std::unordered_set<std::uint64_t> target_lookup_;
};

/// A reachability problem: which states to steer where, which nodes may be
/// flipped, and optionally a declared decomposition into independent blocks.
struct Problem {
  ReachabilitySpec spec;
  FlipSet flip_candidates;
  /// Node groups whose updates only read nodes of their own group. Only the
  /// block-decomposed oracle uses this, and only when it is declared.
  std::vector<FlipSet> blocks;
};

/// Problem file format:
///
///   Md = {001, ...}
///   M0 = {010, ...}        or  M0 = complement(Md)
///   A  = {1, 2, 3}
///   blocks = {1-3, 4-6}    (optional)
///
/// Binary strings have one character per node, x1 first. A set may span
/// several lines. `#` starts a comment.
Problem parse_problem(std::string_view text, const Network& net);
Problem load_problem(const std::filesystem::path& path, const Network& net);

/// Largest node count for which complement(Md) may be materialized.
inline constexpr int kMaxEnumeratedNodes = 20;

}  // namespace flipctl
