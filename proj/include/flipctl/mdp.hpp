#pragma once

// Episodic MDP view of a flipped Boolean control network.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "flipctl/boolnet.hpp"
#include "flipctl/problem.hpp"
#include "flipctl/rng.hpp"

namespace flipctl {

using ActionIndex = std::uint32_t;

/// Largest m + |B| for which the 2^(m+|B|) joint actions are enumerated.
inline constexpr int kMaxActionBits = 24;

/// Joint control pairs (u, flip subset of B). Action a packs the input bits
/// above |B| local flip bits: a = u << |B| | local, where B[k] (k = 0..|B|-1)
/// owns local bit |B|-1-k.
class ActionSpace {
 public:
  ActionSpace(int nodes, int inputs, FlipSet flip_set);

  int nodes() const noexcept { return nodes_; }
  int inputs() const noexcept { return inputs_; }
  const FlipSet& flip_set() const noexcept { return flip_set_; }
  std::size_t size() const noexcept { return std::size_t{1} << (inputs_ + flip_width()); }
  int flip_width() const noexcept { return static_cast<int>(flip_set_.size()); }

  /// Throws InvalidArgument if a flipped node is not in B or u does not fit.
  ActionIndex encode(Input u, FlipMask flips) const;

  Input input(ActionIndex a) const noexcept { return Input{a >> flip_width()}; }
  FlipMask flips(ActionIndex a) const noexcept {
    return local_masks_[a & ((ActionIndex{1} << flip_width()) - 1)];
  }
  int flip_count(ActionIndex a) const noexcept { return flips(a).count(); }

  /// "u=<bits> flip={i,j}"; the policy file format uses this form.
  std::string describe(ActionIndex a) const;
  /// Inverse of describe.
  ActionIndex parse_action(std::string_view text) const;

 private:
  int nodes_;
  int inputs_;
  FlipSet flip_set_;
  std::vector<FlipMask> local_masks_;
};

struct ReachOnly {
  double bonus = 100.0;
};

/// Per-flip cost `weight`; `weight_step` is the adaptive increment (unset for
/// a fixed weight).
struct FlipPenalty {
  double weight = 1.0;
  std::optional<double> weight_step;
};

using RewardMode = std::variant<ReachOnly, FlipPenalty>;

struct Transition {
  State state;
  ActionIndex action = 0;
  State next;
  double reward = 0.0;
  bool done = false;
  int flips = 0;
};

/// Reward is paid on arrival: the reach bonus and the missing-target penalty
/// both key on `t.next`, the flip cost on the action just taken.
double reward(const RewardMode& mode, const Transition& t);

/// Deterministic one-step environment. Holds references to the network and
/// spec, which must outlive it.
class Environment {
 public:
  Environment(const Network& net, const ReachabilitySpec& spec, ActionSpace actions,
              RewardMode mode);

  const Network& network() const noexcept { return *net_; }
  const ReachabilitySpec& spec() const noexcept { return *spec_; }
  const ActionSpace& actions() const noexcept { return actions_; }
  const RewardMode& reward_mode() const noexcept { return mode_; }
  void set_reward_mode(RewardMode mode);

  bool is_target(State x) const { return spec_->is_target(x); }

  /// Throws StateError when `x` is a target: episodes end on arrival.
  Transition step(State x, ActionIndex a) const;

 private:
  const Network* net_;
  const ReachabilitySpec* spec_;
  ActionSpace actions_;
  RewardMode mode_;
};

/// One episode's cursor over an Environment.
class Episode {
 public:
  Episode(const Environment& env, State start);

  State state() const noexcept { return state_; }
  bool done() const noexcept { return done_; }
  std::size_t steps() const noexcept { return steps_; }

  /// Throws StateError once the episode has reached the target set.
  Transition step(ActionIndex a);

 private:
  const Environment* env_;
  State state_;
  bool done_;
  std::size_t steps_ = 0;
};

enum class StartStrategy { Uniform, Unresolved };

/// Uniform draw from M0, or (Unresolved) from `unresolved` when it is
/// nonempty; an empty list falls back to M0.
State reset(const ReachabilitySpec& spec, StartStrategy strategy,
            std::span<const State> unresolved, Rng& rng);

/// Default episode cap 2^n - |Md|, the longest cycle-free path into Md.
/// Saturates at the largest representable value for wide networks.
std::uint64_t default_max_steps(const ReachabilitySpec& spec);

}  // namespace flipctl
