#include "flipctl/mdp.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>

#include "flipctl/error.hpp"
#include "text_util.hpp"

namespace flipctl {

ActionSpace::ActionSpace(int nodes, int inputs, FlipSet flip_set)
    : nodes_(nodes), inputs_(inputs), flip_set_(std::move(flip_set)) {
  if (!std::is_sorted(flip_set_.begin(), flip_set_.end()) ||
      std::adjacent_find(flip_set_.begin(), flip_set_.end()) != flip_set_.end()) {
    throw InvalidArgument("flip set must be sorted without duplicates");
  }
  for (int node : flip_set_) {
    if (node < 1 || node > nodes_) {
      throw InvalidArgument(fmt::format("flip index {} out of range [1,{}]", node, nodes_));
    }
  }
  if (inputs_ + flip_width() > kMaxActionBits) {
    throw ResourceRefused(fmt::format("action space 2^({}+{}) exceeds the limit 2^{}", inputs_,
                                      flip_width(), kMaxActionBits));
  }
  const std::size_t patterns = std::size_t{1} << flip_width();
  local_masks_.resize(patterns);
  for (std::size_t local = 0; local < patterns; ++local) {
    FlipMask mask;
    for (int k = 0; k < flip_width(); ++k) {
      if (local & (std::size_t{1} << (flip_width() - 1 - k))) {
        mask.bits |= entry_bit(flip_set_[static_cast<std::size_t>(k)], nodes_);
      }
    }
    local_masks_[local] = mask;
  }
}

ActionIndex ActionSpace::encode(Input u, FlipMask flips) const {
  if (u.bits & ~width_mask(inputs_)) {
    throw InvalidArgument(fmt::format("input has bits beyond {} inputs", inputs_));
  }
  ActionIndex local = 0;
  std::uint64_t remaining = flips.bits;
  for (int k = 0; k < flip_width(); ++k) {
    const std::uint64_t bit = entry_bit(flip_set_[static_cast<std::size_t>(k)], nodes_);
    if (remaining & bit) {
      local |= ActionIndex{1} << (flip_width() - 1 - k);
      remaining &= ~bit;
    }
  }
  if (remaining != 0) {
    throw InvalidArgument(fmt::format("flip {} is not inside flip set {}",
                                      format_flip_set(flip_nodes(FlipMask{remaining}, nodes_)),
                                      format_flip_set(flip_set_)));
  }
  return static_cast<ActionIndex>(u.bits << flip_width()) | local;
}

std::string ActionSpace::describe(ActionIndex a) const {
  return fmt::format("u={} flip={}", format_bits(input(a).bits, inputs_),
                     format_flip_set(flip_nodes(flips(a), nodes_)));
}

ActionIndex ActionSpace::parse_action(std::string_view text) const {
  const auto tokens = split_ws(text);
  if (tokens.size() != 2 || !tokens[0].starts_with("u=") || !tokens[1].starts_with("flip=")) {
    throw InvalidArgument(fmt::format("expected 'u=<bits> flip={{...}}', got '{}'", text));
  }
  const Input u{parse_bits(tokens[0].substr(2), inputs_)};
  const FlipSet nodes = parse_flip_set(tokens[1].substr(5));
  return encode(u, make_flip_mask(nodes, nodes_));
}

double reward(const RewardMode& mode, const Transition& t) {
  struct Visitor {
    const Transition& t;
    double operator()(const ReachOnly& r) const { return t.done ? r.bonus : 0.0; }
    double operator()(const FlipPenalty& p) const {
      const double cost = -p.weight * t.flips;
      return t.done ? cost : cost - 1.0;
    }
  };
  return std::visit(Visitor{t}, mode);
}

namespace {

void validate_mode(const RewardMode& mode) {
  if (const auto* p = std::get_if<FlipPenalty>(&mode)) {
    if (!(p->weight > 0)) throw InvalidArgument("flip weight w must be positive");
    if (p->weight_step && !(*p->weight_step > 0)) {
      throw InvalidArgument("weight increment must be positive");
    }
  }
}

}  // namespace

Environment::Environment(const Network& net, const ReachabilitySpec& spec, ActionSpace actions,
                         RewardMode mode)
    : net_(&net), spec_(&spec), actions_(std::move(actions)), mode_(mode) {
  if (spec.nodes() != net.nodes() || actions_.nodes() != net.nodes() ||
      actions_.inputs() != net.inputs()) {
    throw InvalidArgument("network, spec and action space dimensions disagree");
  }
  validate_mode(mode_);
}

void Environment::set_reward_mode(RewardMode mode) {
  validate_mode(mode);
  mode_ = mode;
}

Transition Environment::step(State x, ActionIndex a) const {
  if (is_target(x)) throw StateError("step from a target state: the episode has ended");
  if (a >= actions_.size()) {
    throw InvalidArgument(fmt::format("action {} outside [0,{})", a, actions_.size()));
  }
  if (x.bits & ~width_mask(net_->nodes())) {
    throw InvalidArgument(fmt::format("state has bits beyond {} nodes", net_->nodes()));
  }
  Transition t;
  t.state = x;
  t.action = a;
  const FlipMask flips = actions_.flips(a);
  t.next = net_->next_flipped(x, actions_.input(a), flips);
  t.flips = flips.count();
  t.done = is_target(t.next);
  t.reward = flipctl::reward(mode_, t);
  return t;
}

Episode::Episode(const Environment& env, State start)
    : env_(&env), state_(start), done_(env.is_target(start)) {}

Transition Episode::step(ActionIndex a) {
  if (done_) throw StateError("episode already reached the target set");
  Transition t = env_->step(state_, a);
  state_ = t.next;
  done_ = t.done;
  ++steps_;
  return t;
}

State reset(const ReachabilitySpec& spec, StartStrategy strategy,
            std::span<const State> unresolved, Rng& rng) {
  if (strategy == StartStrategy::Unresolved && !unresolved.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, unresolved.size() - 1);
    return unresolved[pick(rng)];
  }
  const auto& initial = spec.initial();
  if (initial.empty()) throw InvalidArgument("initial set M0 is empty");
  std::uniform_int_distribution<std::size_t> pick(0, initial.size() - 1);
  return initial[pick(rng)];
}

std::uint64_t default_max_steps(const ReachabilitySpec& spec) {
  if (spec.nodes() >= 64) return std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t states = std::uint64_t{1} << spec.nodes();
  return std::max<std::uint64_t>(1, states - spec.targets().size());
}

}  // namespace flipctl
