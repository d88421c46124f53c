#include "flipctl/policy.hpp"

#include <fmt/format.h>

#include <cmath>
#include <istream>
#include <ostream>

#include "flipctl/error.hpp"
#include "text_util.hpp"

namespace flipctl {

double weight_bound(const WeightBound& bound) {
  struct Visitor {
    double operator()(const LongestPathBound& b) const { return static_cast<double>(b.length); }
    double operator()(const StateCountBound& b) const {
      if (b.nodes < 1 || b.nodes > kMaxNodes) throw InvalidArgument("node count out of range");
      return std::ldexp(1.0, b.nodes) - static_cast<double>(b.targets);
    }
    double operator()(const RowCountBound& b) const { return static_cast<double>(b.rows); }
  };
  return std::visit(Visitor{}, bound);
}

namespace {

PolicyRun train_penalty(const Network& net, const ReachabilitySpec& spec, const FlipSet& flip_set,
                        const PolicyParams& params, Storage storage) {
  validate(params.training, /*gamma_one=*/true);
  const FlipPenalty initial{params.weight, storage == Storage::Sparse ? params.weight_step
                                                                       : std::nullopt};
  Environment env(net, spec, ActionSpace(net.nodes(), net.inputs(), flip_set), initial);
  const std::size_t actions = env.actions().size();
  QTable q = storage == Storage::Dense ? QTable::dense(net.nodes(), actions)
                                       : QTable::sparse(net.nodes(), actions);
  if (storage == Storage::Sparse) {
    for (State x0 : spec.initial()) q.ensure_row(x0);
  }

  Rng rng(derive_seed(params.seed, make_flip_mask(flip_set, net.nodes()).bits));
  const LearningSchedule lr(params.training.beta, params.training.omega);
  const ExplorationSchedule explore(params.training.episodes);
  const std::uint64_t cap = effective_max_steps(params.training, spec);

  double w = params.weight;
  std::size_t bumps = 0;
  std::uint64_t successes = 0;
  for (std::uint64_t ep = 0; ep < params.training.episodes; ++ep) {
    if (initial.weight_step) {
      const double before = w;
      while (w <= static_cast<double>(q.row_count())) {
        w += *initial.weight_step;
        ++bumps;
      }
      if (w != before) env.set_reward_mode(FlipPenalty{w, initial.weight_step});
    }
    const State start = reset(spec, StartStrategy::Uniform, {}, rng);
    const EpisodeOutcome outcome =
        run_episode(q, env, start, lr.rate(ep + 1), explore.epsilon(ep), 1.0, cap, rng);
    if (outcome.reached) ++successes;
  }
  Policy policy = extract_policy(q, flip_set, &spec);
  return PolicyRun{std::move(policy), std::move(q), w, bumps, successes};
}

}  // namespace

PolicyRun learn_min_flip_policy(const Network& net, const ReachabilitySpec& spec,
                                const FlipSet& flip_set, const PolicyParams& params) {
  return train_penalty(net, spec, flip_set, params, Storage::Dense);
}

PolicyRun learn_min_flip_policy_sparse(const Network& net, const ReachabilitySpec& spec,
                                       const FlipSet& flip_set, const PolicyParams& params) {
  return train_penalty(net, spec, flip_set, params, Storage::Sparse);
}

PolicyRun learn_min_step_policy(const Network& net, const ReachabilitySpec& spec,
                                const FlipSet& flip_set, const TrainingParams& training,
                                std::uint64_t seed, Storage storage) {
  validate(training, /*gamma_one=*/false);
  Environment env(net, spec, ActionSpace(net.nodes(), net.inputs(), flip_set), ReachOnly{});
  const std::size_t actions = env.actions().size();
  QTable q = storage == Storage::Dense ? QTable::dense(net.nodes(), actions)
                                       : QTable::sparse(net.nodes(), actions);
  if (storage == Storage::Sparse) {
    for (State x0 : spec.initial()) q.ensure_row(x0);
  }
  Rng rng(derive_seed(seed, make_flip_mask(flip_set, net.nodes()).bits));
  const LearningSchedule lr(training.beta, training.omega);
  const ExplorationSchedule explore(training.episodes);
  const std::uint64_t cap = effective_max_steps(training, spec);
  std::uint64_t successes = 0;
  for (std::uint64_t ep = 0; ep < training.episodes; ++ep) {
    const State start = reset(spec, StartStrategy::Uniform, {}, rng);
    if (run_episode(q, env, start, lr.rate(ep + 1), explore.epsilon(ep), training.gamma, cap, rng)
            .reached) {
      ++successes;
    }
  }
  Policy policy = extract_policy(q, flip_set, &spec);
  return PolicyRun{std::move(policy), std::move(q), 0.0, 0, successes};
}

bool PolicyEval::all_reached() const noexcept {
  for (const PolicyEvalRow& r : rows) {
    if (!r.reached) return false;
  }
  return true;
}

PolicyEval evaluate_policy(const Network& net, const ReachabilitySpec& spec,
                           const Policy& policy, std::uint64_t cap, double weight) {
  if (cap == 0) throw InvalidArgument("evaluation cap must be at least 1");
  const ActionSpace space(net.nodes(), net.inputs(), policy.flip_set);
  PolicyEval eval;
  for (State x0 : spec.initial()) {
    PolicyEvalRow row;
    row.x0 = x0;
    State x = x0;
    while (true) {
      if (spec.is_target(x)) {
        row.reached = true;
        break;
      }
      if (row.steps >= cap) {
        row.diagnostic = fmt::format("step cap {} reached", cap);
        break;
      }
      const auto a = policy.action(x);
      if (!a || *a >= space.size()) {
        row.diagnostic = fmt::format("no policy entry for state {}", to_string(x, net.nodes()));
        break;
      }
      const FlipMask flips = space.flips(*a);
      x = net.next_flipped(x, space.input(*a), flips);
      row.total_flips += static_cast<std::uint64_t>(flips.count());
      ++row.steps;
    }
    row.ret = -weight * static_cast<double>(row.total_flips) - static_cast<double>(row.steps);
    eval.rows.push_back(std::move(row));
  }
  return eval;
}

void write_policy(std::ostream& out, const Policy& policy, const ActionSpace& actions) {
  out << "# flip set " << format_flip_set(policy.flip_set) << '\n';
  for (const auto& [bits, a] : policy.actions) {
    out << format_bits(bits, actions.nodes()) << " -> " << actions.describe(a) << '\n';
  }
}

Policy read_policy(std::istream& in, const ActionSpace& actions) {
  Policy policy;
  policy.flip_set = actions.flip_set();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(strip_comment(line));
    if (text.empty()) continue;
    const auto arrow = text.find("->");
    if (arrow == std::string_view::npos) throw ParseError("expected '<state> -> <action>'", line_no);
    try {
      const State x = parse_state(trim(text.substr(0, arrow)), actions.nodes());
      const ActionIndex a = actions.parse_action(trim(text.substr(arrow + 2)));
      if (!policy.actions.emplace(x.bits, a).second) {
        throw ParseError("duplicate policy entry", line_no);
      }
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return policy;
}

void write_eval_csv(std::ostream& out, const PolicyEval& eval, int nodes) {
  out << "x0,reached,steps,total_flips,return\n";
  for (const PolicyEvalRow& r : eval.rows) {
    out << fmt::format("{},{},{},{},{}\n", to_string(r.x0, nodes), r.reached ? 1 : 0, r.steps,
                       r.total_flips, r.ret);
  }
}

}  // namespace flipctl
