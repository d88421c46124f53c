#include "flipctl/qlearn.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "flipctl/error.hpp"
#include "text_util.hpp"

namespace flipctl {

QTable::QTable(Storage storage, int nodes, std::size_t actions)
    : storage_(storage), nodes_(nodes), actions_(actions), zero_row_(actions, 0.0) {
  if (actions_ == 0 || !std::has_single_bit(actions_)) {
    throw InvalidArgument("action count must be a power of two");
  }
  if (nodes_ < 1 || nodes_ > kMaxNodes) {
    throw InvalidArgument(fmt::format("node count {} outside [1,{}]", nodes_, kMaxNodes));
  }
}

QTable QTable::dense(int nodes, std::size_t actions) {
  QTable q(Storage::Dense, nodes, actions);
  const int bits = nodes + std::countr_zero(actions);
  if (bits > kMaxDenseBits) {
    throw ResourceRefused(fmt::format(
        "dense table needs 2^{} cells (n + m + |B| = {} > {}); use small-memory storage", bits,
        bits, kMaxDenseBits));
  }
  q.values_.assign(std::size_t{1} << bits, 0.0);
  return q;
}

QTable QTable::sparse(int nodes, std::size_t actions) {
  return QTable(Storage::Sparse, nodes, actions);
}

bool QTable::has_row(State x) const {
  if (storage_ == Storage::Dense) return (x.bits >> nodes_) == 0;
  return sparse_rows_.contains(x.bits);
}

std::span<const double> QTable::row(State x) const {
  if (storage_ == Storage::Dense) {
    return {values_.data() + x.bits * actions_, actions_};
  }
  const auto it = sparse_rows_.find(x.bits);
  if (it == sparse_rows_.end()) return zero_row_;
  return {values_.data() + it->second, actions_};
}

std::span<double> QTable::row_mut(State x) {
  if (storage_ == Storage::Dense) {
    return {values_.data() + x.bits * actions_, actions_};
  }
  const auto [it, inserted] = sparse_rows_.try_emplace(x.bits, values_.size());
  if (inserted) values_.resize(values_.size() + actions_, 0.0);
  return {values_.data() + it->second, actions_};
}

double QTable::max_value(State x) const {
  const auto r = row(x);
  return *std::max_element(r.begin(), r.end());
}

ActionIndex QTable::greedy_action(State x) const {
  const auto r = row(x);
  // max_element returns the first maximizer.
  return static_cast<ActionIndex>(std::max_element(r.begin(), r.end()) - r.begin());
}

std::size_t QTable::row_count() const noexcept {
  if (storage_ == Storage::Dense) return std::size_t{1} << nodes_;
  return sparse_rows_.size();
}

std::vector<State> QTable::stored_states() const {
  std::vector<State> out;
  if (storage_ == Storage::Dense) {
    out.reserve(row_count());
    for (std::uint64_t s = 0; s < row_count(); ++s) out.push_back(State{s});
    return out;
  }
  out.reserve(sparse_rows_.size());
  for (const auto& [bits, offset] : sparse_rows_) out.push_back(State{bits});
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

LearningSchedule::LearningSchedule(double beta, double omega) : beta_(beta), omega_(omega) {
  if (!(beta_ > 0)) throw InvalidArgument("learning-rate beta must be positive");
  if (!(omega_ > 0.5 && omega_ <= 1.0)) {
    throw InvalidArgument("learning-rate omega must lie in (0.5, 1]");
  }
}

double LearningSchedule::rate(std::uint64_t episode) const {
  if (episode == 0) throw InvalidArgument("learning-rate episodes count from 1");
  return std::min(1.0, std::pow(beta_ * static_cast<double>(episode), -omega_));
}

ExplorationSchedule::ExplorationSchedule(std::uint64_t episodes) : episodes_(episodes) {
  if (episodes_ == 0) throw InvalidArgument("episode count must be at least 1");
}

double ExplorationSchedule::epsilon(std::uint64_t episode) const {
  if (episode > episodes_) {
    throw InvalidArgument(fmt::format("episode {} beyond schedule length {}", episode, episodes_));
  }
  return 1.0 - 0.99 * static_cast<double>(episode) / static_cast<double>(episodes_);
}

void validate(const TrainingParams& params, bool gamma_one) {
  if (params.episodes == 0) throw InvalidArgument("episode count N must be at least 1");
  (void)LearningSchedule(params.beta, params.omega);
  if (gamma_one) {
    if (params.gamma != 1.0) throw InvalidArgument("flip-penalty learning requires gamma = 1");
  } else if (!(params.gamma > 0.0 && params.gamma < 1.0)) {
    throw InvalidArgument("discount gamma must lie in (0, 1)");
  }
}

std::uint64_t effective_max_steps(const TrainingParams& params, const ReachabilitySpec& spec) {
  return params.max_steps != 0 ? params.max_steps : default_max_steps(spec);
}

ActionIndex select_action(const QTable& q, State x, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<ActionIndex> pick(0, static_cast<ActionIndex>(q.actions() - 1));
    return pick(rng);
  }
  return q.greedy_action(x);
}

void td_update(QTable& q, const Transition& t, double alpha, double gamma) {
  const double bootstrap = t.done ? 0.0 : q.max_value(t.next);
  auto r = q.row_mut(t.state);
  double& cell = r[t.action];
  cell = (1.0 - alpha) * cell + alpha * (t.reward + gamma * bootstrap);
}

QTable transfer_init(const std::map<FlipSet, QTable>& previous, const ActionSpace& target,
                     Storage storage, std::span<const State> initial_rows) {
  std::vector<TransferSource> sources;
  for (const auto& [subset, table] : previous) sources.push_back({subset, &table});
  return transfer_init(sources, target, storage, initial_rows);
}

QTable transfer_init(std::span<const TransferSource> previous, const ActionSpace& target,
                     Storage storage, std::span<const State> initial_rows) {
  const int n = target.nodes();
  QTable out = storage == Storage::Dense ? QTable::dense(n, target.size())
                                         : QTable::sparse(n, target.size());
  struct Source {
    const QTable* table;
    std::vector<ActionIndex> embed;  // source action -> target action
  };
  std::vector<Source> sources;
  for (const auto& [subset, borrowed] : previous) {
    const QTable& table = *borrowed;
    if (!is_subset(subset, target.flip_set())) {
      throw InvalidArgument(fmt::format("transfer source {} is not inside flip set {}",
                                        format_flip_set(subset),
                                        format_flip_set(target.flip_set())));
    }
    const ActionSpace space(n, target.inputs(), subset);
    if (table.actions() != space.size() || table.nodes() != n) {
      throw InvalidArgument(
          fmt::format("transfer source {} has mismatched dimensions", format_flip_set(subset)));
    }
    Source src{&table, {}};
    src.embed.resize(space.size());
    for (ActionIndex a = 0; a < space.size(); ++a) {
      src.embed[a] = target.encode(space.input(a), space.flips(a));
    }
    sources.push_back(std::move(src));
  }

  std::vector<State> states;
  if (storage == Storage::Dense) {
    states = out.stored_states();
  } else {
    for (const Source& s : sources) {
      const auto stored = s.table->stored_states();
      states.insert(states.end(), stored.begin(), stored.end());
    }
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
  }

  std::vector<double> row(target.size());
  std::vector<char> covered(target.size());
  for (State x : states) {
    std::fill(row.begin(), row.end(), 0.0);
    std::fill(covered.begin(), covered.end(), 0);
    bool any = false;
    for (const Source& s : sources) {
      if (!s.table->has_row(x)) continue;
      const auto src_row = s.table->row(x);
      for (std::size_t a = 0; a < src_row.size(); ++a) {
        const ActionIndex dst = s.embed[a];
        if (!covered[dst] || src_row[a] > row[dst]) row[dst] = src_row[a];
        covered[dst] = 1;
        any = true;
      }
    }
    if (!any && storage == Storage::Dense) continue;
    auto dst_row = out.row_mut(x);
    std::copy(row.begin(), row.end(), dst_row.begin());
  }
  if (storage == Storage::Sparse) {
    for (State x : initial_rows) out.ensure_row(x);
  }
  return out;
}

Certificate positive_q_reachable(const QTable& q, const ReachabilitySpec& spec) {
  Certificate c;
  for (State x0 : spec.initial()) {
    if (spec.is_target(x0) || q.max_value(x0) > 0.0) {
      ++c.certified;
    } else {
      c.unresolved.push_back(x0);
    }
  }
  c.all_reachable = c.unresolved.empty();
  return c;
}

Policy extract_policy(const QTable& q, const FlipSet& flip_set, const ReachabilitySpec* spec) {
  Policy p;
  p.flip_set = flip_set;
  for (State x : q.stored_states()) {
    if (spec && spec->is_target(x)) continue;
    p.actions.emplace_hint(p.actions.end(), x.bits, q.greedy_action(x));
  }
  return p;
}

EpisodeOutcome run_episode(QTable& q, const Environment& env, State start, double alpha,
                           double epsilon, double gamma, std::uint64_t max_steps, Rng& rng) {
  EpisodeOutcome outcome;
  State x = start;
  if (env.is_target(x)) {
    outcome.reached = true;
    return outcome;
  }
  const bool sparse = q.storage() == Storage::Sparse;
  if (sparse) q.ensure_row(x);
  while (outcome.steps < max_steps) {
    const ActionIndex a = select_action(q, x, epsilon, rng);
    const Transition t = env.step(x, a);
    if (sparse && !t.done) q.ensure_row(t.next);
    td_update(q, t, alpha, gamma);
    ++outcome.steps;
    x = t.next;
    if (t.done) {
      outcome.reached = true;
      break;
    }
  }
  return outcome;
}

void write_snapshot(std::ostream& out, const QTable& q) {
  for (State x : q.stored_states()) {
    const auto r = q.row(x);
    for (std::size_t a = 0; a < r.size(); ++a) {
      out << fmt::format("{} {} {:.12g}\n", x.bits, a, r[a]);
    }
  }
}

QTable read_snapshot(std::istream& in, Storage storage, int nodes, std::size_t actions) {
  QTable q = storage == Storage::Dense ? QTable::dense(nodes, actions)
                                       : QTable::sparse(nodes, actions);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(strip_comment(line));
    if (tokens.empty()) continue;
    if (tokens.size() != 3) throw ParseError("expected 'state action value'", line_no);
    const auto state = parse_number<std::uint64_t>(tokens[0]);
    const auto action = parse_number<std::size_t>(tokens[1]);
    const auto value = parse_number<double>(tokens[2]);
    if (!state || !action || !value) throw ParseError("malformed snapshot entry", line_no);
    if ((*state >> nodes) != 0 || *action >= actions) {
      throw ParseError("snapshot entry outside table dimensions", line_no);
    }
    q.row_mut(State{*state})[*action] = *value;
  }
  return q;
}

}  // namespace flipctl
