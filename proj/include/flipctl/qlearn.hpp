#pragma once

// Tabular Q-learning: value storage, schedules, epsilon-greedy selection,
// temporal-difference updates, warm starts from smaller flip sets and the
// positive-value reachability certificate.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "flipctl/mdp.hpp"

namespace flipctl {

enum class Storage { Dense, Sparse };

/// Largest n + m + |B| for which a dense table is allocated.
inline constexpr int kMaxDenseBits = 24;

/// Action-value table. Dense tables hold all 2^n rows; sparse tables grow a
/// row the first time a state is touched, and a missing row reads as zeros.
///
/// Spans returned by row() and row_mut() are invalidated by any call that
/// adds a row.
class QTable {
 public:
  /// Throws ResourceRefused when n + log2(actions) exceeds kMaxDenseBits.
  static QTable dense(int nodes, std::size_t actions);
  static QTable sparse(int nodes, std::size_t actions);

  Storage storage() const noexcept { return storage_; }
  int nodes() const noexcept { return nodes_; }
  std::size_t actions() const noexcept { return actions_; }

  bool has_row(State x) const;
  std::span<const double> row(State x) const;
  /// Creates the row (zero-filled) if the table is sparse and it is missing.
  std::span<double> row_mut(State x);
  void ensure_row(State x) { (void)row_mut(x); }

  double value(State x, ActionIndex a) const { return row(x)[a]; }
  double max_value(State x) const;
  /// Lowest-index maximizer of the row.
  ActionIndex greedy_action(State x) const;

  /// Dense: 2^n. Sparse: rows created so far.
  std::size_t row_count() const noexcept;
  /// States with a stored row, ascending.
  std::vector<State> stored_states() const;

 private:
  QTable(Storage storage, int nodes, std::size_t actions);

  Storage storage_;
  int nodes_;
  std::size_t actions_;
  std::vector<double> values_;
  std::unordered_map<std::uint64_t, std::size_t> sparse_rows_;
  std::vector<double> zero_row_;
};

/// alpha(ep) = min{1, (beta * ep)^-omega}; Robbins-Monro for omega in (0.5, 1].
class LearningSchedule {
 public:
  LearningSchedule(double beta, double omega);
  double beta() const noexcept { return beta_; }
  double omega() const noexcept { return omega_; }
  /// Episodes count from 1; throws InvalidArgument for 0.
  double rate(std::uint64_t episode) const;

 private:
  double beta_;
  double omega_;
};

/// epsilon(ep) = 1 - 0.99 ep / N, linear from 1 down to 0.01.
class ExplorationSchedule {
 public:
  explicit ExplorationSchedule(std::uint64_t episodes);
  std::uint64_t episodes() const noexcept { return episodes_; }
  double epsilon(std::uint64_t episode) const;

 private:
  std::uint64_t episodes_;
};

/// Episode budget and schedule parameters shared by every learner.
struct TrainingParams {
  std::uint64_t episodes = 100;
  /// Per-episode step cap; 0 selects default_max_steps(spec).
  std::uint64_t max_steps = 0;
  double beta = 1.0;
  double omega = 0.6;
  double gamma = 0.99;
};

/// Throws InvalidArgument for out-of-range fields. `gamma_one` demands
/// gamma == 1 (flip-penalty learning); otherwise gamma must lie in (0, 1).
void validate(const TrainingParams& params, bool gamma_one);
std::uint64_t effective_max_steps(const TrainingParams& params, const ReachabilitySpec& spec);

/// Greedy with probability 1 - epsilon, uniform otherwise. Always consumes one
/// uniform draw for the coin, and one more when exploring.
ActionIndex select_action(const QTable& q, State x, double epsilon, Rng& rng);

/// Q(x,a) <- (1-alpha) Q(x,a) + alpha (r + gamma max_a' Q(x',a')), with a zero
/// bootstrap when x' is terminal.
void td_update(QTable& q, const Transition& t, double alpha, double gamma);

/// Warm start for flip set B from tables learned on subsets b of B. A cell
/// (x, a) whose flip subset fits in some b takes the maximum of Q^b at the
/// same (u, flip subset); all other cells are zero. Sparse results also get
/// rows for `initial_rows`. Throws InvalidArgument if some b is not inside B.
QTable transfer_init(const std::map<FlipSet, QTable>& previous, const ActionSpace& target,
                     Storage storage, std::span<const State> initial_rows = {});

struct TransferSource {
  FlipSet flip_set;
  const QTable* table;
};
/// Same as above over borrowed tables.
QTable transfer_init(std::span<const TransferSource> previous, const ActionSpace& target,
                     Storage storage, std::span<const State> initial_rows = {});

struct Certificate {
  bool all_reachable = false;
  /// Initial states with a positive row maximum, or already in Md.
  std::size_t certified = 0;
  /// Initial states outside Md whose row maximum is not positive.
  std::vector<State> unresolved;
};

/// Positive-value reachability certificate over M0. Sound for tables trained
/// from zero (or transferred) initialization under the reach-only reward.
Certificate positive_q_reachable(const QTable& q, const ReachabilitySpec& spec);

/// Deterministic state -> action map.
struct Policy {
  FlipSet flip_set;
  std::map<std::uint64_t, ActionIndex> actions;

  std::optional<ActionIndex> action(State x) const {
    const auto it = actions.find(x.bits);
    if (it == actions.end()) return std::nullopt;
    return it->second;
  }
};

/// Greedy action of every stored row, skipping target states when `spec` is given.
Policy extract_policy(const QTable& q, const FlipSet& flip_set,
                      const ReachabilitySpec* spec = nullptr);

struct EpisodeOutcome {
  std::uint64_t steps = 0;
  bool reached = false;
};

/// One training episode from `start`: epsilon-greedy actions, one TD update per
/// step, stopping on arrival in Md or after `max_steps` steps. Sparse tables
/// get a row for every non-target successor before it is used for
/// bootstrapping; target rows are never read, so they are never stored.
EpisodeOutcome run_episode(QTable& q, const Environment& env, State start, double alpha,
                           double epsilon, double gamma, std::uint64_t max_steps, Rng& rng);

/// "stateIndex actionIndex value" lines sorted by state then action, values
/// with 12 significant digits.
void write_snapshot(std::ostream& out, const QTable& q);
QTable read_snapshot(std::istream& in, Storage storage, int nodes, std::size_t actions);

}  // namespace flipctl
