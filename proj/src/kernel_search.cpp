#include "flipctl/kernel_search.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "flipctl/error.hpp"

namespace flipctl {

std::string_view to_string(SearchVariant v) noexcept {
  switch (v) {
    case SearchVariant::Basic: return "basic";
    case SearchVariant::Fast: return "fast";
    case SearchVariant::SmallMemory: return "small-memory";
    case SearchVariant::Hybrid: return "hybrid";
  }
  return "?";
}

SearchVariant parse_search_variant(std::string_view text) {
  if (text == "basic") return SearchVariant::Basic;
  if (text == "fast") return SearchVariant::Fast;
  if (text == "small-memory" || text == "smallMemory" || text == "small_memory") {
    return SearchVariant::SmallMemory;
  }
  if (text == "hybrid") return SearchVariant::Hybrid;
  throw InvalidArgument(
      fmt::format("unknown variant '{}' (expected basic, fast, small-memory or hybrid)", text));
}

const FlipSetRun* KernelResult::run(const FlipSet& b) const {
  for (const FlipSetRun& r : runs) {
    if (r.flip_set == b) return &r;
  }
  return nullptr;
}

std::vector<FlipSet> enumerate_subsets(const FlipSet& candidates, int k) {
  const int size = static_cast<int>(candidates.size());
  if (k < 0 || k > size) {
    throw InvalidArgument(fmt::format("subset size {} outside [0,{}]", k, size));
  }
  std::vector<FlipSet> out;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    FlipSet s;
    s.reserve(idx.size());
    for (int i : idx) s.push_back(candidates[static_cast<std::size_t>(i)]);
    out.push_back(std::move(s));
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == size - k + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < k; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

double reachable_rate(std::size_t certified, std::size_t initial_count) {
  if (initial_count == 0) throw InvalidArgument("reachable rate of an empty initial set");
  if (certified > initial_count) throw InvalidArgument("more certified states than initial states");
  return static_cast<double>(certified) / static_cast<double>(initial_count);
}

namespace {

bool uses_sparse(SearchVariant v) {
  return v == SearchVariant::SmallMemory || v == SearchVariant::Hybrid;
}

bool uses_transfer(SearchVariant v) {
  return v == SearchVariant::Fast || v == SearchVariant::Hybrid;
}

}  // namespace

FlipSetRun train_flip_set(const Network& net, const ReachabilitySpec& spec, const FlipSet& b,
                          const KernelSearchParams& params,
                          const std::map<FlipSet, QTable>& warm_start,
                          std::optional<QTable>* table_out) {
  validate(params.training, /*gamma_one=*/false);
  const Storage storage = uses_sparse(params.variant) ? Storage::Sparse : Storage::Dense;
  const bool transfer = uses_transfer(params.variant);
  const StartStrategy starts = transfer ? StartStrategy::Unresolved : StartStrategy::Uniform;

  ActionSpace space(net.nodes(), net.inputs(), b);
  const std::size_t action_count = space.size();
  const Environment env(net, spec, std::move(space), ReachOnly{});

  std::vector<TransferSource> sources;
  for (const auto& [subset, table] : warm_start) {
    if (is_subset(subset, b)) sources.push_back({subset, &table});
  }
  QTable q = transfer ? transfer_init(sources, env.actions(), storage, spec.initial())
             : storage == Storage::Dense ? QTable::dense(net.nodes(), action_count)
                                         : QTable::sparse(net.nodes(), action_count);
  if (storage == Storage::Sparse) {
    for (State x0 : spec.initial()) q.ensure_row(x0);
  }

  Rng rng(derive_seed(params.seed, make_flip_mask(b, net.nodes()).bits));
  const LearningSchedule lr(params.training.beta, params.training.omega);
  const ExplorationSchedule explore(params.training.episodes);
  const std::uint64_t cap = effective_max_steps(params.training, spec);

  FlipSetRun run;
  run.flip_set = b;
  run.storage = storage;
  std::vector<State> unresolved = positive_q_reachable(q, spec).unresolved;
  for (std::uint64_t ep = 0; ep < params.training.episodes; ++ep) {
    const State start = reset(spec, starts, unresolved, rng);
    run_episode(q, env, start, lr.rate(ep + 1), explore.epsilon(ep), params.training.gamma, cap,
                rng);
    Certificate cert = positive_q_reachable(q, spec);
    run.curve.push_back(reachable_rate(cert.certified, spec.initial().size()));
    if (cert.all_reachable) {
      run.certified = true;
      run.episodes_to_certify = ep + 1;
      break;
    }
    unresolved = std::move(cert.unresolved);
  }
  run.row_count = q.row_count();
  if (table_out) *table_out = std::move(q);
  return run;
}

KernelResult find_kernels(const Network& net, const ReachabilitySpec& spec,
                          const FlipSet& candidates, const KernelSearchParams& params) {
  validate(params.training, /*gamma_one=*/false);
  if (!std::is_sorted(candidates.begin(), candidates.end())) {
    throw InvalidArgument("candidate flip set must be sorted");
  }
  (void)make_flip_mask(candidates, net.nodes());
  const bool transfer = uses_transfer(params.variant);

  KernelResult result;
  std::map<FlipSet, QTable> previous;
  for (int k = 0; k <= static_cast<int>(candidates.size()); ++k) {
    const std::vector<FlipSet> level = enumerate_subsets(candidates, k);
    std::vector<FlipSetRun> runs(level.size());
    std::vector<std::optional<QTable>> tables(level.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (std::size_t i = next++; i < level.size(); i = next++) {
        try {
          runs[i] = train_flip_set(net, spec, level[i], params, previous,
                                   transfer ? &tables[i] : nullptr);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    const unsigned workers =
        std::clamp<unsigned>(params.threads, 1, static_cast<unsigned>(level.size()));
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::map<FlipSet, QTable> current;
    for (std::size_t i = 0; i < level.size(); ++i) {
      if (runs[i].certified) result.kernels.push_back(level[i]);
      if (transfer) current.emplace(level[i], std::move(*tables[i]));
      result.runs.push_back(std::move(runs[i]));
    }
    // Only the level just finished feeds the next warm start.
    previous = std::move(current);
    if (!result.kernels.empty()) break;
  }
  return result;
}

}  // namespace flipctl
