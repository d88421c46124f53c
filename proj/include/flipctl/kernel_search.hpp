#pragma once

// Minimum-cardinality flip kernels by level-wise Q-learning over subsets of
// the candidate set A.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flipctl/qlearn.hpp"

namespace flipctl {

enum class SearchVariant {
  Basic,        // dense table, zero start, uniform initial states
  Fast,         // dense table, warm start from the previous level, unresolved starts
  SmallMemory,  // sparse table, zero start, uniform initial states
  Hybrid,       // sparse table with the warm start and unresolved starts of Fast
};

std::string_view to_string(SearchVariant v) noexcept;
/// Accepts basic, fast, small-memory (or smallMemory) and hybrid.
SearchVariant parse_search_variant(std::string_view text);

struct KernelSearchParams {
  SearchVariant variant = SearchVariant::Basic;
  TrainingParams training;
  std::uint64_t seed = 0;
  /// Worker threads for the subsets of one level. Results do not depend on it.
  unsigned threads = 1;
};

/// Outcome of training on one flip set.
struct FlipSetRun {
  FlipSet flip_set;
  bool certified = false;
  /// Episode (1-based) at whose end every initial state was certified.
  std::optional<std::uint64_t> episodes_to_certify;
  /// Reachable rate after each episode; stops at certification.
  std::vector<double> curve;
  std::size_t row_count = 0;
  Storage storage = Storage::Dense;
};

struct KernelResult {
  /// All certified subsets of the smallest certifying size, in lexicographic order.
  std::vector<FlipSet> kernels;
  /// Every run performed, level by level.
  std::vector<FlipSetRun> runs;

  bool reachable() const noexcept { return !kernels.empty(); }
  /// Kernel cardinality, or -1 when no level certified.
  int cardinality() const noexcept {
    return kernels.empty() ? -1 : static_cast<int>(kernels.front().size());
  }
  const FlipSetRun* run(const FlipSet& b) const;
};

/// All k-subsets of `candidates` (sorted) in lexicographic order.
/// Throws InvalidArgument if k > |candidates| or k < 0.
std::vector<FlipSet> enumerate_subsets(const FlipSet& candidates, int k);

/// certified / |M0|; throws InvalidArgument for an empty M0 or certified > |M0|.
double reachable_rate(std::size_t certified, std::size_t initial_count);

/// Trains one flip set under the reach-only reward and checks the certificate
/// after every episode. `warm_start` supplies the previous level's tables for
/// the Fast and Hybrid variants; entries that are not subsets of `b` are
/// ignored. When `table_out` is set, the trained table is
/// moved there.
FlipSetRun train_flip_set(const Network& net, const ReachabilitySpec& spec, const FlipSet& b,
                          const KernelSearchParams& params,
                          const std::map<FlipSet, QTable>& warm_start,
                          std::optional<QTable>* table_out = nullptr);

/// Level-wise search k = 0, 1, ..., |A|. Every subset of the first level that
/// certifies anything is trained, then the search stops.
KernelResult find_kernels(const Network& net, const ReachabilitySpec& spec,
                          const FlipSet& candidates, const KernelSearchParams& params);

}  // namespace flipctl
