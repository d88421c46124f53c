#pragma once

// Helpers shared by the experiment commands and the replication pipelines.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flipctl/experiment.hpp"
#include "flipctl/oracle.hpp"

namespace flipctl::detail {

void write_file(const std::filesystem::path& path, std::string_view content);
void prepare_dir(const std::filesystem::path& dir);

std::string kernel_list(const std::vector<FlipSet>& kernels);
bool curves_monotone(const KernelResult& r);

std::string mean_curves_csv(const std::vector<std::pair<std::uint64_t, KernelResult>>& results);
std::string runs_csv(const std::vector<std::pair<std::uint64_t, KernelResult>>& results);
std::string kernels_txt(std::string_view variant,
                        const std::vector<std::pair<std::uint64_t, KernelResult>>& results,
                        bool* unanimous);

/// Exact (flips, steps) per M0 state when an oracle applies; `source` is
/// empty when neither the exhaustive nor the block oracle can run.
struct OracleCosts {
  std::string source;
  std::vector<std::optional<PathCost>> costs;
};
OracleCosts oracle_costs(const Network& net, const Problem& problem, const FlipSet& b);

std::string optimality_csv(const PolicyEval& eval, const OracleCosts& oracle, int nodes,
                           std::size_t* flips_optimal, std::size_t* fully_optimal);

}  // namespace flipctl::detail
