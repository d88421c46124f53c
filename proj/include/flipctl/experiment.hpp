#pragma once

// Batch experiment driver behind the command-line tool: config parsing and
// the kernels / policy / oracle / replicate commands. Each command writes its
// artifacts into an output directory and returns a human-readable report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flipctl/kernel_search.hpp"
#include "flipctl/policy.hpp"

namespace flipctl {

enum class PolicyAlgorithm { Dense, Sparse, MinStep };

std::string_view to_string(PolicyAlgorithm a) noexcept;
PolicyAlgorithm parse_policy_algorithm(std::string_view text);

/// `key = value` experiment description. Every field is optional in the file;
/// commands fill in their own defaults. Relative paths are resolved against
/// the directory of the config file.
struct ExperimentConfig {
  std::optional<std::filesystem::path> network;
  std::optional<std::filesystem::path> problem;
  std::optional<SearchVariant> variant;
  std::optional<PolicyAlgorithm> algorithm;
  std::optional<std::uint64_t> episodes;
  std::optional<std::uint64_t> max_steps;
  std::optional<double> beta;
  std::optional<double> omega;
  std::optional<double> gamma;
  std::optional<double> weight;
  std::optional<double> weight_step;
  std::optional<FlipSet> flip_set;
  std::optional<std::filesystem::path> kernels_file;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::optional<std::uint64_t> eval_cap;
  bool dump_tables = false;
  unsigned threads = 1;
  std::filesystem::path out = "out";
};

/// Recognized keys: network, problem, variant, algorithm, episodes,
/// max_steps, beta, omega, gamma, w, delta_w, flipset, kernels_file, seeds,
/// eval_cap, dump_tables, threads, out. Unknown or repeated keys are errors.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

enum class Outcome {
  Ok,
  /// The search or oracle found the problem not reachable.
  Unreachable,
  /// A replication assertion failed.
  AssertionFailed,
};

struct CommandResult {
  Outcome outcome = Outcome::Ok;
  std::string report;
};

CommandResult run_kernels(const ExperimentConfig& cfg);
CommandResult run_policy(const ExperimentConfig& cfg);
CommandResult run_oracle(const ExperimentConfig& cfg);
/// `example` is example2 or example3. Uses the bundled network and problem
/// and the published parameters; episodes, max_steps, seeds, threads and out
/// from `cfg` override them when set.
CommandResult run_replicate(std::string_view example, const ExperimentConfig& cfg);

/// Training defaults per command, overridden by the config.
TrainingParams kernel_training(const ExperimentConfig& cfg);
TrainingParams policy_training(const ExperimentConfig& cfg, PolicyAlgorithm algorithm);

/// One curve row per (flip set, episode, seed).
void write_curves_csv(std::ostream& out, const std::vector<std::pair<std::uint64_t, KernelResult>>&
                                             results);

/// "kernel {1,2}" lines, one per kernel, after optional comments.
std::vector<FlipSet> read_kernels_file(const std::filesystem::path& path);

}  // namespace flipctl
