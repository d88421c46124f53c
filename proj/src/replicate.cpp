#include <fmt/format.h>

#include <algorithm>
#include <sstream>

#include "experiment_internal.hpp"
#include "flipctl/error.hpp"
#include "flipctl/experiment.hpp"
#include "flipctl/oracle.hpp"
#include "flipctl_bundled_data.hpp"

namespace flipctl {

namespace {

struct Assertion {
  std::string name;
  bool pass;
  std::string detail;
};

struct Replication {
  std::vector<Assertion> checks;
  std::string log;

  void check(std::string name, bool pass, std::string detail = {}) {
    checks.push_back({std::move(name), pass, std::move(detail)});
  }

  CommandResult finish(const std::filesystem::path& out) {
    std::string text = log;
    text += "\nassertions:\n";
    bool ok = true;
    for (const Assertion& a : checks) {
      text += fmt::format("  [{}] {}", a.pass ? "PASS" : "FAIL", a.name);
      if (!a.detail.empty()) text += fmt::format(" ({})", a.detail);
      text += '\n';
      ok = ok && a.pass;
    }
    text += fmt::format("result: {}\n", ok ? "all assertions passed" : "ASSERTION FAILURE");
    detail::write_file(out / "summary.txt", text);
    return CommandResult{ok ? Outcome::Ok : Outcome::AssertionFailed, text};
  }
};

using SeedResults = std::vector<std::pair<std::uint64_t, KernelResult>>;

SeedResults search_all_seeds(const Network& net, const Problem& problem,
                             KernelSearchParams params, const std::vector<std::uint64_t>& seeds) {
  SeedResults results;
  for (std::uint64_t seed : seeds) {
    params.seed = seed;
    results.emplace_back(seed,
                         find_kernels(net, problem.spec, problem.flip_candidates, params));
  }
  return results;
}

/// Writes the per-variant artifacts and records the kernel-identity checks.
void report_search(Replication& rep, const std::filesystem::path& out, SearchVariant variant,
                   const SeedResults& results, const std::vector<FlipSet>& expected) {
  const std::string name{to_string(variant)};
  std::ostringstream curves;
  write_curves_csv(curves, results);
  detail::write_file(out / fmt::format("curves_{}.csv", name), curves.str());
  detail::write_file(out / fmt::format("curves_mean_{}.csv", name),
                     detail::mean_curves_csv(results));
  detail::write_file(out / fmt::format("runs_{}.csv", name), detail::runs_csv(results));
  bool unanimous = false;
  const std::string kernels = detail::kernels_txt(name, results, &unanimous);
  detail::write_file(out / fmt::format("kernels_{}.txt", name), kernels);
  rep.log += kernels;

  std::string seen;
  bool match = true;
  bool monotone = true;
  for (const auto& [seed, r] : results) {
    if (r.kernels != expected) {
      match = false;
      seen += fmt::format(" seed {}: {};", seed, detail::kernel_list(r.kernels));
    }
    monotone = monotone && detail::curves_monotone(r);
  }
  rep.check(fmt::format("{}: kernels equal {} on all {} seeds", name,
                        detail::kernel_list(expected), results.size()),
            match && unanimous, seen);
  rep.check(fmt::format("{}: reachable-rate curves are non-decreasing", name), monotone);
}

std::vector<std::uint64_t> seeds_or(const ExperimentConfig& cfg, std::size_t count) {
  // The config default is five seeds; callers may ask for fewer by default.
  if (cfg.seeds != ExperimentConfig{}.seeds) return cfg.seeds;
  std::vector<std::uint64_t> out(cfg.seeds.begin(),
                                 cfg.seeds.begin() + static_cast<std::ptrdiff_t>(
                                                         std::min(count, cfg.seeds.size())));
  return out;
}

CommandResult replicate_example2(const ExperimentConfig& cfg) {
  const Network net = parse_network(bundled::example2_network_txt);
  const Problem problem = parse_problem(bundled::example2_problem_txt, net);
  const std::vector<FlipSet> expected{{1, 2}, {2, 3}};
  const std::filesystem::path out = cfg.out;
  detail::prepare_dir(out);
  Replication rep;
  const std::vector<std::uint64_t> seeds = seeds_or(cfg, 5);

  // Kernel search, published settings: N = 100, Tmax = 10, beta = 1, omega = 0.6.
  KernelSearchParams search;
  search.training = {.episodes = cfg.episodes.value_or(100),
                     .max_steps = cfg.max_steps.value_or(10),
                     .beta = 1.0,
                     .omega = 0.6,
                     .gamma = 0.99};
  search.threads = cfg.threads;
  for (SearchVariant v : {SearchVariant::Basic, SearchVariant::Fast}) {
    search.variant = v;
    report_search(rep, out, v, search_all_seeds(net, problem, search, seeds), expected);
  }

  // Exhaustive cross-check over every subset of A.
  std::vector<FlipSet> minimal;
  for (int k = 0; k <= static_cast<int>(problem.flip_candidates.size()) && minimal.empty(); ++k) {
    for (const FlipSet& b : enumerate_subsets(problem.flip_candidates, k)) {
      if (bfs_reachable(ProductGraph(net, b), problem.spec).all_reachable) minimal.push_back(b);
    }
  }
  rep.check("oracle: minimal reachable subsets of A equal the learned kernels",
            minimal == expected, detail::kernel_list(minimal));

  // Minimum-flip policy: w = 8 > 2^3 - 1, N = 3e4, Tmax = 100, beta = 0.01, omega = 0.85.
  const double w = 8.0;
  rep.check("w = 8 exceeds the prior-free bound 2^n - |Md| = 7",
            w > weight_bound(StateCountBound{net.nodes(), problem.spec.targets().size()}));
  PolicyParams policy;
  policy.training = {.episodes = 30000, .max_steps = 100, .beta = 0.01, .omega = 0.85,
                     .gamma = 1.0};
  policy.weight = w;
  policy.seed = seeds.front();
  for (const FlipSet& b : expected) {
    const PolicyRun run = learn_min_flip_policy(net, problem.spec, b, policy);
    const PolicyEval eval = evaluate_policy(net, problem.spec, run.policy, 100, w);
    const detail::OracleCosts oracle = detail::oracle_costs(net, problem, b);
    std::size_t flips_ok = 0;
    std::size_t all_ok = 0;
    const std::string opt = detail::optimality_csv(eval, oracle, net.nodes(), &flips_ok, &all_ok);
    const std::string tag = fmt::format("{}{}", b[0], b[1]);
    std::ostringstream text;
    write_policy(text, run.policy, ActionSpace(net.nodes(), net.inputs(), b));
    detail::write_file(out / fmt::format("policy_{}.txt", tag), text.str());
    std::ostringstream eval_text;
    write_eval_csv(eval_text, eval, net.nodes());
    detail::write_file(out / fmt::format("eval_{}.csv", tag), eval_text.str());
    detail::write_file(out / fmt::format("optimality_{}.csv", tag), opt);
    rep.log += fmt::format("policy for {}: flip-optimal {}/7, fully optimal {}/7\n",
                           format_flip_set(b), flips_ok, all_ok);
    rep.check(fmt::format("policy {}: total flips equal the oracle minimum for all 7 states",
                          format_flip_set(b)),
              flips_ok == eval.rows.size(), fmt::format("{}/{}", flips_ok, eval.rows.size()));
    rep.check(fmt::format("policy {}: steps equal the oracle's tie-broken minimum",
                          format_flip_set(b)),
              all_ok == eval.rows.size(), fmt::format("{}/{}", all_ok, eval.rows.size()));
  }
  return rep.finish(out);
}

CommandResult replicate_example3(const ExperimentConfig& cfg) {
  const Network net = parse_network(bundled::example3_network_txt);
  const Problem problem = parse_problem(bundled::example3_problem_txt, net);
  verify_block_independence(net, problem.blocks);
  const std::vector<FlipSet> expected{{1, 2, 6}, {2, 3, 6}};
  const std::filesystem::path out = cfg.out;
  detail::prepare_dir(out);
  Replication rep;
  const std::vector<std::uint64_t> seeds = seeds_or(cfg, 3);
  // Episodes end on arrival, so only runs that miss Md feel the cap; 2^27
  // would make every uncertified flip set cost 2^27 steps per episode.
  const std::uint64_t cap = cfg.max_steps.value_or(100);
  rep.log += fmt::format("episode cap {} steps\n", cap);

  KernelSearchParams search;
  search.training = {.episodes = cfg.episodes.value_or(10000),
                     .max_steps = cap,
                     .beta = 1.0,
                     .omega = 0.6,
                     .gamma = 0.99};
  search.threads = cfg.threads;
  std::size_t certification_rows = 0;
  for (SearchVariant v : {SearchVariant::SmallMemory, SearchVariant::Hybrid}) {
    search.variant = v;
    const SeedResults results = search_all_seeds(net, problem, search, seeds);
    report_search(rep, out, v, results, expected);
    bool sparse_only = true;
    for (const auto& [seed, r] : results) {
      for (const FlipSetRun& run : r.runs) sparse_only = sparse_only && run.storage == Storage::Sparse;
    }
    rep.check(fmt::format("{}: no dense table allocated", to_string(v)), sparse_only);
    if (v == SearchVariant::SmallMemory) {
      certification_rows = results.front().second.run(expected.front())->row_count;
    }
  }

  // Adaptive-weight sparse policy: w0 = 18, dw = 20, N = 2e5, beta = 0.01, omega = 0.85.
  PolicyParams policy;
  policy.training = {.episodes = 200000, .max_steps = cap, .beta = 0.01, .omega = 0.85,
                     .gamma = 1.0};
  policy.weight = 18.0;
  policy.weight_step = 20.0;
  policy.seed = seeds.front();
  const FlipSet& b = expected.front();
  const PolicyRun run = learn_min_flip_policy_sparse(net, problem.spec, b, policy);
  const PolicyEval eval = evaluate_policy(net, problem.spec, run.policy, cap, run.final_weight);
  const detail::OracleCosts oracle = detail::oracle_costs(net, problem, b);
  std::size_t flips_ok = 0;
  std::size_t all_ok = 0;
  const std::string opt = detail::optimality_csv(eval, oracle, net.nodes(), &flips_ok, &all_ok);
  std::ostringstream text;
  write_policy(text, run.policy, ActionSpace(net.nodes(), net.inputs(), b));
  detail::write_file(out / "policy.txt", text.str());
  std::ostringstream eval_text;
  write_eval_csv(eval_text, eval, net.nodes());
  detail::write_file(out / "eval.csv", eval_text.str());
  detail::write_file(out / "optimality.csv", opt);
  rep.log += fmt::format(
      "policy for {}: small-memory certificate table had {} rows; final w {} after {} bumps, "
      "{} rows; flip-optimal {}/7, fully optimal {}/7 ({} oracle)\n",
      format_flip_set(b), certification_rows, run.final_weight, run.weight_bumps,
      run.table.row_count(), flips_ok, all_ok, oracle.source);
  rep.check("adaptive policy reaches Md from all 7 initial states", eval.all_reached());
  rep.check("adaptive policy total flips equal the block-decomposed optimum", flips_ok == 7,
            fmt::format("{}/7", flips_ok));
  rep.check("final w exceeds the final row count",
            run.final_weight > static_cast<double>(run.table.row_count()));
  rep.check("policy table is sparse", run.table.storage() == Storage::Sparse);
  return rep.finish(out);
}

}  // namespace

CommandResult run_replicate(std::string_view example, const ExperimentConfig& cfg) {
  if (example == "example2") return replicate_example2(cfg);
  if (example == "example3") return replicate_example3(cfg);
  throw InvalidArgument(
      fmt::format("unknown example '{}' (expected example2 or example3)", example));
}

}  // namespace flipctl
