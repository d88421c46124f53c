#include "flipctl/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "experiment_internal.hpp"
#include "flipctl/error.hpp"
#include "flipctl/oracle.hpp"
#include "text_util.hpp"

namespace flipctl {

std::string_view to_string(PolicyAlgorithm a) noexcept {
  switch (a) {
    case PolicyAlgorithm::Dense: return "dense";
    case PolicyAlgorithm::Sparse: return "sparse";
    case PolicyAlgorithm::MinStep: return "min-step";
  }
  return "?";
}

PolicyAlgorithm parse_policy_algorithm(std::string_view text) {
  if (text == "dense") return PolicyAlgorithm::Dense;
  if (text == "sparse" || text == "adaptive") return PolicyAlgorithm::Sparse;
  if (text == "min-step" || text == "min_step") return PolicyAlgorithm::MinStep;
  throw InvalidArgument(
      fmt::format("unknown algorithm '{}' (expected dense, sparse or min-step)", text));
}

// ---------------------------------------------------------------------------
// Config

namespace {

template <class T>
T number_value(std::string_view key, std::string_view value, std::size_t line) {
  const auto parsed = parse_number<T>(value);
  if (!parsed) throw ParseError(fmt::format("{}: '{}' is not a valid number", key, value), line);
  return *parsed;
}

bool bool_value(std::string_view key, std::string_view value, std::size_t line) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ParseError(fmt::format("{}: expected true or false, got '{}'", key, value), line);
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
  std::filesystem::path p{std::string(value)};
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (value.empty()) throw ParseError(fmt::format("{}: missing value", key), line_no);
    if (!seen.emplace(key).second) {
      throw ParseError(fmt::format("duplicate key '{}'", key), line_no);
    }
    try {
      if (key == "network") {
        cfg.network = resolve(base_dir, value);
      } else if (key == "problem") {
        cfg.problem = resolve(base_dir, value);
      } else if (key == "variant") {
        cfg.variant = parse_search_variant(value);
      } else if (key == "algorithm") {
        cfg.algorithm = parse_policy_algorithm(value);
      } else if (key == "episodes") {
        cfg.episodes = number_value<std::uint64_t>(key, value, line_no);
      } else if (key == "max_steps") {
        cfg.max_steps = number_value<std::uint64_t>(key, value, line_no);
      } else if (key == "beta") {
        cfg.beta = number_value<double>(key, value, line_no);
      } else if (key == "omega") {
        cfg.omega = number_value<double>(key, value, line_no);
      } else if (key == "gamma") {
        cfg.gamma = number_value<double>(key, value, line_no);
      } else if (key == "w") {
        cfg.weight = number_value<double>(key, value, line_no);
      } else if (key == "delta_w") {
        cfg.weight_step = number_value<double>(key, value, line_no);
      } else if (key == "flipset") {
        cfg.flip_set = parse_flip_set(value);
      } else if (key == "kernels_file") {
        cfg.kernels_file = resolve(base_dir, value);
      } else if (key == "seeds") {
        cfg.seeds.clear();
        for (std::string_view tok : split(value, ',')) {
          cfg.seeds.push_back(number_value<std::uint64_t>(key, trim(tok), line_no));
        }
        if (cfg.seeds.empty()) throw ParseError("seeds: list is empty", line_no);
      } else if (key == "eval_cap") {
        cfg.eval_cap = number_value<std::uint64_t>(key, value, line_no);
      } else if (key == "dump_tables") {
        cfg.dump_tables = bool_value(key, value, line_no);
      } else if (key == "threads") {
        cfg.threads = number_value<unsigned>(key, value, line_no);
      } else if (key == "out") {
        cfg.out = resolve(base_dir, value);
      } else {
        throw ParseError(fmt::format("unknown key '{}'", key), line_no);
      }
    } catch (const InvalidArgument& e) {
      throw ParseError(fmt::format("{}: {}", key, e.what()), line_no);
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_text_file(path), path.parent_path());
  } catch (const ParseError& e) {
    throw e.in_file(path.string());
  }
}

TrainingParams kernel_training(const ExperimentConfig& cfg) {
  TrainingParams p{.episodes = 100, .max_steps = 0, .beta = 1.0, .omega = 0.6, .gamma = 0.99};
  if (cfg.episodes) p.episodes = *cfg.episodes;
  if (cfg.max_steps) p.max_steps = *cfg.max_steps;
  if (cfg.beta) p.beta = *cfg.beta;
  if (cfg.omega) p.omega = *cfg.omega;
  if (cfg.gamma) p.gamma = *cfg.gamma;
  return p;
}

TrainingParams policy_training(const ExperimentConfig& cfg, PolicyAlgorithm algorithm) {
  TrainingParams p{.episodes = 30000, .max_steps = 100, .beta = 0.01, .omega = 0.85,
                   .gamma = algorithm == PolicyAlgorithm::MinStep ? 0.99 : 1.0};
  if (cfg.episodes) p.episodes = *cfg.episodes;
  if (cfg.max_steps) p.max_steps = *cfg.max_steps;
  if (cfg.beta) p.beta = *cfg.beta;
  if (cfg.omega) p.omega = *cfg.omega;
  if (cfg.gamma) p.gamma = *cfg.gamma;
  return p;
}

std::vector<FlipSet> read_kernels_file(const std::filesystem::path& path) {
  std::vector<FlipSet> kernels;
  std::size_t line_no = 0;
  for (std::string_view raw : split_lines(read_text_file(path))) {
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (!line.starts_with("kernel ")) continue;
    try {
      kernels.push_back(parse_flip_set(trim(line.substr(7))));
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no).in_file(path.string());
    }
  }
  if (kernels.empty()) {
    throw InvalidArgument(fmt::format("{} lists no kernels", path.string()));
  }
  return kernels;
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace detail {

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << content;
  if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
}

std::string kernel_list(const std::vector<FlipSet>& kernels) {
  if (kernels.empty()) return "none";
  std::string out;
  for (const FlipSet& k : kernels) {
    if (!out.empty()) out += ' ';
    out += format_flip_set(k);
  }
  return out;
}

bool curves_monotone(const KernelResult& r) {
  for (const FlipSetRun& run : r.runs) {
    if (!std::is_sorted(run.curve.begin(), run.curve.end())) return false;
  }
  return true;
}

std::string mean_curves_csv(const std::vector<std::pair<std::uint64_t, KernelResult>>& results) {
  // Runs that stop early are padded with their last value.
  std::map<FlipSet, std::vector<const std::vector<double>*>> by_set;
  std::vector<FlipSet> order;
  for (const auto& [seed, result] : results) {
    for (const FlipSetRun& run : result.runs) {
      auto& list = by_set[run.flip_set];
      if (list.empty()) order.push_back(run.flip_set);
      list.push_back(&run.curve);
    }
  }
  std::string out = "flipset,episode,mean_reachable_rate,runs\n";
  for (const FlipSet& b : order) {
    const auto& curves = by_set[b];
    std::size_t longest = 0;
    for (const auto* c : curves) longest = std::max(longest, c->size());
    for (std::size_t ep = 0; ep < longest; ++ep) {
      double sum = 0.0;
      for (const auto* c : curves) {
        if (!c->empty()) sum += (*c)[std::min(ep, c->size() - 1)];
      }
      out += fmt::format("\"{}\",{},{},{}\n", format_flip_set(b), ep + 1,
                         sum / static_cast<double>(curves.size()), curves.size());
    }
  }
  return out;
}

std::string runs_csv(const std::vector<std::pair<std::uint64_t, KernelResult>>& results) {
  std::string out = "seed,flipset,certified,episodes_to_certify,row_count,storage\n";
  for (const auto& [seed, result] : results) {
    for (const FlipSetRun& run : result.runs) {
      out += fmt::format("{},\"{}\",{},{},{},{}\n", seed, format_flip_set(run.flip_set),
                         run.certified ? 1 : 0,
                         run.episodes_to_certify ? fmt::format("{}", *run.episodes_to_certify)
                                                 : std::string{},
                         run.row_count, run.storage == Storage::Dense ? "dense" : "sparse");
    }
  }
  return out;
}

std::string kernels_txt(std::string_view variant,
                        const std::vector<std::pair<std::uint64_t, KernelResult>>& results,
                        bool* unanimous_out) {
  std::string out = fmt::format("# variant {}\n", variant);
  bool unanimous = true;
  for (const auto& [seed, result] : results) {
    out += fmt::format("seed {}: {}\n", seed, kernel_list(result.kernels));
    if (result.kernels != results.front().second.kernels) unanimous = false;
  }
  if (unanimous && !results.empty()) {
    const auto& kernels = results.front().second.kernels;
    if (kernels.empty()) {
      out += "verdict: cannot realize reachability with any subset of A\n";
    } else {
      out += fmt::format("verdict: kernels of size {}, unanimous across seeds\n", kernels.front().size());
      for (const FlipSet& k : kernels) out += fmt::format("kernel {}\n", format_flip_set(k));
    }
  } else {
    out += "verdict: seeds disagree\n";
  }
  if (unanimous_out) *unanimous_out = unanimous;
  return out;
}

OracleCosts oracle_costs(const Network& net, const Problem& problem, const FlipSet& b) {
  OracleCosts out;
  const int bits = net.nodes() + net.inputs() + static_cast<int>(b.size());
  if (net.nodes() <= kOracleMaxNodes && bits <= kMaxDenseBits) {
    const ProductGraph graph(net, b);
    const auto costs = min_flip_costs(graph, problem.spec);
    for (State x0 : problem.spec.initial()) out.costs.push_back(costs[x0.bits]);
    out.source = "exhaustive";
  } else if (!problem.blocks.empty() && problem.spec.targets().size() == 1) {
    for (const BlockPlan& p : block_min_flip(net, problem.spec, b, problem.blocks)) {
      out.costs.push_back(p.reachable ? std::optional<PathCost>(p.cost) : std::nullopt);
    }
    out.source = "block-decomposed";
  }
  return out;
}

std::string optimality_csv(const PolicyEval& eval, const OracleCosts& oracle, int nodes,
                           std::size_t* flips_optimal, std::size_t* fully_optimal) {
  std::string out = "x0,reached,total_flips,steps,oracle_flips,oracle_steps,flips_optimal,optimal\n";
  std::size_t f_ok = 0;
  std::size_t all_ok = 0;
  for (std::size_t i = 0; i < eval.rows.size(); ++i) {
    const PolicyEvalRow& r = eval.rows[i];
    const auto& c = oracle.costs.at(i);
    const bool f = r.reached && c && r.total_flips == c->flips;
    const bool full = f && r.steps == c->steps;
    f_ok += f;
    all_ok += full;
    out += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(r.x0, nodes), r.reached ? 1 : 0,
                       r.total_flips, r.steps, c ? fmt::format("{}", c->flips) : "unreachable",
                       c ? fmt::format("{}", c->steps) : "", f ? 1 : 0, full ? 1 : 0);
  }
  if (flips_optimal) *flips_optimal = f_ok;
  if (fully_optimal) *fully_optimal = all_ok;
  return out;
}

}  // namespace detail

void write_curves_csv(std::ostream& out,
                      const std::vector<std::pair<std::uint64_t, KernelResult>>& results) {
  out << "flipset,episode,reachable_rate,seed\n";
  for (const auto& [seed, result] : results) {
    for (const FlipSetRun& run : result.runs) {
      const std::string name = format_flip_set(run.flip_set);
      for (std::size_t ep = 0; ep < run.curve.size(); ++ep) {
        out << fmt::format("\"{}\",{},{},{}\n", name, ep + 1, run.curve[ep], seed);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Inputs {
  Network net;
  Problem problem;
};

Inputs load_inputs(const ExperimentConfig& cfg) {
  if (!cfg.network) throw InvalidArgument("config is missing 'network'");
  if (!cfg.problem) throw InvalidArgument("config is missing 'problem'");
  Network net = load_network(*cfg.network);
  Problem problem = load_problem(*cfg.problem, net);
  return {std::move(net), std::move(problem)};
}

FlipSet policy_flip_set(const ExperimentConfig& cfg) {
  if (cfg.flip_set) return *cfg.flip_set;
  if (cfg.kernels_file) return read_kernels_file(*cfg.kernels_file).front();
  throw InvalidArgument("policy needs 'flipset' or 'kernels_file' in the config");
}

}  // namespace

CommandResult run_kernels(const ExperimentConfig& cfg) {
  const Inputs in = load_inputs(cfg);
  KernelSearchParams params;
  params.variant = cfg.variant.value_or(SearchVariant::Basic);
  params.training = kernel_training(cfg);
  params.threads = cfg.threads;

  std::vector<std::pair<std::uint64_t, KernelResult>> results;
  for (std::uint64_t seed : cfg.seeds) {
    params.seed = seed;
    results.emplace_back(seed, find_kernels(in.net, in.problem.spec,
                                            in.problem.flip_candidates, params));
  }

  detail::prepare_dir(cfg.out);
  std::ostringstream curves;
  write_curves_csv(curves, results);
  detail::write_file(cfg.out / "curves.csv", curves.str());
  detail::write_file(cfg.out / "curves_mean.csv", detail::mean_curves_csv(results));
  detail::write_file(cfg.out / "runs.csv", detail::runs_csv(results));
  bool unanimous = false;
  const std::string kernels = detail::kernels_txt(to_string(params.variant), results, &unanimous);
  detail::write_file(cfg.out / "kernels.txt", kernels);

  CommandResult result;
  result.report = kernels;
  const bool none = std::all_of(results.begin(), results.end(),
                                [](const auto& r) { return !r.second.reachable(); });
  if (none) result.outcome = Outcome::Unreachable;
  return result;
}

CommandResult run_policy(const ExperimentConfig& cfg) {
  const Inputs in = load_inputs(cfg);
  const Network& net = in.net;
  const ReachabilitySpec& spec = in.problem.spec;
  const PolicyAlgorithm algorithm = cfg.algorithm.value_or(PolicyAlgorithm::Dense);
  const FlipSet b = policy_flip_set(cfg);
  const TrainingParams training = policy_training(cfg, algorithm);
  const ActionSpace space(net.nodes(), net.inputs(), b);
  std::string report = fmt::format("flip set {}, algorithm {}\n", format_flip_set(b),
                                   to_string(algorithm));

  // Reachability under B is a precondition; check it before learning.
  const detail::OracleCosts oracle = detail::oracle_costs(net, in.problem, b);
  std::optional<std::size_t> certification_rows;
  if (!oracle.source.empty()) {
    const bool reachable = std::all_of(oracle.costs.begin(), oracle.costs.end(),
                                       [](const auto& c) { return c.has_value(); });
    report += fmt::format("{} oracle: {}\n", oracle.source,
                          reachable ? "reachable" : "WARNING: not reachable under this flip set");
  }
  if (oracle.source.empty() || (algorithm == PolicyAlgorithm::Sparse && !cfg.weight)) {
    KernelSearchParams cert;
    cert.variant = SearchVariant::SmallMemory;
    cert.training = kernel_training(ExperimentConfig{});
    cert.training.max_steps = training.max_steps;
    cert.seed = cfg.seeds.front();
    const FlipSetRun run = train_flip_set(net, spec, b, cert, {});
    certification_rows = run.row_count;
    report += fmt::format("certificate run: {} ({} rows)\n",
                          run.certified ? "reachable" : "WARNING: not certified", run.row_count);
  }

  double weight = 1.0;
  std::string weight_source = "fixed";
  if (cfg.weight) {
    weight = *cfg.weight;
    weight_source = "config";
  } else if (algorithm == PolicyAlgorithm::Sparse) {
    weight = static_cast<double>(*certification_rows) + 1.0;
    weight_source = "certificate row count + 1";
  } else if (net.nodes() <= 52) {
    weight = weight_bound(StateCountBound{net.nodes(), spec.targets().size()}) + 1.0;
    weight_source = "2^n - |Md| + 1";
  }
  report += fmt::format("w = {} ({})\n", weight, weight_source);

  PolicyParams params;
  params.training = training;
  params.weight = weight;
  params.weight_step = cfg.weight_step;
  const std::uint64_t cap = cfg.eval_cap.value_or(effective_max_steps(training, spec));

  detail::prepare_dir(cfg.out);
  std::string seeds_csv = "seed,x0,reached,steps,total_flips,return,oracle_flips,oracle_steps\n";
  bool first = true;
  for (std::uint64_t seed : cfg.seeds) {
    params.seed = seed;
    const PolicyRun run =
        algorithm == PolicyAlgorithm::Dense    ? learn_min_flip_policy(net, spec, b, params)
        : algorithm == PolicyAlgorithm::Sparse ? learn_min_flip_policy_sparse(net, spec, b, params)
                                               : learn_min_step_policy(net, spec, b, training, seed);
    const double eval_weight = algorithm == PolicyAlgorithm::MinStep ? weight : run.final_weight;
    const PolicyEval eval = evaluate_policy(net, spec, run.policy, cap, eval_weight);
    std::size_t reached = 0;
    for (const PolicyEvalRow& r : eval.rows) reached += r.reached;
    report += fmt::format("seed {}: reached {}/{}", seed, reached, eval.rows.size());
    if (algorithm == PolicyAlgorithm::Sparse) {
      report += fmt::format(", final w {} after {} bumps, {} rows", run.final_weight,
                            run.weight_bumps, run.table.row_count());
    }
    if (!oracle.source.empty()) {
      std::size_t f_ok = 0;
      std::size_t all_ok = 0;
      const std::string opt = detail::optimality_csv(eval, oracle, net.nodes(), &f_ok, &all_ok);
      report += fmt::format(", flip-optimal {}/{}, fully optimal {}/{}", f_ok, eval.rows.size(),
                            all_ok, eval.rows.size());
      if (first) detail::write_file(cfg.out / "optimality.csv", opt);
    }
    report += '\n';
    for (std::size_t i = 0; i < eval.rows.size(); ++i) {
      const PolicyEvalRow& r = eval.rows[i];
      std::string of;
      std::string os;
      if (!oracle.source.empty() && oracle.costs[i]) {
        of = fmt::format("{}", oracle.costs[i]->flips);
        os = fmt::format("{}", oracle.costs[i]->steps);
      }
      seeds_csv += fmt::format("{},{},{},{},{},{},{},{}\n", seed, to_string(r.x0, net.nodes()),
                               r.reached ? 1 : 0, r.steps, r.total_flips, r.ret, of, os);
      if (!r.diagnostic.empty()) {
        report += fmt::format("  {}: {}\n", to_string(r.x0, net.nodes()), r.diagnostic);
      }
    }
    if (first) {
      std::ostringstream policy_text;
      write_policy(policy_text, run.policy, space);
      detail::write_file(cfg.out / "policy.txt", policy_text.str());
      std::ostringstream eval_text;
      write_eval_csv(eval_text, eval, net.nodes());
      detail::write_file(cfg.out / "eval.csv", eval_text.str());
      if (cfg.dump_tables) {
        std::ostringstream table;
        write_snapshot(table, run.table);
        detail::write_file(cfg.out / "qtable.txt", table.str());
      }
      first = false;
    }
  }
  detail::write_file(cfg.out / "eval_seeds.csv", seeds_csv);
  detail::write_file(cfg.out / "summary.txt", report);
  return CommandResult{Outcome::Ok, report};
}

CommandResult run_oracle(const ExperimentConfig& cfg) {
  const Inputs in = load_inputs(cfg);
  const Network& net = in.net;
  const ReachabilitySpec& spec = in.problem.spec;
  const FlipSet b = cfg.flip_set.value_or(in.problem.flip_candidates);
  const int n = net.nodes();
  std::string report = fmt::format("flip set {}\n", format_flip_set(b));
  bool all_reachable = true;

  const int bits = n + net.inputs() + static_cast<int>(b.size());
  if (n <= kOracleMaxNodes && bits <= kMaxDenseBits) {
    const ProductGraph graph(net, b);
    const ReachabilityReport reach = bfs_reachable(graph, spec);
    const auto costs = min_flip_costs(graph, spec);
    all_reachable = reach.all_reachable;
    report += fmt::format("verdict: {}\n", all_reachable ? "reachable" : "not reachable");
    const std::uint64_t witness_bound = default_max_steps(spec);
    bool witnesses_bounded = true;
    for (const Witness& w : reach.witnesses) {
      if (w.path.size() > witness_bound) witnesses_bounded = false;
    }
    for (State x0 : spec.initial()) {
      const MinFlipPlan plan = min_flip_path(graph, spec, costs, x0);
      if (!plan.reachable) {
        report += fmt::format("{}: no path to Md\n", to_string(x0, n));
        continue;
      }
      report += fmt::format("{}: {} flips, {} steps\n", to_string(x0, n), plan.cost.flips,
                            plan.cost.steps);
      report += format_plan(plan.path, graph.actions(), n);
    }
    const std::vector<State> in_degree = in_degree_set(net);
    const std::vector<State> forward = reachable_set(graph, spec.initial(), true);
    const std::vector<State> entered = reachable_set(graph, spec.initial(), false);
    const bool entered_inside =
        std::includes(in_degree.begin(), in_degree.end(), entered.begin(), entered.end());
    report += fmt::format("|I| = {}, |V| = {} (with M0), {} (entered by a transition)\n",
                          in_degree.size(), forward.size(), entered.size());
    report += fmt::format("check: shortest witnesses within 2^n - |Md| = {}: {}\n", witness_bound,
                          witnesses_bounded ? "yes" : "NO");
    report += fmt::format("check: entered states lie in I: {}\n", entered_inside ? "yes" : "NO");
    report += fmt::format("check: |V| <= |I| counting M0: {}\n",
                          forward.size() <= in_degree.size() ? "yes" : "no");
  } else if (!in.problem.blocks.empty()) {
    verify_block_independence(net, in.problem.blocks);
    report += fmt::format("exhaustive enumeration refused (n = {}); using the {} declared blocks\n",
                          n, in.problem.blocks.size());
    for (const BlockPlan& p : block_min_flip(net, spec, b, in.problem.blocks)) {
      if (!p.reachable) {
        all_reachable = false;
        report += fmt::format("{}: no path to Md\n", to_string(p.x0, n));
      } else {
        report += fmt::format("{}: {} flips, {} steps\n", to_string(p.x0, n), p.cost.flips,
                              p.cost.steps);
      }
    }
    report += fmt::format("verdict: {}\n", all_reachable ? "reachable" : "not reachable");
  } else {
    throw ResourceRefused(fmt::format(
        "oracle refuses n = {} (limit {} nodes, n + m + |B| <= {}); declare 'blocks' in the "
        "problem file if the network decomposes",
        n, kOracleMaxNodes, kMaxDenseBits));
  }

  detail::prepare_dir(cfg.out);
  detail::write_file(cfg.out / "oracle.txt", report);
  return CommandResult{all_reachable ? Outcome::Ok : Outcome::Unreachable, report};
}

}  // namespace flipctl
