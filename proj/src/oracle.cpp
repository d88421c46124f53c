#include "flipctl/oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <queue>

#include "flipctl/error.hpp"

namespace flipctl {

namespace {

constexpr std::uint64_t kUnreached = std::numeric_limits<std::uint64_t>::max();

void guard_nodes(int nodes) {
  if (nodes > kOracleMaxNodes) {
    throw ResourceRefused(fmt::format(
        "exhaustive oracle refuses n = {} > {}; declare blocks for the block-decomposed oracle",
        nodes, kOracleMaxNodes));
  }
}

/// Predecessor lists in compressed form: edges into y are
/// sources[offsets[y] .. offsets[y+1]).
struct ReverseGraph {
  std::vector<std::size_t> offsets;
  std::vector<std::pair<std::uint32_t, ActionIndex>> sources;
};

ReverseGraph reverse(const ProductGraph& g) {
  ReverseGraph r;
  const std::size_t states = g.state_count();
  const std::size_t actions = g.action_count();
  r.offsets.assign(states + 1, 0);
  for (std::uint64_t x = 0; x < states; ++x) {
    for (ActionIndex a = 0; a < actions; ++a) ++r.offsets[g.successor(State{x}, a).bits + 1];
  }
  for (std::size_t y = 0; y < states; ++y) r.offsets[y + 1] += r.offsets[y];
  r.sources.resize(states * actions);
  std::vector<std::size_t> fill(r.offsets.begin(), r.offsets.end() - 1);
  for (std::uint64_t x = 0; x < states; ++x) {
    for (ActionIndex a = 0; a < actions; ++a) {
      const auto y = g.successor(State{x}, a).bits;
      r.sources[fill[y]++] = {static_cast<std::uint32_t>(x), a};
    }
  }
  return r;
}

/// Backward breadth-first distances to Md.
std::vector<std::uint64_t> distances_to_target(const ProductGraph& g, const ReachabilitySpec& spec,
                                               const ReverseGraph& rev) {
  std::vector<std::uint64_t> dist(g.state_count(), kUnreached);
  std::deque<std::uint64_t> queue;
  for (State t : spec.targets()) {
    dist[t.bits] = 0;
    queue.push_back(t.bits);
  }
  while (!queue.empty()) {
    const std::uint64_t y = queue.front();
    queue.pop_front();
    for (std::size_t e = rev.offsets[y]; e < rev.offsets[y + 1]; ++e) {
      const std::uint64_t x = rev.sources[e].first;
      if (dist[x] != kUnreached) continue;
      dist[x] = dist[y] + 1;
      queue.push_back(x);
    }
  }
  return dist;
}

}  // namespace

ProductGraph::ProductGraph(const Network& net, const FlipSet& flip_set)
    : net_(&net), actions_(net.nodes(), net.inputs(), flip_set) {
  guard_nodes(net.nodes());
  const int bits = net.nodes() + net.inputs() + actions_.flip_width();
  if (bits > kMaxDenseBits) {
    throw ResourceRefused(fmt::format(
        "product graph needs 2^{} edges (n + m + |B| > {})", bits, kMaxDenseBits));
  }
  const std::size_t states = state_count();
  const std::size_t actions = action_count();
  succ_.resize(states * actions);
  for (std::uint64_t x = 0; x < states; ++x) {
    for (ActionIndex a = 0; a < actions; ++a) {
      succ_[x * actions + a] = static_cast<std::uint32_t>(
          net.next_flipped(State{x}, actions_.input(a), actions_.flips(a)).bits);
    }
  }
}

ReachabilityReport bfs_reachable(const ProductGraph& graph, const ReachabilitySpec& spec) {
  const auto dist = distances_to_target(graph, spec, reverse(graph));
  ReachabilityReport report;
  report.all_reachable = true;
  for (State x0 : spec.initial()) {
    Witness w;
    w.x0 = x0;
    w.reachable = dist[x0.bits] != kUnreached;
    if (w.reachable) {
      State x = x0;
      while (dist[x.bits] != 0) {
        for (ActionIndex a = 0; a < graph.action_count(); ++a) {
          const State y = graph.successor(x, a);
          if (dist[y.bits] + 1 == dist[x.bits]) {
            w.path.push_back({x, a, y});
            x = y;
            break;
          }
        }
      }
    } else {
      report.all_reachable = false;
    }
    report.witnesses.push_back(std::move(w));
  }
  return report;
}

std::vector<std::optional<PathCost>> min_flip_costs(const ProductGraph& graph,
                                                    const ReachabilitySpec& spec) {
  const ReverseGraph rev = reverse(graph);
  const ActionSpace& space = graph.actions();
  std::vector<std::optional<PathCost>> cost(graph.state_count());
  std::vector<char> settled(graph.state_count(), 0);
  using Entry = std::pair<PathCost, std::uint64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (State t : spec.targets()) {
    cost[t.bits] = PathCost{};
    heap.push({PathCost{}, t.bits});
  }
  while (!heap.empty()) {
    const auto [c, y] = heap.top();
    heap.pop();
    if (settled[y]) continue;
    settled[y] = 1;
    for (std::size_t e = rev.offsets[y]; e < rev.offsets[y + 1]; ++e) {
      const auto [x, a] = rev.sources[e];
      if (settled[x] || spec.is_target(State{x})) continue;
      const PathCost candidate{c.flips + static_cast<std::uint64_t>(space.flip_count(a)),
                               c.steps + 1};
      if (!cost[x] || candidate < *cost[x]) {
        cost[x] = candidate;
        heap.push({candidate, x});
      }
    }
  }
  return cost;
}

MinFlipPlan min_flip_path(const ProductGraph& graph, const ReachabilitySpec& spec,
                          const std::vector<std::optional<PathCost>>& costs, State x0) {
  MinFlipPlan plan;
  plan.x0 = x0;
  if (!costs.at(x0.bits)) return plan;
  plan.reachable = true;
  plan.cost = *costs[x0.bits];
  const ActionSpace& space = graph.actions();
  State x = x0;
  while (!spec.is_target(x)) {
    const PathCost here = *costs[x.bits];
    bool moved = false;
    for (ActionIndex a = 0; a < graph.action_count(); ++a) {
      const State y = graph.successor(x, a);
      if (!costs[y.bits]) continue;
      const PathCost via{costs[y.bits]->flips + static_cast<std::uint64_t>(space.flip_count(a)),
                         costs[y.bits]->steps + 1};
      if (via == here) {
        plan.path.push_back({x, a, y});
        x = y;
        moved = true;
        break;
      }
    }
    if (!moved) throw StateError("inconsistent cost table while tracing a plan");
  }
  return plan;
}

MinFlipPlan min_flip_path(const ProductGraph& graph, const ReachabilitySpec& spec, State x0) {
  return min_flip_path(graph, spec, min_flip_costs(graph, spec), x0);
}

double ValueIterationResult::max_value(State x) const {
  const auto first = q.begin() + static_cast<std::ptrdiff_t>(x.bits * actions);
  return *std::max_element(first, first + static_cast<std::ptrdiff_t>(actions));
}

ActionIndex ValueIterationResult::greedy_action(State x) const {
  const auto first = q.begin() + static_cast<std::ptrdiff_t>(x.bits * actions);
  return static_cast<ActionIndex>(
      std::max_element(first, first + static_cast<std::ptrdiff_t>(actions)) - first);
}

ValueIterationResult value_iteration(const ProductGraph& graph, const ReachabilitySpec& spec,
                                     const RewardMode& mode, double gamma, double tolerance,
                                     std::size_t max_sweeps) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in (0, 1]");
  const std::size_t states = graph.state_count();
  const std::size_t actions = graph.action_count();
  const ActionSpace& space = graph.actions();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // Undiscounted penalties diverge on states that never reach Md.
  std::vector<char> divergent(states, 0);
  ValueIterationResult out;
  if (gamma == 1.0 && std::holds_alternative<FlipPenalty>(mode)) {
    const auto dist = distances_to_target(graph, spec, reverse(graph));
    for (std::uint64_t x = 0; x < states; ++x) {
      if (dist[x] == kUnreached) {
        divergent[x] = 1;
        out.divergent.push_back(State{x});
      }
    }
  }

  // Per-cell rewards and successors are fixed; precompute them.
  std::vector<double> rewards(states * actions);
  for (std::uint64_t x = 0; x < states; ++x) {
    for (ActionIndex a = 0; a < actions; ++a) {
      Transition t;
      t.state = State{x};
      t.action = a;
      t.next = graph.successor(State{x}, a);
      t.done = spec.is_target(t.next);
      t.flips = space.flip_count(a);
      rewards[x * actions + a] = reward(mode, t);
    }
  }

  out.actions = actions;
  out.q.assign(states * actions, 0.0);
  std::vector<double> v(states, 0.0);
  for (std::uint64_t x = 0; x < states; ++x) {
    if (divergent[x]) {
      v[x] = kNegInf;
      std::fill_n(out.q.begin() + static_cast<std::ptrdiff_t>(x * actions), actions, kNegInf);
    }
  }

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    for (std::uint64_t x = 0; x < states; ++x) {
      if (divergent[x] || spec.is_target(State{x})) continue;
      for (ActionIndex a = 0; a < actions; ++a) {
        const State y = graph.successor(State{x}, a);
        double target;
        if (spec.is_target(y)) {
          target = rewards[x * actions + a];
        } else if (divergent[y.bits]) {
          target = kNegInf;
        } else {
          target = rewards[x * actions + a] + gamma * v[y.bits];
        }
        double& cell = out.q[x * actions + a];
        if (std::isfinite(target)) delta = std::max(delta, std::abs(target - cell));
        cell = target;
      }
    }
    for (std::uint64_t x = 0; x < states; ++x) {
      if (divergent[x] || spec.is_target(State{x})) continue;
      v[x] = out.max_value(State{x});
    }
    out.deltas.push_back(delta);
    if (delta < tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

std::vector<State> in_degree_set(const Network& net) {
  guard_nodes(net.nodes());
  if (net.nodes() + net.inputs() > kMaxDenseBits) {
    throw ResourceRefused("in-degree enumeration exceeds 2^24 state-input pairs");
  }
  std::vector<char> hit(std::size_t{1} << net.nodes(), 0);
  const std::uint64_t input_count = std::uint64_t{1} << net.inputs();
  for (std::uint64_t x = 0; x < hit.size(); ++x) {
    for (std::uint64_t u = 0; u < input_count; ++u) hit[net.next(State{x}, Input{u}).bits] = 1;
  }
  std::vector<State> out;
  for (std::uint64_t x = 0; x < hit.size(); ++x) {
    if (hit[x]) out.push_back(State{x});
  }
  return out;
}

std::vector<State> reachable_set(const ProductGraph& graph, const std::vector<State>& sources,
                                 bool include_sources) {
  std::vector<char> seen(graph.state_count(), 0);
  std::vector<char> entered(graph.state_count(), 0);
  std::deque<std::uint64_t> queue;
  for (State s : sources) {
    if (!seen[s.bits]) {
      seen[s.bits] = 1;
      queue.push_back(s.bits);
    }
  }
  while (!queue.empty()) {
    const std::uint64_t x = queue.front();
    queue.pop_front();
    for (ActionIndex a = 0; a < graph.action_count(); ++a) {
      const std::uint64_t y = graph.successor(State{x}, a).bits;
      entered[y] = 1;
      if (!seen[y]) {
        seen[y] = 1;
        queue.push_back(y);
      }
    }
  }
  std::vector<State> out;
  const auto& keep = include_sources ? seen : entered;
  for (std::uint64_t x = 0; x < keep.size(); ++x) {
    if (keep[x]) out.push_back(State{x});
  }
  return out;
}

std::string format_plan(const std::vector<PlanStep>& path, const ActionSpace& actions,
                        int nodes) {
  std::string out;
  for (const PlanStep& s : path) {
    out += fmt::format("{} →({},flip={}) {}\n", to_string(s.from, nodes),
                       fmt::format("u={}", format_bits(actions.input(s.action).bits,
                                                       actions.inputs())),
                       format_flip_set(flip_nodes(actions.flips(s.action), nodes)),
                       to_string(s.to, nodes));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct BlockLayout {
  FlipSet nodes;            // global node indices, ascending
  std::vector<int> inputs;  // global input indices read by this block
};

std::vector<BlockLayout> layout_blocks(const Network& net, const std::vector<FlipSet>& blocks) {
  std::vector<int> node_owner(static_cast<std::size_t>(net.nodes()) + 1, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int i : blocks[b]) {
      if (i < 1 || i > net.nodes()) throw InvalidArgument("block node index out of range");
      if (node_owner[static_cast<std::size_t>(i)] != -1) {
        throw InvalidArgument(fmt::format("node {} belongs to two blocks", i));
      }
      node_owner[static_cast<std::size_t>(i)] = static_cast<int>(b);
    }
  }
  for (int i = 1; i <= net.nodes(); ++i) {
    if (node_owner[static_cast<std::size_t>(i)] == -1) {
      throw InvalidArgument(fmt::format("node {} is in no block", i));
    }
  }
  std::vector<int> input_owner(static_cast<std::size_t>(net.inputs()) + 1, -1);
  std::vector<BlockLayout> out(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out[b].nodes = blocks[b];
    std::sort(out[b].nodes.begin(), out[b].nodes.end());
    for (int i : out[b].nodes) {
      for (const BoolExpr::Term& t : net.update(i).terms()) {
        const int arg = static_cast<int>(t.arg);
        if (t.op == BoolExpr::Op::Node && node_owner[static_cast<std::size_t>(arg)] !=
                                              static_cast<int>(b)) {
          throw InvalidArgument(
              fmt::format("update of x{} reads x{} from another block", i, arg));
        }
        if (t.op == BoolExpr::Op::Input) {
          int& owner = input_owner[static_cast<std::size_t>(arg)];
          if (owner != -1 && owner != static_cast<int>(b)) {
            throw InvalidArgument(fmt::format("input u{} is read by two blocks", arg));
          }
          if (owner == -1) out[b].inputs.push_back(arg);
          owner = static_cast<int>(b);
        }
      }
    }
    std::sort(out[b].inputs.begin(), out[b].inputs.end());
  }
  return out;
}

/// Layers stored as (shape, offset): entry s of layer t is
/// shape[t][s] + offset[t]. Costs can grow without bound (a block that must
/// keep flipping to hold its target), so periodicity is detected on the
/// shape, and each period adds `growth` to the offset.
struct BlockCosts {
  std::vector<std::vector<std::uint64_t>> shape;
  std::vector<std::uint64_t> offset;
  std::uint64_t preperiod = 0;
  std::uint64_t period = 1;
  std::uint64_t growth = 0;

  std::uint64_t cost(std::uint64_t t, std::uint64_t s) const {
    std::uint64_t idx = t;
    std::uint64_t extra = 0;
    if (t >= shape.size()) {
      idx = preperiod + (t - preperiod) % period;
      extra = (t - preperiod) / period * growth;
    }
    const std::uint64_t v = shape[idx][s];
    return v == kUnreached ? kUnreached : v + offset[idx] + extra;
  }
};

}  // namespace

void verify_block_independence(const Network& net, const std::vector<FlipSet>& blocks) {
  (void)layout_blocks(net, blocks);
}

std::vector<BlockPlan> block_min_flip(const Network& net, const ReachabilitySpec& spec,
                                      const FlipSet& flip_set, const std::vector<FlipSet>& blocks,
                                      std::uint64_t max_horizon) {
  if (spec.targets().size() != 1) {
    throw InvalidArgument("block-decomposed oracle needs a single target state");
  }
  const auto layout = layout_blocks(net, blocks);
  const int n = net.nodes();
  const State target = spec.targets().front();
  (void)make_flip_mask(flip_set, n);

  // layers[b].at(T)[s]: fewest flips taking block b from local state s to
  // its target part in exactly T steps.
  std::vector<BlockCosts> layers(layout.size());
  for (std::size_t b = 0; b < layout.size(); ++b) {
    const BlockLayout& blk = layout[b];
    const int w = static_cast<int>(blk.nodes.size());
    if (w > kOracleMaxNodes) throw ResourceRefused("block too large for enumeration");
    FlipSet local_flip;
    for (int i : flip_set) {
      if (std::binary_search(blk.nodes.begin(), blk.nodes.end(), i)) local_flip.push_back(i);
    }
    auto embed = [&](std::uint64_t local) {
      std::uint64_t bits = 0;
      for (int k = 0; k < w; ++k) {
        if (local & (std::uint64_t{1} << (w - 1 - k))) {
          bits |= entry_bit(blk.nodes[static_cast<std::size_t>(k)], n);
        }
      }
      return bits;
    };
    auto extract = [&](std::uint64_t bits) {
      std::uint64_t local = 0;
      for (int k = 0; k < w; ++k) {
        if (bits & entry_bit(blk.nodes[static_cast<std::size_t>(k)], n)) {
          local |= std::uint64_t{1} << (w - 1 - k);
        }
      }
      return local;
    };
    const std::size_t local_states = std::size_t{1} << w;
    const std::size_t input_combos = std::size_t{1} << blk.inputs.size();
    const std::size_t flip_combos = std::size_t{1} << local_flip.size();
    // Successor and flip count for each (state, input, flip) triple.
    struct Edge {
      std::uint64_t to;
      std::uint64_t flips;
    };
    std::vector<std::vector<Edge>> edges(local_states);
    for (std::uint64_t s = 0; s < local_states; ++s) {
      const std::uint64_t xs = embed(s);
      for (std::uint64_t uc = 0; uc < input_combos; ++uc) {
        std::uint64_t ubits = 0;
        for (std::size_t k = 0; k < blk.inputs.size(); ++k) {
          if (uc & (std::uint64_t{1} << k)) ubits |= entry_bit(blk.inputs[k], net.inputs());
        }
        for (std::uint64_t fc = 0; fc < flip_combos; ++fc) {
          std::uint64_t mask = 0;
          for (std::size_t k = 0; k < local_flip.size(); ++k) {
            if (fc & (std::uint64_t{1} << k)) mask |= entry_bit(local_flip[k], n);
          }
          const State y = net.next_flipped(State{xs}, Input{ubits}, FlipMask{mask});
          edges[s].push_back({extract(y.bits), static_cast<std::uint64_t>(std::popcount(mask))});
        }
      }
    }
    const std::uint64_t goal = extract(target.bits);
    // The layer map C_t -> C_{t+1} commutes with adding a constant, so the
    // first repeated shape makes the sequence periodic up to a fixed growth
    // per period. Costs are nonnegative, hence the growth is too.
    BlockCosts& seq = layers[b];
    std::map<std::vector<std::uint64_t>, std::uint64_t> seen;
    std::vector<std::uint64_t> layer(local_states, kUnreached);
    layer[goal] = 0;
    while (true) {
      std::uint64_t low = kUnreached;
      for (std::uint64_t v : layer) low = std::min(low, v);
      if (low == kUnreached) low = 0;
      std::vector<std::uint64_t> shape = layer;
      for (std::uint64_t& v : shape) {
        if (v != kUnreached) v -= low;
      }
      const auto [it, fresh] = seen.emplace(shape, seq.shape.size());
      if (!fresh) {
        seq.preperiod = it->second;
        seq.period = seq.shape.size() - it->second;
        seq.growth = low - seq.offset[it->second];
        break;
      }
      if (seq.shape.size() >= max_horizon) {
        throw ResourceRefused(fmt::format(
            "block {} cost sequence did not become periodic within {} steps", b + 1, max_horizon));
      }
      seq.shape.push_back(std::move(shape));
      seq.offset.push_back(low);
      std::vector<std::uint64_t> next(local_states, kUnreached);
      for (std::uint64_t s = 0; s < local_states; ++s) {
        for (const Edge& e : edges[s]) {
          if (layer[e.to] != kUnreached) next[s] = std::min(next[s], layer[e.to] + e.flips);
        }
      }
      layer = std::move(next);
    }
  }

  // Beyond preperiod + lcm(periods) every block repeats a phase already seen
  // at a cost that is no lower, so the scan below is exhaustive.
  std::uint64_t preperiod = 0;
  std::uint64_t period = 1;
  for (const BlockCosts& c : layers) {
    preperiod = std::max(preperiod, c.preperiod);
    period = std::lcm(period, c.period);
    if (period > max_horizon) throw ResourceRefused("joint block period too long to enumerate");
  }
  const std::uint64_t horizon = preperiod + period;

  std::vector<BlockPlan> plans;
  for (State x0 : spec.initial()) {
    BlockPlan plan;
    plan.x0 = x0;
    std::vector<std::uint64_t> local(layout.size());
    for (std::size_t b = 0; b < layout.size(); ++b) {
      const int w = static_cast<int>(layout[b].nodes.size());
      std::uint64_t s = 0;
      for (int k = 0; k < w; ++k) {
        if (x0.bits & entry_bit(layout[b].nodes[static_cast<std::size_t>(k)], n)) {
          s |= std::uint64_t{1} << (w - 1 - k);
        }
      }
      local[b] = s;
    }
    for (std::uint64_t t = 0; t < horizon; ++t) {
      std::uint64_t total = 0;
      bool ok = true;
      for (std::size_t b = 0; b < layout.size() && ok; ++b) {
        const std::uint64_t c = layers[b].cost(t, local[b]);
        if (c == kUnreached) ok = false;
        else total += c;
      }
      if (!ok) continue;
      const PathCost candidate{total, t};
      if (!plan.reachable || candidate < plan.cost) {
        plan.reachable = true;
        plan.cost = candidate;
      }
    }
    plans.push_back(plan);
  }
  return plans;
}

}  // namespace flipctl
