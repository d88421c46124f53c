#pragma once

// Test-side ground truth. Everything here is computed from Network::step_flipped
// (or from hand-written dynamics) without touching the library's oracle, so the
// library's oracle can be checked against it.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "flipctl/boolnet.hpp"
#include "flipctl/problem.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() { return FLIPCTL_TEST_DATA_DIR; }

inline flipctl::Network example_network(int k) {
  return flipctl::load_network(data_dir() / ("example" + std::to_string(k)) / "network.txt");
}

inline flipctl::Problem example_problem(int k, const flipctl::Network& net) {
  return flipctl::load_problem(data_dir() / ("example" + std::to_string(k)) / "problem.txt", net);
}

/// Example 2's update functions, hand-written independently of the parser.
inline std::array<bool, 3> example2_step(std::array<bool, 3> x, bool u) {
  const bool x1 = x[0], x2 = x[1], x3 = x[2];
  return {(x1 && (x2 || x3)) || (!x1 && (x2 != x3)),
          x1 || (!x1 && (x2 || x3)),
          !(x1 && x2 && x3 && u) &&
              (x3 || ((x1 || !(x2 && u)) && (!x1 || (x1 != x2) || u)))};
}

inline std::array<bool, 3> unpack3(std::uint64_t bits) {
  return {(bits >> 2 & 1) != 0, (bits >> 1 & 1) != 0, (bits & 1) != 0};
}

inline std::uint64_t pack3(std::array<bool, 3> x) {
  return (std::uint64_t{x[0]} << 2) | (std::uint64_t{x[1]} << 1) | std::uint64_t{x[2]};
}

/// Every flip mask over the nodes of `b`.
inline std::vector<flipctl::FlipMask> all_masks(const flipctl::FlipSet& b, int n) {
  std::vector<flipctl::FlipMask> out;
  for (std::uint64_t sub = 0; sub < (std::uint64_t{1} << b.size()); ++sub) {
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (sub >> k & 1) bits |= flipctl::entry_bit(b[k], n);
    }
    out.push_back(flipctl::FlipMask{bits});
  }
  return out;
}

/// All successors of x under inputs and flips of b.
inline std::vector<std::pair<std::uint64_t, int>> successors(const flipctl::Network& net,
                                                              const flipctl::FlipSet& b,
                                                              std::uint64_t x) {
  std::vector<std::pair<std::uint64_t, int>> out;
  for (flipctl::FlipMask f : all_masks(b, net.nodes())) {
    for (std::uint64_t u = 0; u < (std::uint64_t{1} << net.inputs()); ++u) {
      out.emplace_back(net.step_flipped(flipctl::State{x}, flipctl::Input{u}, f).bits, f.count());
    }
  }
  return out;
}

inline std::set<std::uint64_t> forward_closure(const flipctl::Network& net,
                                               const flipctl::FlipSet& b,
                                               const std::vector<flipctl::State>& sources,
                                               bool include_sources) {
  std::set<std::uint64_t> seen;
  std::vector<std::uint64_t> stack;
  for (flipctl::State s : sources) {
    for (auto [y, flips] : successors(net, b, s.bits)) {
      (void)flips;
      if (seen.insert(y).second) stack.push_back(y);
    }
  }
  while (!stack.empty()) {
    const std::uint64_t x = stack.back();
    stack.pop_back();
    for (auto [y, flips] : successors(net, b, x)) {
      (void)flips;
      if (seen.insert(y).second) stack.push_back(y);
    }
  }
  if (include_sources) {
    for (flipctl::State s : sources) seen.insert(s.bits);
  }
  return seen;
}

/// States with a flip-free predecessor: the image of the update map.
inline std::set<std::uint64_t> image_set(const flipctl::Network& net) {
  std::set<std::uint64_t> out;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << net.nodes()); ++x) {
    for (std::uint64_t u = 0; u < (std::uint64_t{1} << net.inputs()); ++u) {
      out.insert(net.step(flipctl::State{x}, flipctl::Input{u}).bits);
    }
  }
  return out;
}

inline bool brute_reachable(const flipctl::Network& net, const flipctl::ReachabilitySpec& spec,
                            const flipctl::FlipSet& b, flipctl::State x0) {
  if (spec.is_target(x0)) return true;
  for (std::uint64_t y : forward_closure(net, b, {x0}, false)) {
    if (spec.is_target(flipctl::State{y})) return true;
  }
  return false;
}

struct BruteCost {
  bool reachable = false;
  std::uint64_t flips = 0;
  std::uint64_t steps = 0;
};

/// Lexicographic (flips, steps) optimum by dynamic programming over action
/// sequences: D_T(x) is the fewest flips over all sequences of at most T steps
/// that stop on first arrival in Md. Optimal paths are simple, so T = 2^n
/// suffices; the step count is the first T attaining the optimum.
inline std::vector<BruteCost> brute_min_flip(const flipctl::Network& net,
                                             const flipctl::ReachabilitySpec& spec,
                                             const flipctl::FlipSet& b) {
  constexpr std::uint64_t inf = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t states = std::uint64_t{1} << net.nodes();
  std::vector<std::vector<std::pair<std::uint64_t, int>>> succ(states);
  for (std::uint64_t x = 0; x < states; ++x) succ[x] = successors(net, b, x);

  std::vector<std::uint64_t> d(states, inf);
  for (std::uint64_t x = 0; x < states; ++x) {
    if (spec.is_target(flipctl::State{x})) d[x] = 0;
  }
  std::vector<std::vector<std::uint64_t>> layers{d};
  for (std::uint64_t t = 1; t <= states; ++t) {
    std::vector<std::uint64_t> next = layers.back();
    for (std::uint64_t x = 0; x < states; ++x) {
      if (spec.is_target(flipctl::State{x})) continue;
      for (auto [y, flips] : succ[x]) {
        const std::uint64_t prev = layers.back()[y];
        if (prev != inf) next[x] = std::min(next[x], prev + static_cast<std::uint64_t>(flips));
      }
    }
    layers.push_back(std::move(next));
  }
  std::vector<BruteCost> out(states);
  for (std::uint64_t x = 0; x < states; ++x) {
    const std::uint64_t best = layers.back()[x];
    if (best == inf) continue;
    out[x].reachable = true;
    out[x].flips = best;
    for (std::uint64_t t = 0; t < layers.size(); ++t) {
      if (layers[t][x] == best) {
        out[x].steps = t;
        break;
      }
    }
  }
  return out;
}

/// Random update expression over x1..xn and u1..um.
inline flipctl::BoolExpr random_expr(int n, int m, int depth, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 99);
  if (depth == 0 || pick(rng) < 25) {
    const int r = std::uniform_int_distribution<int>(0, n + m - 1)(rng);
    return r < n ? flipctl::BoolExpr::node(r + 1) : flipctl::BoolExpr::input(r - n + 1);
  }
  const int op = pick(rng) % 4;
  if (op == 0) return !random_expr(n, m, depth - 1, rng);
  flipctl::BoolExpr lhs = random_expr(n, m, depth - 1, rng);
  flipctl::BoolExpr rhs = random_expr(n, m, depth - 1, rng);
  if (op == 1) return lhs & rhs;
  if (op == 2) return lhs ^ rhs;
  return lhs | rhs;
}

inline flipctl::Network random_network(int n, int m, std::mt19937_64& rng) {
  std::vector<flipctl::BoolExpr> updates;
  for (int i = 0; i < n; ++i) updates.push_back(random_expr(n, m, 3, rng));
  return flipctl::Network(n, m, std::move(updates));
}

/// Random nonempty subset of [0, 2^n), as states.
inline std::vector<flipctl::State> random_states(int n, std::mt19937_64& rng, int max_count) {
  const std::uint64_t states = std::uint64_t{1} << n;
  const int count = std::uniform_int_distribution<int>(
      1, std::min<int>(max_count, static_cast<int>(states)))(rng);
  std::set<std::uint64_t> picked;
  while (static_cast<int>(picked.size()) < count) {
    picked.insert(std::uniform_int_distribution<std::uint64_t>(0, states - 1)(rng));
  }
  std::vector<flipctl::State> out;
  for (std::uint64_t x : picked) out.push_back(flipctl::State{x});
  return out;
}

/// Random B with |B| <= max_size over nodes 1..n.
inline flipctl::FlipSet random_flip_set(int n, int max_size, std::mt19937_64& rng) {
  const int size = std::uniform_int_distribution<int>(0, std::min(n, max_size))(rng);
  std::vector<int> nodes(n);
  for (int i = 0; i < n; ++i) nodes[i] = i + 1;
  std::shuffle(nodes.begin(), nodes.end(), rng);
  flipctl::FlipSet b(nodes.begin(), nodes.begin() + size);
  std::sort(b.begin(), b.end());
  return b;
}

}  // namespace testsupport
