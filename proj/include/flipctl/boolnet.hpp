#pragma once

// Boolean control networks with state-flipped control.
//
// States, inputs and flip masks are packed into 64-bit words with entry 1 in
// the most significant used bit: for a vector of width w, entry i (1-based)
// lives at bit (w - i). The packed word of a state is therefore also its
// zero-based integer index, and the textual form "x1 x2 ... xn" reads left to
// right.

#include <bit>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flipctl {

inline constexpr int kMaxNodes = 63;
inline constexpr int kMaxInputs = 31;

struct State {
  std::uint64_t bits = 0;
  friend auto operator<=>(const State&, const State&) = default;
};

struct Input {
  std::uint64_t bits = 0;
  friend auto operator<=>(const Input&, const Input&) = default;
};

/// Set of nodes negated before the update fires, packed like a State.
struct FlipMask {
  std::uint64_t bits = 0;
  int count() const noexcept { return std::popcount(bits); }
  bool empty() const noexcept { return bits == 0; }
  friend auto operator<=>(const FlipMask&, const FlipMask&) = default;
};

constexpr std::uint64_t entry_bit(int index, int width) noexcept {
  return std::uint64_t{1} << (width - index);
}

constexpr std::uint64_t width_mask(int width) noexcept {
  return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

/// "0101"-style text of a packed vector, entry 1 first.
std::string format_bits(std::uint64_t bits, int width);
/// Inverse of format_bits; throws InvalidArgument on wrong length or characters.
std::uint64_t parse_bits(std::string_view text, int width);

inline std::string to_string(State x, int nodes) { return format_bits(x.bits, nodes); }
inline State parse_state(std::string_view text, int nodes) {
  return State{parse_bits(text, nodes)};
}

/// Packs 1-based node indices; throws InvalidArgument if any index is outside [1, nodes].
FlipMask make_flip_mask(std::span<const int> nodes_to_flip, int nodes);
std::vector<int> flip_nodes(FlipMask mask, int nodes);

/// Negates exactly the nodes in `mask`.
State apply_flip(State x, FlipMask mask, int nodes);

/// Boolean expression over node variables x1..xn, inputs u1..um and the
/// constants 0/1, stored in postfix order. Two expressions are equal iff
/// their trees are structurally identical.
class BoolExpr {
 public:
  enum class Op : std::uint8_t { Const, Node, Input, Not, And, Xor, Or };
  struct Term {
    Op op = Op::Const;
    std::uint32_t arg = 0;
    friend bool operator==(const Term&, const Term&) = default;
  };

  static BoolExpr constant(bool value);
  static BoolExpr node(int index);
  static BoolExpr input(int index);

  friend BoolExpr operator!(BoolExpr e);
  friend BoolExpr operator&(BoolExpr lhs, const BoolExpr& rhs);
  friend BoolExpr operator^(BoolExpr lhs, const BoolExpr& rhs);
  friend BoolExpr operator|(BoolExpr lhs, const BoolExpr& rhs);

  std::span<const Term> terms() const noexcept { return terms_; }
  int max_node() const noexcept;
  int max_input() const noexcept;

  /// No dimension checks; callers guarantee every referenced index fits.
  bool evaluate(State x, Input u, int nodes, int inputs) const noexcept;

  /// Canonical infix text using the minimum parentheses for the fixed
  /// precedence ! & ^ | (tightest first).
  std::string to_string() const;

  friend bool operator==(const BoolExpr&, const BoolExpr&) = default;

 private:
  void combine(Op op, const BoolExpr& rhs);

  std::vector<Term> terms_;
  int depth_ = 0;
};

/// A network of `nodes` update functions over `inputs` control inputs.
/// Immutable after construction.
class Network {
 public:
  /// Throws InvalidArgument unless there are exactly `nodes` updates and every
  /// referenced index is in range.
  Network(int nodes, int inputs, std::vector<BoolExpr> updates);

  int nodes() const noexcept { return nodes_; }
  int inputs() const noexcept { return inputs_; }
  std::span<const BoolExpr> updates() const noexcept { return updates_; }
  const BoolExpr& update(int node) const { return updates_.at(node - 1); }

  /// Synchronous update x(t+1) = f(x(t), u(t)). Throws InvalidArgument when
  /// x or u has bits outside the network's dimensions.
  State step(State x, Input u) const;
  /// Flip first, then update.
  State step_flipped(State x, Input u, FlipMask mask) const;

  /// Unchecked variants for inner loops.
  State next(State x, Input u) const noexcept;
  State next_flipped(State x, Input u, FlipMask mask) const noexcept {
    return next(State{x.bits ^ mask.bits}, u);
  }

  friend bool operator==(const Network& a, const Network& b) {
    return a.nodes_ == b.nodes_ && a.inputs_ == b.inputs_ && a.updates_ == b.updates_;
  }

 private:
  int nodes_;
  int inputs_;
  std::vector<BoolExpr> updates_;
};

/// Parses the line-oriented network format:
///
///   nodes: <n>
///   inputs: <m>
///   x<i>' = <expr>      (n lines, any order)
///
/// `#` starts a comment; blank lines are ignored. Throws ParseError with the
/// offending line and column.
Network parse_network(std::string_view text);
Network load_network(const std::filesystem::path& path);
/// Canonical text; parse_network(format_network(net)) == net.
std::string format_network(const Network& net);

inline State eval_update(const Network& net, State x, Input u) { return net.step(x, u); }
inline State step_flipped(const Network& net, State x, Input u, FlipMask mask) {
  return net.step_flipped(x, u, mask);
}

/// Reads a whole file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace flipctl
