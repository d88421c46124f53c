#include "flipctl/boolnet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "flipctl/error.hpp"
#include "text_util.hpp"

namespace flipctl {

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : Error(column > 0 ? fmt::format("line {}, column {}: {}", line, column, message)
                       : fmt::format("line {}: {}", line, message)),
      line_(line),
      column_(column) {}

ParseError::ParseError(const std::string& message, std::size_t line)
    : ParseError(message, line, 0) {}

ParseError ParseError::in_file(const std::string& file) const {
  return ParseError(Raw{}, fmt::format("{}: {}", file, what()), line_, column_);
}

std::string format_bits(std::uint64_t bits, int width) {
  std::string out(static_cast<std::size_t>(width), '0');
  for (int i = 1; i <= width; ++i) {
    if (bits & entry_bit(i, width)) out[static_cast<std::size_t>(i - 1)] = '1';
  }
  return out;
}

std::uint64_t parse_bits(std::string_view text, int width) {
  if (static_cast<int>(text.size()) != width) {
    throw InvalidArgument(
        fmt::format("binary string '{}' has length {}, expected {}", text, text.size(), width));
  }
  std::uint64_t bits = 0;
  for (int i = 1; i <= width; ++i) {
    const char c = text[static_cast<std::size_t>(i - 1)];
    if (c == '1') {
      bits |= entry_bit(i, width);
    } else if (c != '0') {
      throw InvalidArgument(fmt::format("binary string '{}' contains '{}'", text, c));
    }
  }
  return bits;
}

FlipMask make_flip_mask(std::span<const int> nodes_to_flip, int nodes) {
  FlipMask mask;
  for (int node : nodes_to_flip) {
    if (node < 1 || node > nodes) {
      throw InvalidArgument(fmt::format("flip index {} out of range [1,{}]", node, nodes));
    }
    mask.bits |= entry_bit(node, nodes);
  }
  return mask;
}

std::vector<int> flip_nodes(FlipMask mask, int nodes) {
  std::vector<int> out;
  for (int i = 1; i <= nodes; ++i) {
    if (mask.bits & entry_bit(i, nodes)) out.push_back(i);
  }
  return out;
}

State apply_flip(State x, FlipMask mask, int nodes) {
  if ((mask.bits & ~width_mask(nodes)) != 0) {
    throw InvalidArgument(fmt::format("flip mask has indices beyond node count {}", nodes));
  }
  return State{x.bits ^ mask.bits};
}

// ---------------------------------------------------------------------------
// BoolExpr

BoolExpr BoolExpr::constant(bool value) {
  BoolExpr e;
  e.terms_.push_back({Op::Const, value ? 1u : 0u});
  e.depth_ = 1;
  return e;
}

BoolExpr BoolExpr::node(int index) {
  BoolExpr e;
  e.terms_.push_back({Op::Node, static_cast<std::uint32_t>(index)});
  e.depth_ = 1;
  return e;
}

BoolExpr BoolExpr::input(int index) {
  BoolExpr e;
  e.terms_.push_back({Op::Input, static_cast<std::uint32_t>(index)});
  e.depth_ = 1;
  return e;
}

BoolExpr operator!(BoolExpr e) {
  e.terms_.push_back({BoolExpr::Op::Not, 0});
  return e;
}

void BoolExpr::combine(Op op, const BoolExpr& rhs) {
  depth_ = std::max(depth_, rhs.depth_ + 1);
  terms_.insert(terms_.end(), rhs.terms_.begin(), rhs.terms_.end());
  terms_.push_back({op, 0});
}

BoolExpr operator&(BoolExpr lhs, const BoolExpr& rhs) {
  lhs.combine(BoolExpr::Op::And, rhs);
  return lhs;
}

BoolExpr operator^(BoolExpr lhs, const BoolExpr& rhs) {
  lhs.combine(BoolExpr::Op::Xor, rhs);
  return lhs;
}

BoolExpr operator|(BoolExpr lhs, const BoolExpr& rhs) {
  lhs.combine(BoolExpr::Op::Or, rhs);
  return lhs;
}

int BoolExpr::max_node() const noexcept {
  int best = 0;
  for (const Term& t : terms_) {
    if (t.op == Op::Node) best = std::max(best, static_cast<int>(t.arg));
  }
  return best;
}

int BoolExpr::max_input() const noexcept {
  int best = 0;
  for (const Term& t : terms_) {
    if (t.op == Op::Input) best = std::max(best, static_cast<int>(t.arg));
  }
  return best;
}

namespace {

// Operands live in the low bits of a 64-bit word, top of stack at bit 0.
bool evaluate_packed(std::span<const BoolExpr::Term> terms, State x, Input u, int nodes,
                     int inputs) noexcept {
  using Op = BoolExpr::Op;
  std::uint64_t stack = 0;
  for (const auto& t : terms) {
    switch (t.op) {
      case Op::Const:
        stack = (stack << 1) | t.arg;
        break;
      case Op::Node:
        stack = (stack << 1) | ((x.bits >> (nodes - static_cast<int>(t.arg))) & 1u);
        break;
      case Op::Input:
        stack = (stack << 1) | ((u.bits >> (inputs - static_cast<int>(t.arg))) & 1u);
        break;
      case Op::Not:
        stack ^= 1u;
        break;
      case Op::And: {
        const std::uint64_t top = stack & 1u;
        stack >>= 1;
        stack &= ~std::uint64_t{1} | top;
        break;
      }
      case Op::Xor: {
        const std::uint64_t top = stack & 1u;
        stack >>= 1;
        stack ^= top;
        break;
      }
      case Op::Or: {
        const std::uint64_t top = stack & 1u;
        stack >>= 1;
        stack |= top;
        break;
      }
    }
  }
  return (stack & 1u) != 0;
}

bool evaluate_deep(std::span<const BoolExpr::Term> terms, State x, Input u, int nodes,
                   int inputs) {
  using Op = BoolExpr::Op;
  std::vector<char> stack;
  for (const auto& t : terms) {
    switch (t.op) {
      case Op::Const:
        stack.push_back(static_cast<char>(t.arg));
        break;
      case Op::Node:
        stack.push_back(static_cast<char>((x.bits >> (nodes - static_cast<int>(t.arg))) & 1u));
        break;
      case Op::Input:
        stack.push_back(static_cast<char>((u.bits >> (inputs - static_cast<int>(t.arg))) & 1u));
        break;
      case Op::Not:
        stack.back() ^= 1;
        break;
      default: {
        const char rhs = stack.back();
        stack.pop_back();
        char& lhs = stack.back();
        if (t.op == Op::And) lhs = static_cast<char>(lhs & rhs);
        if (t.op == Op::Xor) lhs = static_cast<char>(lhs ^ rhs);
        if (t.op == Op::Or) lhs = static_cast<char>(lhs | rhs);
      }
    }
  }
  return stack.back() != 0;
}

int precedence(BoolExpr::Op op) {
  switch (op) {
    case BoolExpr::Op::Or:
      return 1;
    case BoolExpr::Op::Xor:
      return 2;
    case BoolExpr::Op::And:
      return 3;
    case BoolExpr::Op::Not:
      return 4;
    default:
      return 5;
  }
}

}  // namespace

bool BoolExpr::evaluate(State x, Input u, int nodes, int inputs) const noexcept {
  if (depth_ <= 64) return evaluate_packed(terms_, x, u, nodes, inputs);
  return evaluate_deep(terms_, x, u, nodes, inputs);
}

std::string BoolExpr::to_string() const {
  struct Piece {
    std::string text;
    int prec;
  };
  std::vector<Piece> stack;
  auto wrap = [](const Piece& p, bool parens) {
    return parens ? "(" + p.text + ")" : p.text;
  };
  for (const Term& t : terms_) {
    switch (t.op) {
      case Op::Const:
        stack.push_back({t.arg ? "1" : "0", 5});
        break;
      case Op::Node:
        stack.push_back({fmt::format("x{}", t.arg), 5});
        break;
      case Op::Input:
        stack.push_back({fmt::format("u{}", t.arg), 5});
        break;
      case Op::Not: {
        Piece& p = stack.back();
        p.text = "!" + wrap(p, p.prec < 4);
        p.prec = 4;
        break;
      }
      default: {
        const Piece rhs = std::move(stack.back());
        stack.pop_back();
        Piece& lhs = stack.back();
        const int prec = precedence(t.op);
        const char* sym = t.op == Op::And ? " & " : t.op == Op::Xor ? " ^ " : " | ";
        // Left-associative grammar: a right operand of equal precedence needs parentheses.
        lhs.text = wrap(lhs, lhs.prec < prec) + sym + wrap(rhs, rhs.prec <= prec);
        lhs.prec = prec;
      }
    }
  }
  return stack.empty() ? std::string{} : stack.back().text;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(int nodes, int inputs, std::vector<BoolExpr> updates)
    : nodes_(nodes), inputs_(inputs), updates_(std::move(updates)) {
  if (nodes_ < 1 || nodes_ > kMaxNodes) {
    throw InvalidArgument(fmt::format("node count {} outside [1,{}]", nodes_, kMaxNodes));
  }
  if (inputs_ < 0 || inputs_ > kMaxInputs) {
    throw InvalidArgument(fmt::format("input count {} outside [0,{}]", inputs_, kMaxInputs));
  }
  if (static_cast<int>(updates_.size()) != nodes_) {
    throw InvalidArgument(
        fmt::format("network has {} update functions for {} nodes", updates_.size(), nodes_));
  }
  for (std::size_t i = 0; i < updates_.size(); ++i) {
    const BoolExpr& e = updates_[i];
    if (e.terms().empty()) throw InvalidArgument(fmt::format("update of x{} is empty", i + 1));
    for (const auto& t : e.terms()) {
      if (t.op == BoolExpr::Op::Node && (t.arg < 1 || static_cast<int>(t.arg) > nodes_)) {
        throw InvalidArgument(fmt::format("update of x{} references node index {} out of range",
                                          i + 1, t.arg));
      }
      if (t.op == BoolExpr::Op::Input && (t.arg < 1 || static_cast<int>(t.arg) > inputs_)) {
        throw InvalidArgument(fmt::format("update of x{} references input index {} out of range",
                                          i + 1, t.arg));
      }
    }
  }
}

State Network::next(State x, Input u) const noexcept {
  State out;
  for (int i = 1; i <= nodes_; ++i) {
    if (updates_[static_cast<std::size_t>(i - 1)].evaluate(x, u, nodes_, inputs_)) {
      out.bits |= entry_bit(i, nodes_);
    }
  }
  return out;
}

State Network::step(State x, Input u) const {
  if ((x.bits & ~width_mask(nodes_)) != 0) {
    throw InvalidArgument(fmt::format("state has bits beyond {} nodes", nodes_));
  }
  if ((u.bits & ~width_mask(inputs_)) != 0) {
    throw InvalidArgument(fmt::format("input has bits beyond {} inputs", inputs_));
  }
  return next(x, u);
}

State Network::step_flipped(State x, Input u, FlipMask mask) const {
  return step(apply_flip(x, mask, nodes_), u);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class ExprParser {
 public:
  ExprParser(std::string_view text, std::size_t line, std::size_t column_offset)
      : text_(text), line_(line), offset_(column_offset) {}

  BoolExpr parse_all() {
    BoolExpr e = parse_or();
    skip_space();
    if (pos_ < text_.size()) fail(fmt::format("unexpected '{}'", text_[pos_]));
    return e;
  }

  // Index references collected for range validation with positions.
  struct Reference {
    bool is_input;
    int index;
    std::size_t column;
  };
  const std::vector<Reference>& references() const { return refs_; }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, line_, offset_ + pos_ + 1);
  }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  BoolExpr parse_or() {
    BoolExpr e = parse_xor();
    while (accept('|')) e = e | parse_xor();
    return e;
  }

  BoolExpr parse_xor() {
    BoolExpr e = parse_and();
    while (accept('^')) e = e ^ parse_and();
    return e;
  }

  BoolExpr parse_and() {
    BoolExpr e = parse_unary();
    while (accept('&')) e = e & parse_unary();
    return e;
  }

  BoolExpr parse_unary() {
    if (accept('!')) return !parse_unary();
    return parse_primary();
  }

  BoolExpr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      BoolExpr e = parse_or();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (c == '0' || c == '1') {
      ++pos_;
      return BoolExpr::constant(c == '1');
    }
    if (c == 'x' || c == 'u') {
      const std::size_t start = pos_;
      ++pos_;
      const std::size_t digits = pos_;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
      if (pos_ == digits) {
        pos_ = start;
        fail(fmt::format("expected an index after '{}'", c));
      }
      int index = 0;
      const auto res = std::from_chars(text_.data() + digits, text_.data() + pos_, index);
      if (res.ec != std::errc{} || index < 1) {
        pos_ = start;
        fail(fmt::format("invalid variable '{}'", text_.substr(start, pos_ - start)));
      }
      refs_.push_back({c == 'u', index, offset_ + start + 1});
      return c == 'x' ? BoolExpr::node(index) : BoolExpr::input(index);
    }
    fail(fmt::format("unexpected '{}'", c));
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t offset_;
  std::size_t pos_ = 0;
  std::vector<Reference> refs_;
};

std::optional<int> parse_header(std::string_view line, std::string_view key) {
  if (!line.starts_with(key)) return std::nullopt;
  std::string_view rest = trim(line.substr(key.size()));
  if (!rest.starts_with(':')) return std::nullopt;
  rest = trim(rest.substr(1));
  int value = -1;
  const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), value);
  if (res.ec != std::errc{} || res.ptr != rest.data() + rest.size()) return std::nullopt;
  return value;
}

}  // namespace

Network parse_network(std::string_view text) {
  std::optional<int> nodes;
  std::optional<int> inputs;
  std::vector<std::optional<BoolExpr>> updates;
  std::size_t update_count = 0;

  std::size_t line_no = 0;
  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (!nodes) {
      nodes = parse_header(line, "nodes");
      if (!nodes) throw ParseError("expected 'nodes: <n>'", line_no);
      if (*nodes < 1 || *nodes > kMaxNodes) {
        throw ParseError(fmt::format("node count must be in [1,{}]", kMaxNodes), line_no);
      }
      updates.resize(static_cast<std::size_t>(*nodes));
      continue;
    }
    if (!inputs) {
      inputs = parse_header(line, "inputs");
      if (!inputs) throw ParseError("expected 'inputs: <m>'", line_no);
      if (*inputs < 0 || *inputs > kMaxInputs) {
        throw ParseError(fmt::format("input count must be in [0,{}]", kMaxInputs), line_no);
      }
      continue;
    }

    // x<i>' = <expr>
    const std::size_t indent = static_cast<std::size_t>(line.data() - raw.data());
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected \"x<i>' = <expr>\"", line_no, indent + 1);
    }
    const std::string_view lhs = trim(line.substr(0, eq));
    int target = 0;
    if (lhs.size() < 3 || lhs.front() != 'x' || lhs.back() != '\'') {
      throw ParseError("left-hand side must look like x<i>'", line_no, indent + 1);
    }
    const auto res = std::from_chars(lhs.data() + 1, lhs.data() + lhs.size() - 1, target);
    if (res.ec != std::errc{} || res.ptr != lhs.data() + lhs.size() - 1) {
      throw ParseError("left-hand side must look like x<i>'", line_no, indent + 1);
    }
    if (target < 1 || target > *nodes) {
      throw ParseError(fmt::format("x{}: node index {} out of range [1,{}]", target, target, *nodes),
                       line_no, indent + 1);
    }
    if (updates[static_cast<std::size_t>(target - 1)]) {
      throw ParseError(fmt::format("duplicate update for x{}", target), line_no, indent + 1);
    }

    const std::string_view rhs = line.substr(eq + 1);
    ExprParser parser(rhs, line_no, indent + eq + 1);
    BoolExpr expr = parser.parse_all();
    for (const auto& ref : parser.references()) {
      const int limit = ref.is_input ? *inputs : *nodes;
      if (ref.index > limit) {
        throw ParseError(fmt::format("{}{}: {} index {} out of range [1,{}]",
                                     ref.is_input ? 'u' : 'x', ref.index,
                                     ref.is_input ? "input" : "node", ref.index, limit),
                         line_no, ref.column);
      }
    }
    updates[static_cast<std::size_t>(target - 1)] = std::move(expr);
    ++update_count;
  }

  if (!nodes) throw ParseError("missing 'nodes: <n>' header", line_no + 1);
  if (!inputs) throw ParseError("missing 'inputs: <m>' header", line_no + 1);
  if (update_count != updates.size()) {
    std::string missing;
    for (std::size_t i = 0; i < updates.size(); ++i) {
      if (!updates[i]) missing += fmt::format("{}x{}", missing.empty() ? "" : ", ", i + 1);
    }
    throw ParseError(fmt::format("node count mismatch: {} nodes declared but {} update lines "
                                 "(missing {})",
                                 updates.size(), update_count, missing),
                     line_no + 1);
  }

  std::vector<BoolExpr> exprs;
  exprs.reserve(updates.size());
  for (auto& u : updates) exprs.push_back(std::move(*u));
  return Network(*nodes, *inputs, std::move(exprs));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Network load_network(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_network(text);
  } catch (const ParseError& e) {
    throw e.in_file(path.string());
  }
}

std::string format_network(const Network& net) {
  std::string out = fmt::format("nodes: {}\ninputs: {}\n", net.nodes(), net.inputs());
  for (int i = 1; i <= net.nodes(); ++i) {
    out += fmt::format("x{}' = {}\n", i, net.update(i).to_string());
  }
  return out;
}

}  // namespace flipctl
