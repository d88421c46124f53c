#include "flipctl/problem.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <optional>

#include "flipctl/error.hpp"
#include "text_util.hpp"

namespace flipctl {

std::string format_flip_set(const FlipSet& set) {
  return fmt::format("{{{}}}", fmt::join(set, ","));
}

FlipSet parse_flip_set(std::string_view text) {
  std::string_view body = trim(text);
  if (body.starts_with('{')) {
    if (!body.ends_with('}')) throw InvalidArgument(fmt::format("unbalanced braces in '{}'", text));
    body = body.substr(1, body.size() - 2);
  }
  FlipSet out;
  std::string cleaned(body);
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  for (std::string_view tok : split_ws(cleaned)) {
    const auto value = parse_number<int>(tok);
    if (!value || *value < 1) {
      throw InvalidArgument(fmt::format("invalid node index '{}' in flip set '{}'", tok, text));
    }
    out.push_back(*value);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_subset(const FlipSet& inner, const FlipSet& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

ReachabilitySpec::ReachabilitySpec(int nodes, std::vector<State> initial,
                                   std::vector<State> targets)
    : nodes_(nodes), initial_(std::move(initial)), targets_(std::move(targets)) {
  if (initial_.empty()) throw InvalidArgument("initial set M0 is empty");
  if (targets_.empty()) throw InvalidArgument("target set Md is empty");
  const std::uint64_t mask = width_mask(nodes_);
  for (const auto* set : {&initial_, &targets_}) {
    for (State x : *set) {
      if (x.bits & ~mask) {
        throw InvalidArgument(fmt::format("state {:#x} has bits beyond {} nodes", x.bits, nodes_));
      }
    }
  }
  for (auto* set : {&initial_, &targets_}) {
    std::sort(set->begin(), set->end());
    set->erase(std::unique(set->begin(), set->end()), set->end());
  }
  target_lookup_.reserve(targets_.size());
  for (State x : targets_) target_lookup_.insert(x.bits);
}

bool ReachabilitySpec::is_initial(State x) const {
  return std::binary_search(initial_.begin(), initial_.end(), x);
}

namespace {

struct Statement {
  std::string key;
  std::string value;
  std::size_t line;
};

// Joins continuation lines until braces balance.
std::vector<Statement> read_statements(std::string_view text) {
  std::vector<Statement> out;
  std::optional<Statement> open;
  int depth = 0;
  std::size_t line_no = 0;
  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (!open) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected '<key> = <value>'", line_no);
      open = Statement{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))),
                       line_no};
    } else {
      open->value += ' ';
      open->value += line;
    }
    depth = 0;
    for (char c : open->value) {
      if (c == '{') ++depth;
      if (c == '}') --depth;
    }
    if (depth < 0) throw ParseError("unbalanced '}'", line_no);
    if (depth == 0) {
      out.push_back(std::move(*open));
      open.reset();
    }
  }
  if (open) throw ParseError("unterminated '{'", open->line);
  return out;
}

std::string_view set_body(const Statement& st) {
  std::string_view v = trim(st.value);
  if (!v.starts_with('{') || !v.ends_with('}')) {
    throw ParseError(fmt::format("{} must be a braced set", st.key), st.line);
  }
  return v.substr(1, v.size() - 2);
}

std::vector<std::string_view> set_items(const Statement& st) {
  std::vector<std::string_view> items;
  for (std::string_view part : split(set_body(st), ',')) {
    part = trim(part);
    if (!part.empty()) items.push_back(part);
  }
  return items;
}

std::vector<State> parse_state_set(const Statement& st, int nodes) {
  std::vector<State> states;
  for (std::string_view item : set_items(st)) {
    try {
      states.push_back(parse_state(item, nodes));
    } catch (const InvalidArgument& e) {
      throw ParseError(fmt::format("{}: {}", st.key, e.what()), st.line);
    }
  }
  if (states.empty()) throw ParseError(fmt::format("{} is empty", st.key), st.line);
  return states;
}

FlipSet parse_node_set(const Statement& st, int nodes) {
  FlipSet out;
  for (std::string_view item : set_items(st)) {
    const auto v = parse_number<int>(item);
    if (!v || *v < 1 || *v > nodes) {
      throw ParseError(fmt::format("{}: node index '{}' out of range [1,{}]", st.key, item, nodes),
                       st.line);
    }
    out.push_back(*v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<FlipSet> parse_blocks(const Statement& st, int nodes) {
  std::vector<FlipSet> blocks;
  std::vector<int> owner(static_cast<std::size_t>(nodes) + 1, -1);
  for (std::string_view item : set_items(st)) {
    const auto dash = item.find('-');
    std::optional<int> lo;
    std::optional<int> hi;
    if (dash == std::string_view::npos) {
      lo = hi = parse_number<int>(item);
    } else {
      lo = parse_number<int>(item.substr(0, dash));
      hi = parse_number<int>(item.substr(dash + 1));
    }
    if (!lo || !hi || *lo < 1 || *hi > nodes || *lo > *hi) {
      throw ParseError(fmt::format("blocks: invalid range '{}'", item), st.line);
    }
    FlipSet block;
    for (int i = *lo; i <= *hi; ++i) {
      if (owner[static_cast<std::size_t>(i)] >= 0) {
        throw ParseError(fmt::format("blocks: node {} listed twice", i), st.line);
      }
      owner[static_cast<std::size_t>(i)] = static_cast<int>(blocks.size());
      block.push_back(i);
    }
    blocks.push_back(std::move(block));
  }
  for (int i = 1; i <= nodes; ++i) {
    if (owner[static_cast<std::size_t>(i)] < 0) {
      throw ParseError(fmt::format("blocks: node {} belongs to no block", i), st.line);
    }
  }
  return blocks;
}

}  // namespace

Problem parse_problem(std::string_view text, const Network& net) {
  const int n = net.nodes();
  std::map<std::string, Statement> by_key;
  for (Statement& st : read_statements(text)) {
    if (st.key != "M0" && st.key != "Md" && st.key != "A" && st.key != "blocks") {
      throw ParseError(fmt::format("unknown key '{}'", st.key), st.line);
    }
    if (by_key.contains(st.key)) {
      throw ParseError(fmt::format("duplicate key '{}'", st.key), st.line);
    }
    std::string key = st.key;
    by_key.emplace(std::move(key), std::move(st));
  }
  for (const char* key : {"M0", "Md", "A"}) {
    if (!by_key.contains(key)) throw ParseError(fmt::format("missing '{}'", key), 1);
  }

  std::vector<State> targets = parse_state_set(by_key.at("Md"), n);
  const Statement& m0 = by_key.at("M0");
  std::vector<State> initial;
  const std::string_view m0_value = trim(m0.value);
  if (m0_value.starts_with("complement")) {
    std::string compact;
    for (char c : m0_value) {
      if (c != ' ' && c != '\t') compact += c;
    }
    if (compact != "complement(Md)") {
      throw ParseError("only complement(Md) is supported", m0.line);
    }
    if (n > kMaxEnumeratedNodes) {
      throw ParseError(fmt::format("complement(Md) needs n <= {}, network has {} nodes",
                                   kMaxEnumeratedNodes, n),
                       m0.line);
    }
    std::unordered_set<std::uint64_t> target_bits;
    for (State x : targets) target_bits.insert(x.bits);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
      if (!target_bits.contains(s)) initial.push_back(State{s});
    }
    if (initial.empty()) throw ParseError("complement(Md) is empty", m0.line);
  } else {
    initial = parse_state_set(m0, n);
  }

  Problem problem{ReachabilitySpec(n, std::move(initial), std::move(targets)),
                  parse_node_set(by_key.at("A"), n),
                  {}};
  if (const auto it = by_key.find("blocks"); it != by_key.end()) {
    problem.blocks = parse_blocks(it->second, n);
  }
  return problem;
}

Problem load_problem(const std::filesystem::path& path, const Network& net) {
  const std::string text = read_text_file(path);
  try {
    return parse_problem(text, net);
  } catch (const ParseError& e) {
    throw e.in_file(path.string());
  }
}

}  // namespace flipctl
