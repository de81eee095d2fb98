#pragma once

// Behavior-tree model and tick interpreter for instinctive policies.
//
// A tick walks the tree depth-first. Composites aggregate child signals:
//   selector  - Success on the first child Success, else Failure
//   sequence  - Failure/Running on the first non-Success child, else Success
//   invert    - swaps Success and Failure
//   repeat    - ticks its child n times (n <= kRepeatCap), returns the last
//               signal
//   repeat-until-fail - ticks until the child fails (<= kRepeatCap times),
//               then returns Success; if the cap is hit, the last signal
// Repeat iterations beyond the first draw on one shared per-tick allowance of
// kRepeatCap - 1, so nodes_visited <= node_count * kRepeatCap holds even for
// nested repeat decorators.
//   parallel selector/sequence - tick every child in order, then aggregate
//               (any-Success / all-Success)
// Conditions compare one observation feature against a threshold. The first
// action node ticked decides the step: it records its action id and the whole
// tick unwinds immediately, every ancestor returning Success. One tick can
// therefore choose at most one action; a tick with no chosen action means the
// tree leaves the step to the learner.
//
// Trees are plain values, immutable by convention after construction; the
// canonical text form is an s-expression, e.g. (sel (cond 0 < 0.25) (act 1)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evorl/text.hpp"

namespace evorl {

using Observation = std::vector<double>;

enum class Signal : std::uint8_t { Success, Failure, Running };

enum class NodeKind : std::uint8_t {
  Selector,
  Sequence,
  Invert,
  Repeat,
  RepeatUntilFail,
  ParallelSelector,
  ParallelSequence,
  Condition,
  Action,
};

enum class Comparator : std::uint8_t { Less, GreaterEq };

// Bounded repeats keep every tick finite.
inline constexpr int kRepeatCap = 16;

struct BtNode {
  NodeKind kind = NodeKind::Action;
  int feature = 0;                      // Condition
  Comparator cmp = Comparator::Less;    // Condition
  double threshold = 0.0;               // Condition
  int action = 0;                       // Action
  int repeat_count = 1;                 // Repeat
  std::vector<BtNode> children;

  friend bool operator==(const BtNode&, const BtNode&) = default;
};

struct TickResult {
  Signal signal = Signal::Failure;
  std::optional<int> chosen_action;
  int nodes_visited = 0;
};

struct BtLimits {
  int max_depth = 6;
  int max_nodes = 64;
};

inline bool is_leaf(NodeKind k) {
  return k == NodeKind::Condition || k == NodeKind::Action;
}

inline bool is_single_child(NodeKind k) {
  return k == NodeKind::Invert || k == NodeKind::Repeat ||
         k == NodeKind::RepeatUntilFail;
}

inline int node_count(const BtNode& n) {
  int c = 1;
  for (const auto& ch : n.children) c += node_count(ch);
  return c;
}

// Depth in levels; a lone leaf has depth 1.
inline int tree_depth(const BtNode& n) {
  int d = 0;
  for (const auto& ch : n.children) d = std::max(d, tree_depth(ch));
  return d + 1;
}

namespace detail {

inline void validate_node(const BtNode& n, int state_dim, int action_count) {
  const auto arity = n.children.size();
  if (is_leaf(n.kind)) {
    if (arity != 0)
      throw std::invalid_argument("behavior tree: leaf node with children");
  } else if (is_single_child(n.kind)) {
    if (arity != 1)
      throw std::invalid_argument(
          "behavior tree: decorator must have exactly one child");
  } else {
    if (arity < 1)
      throw std::invalid_argument(
          "behavior tree: composite node needs at least one child");
  }
  switch (n.kind) {
    case NodeKind::Condition:
      if (n.feature < 0 || n.feature >= state_dim)
        throw std::invalid_argument(
            "behavior tree: condition feature out of range");
      if (!std::isfinite(n.threshold))
        throw std::invalid_argument(
            "behavior tree: condition threshold not finite");
      break;
    case NodeKind::Action:
      if (n.action < 0 || n.action >= action_count)
        throw std::invalid_argument("behavior tree: action id out of range");
      break;
    case NodeKind::Repeat:
      if (n.repeat_count < 1 || n.repeat_count > kRepeatCap)
        throw std::invalid_argument(
            "behavior tree: repeat count outside [1, cap]");
      break;
    default:
      break;
  }
  for (const auto& ch : n.children) validate_node(ch, state_dim, action_count);
}

}  // namespace detail

// Structural + bounds validation. Throws std::invalid_argument.
inline void validate_tree(const BtNode& root, int state_dim, int action_count,
                          const BtLimits& limits = {}) {
  detail::validate_node(root, state_dim, action_count);
  if (tree_depth(root) > limits.max_depth)
    throw std::invalid_argument("behavior tree: depth exceeds limit");
  if (node_count(root) > limits.max_nodes)
    throw std::invalid_argument("behavior tree: node count exceeds limit");
}

namespace detail {

struct TickCtx {
  const Observation* obs;
  std::optional<int> action;
  int visited = 0;
  int repeat_allowance = kRepeatCap - 1;
};

inline Signal tick_node(const BtNode& n, TickCtx& ctx) {
  ++ctx.visited;
  switch (n.kind) {
    case NodeKind::Condition: {
      const double x = (*ctx.obs)[static_cast<std::size_t>(n.feature)];
      const bool ok =
          n.cmp == Comparator::Less ? x < n.threshold : x >= n.threshold;
      return ok ? Signal::Success : Signal::Failure;
    }
    case NodeKind::Action:
      ctx.action = n.action;
      return Signal::Success;
    case NodeKind::Selector:
      for (const auto& ch : n.children) {
        const Signal s = tick_node(ch, ctx);
        if (ctx.action) return Signal::Success;
        if (s != Signal::Failure) return s;
      }
      return Signal::Failure;
    case NodeKind::Sequence:
      for (const auto& ch : n.children) {
        const Signal s = tick_node(ch, ctx);
        if (ctx.action) return Signal::Success;
        if (s != Signal::Success) return s;
      }
      return Signal::Success;
    case NodeKind::Invert: {
      const Signal s = tick_node(n.children[0], ctx);
      if (ctx.action) return Signal::Success;
      if (s == Signal::Success) return Signal::Failure;
      if (s == Signal::Failure) return Signal::Success;
      return Signal::Running;
    }
    case NodeKind::Repeat: {
      const int reps = std::min(n.repeat_count, kRepeatCap);
      Signal last = tick_node(n.children[0], ctx);
      if (ctx.action) return Signal::Success;
      for (int i = 1; i < reps && ctx.repeat_allowance > 0; ++i) {
        --ctx.repeat_allowance;
        last = tick_node(n.children[0], ctx);
        if (ctx.action) return Signal::Success;
      }
      return last;
    }
    case NodeKind::RepeatUntilFail: {
      Signal last = tick_node(n.children[0], ctx);
      if (ctx.action) return Signal::Success;
      if (last == Signal::Failure) return Signal::Success;
      for (int i = 1; i < kRepeatCap && ctx.repeat_allowance > 0; ++i) {
        --ctx.repeat_allowance;
        last = tick_node(n.children[0], ctx);
        if (ctx.action) return Signal::Success;
        if (last == Signal::Failure) return Signal::Success;
      }
      return last;
    }
    case NodeKind::ParallelSelector: {
      bool any = false;
      for (const auto& ch : n.children) {
        const Signal s = tick_node(ch, ctx);
        if (ctx.action) return Signal::Success;
        any = any || s == Signal::Success;
      }
      return any ? Signal::Success : Signal::Failure;
    }
    case NodeKind::ParallelSequence: {
      bool all = true;
      for (const auto& ch : n.children) {
        const Signal s = tick_node(ch, ctx);
        if (ctx.action) return Signal::Success;
        all = all && s == Signal::Success;
      }
      return all ? Signal::Success : Signal::Failure;
    }
  }
  throw std::invalid_argument("behavior tree: unknown node kind");
}

}  // namespace detail

inline TickResult tick(const BtNode& root, const Observation& obs) {
  detail::TickCtx ctx{&obs, std::nullopt, 0};
  const Signal s = detail::tick_node(root, ctx);
  return TickResult{s, ctx.action, ctx.visited};
}

// ---------------------------------------------------------------------------
// S-expression serialization
//   (sel ...) (seq ...) (inv c) (rep N c) (ruf c) (psel ...) (pseq ...)
//   (cond F < T) (cond F >= T) (act A)
// Thresholds round-trip bit-exactly.

namespace detail {

inline std::string_view kind_word(NodeKind k) {
  switch (k) {
    case NodeKind::Selector: return "sel";
    case NodeKind::Sequence: return "seq";
    case NodeKind::Invert: return "inv";
    case NodeKind::Repeat: return "rep";
    case NodeKind::RepeatUntilFail: return "ruf";
    case NodeKind::ParallelSelector: return "psel";
    case NodeKind::ParallelSequence: return "pseq";
    case NodeKind::Condition: return "cond";
    case NodeKind::Action: return "act";
  }
  return "?";
}

inline void write_sexpr(const BtNode& n, std::string& out) {
  out.push_back('(');
  out += kind_word(n.kind);
  if (n.kind == NodeKind::Condition) {
    out += ' ' + std::to_string(n.feature);
    out += n.cmp == Comparator::Less ? " < " : " >= ";
    out += format_double(n.threshold);
  } else if (n.kind == NodeKind::Action) {
    out += ' ' + std::to_string(n.action);
  } else if (n.kind == NodeKind::Repeat) {
    out += ' ' + std::to_string(n.repeat_count);
  }
  for (const auto& ch : n.children) {
    out.push_back(' ');
    write_sexpr(ch, out);
  }
  out.push_back(')');
}

struct SexprParser {
  std::string_view src;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t' ||
                                src[pos] == '\n' || src[pos] == '\r'))
      ++pos;
  }

  char peek() {
    if (pos >= src.size())
      throw std::invalid_argument("behavior tree parse: unexpected end");
    return src[pos];
  }

  void expect(char c) {
    if (peek() != c)
      throw std::invalid_argument(std::string("behavior tree parse: expected '") +
                                  c + "'");
    ++pos;
  }

  std::string_view atom() {
    skip_ws();
    const std::size_t start = pos;
    while (pos < src.size() && src[pos] != '(' && src[pos] != ')' &&
           src[pos] != ' ' && src[pos] != '\t' && src[pos] != '\n' &&
           src[pos] != '\r')
      ++pos;
    if (pos == start)
      throw std::invalid_argument("behavior tree parse: expected atom");
    return src.substr(start, pos - start);
  }

  BtNode node() {
    skip_ws();
    expect('(');
    const std::string_view word = atom();
    BtNode n;
    if (word == "sel") n.kind = NodeKind::Selector;
    else if (word == "seq") n.kind = NodeKind::Sequence;
    else if (word == "inv") n.kind = NodeKind::Invert;
    else if (word == "rep") n.kind = NodeKind::Repeat;
    else if (word == "ruf") n.kind = NodeKind::RepeatUntilFail;
    else if (word == "psel") n.kind = NodeKind::ParallelSelector;
    else if (word == "pseq") n.kind = NodeKind::ParallelSequence;
    else if (word == "cond") n.kind = NodeKind::Condition;
    else if (word == "act") n.kind = NodeKind::Action;
    else
      throw std::invalid_argument("behavior tree parse: unknown node '" +
                                  std::string(word) + "'");
    if (n.kind == NodeKind::Condition) {
      n.feature = static_cast<int>(parse_long(atom()));
      const std::string_view op = atom();
      if (op == "<") n.cmp = Comparator::Less;
      else if (op == ">=") n.cmp = Comparator::GreaterEq;
      else
        throw std::invalid_argument("behavior tree parse: bad comparator '" +
                                    std::string(op) + "'");
      n.threshold = parse_double(atom());
    } else if (n.kind == NodeKind::Action) {
      n.action = static_cast<int>(parse_long(atom()));
    } else if (n.kind == NodeKind::Repeat) {
      n.repeat_count = static_cast<int>(parse_long(atom()));
    }
    skip_ws();
    while (peek() != ')') {
      n.children.push_back(node());
      skip_ws();
    }
    expect(')');
    // Structural arity only; env-dependent bounds go through validate_tree.
    if (is_leaf(n.kind) && !n.children.empty())
      throw std::invalid_argument("behavior tree parse: leaf with children");
    if (is_single_child(n.kind) && n.children.size() != 1)
      throw std::invalid_argument(
          "behavior tree parse: decorator needs one child");
    if (!is_leaf(n.kind) && !is_single_child(n.kind) && n.children.empty())
      throw std::invalid_argument(
          "behavior tree parse: composite needs a child");
    return n;
  }
};

}  // namespace detail

inline std::string to_sexpr(const BtNode& root) {
  std::string out;
  detail::write_sexpr(root, out);
  return out;
}

inline BtNode parse_sexpr(std::string_view text) {
  detail::SexprParser p{text};
  BtNode root = p.node();
  p.skip_ws();
  if (p.pos != text.size())
    throw std::invalid_argument("behavior tree parse: trailing input");
  return root;
}

// ---------------------------------------------------------------------------
// Preorder indexing, used by the variation operators.

namespace detail {

inline BtNode* nth_node(BtNode& n, int& index) {
  if (index == 0) return &n;
  --index;
  for (auto& ch : n.children) {
    if (BtNode* hit = nth_node(ch, index)) return hit;
  }
  return nullptr;
}

inline int nth_node_depth(const BtNode& n, int& index, int depth) {
  if (index == 0) return depth;
  --index;
  for (const auto& ch : n.children) {
    const int d = nth_node_depth(ch, index, depth + 1);
    if (d > 0) return d;
  }
  return 0;
}

}  // namespace detail

// Preorder node access; index must be in [0, node_count).
inline BtNode& node_at(BtNode& root, int preorder_index) {
  int i = preorder_index;
  BtNode* n = detail::nth_node(root, i);
  if (!n) throw std::out_of_range("behavior tree: node index out of range");
  return *n;
}

// 1-based depth of the node at the given preorder index.
inline int depth_of_node(const BtNode& root, int preorder_index) {
  int i = preorder_index;
  const int d = detail::nth_node_depth(root, i, 1);
  if (d == 0) throw std::out_of_range("behavior tree: node index out of range");
  return d;
}

}  // namespace evorl
