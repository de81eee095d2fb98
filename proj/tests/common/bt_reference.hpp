#pragma once

// Independent reference interpreter for behavior trees, written against the
// documented semantics rather than the library implementation: child results
// are combined functionally (no shared tick context), and action abortion is
// modelled by checking each child result for a chosen action.

#include <optional>
#include <vector>

#include "evorl/behavior_tree.hpp"

namespace btref {

struct RefOut {
  evorl::Signal sig = evorl::Signal::Failure;
  std::optional<int> act;
};

// `allowance` models the shared per-tick budget for repeat iterations beyond
// each decorator's first one.
inline RefOut ref_tick_impl(const evorl::BtNode& n,
                            const evorl::Observation& obs, int& allowance) {
  using evorl::NodeKind;
  using evorl::Signal;
  switch (n.kind) {
    case NodeKind::Action:
      return {Signal::Success, n.action};
    case NodeKind::Condition: {
      const double x = obs[static_cast<std::size_t>(n.feature)];
      const bool ok = n.cmp == evorl::Comparator::Less ? x < n.threshold
                                                       : x >= n.threshold;
      return {ok ? Signal::Success : Signal::Failure, std::nullopt};
    }
    case NodeKind::Selector: {
      for (const auto& c : n.children) {
        const RefOut r = ref_tick_impl(c, obs, allowance);
        if (r.act) return {Signal::Success, r.act};
        if (r.sig != Signal::Failure) return r;
      }
      return {Signal::Failure, std::nullopt};
    }
    case NodeKind::Sequence: {
      for (const auto& c : n.children) {
        const RefOut r = ref_tick_impl(c, obs, allowance);
        if (r.act) return {Signal::Success, r.act};
        if (r.sig != Signal::Success) return r;
      }
      return {Signal::Success, std::nullopt};
    }
    case NodeKind::Invert: {
      const RefOut r = ref_tick_impl(n.children[0], obs, allowance);
      if (r.act) return {Signal::Success, r.act};
      if (r.sig == Signal::Success) return {Signal::Failure, std::nullopt};
      if (r.sig == Signal::Failure) return {Signal::Success, std::nullopt};
      return r;
    }
    case NodeKind::Repeat: {
      RefOut last = ref_tick_impl(n.children[0], obs, allowance);
      if (last.act) return {Signal::Success, last.act};
      const int reps = std::min(n.repeat_count, evorl::kRepeatCap);
      for (int i = 1; i < reps && allowance > 0; ++i) {
        --allowance;
        last = ref_tick_impl(n.children[0], obs, allowance);
        if (last.act) return {Signal::Success, last.act};
      }
      return last;
    }
    case NodeKind::RepeatUntilFail: {
      RefOut last = ref_tick_impl(n.children[0], obs, allowance);
      if (last.act) return {Signal::Success, last.act};
      if (last.sig == Signal::Failure) return {Signal::Success, std::nullopt};
      for (int i = 1; i < evorl::kRepeatCap && allowance > 0; ++i) {
        --allowance;
        last = ref_tick_impl(n.children[0], obs, allowance);
        if (last.act) return {Signal::Success, last.act};
        if (last.sig == Signal::Failure) return {Signal::Success, std::nullopt};
      }
      return last;
    }
    case NodeKind::ParallelSelector: {
      bool any = false;
      for (const auto& c : n.children) {
        const RefOut r = ref_tick_impl(c, obs, allowance);
        if (r.act) return {Signal::Success, r.act};
        any = any || r.sig == Signal::Success;
      }
      return {any ? Signal::Success : Signal::Failure, std::nullopt};
    }
    case NodeKind::ParallelSequence: {
      bool all = true;
      for (const auto& c : n.children) {
        const RefOut r = ref_tick_impl(c, obs, allowance);
        if (r.act) return {Signal::Success, r.act};
        all = all && r.sig == Signal::Success;
      }
      return {all ? Signal::Success : Signal::Failure, std::nullopt};
    }
  }
  return {};
}

inline RefOut ref_tick(const evorl::BtNode& n, const evorl::Observation& obs) {
  int allowance = evorl::kRepeatCap - 1;
  return ref_tick_impl(n, obs, allowance);
}

// Every tree of depth <= max_depth over the fixed primitive family
// {Selector, Sequence, Invert, Condition(x0 < 0), Action(0), Action(1)},
// with composite arity 1 or 2. Depth 3 yields 1893 trees.
inline std::vector<evorl::BtNode> enumerate_trees(int max_depth) {
  using evorl::BtNode;
  using evorl::Comparator;
  using evorl::NodeKind;

  std::vector<BtNode> leaves;
  {
    BtNode cond;
    cond.kind = NodeKind::Condition;
    cond.feature = 0;
    cond.cmp = Comparator::Less;
    cond.threshold = 0.0;
    leaves.push_back(cond);
    BtNode act0;
    act0.kind = NodeKind::Action;
    act0.action = 0;
    leaves.push_back(act0);
    BtNode act1 = act0;
    act1.action = 1;
    leaves.push_back(act1);
  }
  if (max_depth <= 1) return leaves;

  const std::vector<BtNode> shallower = enumerate_trees(max_depth - 1);
  std::vector<BtNode> out = leaves;
  for (const auto& child : shallower) {
    BtNode inv;
    inv.kind = NodeKind::Invert;
    inv.children = {child};
    out.push_back(inv);
  }
  for (const NodeKind kind : {NodeKind::Selector, NodeKind::Sequence}) {
    for (const auto& a : shallower) {
      BtNode one;
      one.kind = kind;
      one.children = {a};
      out.push_back(one);
      for (const auto& b : shallower) {
        BtNode two;
        two.kind = kind;
        two.children = {a, b};
        out.push_back(two);
      }
    }
  }
  return out;
}

}  // namespace btref
