#include "catch_amalgamated.hpp"

#include <string>
#include <vector>

#include "common/bt_reference.hpp"
#include "common/helpers.hpp"
#include "evorl/behavior_tree.hpp"
#include "evorl/gp.hpp"

using namespace evorl;

namespace {

BtNode action(int id) {
  BtNode n;
  n.kind = NodeKind::Action;
  n.action = id;
  return n;
}

BtNode condition(int feature, Comparator cmp, double threshold) {
  BtNode n;
  n.kind = NodeKind::Condition;
  n.feature = feature;
  n.cmp = cmp;
  n.threshold = threshold;
  return n;
}

BtNode composite(NodeKind kind, std::vector<BtNode> children) {
  BtNode n;
  n.kind = kind;
  n.children = std::move(children);
  return n;
}

}  // namespace

TEST_CASE("single action node decides immediately") {
  const BtNode tree = action(1);
  const TickResult r = tick(tree, {0.5});
  REQUIRE(r.signal == Signal::Success);
  REQUIRE(r.chosen_action == 1);
  REQUIRE(r.nodes_visited == 1);
}

TEST_CASE("selector short-circuits on a succeeding condition") {
  const BtNode tree = composite(
      NodeKind::Selector, {condition(0, Comparator::Less, 0.0), action(0)});
  const TickResult hit = tick(tree, {-1.0});
  REQUIRE(hit.signal == Signal::Success);
  REQUIRE(!hit.chosen_action.has_value());

  const TickResult miss = tick(tree, {1.0});
  REQUIRE(miss.signal == Signal::Success);
  REQUIRE(miss.chosen_action == 0);
}

TEST_CASE("sequence fails fast and aborts on the first action") {
  const BtNode fail_first = composite(
      NodeKind::Sequence, {condition(0, Comparator::GreaterEq, 0.0), action(1)});
  const TickResult r = tick(fail_first, {-0.5});
  REQUIRE(r.signal == Signal::Failure);
  REQUIRE(!r.chosen_action.has_value());

  const BtNode two_actions =
      composite(NodeKind::Sequence, {action(0), action(1)});
  const TickResult first_wins = tick(two_actions, {0.0});
  REQUIRE(first_wins.chosen_action == 0);
  REQUIRE(first_wins.signal == Signal::Success);
  REQUIRE(first_wins.nodes_visited == 2);  // second action never ticked
}

TEST_CASE("invert flips condition outcomes but not action unwinding") {
  const BtNode inv = composite(NodeKind::Invert,
                               {condition(0, Comparator::Less, 0.0)});
  REQUIRE(tick(inv, {-1.0}).signal == Signal::Failure);
  REQUIRE(tick(inv, {+1.0}).signal == Signal::Success);

  const BtNode inv_action = composite(NodeKind::Invert, {action(1)});
  const TickResult r = tick(inv_action, {0.0});
  REQUIRE(r.signal == Signal::Success);  // unwind overrides inversion
  REQUIRE(r.chosen_action == 1);
}

TEST_CASE("repeat decorators are bounded") {
  BtNode rep = composite(NodeKind::Repeat,
                         {condition(0, Comparator::Less, 0.0)});
  rep.repeat_count = 5;
  const TickResult r = tick(rep, {-1.0});
  REQUIRE(r.signal == Signal::Success);
  REQUIRE(r.nodes_visited == 6);

  // RepeatUntilFail against an always-succeeding child hits the cap and
  // reports the last child signal.
  const BtNode ruf = composite(NodeKind::RepeatUntilFail,
                               {condition(0, Comparator::Less, 0.0)});
  const TickResult capped = tick(ruf, {-1.0});
  REQUIRE(capped.signal == Signal::Success);
  REQUIRE(capped.nodes_visited == 1 + kRepeatCap);

  const TickResult failing = tick(ruf, {+1.0});
  REQUIRE(failing.signal == Signal::Success);  // child failed -> Success
  REQUIRE(failing.nodes_visited == 2);
}

TEST_CASE("parallel nodes tick every child") {
  const BtNode psel = composite(NodeKind::ParallelSelector,
                                {condition(0, Comparator::Less, 0.0),
                                 condition(0, Comparator::GreaterEq, 10.0)});
  REQUIRE(tick(psel, {-1.0}).signal == Signal::Success);
  REQUIRE(tick(psel, {5.0}).signal == Signal::Failure);
  REQUIRE(tick(psel, {-1.0}).nodes_visited == 3);  // no short-circuit

  const BtNode pseq = composite(NodeKind::ParallelSequence,
                                {condition(0, Comparator::Less, 0.0),
                                 condition(0, Comparator::Less, 5.0)});
  REQUIRE(tick(pseq, {-1.0}).signal == Signal::Success);
  REQUIRE(tick(pseq, {2.0}).signal == Signal::Failure);

  const BtNode pseq_act = composite(
      NodeKind::ParallelSequence,
      {condition(0, Comparator::GreaterEq, 10.0), action(1), action(0)});
  const TickResult r = tick(pseq_act, {0.0});
  REQUIRE(r.chosen_action == 1);  // first action wins, third never ticked
  REQUIRE(r.signal == Signal::Success);
  REQUIRE(r.nodes_visited == 3);
}

TEST_CASE("exhaustive depth-3 family agrees with the reference interpreter") {
  const auto trees = btref::enumerate_trees(3);
  REQUIRE(trees.size() == 1893);
  const std::vector<Observation> observations{{-1.0}, {+1.0}};
  long checked = 0;
  for (const auto& tree : trees) {
    for (const auto& obs : observations) {
      const TickResult got = tick(tree, obs);
      const btref::RefOut want = btref::ref_tick(tree, obs);
      REQUIRE(got.signal == want.sig);
      REQUIRE(got.chosen_action == want.act);
      ++checked;
    }
  }
  REQUIRE(checked == 2 * 1893);
}

TEST_CASE("random trees agree with the reference interpreter") {
  const PrimitiveSet ps = testutil::cartpole_primitives();
  PrimitiveSet full = ps;
  full.repeats = true;
  full.parallels = true;
  Rng rng(2024);
  for (int i = 0; i < 2000; ++i) {
    const BtNode tree = random_tree(full, 1, 6, rng);
    const Observation obs = testutil::random_obs(full, rng);
    const TickResult got = tick(tree, obs);
    const btref::RefOut want = btref::ref_tick(tree, obs);
    REQUIRE(got.signal == want.sig);
    REQUIRE(got.chosen_action == want.act);
    REQUIRE(got.nodes_visited <= 64 * kRepeatCap);
  }
}

TEST_CASE("identical tree and observation give identical results") {
  const PrimitiveSet ps = testutil::cartpole_primitives();
  Rng rng(99);
  const BtNode tree = random_tree(ps, 2, 5, rng);
  const Observation obs = testutil::random_obs(ps, rng);
  const TickResult a = tick(tree, obs);
  const TickResult b = tick(tree, obs);
  REQUIRE(a.signal == b.signal);
  REQUIRE(a.chosen_action == b.chosen_action);
  REQUIRE(a.nodes_visited == b.nodes_visited);
}

TEST_CASE("s-expression round trip is exact") {
  REQUIRE(to_sexpr(parse_sexpr("(sel (cond 0 < 0.25) (act 1))")) ==
          "(sel (cond 0 < 0.25) (act 1))");

  PrimitiveSet ps = testutil::cartpole_primitives();
  ps.repeats = true;
  ps.parallels = true;
  Rng rng(31337);
  for (int i = 0; i < 500; ++i) {
    const BtNode tree = random_tree(ps, 1, 6, rng);
    const std::string text = to_sexpr(tree);
    const BtNode back = parse_sexpr(text);
    REQUIRE(back == tree);
    REQUIRE(to_sexpr(back) == text);
  }
}

TEST_CASE("parser rejects malformed input") {
  REQUIRE_THROWS_AS(parse_sexpr("(sel)"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_sexpr("(act 1) trailing"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_sexpr("(inv (act 0) (act 1))"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_sexpr("(cond 0 <= 0.5)"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_sexpr("(bogus 1)"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_sexpr("(act 1"), std::invalid_argument);
}

TEST_CASE("validate_tree enforces the structural invariants") {
  BtNode leafy = action(0);
  leafy.children.push_back(action(1));
  REQUIRE_THROWS_AS(validate_tree(leafy, 4, 2), std::invalid_argument);

  REQUIRE_THROWS_AS(validate_tree(action(5), 4, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(validate_tree(condition(9, Comparator::Less, 0.0), 4, 2),
                    std::invalid_argument);

  BtNode deep = action(0);
  for (int i = 0; i < 7; ++i) deep = composite(NodeKind::Invert, {deep});
  REQUIRE_THROWS_AS(validate_tree(deep, 4, 2), std::invalid_argument);

  BtNode wide = composite(NodeKind::Selector, {});
  for (int i = 0; i < 70; ++i) wide.children.push_back(action(0));
  REQUIRE_THROWS_AS(validate_tree(wide, 4, 2), std::invalid_argument);

  const BtNode ok = composite(
      NodeKind::Selector,
      {composite(NodeKind::Sequence,
                 {condition(2, Comparator::GreaterEq, 0.1), action(1)}),
       action(0)});
  REQUIRE_NOTHROW(validate_tree(ok, 4, 2));
}
