#pragma once

// Genetic-programming variation over behavior trees: ramped half-and-half
// generation, tournament selection, subtree crossover and mutation, and the
// Gaussian mutation of inherited learned behavior. All operators are closed
// over the tree invariants (arity, depth <= max_depth, nodes <= max_nodes).

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "evorl/behavior_tree.hpp"
#include "evorl/binning.hpp"
#include "evorl/env.hpp"
#include "evorl/learners.hpp"
#include "evorl/rng.hpp"

namespace evorl {

struct GpConfig {
  int population_size = 30;
  int generations = 200;
  int tournament_k = 3;
  double crossover_rate = 0.5;         // per offspring pair
  double mutation_rate = 0.15;         // per offspring, after crossover
  double inherited_mutation_rate = 0.2;
  double inherited_element_prob = 0.1;
  double inherited_noise_sigma = 0.1;
  int max_depth = 6;
  int max_nodes = 64;
  int init_depth_min = 2;
  int init_depth_max = 4;
  int elitism = 1;
  bool enable_repeat_nodes = false;
  bool enable_parallel_nodes = false;
};

inline void validate_gp_config(const GpConfig& c) {
  auto rate = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (c.population_size < 1)
    throw std::invalid_argument("gp config: population_size must be >= 1");
  if (c.generations < 0)
    throw std::invalid_argument("gp config: generations must be >= 0");
  if (c.tournament_k < 1 || c.tournament_k > c.population_size)
    throw std::invalid_argument(
        "gp config: tournament_k must be in [1, population_size]");
  if (!rate(c.crossover_rate) || !rate(c.mutation_rate) ||
      !rate(c.inherited_mutation_rate) || !rate(c.inherited_element_prob))
    throw std::invalid_argument("gp config: rates must lie in [0, 1]");
  if (c.inherited_noise_sigma < 0.0)
    throw std::invalid_argument("gp config: noise sigma must be >= 0");
  if (c.init_depth_min < 1 || c.init_depth_min > c.init_depth_max ||
      c.init_depth_max > c.max_depth)
    throw std::invalid_argument(
        "gp config: init depth range must satisfy 1 <= min <= max <= max_depth");
  if (c.max_depth < 1 || c.max_nodes < 1)
    throw std::invalid_argument("gp config: depth/node limits must be >= 1");
  if (c.elitism < 0 || c.elitism > c.population_size)
    throw std::invalid_argument("gp config: elitism out of range");
}

// What random trees are built from. Condition thresholds are drawn uniformly
// from the per-feature bounds (the clipped binning bounds of the
// environment).
struct PrimitiveSet {
  int state_dim = 0;
  int action_count = 0;
  std::vector<double> feature_lower;
  std::vector<double> feature_upper;
  bool repeats = false;
  bool parallels = false;
};

inline PrimitiveSet primitive_set_for(const EnvSpec& spec, const BinGrid& grid,
                                      const GpConfig& cfg) {
  return PrimitiveSet{spec.state_dim,       spec.action_count,
                      grid.lower,           grid.upper,
                      cfg.enable_repeat_nodes, cfg.enable_parallel_nodes};
}

inline void validate_primitive_set(const PrimitiveSet& ps) {
  if (ps.action_count < 1 || ps.state_dim < 1 ||
      ps.feature_lower.size() != static_cast<std::size_t>(ps.state_dim) ||
      ps.feature_upper.size() != static_cast<std::size_t>(ps.state_dim))
    throw std::invalid_argument("primitive set: empty or inconsistent");
}

enum class TreeInit { Grow, Full };

namespace detail {

inline BtNode random_leaf(const PrimitiveSet& ps, Rng& rng) {
  BtNode n;
  if (rng.bernoulli(0.5)) {
    n.kind = NodeKind::Condition;
    n.feature = rng.below_int(ps.state_dim);
    n.cmp = rng.bernoulli(0.5) ? Comparator::Less : Comparator::GreaterEq;
    n.threshold =
        rng.uniform(ps.feature_lower[static_cast<std::size_t>(n.feature)],
                    ps.feature_upper[static_cast<std::size_t>(n.feature)]);
  } else {
    n.kind = NodeKind::Action;
    n.action = rng.below_int(ps.action_count);
  }
  return n;
}

inline NodeKind random_composite(const PrimitiveSet& ps, Rng& rng) {
  std::array<NodeKind, 7> kinds{};
  int n = 0;
  kinds[n++] = NodeKind::Selector;
  kinds[n++] = NodeKind::Sequence;
  kinds[n++] = NodeKind::Invert;
  if (ps.repeats) {
    kinds[n++] = NodeKind::Repeat;
    kinds[n++] = NodeKind::RepeatUntilFail;
  }
  if (ps.parallels) {
    kinds[n++] = NodeKind::ParallelSelector;
    kinds[n++] = NodeKind::ParallelSequence;
  }
  return kinds[static_cast<std::size_t>(rng.below_int(n))];
}

// Recursive generator. node_budget counts nodes still allowed in this
// subtree; it is decremented for the node being created before recursing.
inline BtNode random_subtree(const PrimitiveSet& ps, int depth_left,
                             TreeInit mode, int& node_budget, Rng& rng) {
  --node_budget;
  // A composite needs room for at least one child.
  const bool can_compose = depth_left > 1 && node_budget >= 1;
  const bool make_leaf =
      !can_compose || (mode == TreeInit::Grow && rng.bernoulli(0.4));
  if (make_leaf) return random_leaf(ps, rng);

  BtNode n;
  n.kind = random_composite(ps, rng);
  if (n.kind == NodeKind::Repeat)
    n.repeat_count = 1 + rng.below_int(kRepeatCap);
  int arity = 1;
  if (n.kind == NodeKind::Selector || n.kind == NodeKind::Sequence ||
      n.kind == NodeKind::ParallelSelector ||
      n.kind == NodeKind::ParallelSequence)
    arity = 2 + rng.below_int(2);  // 2 or 3 children
  for (int i = 0; i < arity && (i == 0 || node_budget >= 1); ++i)
    n.children.push_back(
        random_subtree(ps, depth_left - 1, mode, node_budget, rng));
  return n;
}

}  // namespace detail

// Random tree of exactly-at-most the given depth; full mode branches to the
// depth limit wherever the node budget allows, grow mode may stop early.
inline BtNode random_tree(const PrimitiveSet& ps, int min_depth, int max_depth,
                          TreeInit mode, Rng& rng, int max_nodes = 64) {
  validate_primitive_set(ps);
  if (min_depth < 1 || min_depth > max_depth)
    throw std::invalid_argument("random_tree: bad depth range");
  const int target =
      min_depth + rng.below_int(max_depth - min_depth + 1);
  int budget = max_nodes;
  return detail::random_subtree(ps, target, mode, budget, rng);
}

// Convenience overload: ramped half-and-half in a single draw.
inline BtNode random_tree(const PrimitiveSet& ps, int min_depth, int max_depth,
                          Rng& rng, int max_nodes = 64) {
  const TreeInit mode = rng.bernoulli(0.5) ? TreeInit::Grow : TreeInit::Full;
  return random_tree(ps, min_depth, max_depth, mode, rng, max_nodes);
}

// --------------------------------------------------------------------------
// Selection

struct TournamentEntry {
  double fitness = 0.0;
  long id = 0;
};

// Samples k entries without replacement, returns the index of the fittest;
// ties break to the lowest id.
inline std::size_t tournament_select(std::span<const TournamentEntry> pop,
                                     int k, Rng& rng) {
  if (pop.empty()) throw std::invalid_argument("tournament: empty population");
  if (k < 1 || static_cast<std::size_t>(k) > pop.size())
    throw std::invalid_argument("tournament: k out of range");

  std::vector<std::size_t> pool(pop.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::size_t best = pop.size();
  for (int i = 0; i < k; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        static_cast<std::size_t>(rng.below(pool.size() - static_cast<std::size_t>(i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    const std::size_t cand = pool[static_cast<std::size_t>(i)];
    if (best == pop.size() || pop[cand].fitness > pop[best].fitness ||
        (pop[cand].fitness == pop[best].fitness && pop[cand].id < pop[best].id))
      best = cand;
  }
  return best;
}

// --------------------------------------------------------------------------
// Variation

// Swaps uniformly chosen subtrees with probability crossover_rate. Offspring
// violating the depth or node limits are repaired by re-drawing the swap
// points (up to 8 attempts), after which the parents are returned verbatim.
inline std::pair<BtNode, BtNode> subtree_crossover(const BtNode& parent_a,
                                                   const BtNode& parent_b,
                                                   const GpConfig& cfg,
                                                   Rng& rng) {
  if (!rng.bernoulli(cfg.crossover_rate)) return {parent_a, parent_b};
  const int count_a = node_count(parent_a);
  const int count_b = node_count(parent_b);
  for (int attempt = 0; attempt < 8; ++attempt) {
    BtNode child_a = parent_a;
    BtNode child_b = parent_b;
    BtNode& site_a = node_at(child_a, rng.below_int(count_a));
    BtNode& site_b = node_at(child_b, rng.below_int(count_b));
    std::swap(site_a, site_b);
    if (tree_depth(child_a) <= cfg.max_depth &&
        tree_depth(child_b) <= cfg.max_depth &&
        node_count(child_a) <= cfg.max_nodes &&
        node_count(child_b) <= cfg.max_nodes)
      return {std::move(child_a), std::move(child_b)};
  }
  return {parent_a, parent_b};
}

// Replaces a uniformly chosen node's subtree with a fresh random tree fitting
// the remaining depth and node budget, with probability mutation_rate.
inline BtNode subtree_mutation(const BtNode& tree, const PrimitiveSet& ps,
                               const GpConfig& cfg, Rng& rng) {
  if (!rng.bernoulli(cfg.mutation_rate)) return tree;
  BtNode out = tree;
  const int index = rng.below_int(node_count(out));
  BtNode& site = node_at(out, index);
  const int depth_budget = cfg.max_depth - depth_of_node(out, index) + 1;
  const int node_budget =
      cfg.max_nodes - (node_count(out) - node_count(site));
  site = random_tree(ps, 1, depth_budget, TreeInit::Grow, rng,
                     std::max(1, node_budget));
  return out;
}

// With probability inherited_mutation_rate, each scalar element of the
// learned behavior is independently perturbed with probability
// inherited_element_prob by N(0, sigma) noise.
inline LearnedBehavior mutate_inherited(const LearnedBehavior& learned,
                                        const GpConfig& cfg, Rng& rng) {
  if (!rng.bernoulli(cfg.inherited_mutation_rate)) return learned;
  LearnedBehavior out = learned;
  if (auto* q = std::get_if<QTable>(&out)) {
    for (auto& [k, v] : q->entries)
      if (rng.bernoulli(cfg.inherited_element_prob))
        v += rng.normal(0.0, cfg.inherited_noise_sigma);
  } else {
    auto& mlp = std::get<MlpParams>(out);
    for (auto& w : mlp.weights)
      if (rng.bernoulli(cfg.inherited_element_prob))
        w += rng.normal(0.0, cfg.inherited_noise_sigma);
  }
  return out;
}

}  // namespace evorl
