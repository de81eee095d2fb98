#pragma once

// An agent couples an evolved instinct (behavior tree) with a learned
// behavior. Life cycle: Born (instinct only, untrained) -> Mature (trained
// in infancy) -> Fertile (evaluated, fitness assigned). Transitions only in
// that order.

#include <cstdint>
#include <optional>

#include "evorl/behavior_tree.hpp"
#include "evorl/learners.hpp"

namespace evorl {

enum class LifeState : std::uint8_t { Born, Mature, Fertile };

struct Agent {
  long id = 0;
  std::optional<BtNode> tree;  // empty only in RL-only mode (no instinct)
  LearnedBehavior learned;
  LifeState life_state = LifeState::Born;
  std::optional<double> fitness;  // mean evaluation return; set when Fertile

  // Infancy step counters.
  std::uint64_t instinct_steps = 0;
  std::uint64_t total_steps = 0;
  // Evaluation step counters (instinct ratio is reported from these unless
  // configured otherwise).
  std::uint64_t eval_instinct_steps = 0;
  std::uint64_t eval_total_steps = 0;

  double instinct_ratio(bool from_infancy = false) const {
    const auto num = from_infancy ? instinct_steps : eval_instinct_steps;
    const auto den = from_infancy ? total_steps : eval_total_steps;
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  }
};

}  // namespace evorl
