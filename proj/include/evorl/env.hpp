#pragma once

// Environment abstraction. Concrete dynamics live in classic_control.hpp;
// reward masking is layered on top by masking.hpp.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "evorl/behavior_tree.hpp"  // Observation
#include "evorl/rng.hpp"

namespace evorl {

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_count = 0;
  int max_episode_steps = 0;
  double reward_threshold = 0.0;  // solved line used in reporting
};

// reward is empty only when a masking wrapper suppressed it; raw environments
// always report the true reward.
struct StepOutcome {
  Observation observation;
  std::optional<double> reward;
  bool terminal = false;
  bool truncated = false;

  bool episode_over() const { return terminal || truncated; }
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;

  // Starts a new episode; initial state is drawn from the given stream.
  virtual Observation reset(Rng& rng) = 0;

  // Advances one step. Throws std::invalid_argument for an unknown action id
  // and std::logic_error if called after the episode ended.
  virtual StepOutcome step(int action) = 0;
};

// The name registry (env_spec / make_env for "cartpole", "acrobot",
// "mountaincar") lives in classic_control.hpp.

}  // namespace evorl
