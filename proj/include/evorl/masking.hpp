#pragma once

// Rewardless-state masking: a seeded subset of bins whose reward signal is
// withheld from the learner. Masking tests the bin of the state the action
// was taken in (the pre-step state) and never alters dynamics; the true
// episode return stays available to the evaluation harness.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "evorl/binning.hpp"
#include "evorl/env.hpp"
#include "evorl/rng.hpp"

namespace evorl {

struct RewardlessMask {
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> masked;               // sorted bin indices
  std::vector<std::uint8_t> is_masked;   // one flag per bin

  bool contains(int bin) const {
    return is_masked[static_cast<std::size_t>(bin)] != 0;
  }
};

// Selects floor(fraction * total_bins) distinct bins via a seeded partial
// Fisher-Yates shuffle. Identical inputs give identical sets.
inline RewardlessMask build_mask(const BinGrid& grid, double fraction,
                                 std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 0.5))
    throw std::invalid_argument(
        "build_mask: fraction must lie in [0, 0.5]");
  validate_grid(grid);

  const long total = grid.total_bins();
  const long count = static_cast<long>(fraction * static_cast<double>(total));

  std::vector<int> pool(static_cast<std::size_t>(total));
  for (long i = 0; i < total; ++i) pool[static_cast<std::size_t>(i)] = static_cast<int>(i);

  Rng rng(derive_seed(seed, Stream::Mask));
  for (long i = 0; i < count; ++i) {
    const long j = i + static_cast<long>(rng.below(static_cast<std::uint64_t>(total - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }

  RewardlessMask mask;
  mask.fraction = fraction;
  mask.seed = seed;
  mask.masked.assign(pool.begin(), pool.begin() + count);
  std::sort(mask.masked.begin(), mask.masked.end());
  mask.is_masked.assign(static_cast<std::size_t>(total), 0);
  for (int b : mask.masked) mask.is_masked[static_cast<std::size_t>(b)] = 1;
  return mask;
}

// Archival form: {env, bins_per_dim, fraction, seed, masked_bins}.
inline nlohmann::json mask_to_json(const std::string& env_name,
                                   const BinGrid& grid,
                                   const RewardlessMask& mask) {
  return nlohmann::json{{"env", env_name},
                        {"bins_per_dim", grid.bins_per_dim},
                        {"fraction", mask.fraction},
                        {"seed", mask.seed},
                        {"masked_bins", mask.masked}};
}

inline RewardlessMask mask_from_json(const nlohmann::json& j, long total_bins) {
  RewardlessMask mask;
  mask.fraction = j.at("fraction").get<double>();
  mask.seed = j.at("seed").get<std::uint64_t>();
  mask.masked = j.at("masked_bins").get<std::vector<int>>();
  mask.is_masked.assign(static_cast<std::size_t>(total_bins), 0);
  for (int b : mask.masked) {
    if (b < 0 || b >= total_bins)
      throw std::invalid_argument("mask_from_json: bin index out of range");
    mask.is_masked[static_cast<std::size_t>(b)] = 1;
  }
  return mask;
}

// Environment wrapper that withholds the reward whenever the pre-step state
// falls in a masked bin. The unmasked return is accumulated on the side for
// the evaluation harness.
class MaskedEnv {
 public:
  MaskedEnv(std::unique_ptr<Environment> env, BinGrid grid,
            RewardlessMask mask)
      : env_(std::move(env)), grid_(std::move(grid)), mask_(std::move(mask)) {
    validate_grid(grid_);
    if (grid_.total_bins() != static_cast<long>(mask_.is_masked.size()))
      throw std::invalid_argument("MaskedEnv: mask does not match grid");
  }

  const EnvSpec& spec() const { return env_->spec(); }
  const BinGrid& grid() const { return grid_; }
  const RewardlessMask& mask() const { return mask_; }

  Observation reset(Rng& rng) {
    Observation obs = env_->reset(rng);
    hidden_return_ = 0.0;
    current_bin_ = bin_index(grid_, obs);
    return obs;
  }

  StepOutcome step(int action) {
    StepOutcome out = env_->step(action);
    hidden_return_ += out.reward.value();
    if (mask_.contains(current_bin_)) out.reward.reset();
    current_bin_ = bin_index(grid_, out.observation);
    return out;
  }

  // True (unmasked) cumulative reward of the current episode.
  double hidden_return() const { return hidden_return_; }

  // Bin of the current observation, i.e. the pre-step state of the next step.
  int current_bin() const { return current_bin_; }

 private:
  std::unique_ptr<Environment> env_;
  BinGrid grid_;
  RewardlessMask mask_;
  double hidden_return_ = 0.0;
  int current_bin_ = 0;
};

}  // namespace evorl
