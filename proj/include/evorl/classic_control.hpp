#pragma once

// CartPole, MountainCar and Acrobot with the published reference constants
// and deterministic, stream-seeded initial states. Rewards are per-step
// (+1 CartPole, -1 MountainCar/Acrobot) including the terminating step, so
// episode returns are the signed episode length.

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "evorl/binning.hpp"
#include "evorl/env.hpp"

namespace evorl {

namespace detail {

inline void check_action(int action, const EnvSpec& spec) {
  if (action < 0 || action >= spec.action_count)
    throw std::invalid_argument("step: invalid action id for " + spec.name);
}

[[noreturn]] inline void throw_episode_over(const EnvSpec& spec) {
  throw std::logic_error("step: episode already ended for " + spec.name +
                         "; reset required");
}

}  // namespace detail

// --------------------------------------------------------------------------
// CartPole (v0 semantics): Euler integration, fail at |x| > 2.4 or
// |theta| > 12 deg, 200-step cap, +1 per step.

class CartPoleEnv final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kMassPole * kHalfLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * std::numbers::pi / 360.0;
  static constexpr double kXThreshold = 2.4;

  const EnvSpec& spec() const override {
    static const EnvSpec s{"cartpole", 4, 2, 200, 195.0};
    return s;
  }

  Observation reset(Rng& rng) override {
    for (auto& v : state_) v = rng.uniform(-0.05, 0.05);
    steps_ = 0;
    done_ = false;
    started_ = true;
    return observation();
  }

  StepOutcome step(int action) override {
    if (!started_ || done_) detail::throw_episode_over(spec());
    detail::check_action(action, spec());

    const double force = action == 1 ? kForceMag : -kForceMag;
    const double cos_t = std::cos(state_[2]);
    const double sin_t = std::sin(state_[2]);
    const double temp =
        (force + kPoleMassLength * state_[3] * state_[3] * sin_t) / kTotalMass;
    const double theta_acc =
        (kGravity * sin_t - cos_t * temp) /
        (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

    state_[0] += kTau * state_[1];
    state_[1] += kTau * x_acc;
    state_[2] += kTau * state_[3];
    state_[3] += kTau * theta_acc;
    ++steps_;

    const bool terminal = state_[0] < -kXThreshold || state_[0] > kXThreshold ||
                          state_[2] < -kThetaThreshold ||
                          state_[2] > kThetaThreshold;
    const bool truncated = !terminal && steps_ >= spec().max_episode_steps;
    done_ = terminal || truncated;
    return StepOutcome{observation(), 1.0, terminal, truncated};
  }

 private:
  Observation observation() const {
    return {state_[0], state_[1], state_[2], state_[3]};
  }

  std::array<double, 4> state_{};  // x, x_dot, theta, theta_dot
  int steps_ = 0;
  bool done_ = false;
  bool started_ = false;
};

// --------------------------------------------------------------------------
// MountainCar (v0 semantics): goal at position >= 0.5, -1 per step,
// 200-step cap. Actions: 0 push left, 1 coast, 2 push right.

class MountainCarEnv final : public Environment {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPosition = 0.5;
  static constexpr double kForce = 0.001;
  static constexpr double kGravity = 0.0025;

  const EnvSpec& spec() const override {
    // Threshold -110 is the customary solved line for the 200-step variant.
    static const EnvSpec s{"mountaincar", 2, 3, 200, -110.0};
    return s;
  }

  Observation reset(Rng& rng) override {
    position_ = rng.uniform(-0.6, -0.4);
    velocity_ = 0.0;
    steps_ = 0;
    done_ = false;
    started_ = true;
    return {position_, velocity_};
  }

  StepOutcome step(int action) override {
    if (!started_ || done_) detail::throw_episode_over(spec());
    detail::check_action(action, spec());

    velocity_ += (action - 1) * kForce + std::cos(3.0 * position_) * -kGravity;
    velocity_ = std::clamp(velocity_, -kMaxSpeed, kMaxSpeed);
    position_ += velocity_;
    position_ = std::clamp(position_, kMinPosition, kMaxPosition);
    if (position_ <= kMinPosition && velocity_ < 0.0) velocity_ = 0.0;
    ++steps_;

    const bool terminal = position_ >= kGoalPosition;
    const bool truncated = !terminal && steps_ >= spec().max_episode_steps;
    done_ = terminal || truncated;
    return StepOutcome{{position_, velocity_}, -1.0, terminal, truncated};
  }

 private:
  double position_ = 0.0;
  double velocity_ = 0.0;
  int steps_ = 0;
  bool done_ = false;
  bool started_ = false;
};

// --------------------------------------------------------------------------
// Acrobot (v1 semantics): two-link underactuated pendulum, RK4 over dt = 0.2,
// torque in {-1, 0, +1}, terminal once the free end clears one link height,
// 500-step cap, -1 per step. Internal state is (theta1, theta2, dtheta1,
// dtheta2); the observation is (cos t1, sin t1, cos t2, sin t2, dt1, dt2).

class AcrobotEnv final : public Environment {
 public:
  static constexpr double kDt = 0.2;
  static constexpr double kLink1Length = 1.0;
  static constexpr double kLinkMass = 1.0;
  static constexpr double kLinkCom = 0.5;
  static constexpr double kLinkInertia = 1.0;
  static constexpr double kGravity = 9.8;
  static constexpr double kMaxVel1 = 4.0 * std::numbers::pi;
  static constexpr double kMaxVel2 = 9.0 * std::numbers::pi;

  const EnvSpec& spec() const override {
    static const EnvSpec s{"acrobot", 6, 3, 500, -100.0};
    return s;
  }

  Observation reset(Rng& rng) override {
    for (auto& v : state_) v = rng.uniform(-0.1, 0.1);
    steps_ = 0;
    done_ = false;
    started_ = true;
    return observation();
  }

  StepOutcome step(int action) override {
    if (!started_ || done_) detail::throw_episode_over(spec());
    detail::check_action(action, spec());

    const double torque = static_cast<double>(action - 1);
    rk4_step(torque);
    state_[0] = wrap_pi(state_[0]);
    state_[1] = wrap_pi(state_[1]);
    state_[2] = std::clamp(state_[2], -kMaxVel1, kMaxVel1);
    state_[3] = std::clamp(state_[3], -kMaxVel2, kMaxVel2);
    ++steps_;

    const bool terminal =
        -std::cos(state_[0]) - std::cos(state_[1] + state_[0]) > 1.0;
    const bool truncated = !terminal && steps_ >= spec().max_episode_steps;
    done_ = terminal || truncated;
    return StepOutcome{observation(), -1.0, terminal, truncated};
  }

 private:
  using State = std::array<double, 4>;

  Observation observation() const {
    return {std::cos(state_[0]), std::sin(state_[0]), std::cos(state_[1]),
            std::sin(state_[1]), state_[2], state_[3]};
  }

  static double wrap_pi(double x) {
    constexpr double pi = std::numbers::pi;
    constexpr double two_pi = 2.0 * pi;
    x = std::fmod(x + pi, two_pi);
    if (x < 0.0) x += two_pi;
    return x - pi;
  }

  static State derivatives(const State& s, double torque) {
    const double m = kLinkMass, l1 = kLink1Length, lc = kLinkCom;
    const double i1 = kLinkInertia, i2 = kLinkInertia, g = kGravity;
    const double t1 = s[0], t2 = s[1], dt1 = s[2], dt2 = s[3];

    const double d1 =
        m * lc * lc + m * (l1 * l1 + lc * lc + 2.0 * l1 * lc * std::cos(t2)) +
        i1 + i2;
    const double d2 = m * (lc * lc + l1 * lc * std::cos(t2)) + i2;
    const double phi2 =
        m * lc * g * std::cos(t1 + t2 - std::numbers::pi / 2.0);
    const double phi1 = -m * l1 * lc * dt2 * dt2 * std::sin(t2) -
                        2.0 * m * l1 * lc * dt2 * dt1 * std::sin(t2) +
                        (m * lc + m * l1) * g *
                            std::cos(t1 - std::numbers::pi / 2.0) +
                        phi2;
    const double ddt2 =
        (torque + d2 / d1 * phi1 - m * l1 * lc * dt1 * dt1 * std::sin(t2) -
         phi2) /
        (m * lc * lc + i2 - d2 * d2 / d1);
    const double ddt1 = -(d2 * ddt2 + phi1) / d1;
    return {dt1, dt2, ddt1, ddt2};
  }

  void rk4_step(double torque) {
    const State& y = state_;
    const State k1 = derivatives(y, torque);
    const State k2 = derivatives(advance(y, k1, kDt / 2.0), torque);
    const State k3 = derivatives(advance(y, k2, kDt / 2.0), torque);
    const State k4 = derivatives(advance(y, k3, kDt), torque);
    for (std::size_t i = 0; i < y.size(); ++i)
      state_[i] = y[i] + kDt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }

  static State advance(const State& y, const State& dy, double h) {
    State out;
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + h * dy[i];
    return out;
  }

  State state_{};
  int steps_ = 0;
  bool done_ = false;
  bool started_ = false;
};

// --------------------------------------------------------------------------
// Registry

inline const EnvSpec& env_spec(std::string_view name) {
  static const CartPoleEnv cartpole;
  static const MountainCarEnv mountaincar;
  static const AcrobotEnv acrobot;
  if (name == "cartpole") return cartpole.spec();
  if (name == "mountaincar") return mountaincar.spec();
  if (name == "acrobot") return acrobot.spec();
  throw std::invalid_argument(
      "unknown environment '" + std::string(name) +
      "' (expected cartpole, acrobot or mountaincar)");
}

inline std::unique_ptr<Environment> make_env(std::string_view name) {
  if (name == "cartpole") return std::make_unique<CartPoleEnv>();
  if (name == "mountaincar") return std::make_unique<MountainCarEnv>();
  if (name == "acrobot") return std::make_unique<AcrobotEnv>();
  throw std::invalid_argument(
      "unknown environment '" + std::string(name) +
      "' (expected cartpole, acrobot or mountaincar)");
}

// Default discretization: MountainCar 16x16 (256 bins), CartPole 4^4 (256),
// Acrobot 3^6 (729). Unbounded velocity dimensions are clipped to practical
// ranges before binning.
inline BinGrid default_grid(std::string_view env_name) {
  constexpr double pi = std::numbers::pi;
  if (env_name == "cartpole") {
    return BinGrid{{4, 4, 4, 4},
                   {-CartPoleEnv::kXThreshold, -3.0,
                    -CartPoleEnv::kThetaThreshold, -3.5},
                   {CartPoleEnv::kXThreshold, 3.0,
                    CartPoleEnv::kThetaThreshold, 3.5}};
  }
  if (env_name == "mountaincar") {
    return BinGrid{{16, 16},
                   {MountainCarEnv::kMinPosition, -MountainCarEnv::kMaxSpeed},
                   {MountainCarEnv::kMaxPosition, MountainCarEnv::kMaxSpeed}};
  }
  if (env_name == "acrobot") {
    return BinGrid{{3, 3, 3, 3, 3, 3},
                   {-1.0, -1.0, -1.0, -1.0, -4.0 * pi, -9.0 * pi},
                   {1.0, 1.0, 1.0, 1.0, 4.0 * pi, 9.0 * pi}};
  }
  throw std::invalid_argument("default_grid: unknown environment '" +
                              std::string(env_name) + "'");
}

}  // namespace evorl
