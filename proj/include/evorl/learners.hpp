#pragma once

// Pluggable reinforcement learners behind one contract: epsilon-greedy
// action choice, transition observation (a transition with an absent reward
// performs no update at all), and a transferable learned-behavior value.
// Implemented: tabular Q-learning over a bin grid, and a small DQN (MLP +
// replay buffer + target network, plain SGD).

#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "evorl/binning.hpp"
#include "evorl/env.hpp"
#include "evorl/mlp.hpp"
#include "evorl/rng.hpp"

namespace evorl {

struct Transition {
  Observation obs;
  int action = 0;
  std::optional<double> reward;  // absent when the pre-step bin was masked
  Observation next_obs;
  bool terminal = false;
};

// --------------------------------------------------------------------------
// Learned-behavior representations

struct QTable {
  BinGrid grid;
  int action_count = 0;
  std::map<std::int64_t, double> entries;  // (bin * action_count + action) -> Q

  double value(int bin, int action) const {
    const auto it =
        entries.find(static_cast<std::int64_t>(bin) * action_count + action);
    return it == entries.end() ? 0.0 : it->second;
  }

  void set(int bin, int action, double v) {
    entries[static_cast<std::int64_t>(bin) * action_count + action] = v;
  }

  double best_value(int bin) const {
    double best = value(bin, 0);
    for (int a = 1; a < action_count; ++a) best = std::max(best, value(bin, a));
    return best;
  }

  int greedy_action(int bin) const {
    int best_a = 0;
    double best = value(bin, 0);
    for (int a = 1; a < action_count; ++a) {
      const double v = value(bin, a);
      if (v > best) {  // ties keep the lowest action id
        best = v;
        best_a = a;
      }
    }
    return best_a;
  }

  friend bool operator==(const QTable&, const QTable&) = default;
};

using LearnedBehavior = std::variant<QTable, MlpParams>;

// Greedy action over network outputs; throws on non-finite values.
inline int greedy_act_mlp(const MlpParams& mlp, const Observation& obs) {
  const std::vector<double> out = mlp_forward(mlp, obs);
  int best_a = 0;
  for (std::size_t a = 0; a < out.size(); ++a) {
    if (!std::isfinite(out[a]))
      throw std::runtime_error("dqn: non-finite network output");
    if (out[a] > out[static_cast<std::size_t>(best_a)])
      best_a = static_cast<int>(a);
  }
  return best_a;
}

// Greedy action for a behavior snapshot (ties break to the lowest action id).
// Used by evaluation and by untrained agents.
inline int greedy_act(const LearnedBehavior& behavior, const Observation& obs) {
  if (const auto* q = std::get_if<QTable>(&behavior))
    return q->greedy_action(bin_index(q->grid, obs));
  return greedy_act_mlp(std::get<MlpParams>(behavior), obs);
}

// Element-wise parent average. QTables merge over the union of keys; a key
// held by one parent only is copied through. Representation, grid and
// architecture must match.
inline LearnedBehavior merge_learned(const LearnedBehavior& a,
                                     const LearnedBehavior& b) {
  if (a.index() != b.index())
    throw std::invalid_argument("merge_learned: representation mismatch");
  if (const auto* qa = std::get_if<QTable>(&a)) {
    const auto& qb = std::get<QTable>(b);
    if (!(qa->grid == qb.grid) || qa->action_count != qb.action_count)
      throw std::invalid_argument("merge_learned: Q-table grid mismatch");
    QTable out = *qa;
    for (const auto& [k, v] : qb.entries) {
      const auto it = out.entries.find(k);
      if (it == out.entries.end())
        out.entries.emplace(k, v);
      else
        it->second = 0.5 * (it->second + v);
    }
    return out;
  }
  const auto& ma = std::get<MlpParams>(a);
  const auto& mb = std::get<MlpParams>(b);
  if (ma.layer_sizes != mb.layer_sizes)
    throw std::invalid_argument("merge_learned: network architecture mismatch");
  MlpParams out = ma;
  for (std::size_t i = 0; i < out.weights.size(); ++i)
    out.weights[i] = 0.5 * (out.weights[i] + mb.weights[i]);
  return out;
}

// --------------------------------------------------------------------------
// Serialization
//   QTable: JSON with entries as a sorted [bin, action, value] list.
//   MLP:    layer-count/layer-size header followed by the parameters as
//           little-endian 64-bit floats.

inline nlohmann::json qtable_to_json(const QTable& q) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [k, v] : q.entries)
    entries.push_back({k / q.action_count, k % q.action_count, v});
  return nlohmann::json{{"type", "qtable"},
                        {"actions", q.action_count},
                        {"bins_per_dim", q.grid.bins_per_dim},
                        {"lower", q.grid.lower},
                        {"upper", q.grid.upper},
                        {"entries", entries}};
}

inline QTable qtable_from_json(const nlohmann::json& j) {
  QTable q;
  q.action_count = j.at("actions").get<int>();
  q.grid.bins_per_dim = j.at("bins_per_dim").get<std::vector<int>>();
  q.grid.lower = j.at("lower").get<std::vector<double>>();
  q.grid.upper = j.at("upper").get<std::vector<double>>();
  validate_grid(q.grid);
  for (const auto& e : j.at("entries")) {
    const auto bin = e.at(0).get<std::int64_t>();
    const auto action = e.at(1).get<int>();
    q.entries[bin * q.action_count + action] = e.at(2).get<double>();
  }
  return q;
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& at) {
  if (at + 4 > in.size()) throw std::invalid_argument("mlp_from_bytes: truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at++]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> mlp_to_bytes(const MlpParams& p) {
  validate_mlp(p);
  std::vector<std::uint8_t> out;
  detail::put_u32(out, static_cast<std::uint32_t>(p.layer_sizes.size()));
  for (int s : p.layer_sizes) detail::put_u32(out, static_cast<std::uint32_t>(s));
  for (double w : p.weights) {
    std::uint64_t bits;
    std::memcpy(&bits, &w, sizeof bits);
    for (int i = 0; i < 8; ++i)
      out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

inline MlpParams mlp_from_bytes(std::span<const std::uint8_t> bytes) {
  std::size_t at = 0;
  const std::uint32_t n_layers = detail::get_u32(bytes, at);
  if (n_layers < 2 || n_layers > 64)
    throw std::invalid_argument("mlp_from_bytes: bad layer count");
  MlpParams p;
  p.layer_sizes.resize(n_layers);
  for (auto& s : p.layer_sizes) s = static_cast<int>(detail::get_u32(bytes, at));
  const std::size_t count = mlp_param_count(p.layer_sizes);
  if (bytes.size() - at != count * 8)
    throw std::invalid_argument("mlp_from_bytes: parameter payload mismatch");
  p.weights.resize(count);
  for (auto& w : p.weights) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(bytes[at++]) << (8 * i);
    std::memcpy(&w, &bits, sizeof w);
  }
  return p;
}

// Canonical bytes for bitwise state comparisons and checkpointing.
inline std::string behavior_bytes(const LearnedBehavior& b) {
  if (const auto* q = std::get_if<QTable>(&b)) return qtable_to_json(*q).dump();
  const auto bytes = mlp_to_bytes(std::get<MlpParams>(b));
  return std::string(bytes.begin(), bytes.end());
}

inline nlohmann::json behavior_to_json(const LearnedBehavior& b) {
  if (const auto* q = std::get_if<QTable>(&b)) return qtable_to_json(*q);
  static constexpr char hex[] = "0123456789abcdef";
  const auto bytes = mlp_to_bytes(std::get<MlpParams>(b));
  std::string blob;
  blob.reserve(bytes.size() * 2);
  for (std::uint8_t x : bytes) {
    blob.push_back(hex[x >> 4]);
    blob.push_back(hex[x & 0xf]);
  }
  return nlohmann::json{{"type", "mlp"}, {"hex", blob}};
}

inline LearnedBehavior behavior_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "qtable") return qtable_from_json(j);
  if (type == "mlp") {
    const auto blob = j.at("hex").get<std::string>();
    if (blob.size() % 2 != 0)
      throw std::invalid_argument("behavior_from_json: odd hex length");
    auto nibble = [](char c) -> std::uint8_t {
      if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
      if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
      throw std::invalid_argument("behavior_from_json: bad hex digit");
    };
    std::vector<std::uint8_t> bytes(blob.size() / 2);
    for (std::size_t i = 0; i < bytes.size(); ++i)
      bytes[i] = static_cast<std::uint8_t>((nibble(blob[2 * i]) << 4) |
                                           nibble(blob[2 * i + 1]));
    return mlp_from_bytes(bytes);
  }
  throw std::invalid_argument("behavior_from_json: unknown type '" + type + "'");
}

// --------------------------------------------------------------------------
// Learner contract

struct LearnerConfig {
  std::string algo = "q";  // "q" or "dqn"; "ppo" is rejected as unimplemented
  double alpha = 0.1;
  double gamma = 0.99;
  // Moderate initial exploration: lifetimes are short (10 episodes) and
  // inherited tables already carry value worth exploiting.
  double epsilon_start = 0.3;
  double epsilon_end = 0.05;
  int epsilon_decay_episodes = 10;
  int dqn_hidden = 64;
  double dqn_lr = 1e-3;
  int dqn_batch = 32;
  int dqn_buffer = 10000;
  int dqn_train_interval = 1;
  int dqn_target_sync = 500;
};

// Linear decay across a lifetime's learning episodes (0-based index).
inline double epsilon_for_episode(const LearnerConfig& c, long episode) {
  if (c.epsilon_decay_episodes <= 1) return c.epsilon_end;
  const double t = std::min(
      1.0, static_cast<double>(episode) /
               static_cast<double>(c.epsilon_decay_episodes - 1));
  return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * t;
}

class Learner {
 public:
  virtual ~Learner() = default;

  // Epsilon-greedy action; deterministic at epsilon = 0.
  virtual int act(const Observation& obs, double epsilon, Rng& rng) const = 0;

  // No-op when the transition's reward is absent.
  virtual void observe(const Transition& t) = 0;

  virtual LearnedBehavior behavior() const = 0;

  // Parameter updates performed so far (Q writes / gradient steps).
  virtual std::uint64_t update_count() const = 0;
};

class QLearner final : public Learner {
 public:
  QLearner(QTable table, const LearnerConfig& cfg)
      : table_(std::move(table)), alpha_(cfg.alpha), gamma_(cfg.gamma) {}

  int act(const Observation& obs, double epsilon, Rng& rng) const override {
    if (epsilon > 0.0 && rng.bernoulli(epsilon))
      return rng.below_int(table_.action_count);
    return table_.greedy_action(bin_index(table_.grid, obs));
  }

  void observe(const Transition& t) override {
    if (!t.reward) return;
    const int s = bin_index(table_.grid, t.obs);
    const int s2 = bin_index(table_.grid, t.next_obs);
    const double bootstrap = t.terminal ? 0.0 : gamma_ * table_.best_value(s2);
    const double q = table_.value(s, t.action);
    table_.set(s, t.action, q + alpha_ * (*t.reward + bootstrap - q));
    ++updates_;
  }

  LearnedBehavior behavior() const override { return table_; }
  std::uint64_t update_count() const override { return updates_; }

 private:
  QTable table_;
  double alpha_;
  double gamma_;
  std::uint64_t updates_ = 0;
};

class DqnLearner final : public Learner {
 public:
  DqnLearner(MlpParams params, const LearnerConfig& cfg, std::uint64_t seed)
      : online_(std::move(params)),
        target_(online_),
        cfg_(cfg),
        rng_(seed),
        grad_(online_.weights.size(), 0.0) {
    validate_mlp(online_);
  }

  int act(const Observation& obs, double epsilon, Rng& rng) const override {
    const int actions = online_.layer_sizes.back();
    if (epsilon > 0.0 && rng.bernoulli(epsilon)) return rng.below_int(actions);
    return greedy_act_mlp(online_, obs);
  }

  void observe(const Transition& t) override {
    if (!t.reward) return;  // masked feedback: not even buffered
    push(t);
    ++observed_;
    if (observed_ % cfg_.dqn_train_interval == 0 &&
        static_cast<int>(buffer_.size()) >= cfg_.dqn_batch)
      train_step();
    if (observed_ % cfg_.dqn_target_sync == 0) target_ = online_;
  }

  LearnedBehavior behavior() const override { return online_; }
  std::uint64_t update_count() const override { return updates_; }
  std::size_t buffer_size() const { return buffer_.size(); }

 private:
  void push(const Transition& t) {
    if (static_cast<int>(buffer_.size()) <
        cfg_.dqn_buffer) {
      buffer_.push_back(t);
    } else {
      buffer_[write_pos_] = t;
    }
    write_pos_ = (write_pos_ + 1) % static_cast<std::size_t>(cfg_.dqn_buffer);
  }

  void train_step() {
    std::fill(grad_.begin(), grad_.end(), 0.0);
    const int batch = cfg_.dqn_batch;
    for (int k = 0; k < batch; ++k) {
      const auto& t = buffer_[rng_.below(buffer_.size())];
      double target = *t.reward;
      if (!t.terminal) {
        const auto next_q = mlp_forward(target_, t.next_obs);
        double best = next_q[0];
        for (double v : next_q) best = std::max(best, v);
        target += cfg_.gamma * best;
      }
      MlpActivations acts;
      const auto q = mlp_forward(online_, t.obs, &acts);
      std::vector<double> d_out(q.size(), 0.0);
      const double diff = q[static_cast<std::size_t>(t.action)] - target;
      if (!std::isfinite(diff))
        throw std::runtime_error("dqn: non-finite TD error");
      d_out[static_cast<std::size_t>(t.action)] =
          2.0 * diff / static_cast<double>(batch);
      mlp_backward(online_, acts, d_out, grad_);
    }
    for (std::size_t i = 0; i < online_.weights.size(); ++i)
      online_.weights[i] -= cfg_.dqn_lr * grad_[i];
    ++updates_;
  }

  MlpParams online_;
  MlpParams target_;
  LearnerConfig cfg_;
  Rng rng_;  // minibatch sampling
  std::vector<Transition> buffer_;
  std::size_t write_pos_ = 0;
  std::uint64_t observed_ = 0;
  std::uint64_t updates_ = 0;
  std::vector<double> grad_;
};

// Fresh (untrained) behavior for a newborn agent: an empty Q-table, or a
// randomly initialized network drawn from the given stream.
inline LearnedBehavior fresh_behavior(const LearnerConfig& cfg,
                                      const EnvSpec& spec, const BinGrid& grid,
                                      std::uint64_t seed) {
  if (cfg.algo == "q") return QTable{grid, spec.action_count, {}};
  if (cfg.algo == "dqn") {
    Rng rng(seed);
    return mlp_random({spec.state_dim, cfg.dqn_hidden, spec.action_count}, rng);
  }
  if (cfg.algo == "ppo")
    throw std::invalid_argument("learner algo 'ppo' is not implemented");
  throw std::invalid_argument("unknown learner algo '" + cfg.algo + "'");
}

inline std::unique_ptr<Learner> make_learner(const LearnerConfig& cfg,
                                             const LearnedBehavior& inherited,
                                             std::uint64_t seed) {
  if (cfg.algo == "q")
    return std::make_unique<QLearner>(std::get<QTable>(inherited), cfg);
  if (cfg.algo == "dqn")
    return std::make_unique<DqnLearner>(std::get<MlpParams>(inherited), cfg,
                                        seed);
  if (cfg.algo == "ppo")
    throw std::invalid_argument("learner algo 'ppo' is not implemented");
  throw std::invalid_argument("unknown learner algo '" + cfg.algo + "'");
}

}  // namespace evorl
