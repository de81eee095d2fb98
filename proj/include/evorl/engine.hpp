#pragma once

// The Evo-RL life cycle: infancy (reinforcement learning under instinct
// precedence), maturity (fitness evaluation on true reward), conception
// (selection, tree variation, learned-behavior transfer), plus the EA-only
// and RL-only baseline modes with the corresponding budget accounting.
//
// Budget units: one learning episode in Evo-RL and RL-only, one individual
// evaluation in EA-only. Evaluation episodes never consume budget.
//
// Determinism: every random stream is derived statelessly from the trial
// seed, a stream tag, and indices (generation, agent id, episode), so the
// result is bitwise independent of worker count and scheduling. Evaluation
// episodes share one seed sequence across agents and generations, which
// makes fitness comparable and best-so-far monotone under elitism.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "evorl/agent.hpp"
#include "evorl/classic_control.hpp"
#include "evorl/gp.hpp"
#include "evorl/learners.hpp"
#include "evorl/masking.hpp"

namespace evorl {

enum class Mode { EvoRl, EaOnly, RlOnly };

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::EvoRl: return "evo-rl";
    case Mode::EaOnly: return "ea-only";
    case Mode::RlOnly: return "rl-only";
  }
  return "?";
}

inline Mode mode_from_name(std::string_view s) {
  if (s == "evo-rl") return Mode::EvoRl;
  if (s == "ea-only") return Mode::EaOnly;
  if (s == "rl-only") return Mode::RlOnly;
  throw std::invalid_argument("unknown mode '" + std::string(s) +
                              "' (expected evo-rl, ea-only or rl-only)");
}

struct BudgetLedger {
  long cap = 60000;
  long consumed = 0;
  std::optional<long> solved_at;

  long remaining() const { return cap > consumed ? cap - consumed : 0; }
};

struct RunRecord {
  long generation = 0;  // RL-only: training episodes consumed at this point
  long evaluations = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double instinct_ratio = 0.0;
  bool solved = false;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct EngineConfig {
  Mode mode = Mode::EvoRl;
  std::string env = "cartpole";
  double fraction = 0.0;
  std::uint64_t seed = 1;  // trial seed
  GpConfig gp;
  LearnerConfig learner;
  BinGrid grid;  // masking grid; also the tabular learner's state encoding
  long budget = 60000;
  int episodes_per_agent = 10;
  int eval_episodes = 100;
  int eval_interval = 300;  // RL-only evaluation cadence
  std::optional<double> solve_threshold_override;
  bool measure_instinct_in_infancy = false;
  int workers = 1;
  // Evolutionary modes refresh this population snapshot every generation.
  std::optional<std::string> checkpoint_file;
  bool resume_from_checkpoint = false;
  // Clean stop after N generations in this call (chunked execution).
  std::optional<int> stop_after_generations;
};

struct TrialResult {
  std::vector<RunRecord> records;
  BudgetLedger ledger;
  bool solved = false;
  std::optional<long> solved_at;
  std::optional<double> final_reward;  // best-so-far (evo), last eval (rl)
  double final_instinct_ratio = 0.0;
  std::optional<Agent> best;  // best-so-far fertile snapshot
  bool completed = true;      // false when stopped by stop_after_generations
};

// --------------------------------------------------------------------------
// Phases

struct InfancyStats {
  std::uint64_t total_steps = 0;
  std::uint64_t instinct_steps = 0;
  std::uint64_t learner_steps = 0;
  std::uint64_t rewarded_learner_steps = 0;
};

// Runs `episodes` training episodes. Per step: tick the instinct; when it
// decides, execute its action and leave the learner untouched; otherwise the
// learner acts and observes the (possibly reward-masked) transition.
inline InfancyStats run_infancy(Agent& agent, Learner& learner, MaskedEnv& env,
                                int episodes, const LearnerConfig& sched,
                                std::uint64_t trial_seed, long generation) {
  if (agent.life_state != LifeState::Born)
    throw std::logic_error("infancy: agent must be Born");
  InfancyStats stats;
  Rng explore(derive_seed(trial_seed, Stream::Explore,
                          static_cast<std::uint64_t>(generation),
                          static_cast<std::uint64_t>(agent.id)));
  for (int e = 0; e < episodes; ++e) {
    const double eps = epsilon_for_episode(sched, e);
    Rng env_rng(derive_seed(trial_seed, Stream::Infancy,
                            static_cast<std::uint64_t>(generation),
                            static_cast<std::uint64_t>(agent.id),
                            static_cast<std::uint64_t>(e)));
    Observation obs = env.reset(env_rng);
    while (true) {
      int action = -1;
      bool instinct = false;
      if (agent.tree) {
        const TickResult r = tick(*agent.tree, obs);
        if (r.chosen_action) {
          action = *r.chosen_action;
          instinct = true;
        }
      }
      if (!instinct) action = learner.act(obs, eps, explore);
      StepOutcome out = env.step(action);
      ++stats.total_steps;
      ++agent.total_steps;
      if (instinct) {
        ++stats.instinct_steps;
        ++agent.instinct_steps;
      } else {
        ++stats.learner_steps;
        if (out.reward) ++stats.rewarded_learner_steps;
        learner.observe(Transition{std::move(obs), action, out.reward,
                                   out.observation, out.terminal});
      }
      obs = std::move(out.observation);
      if (out.terminal || out.truncated) break;
    }
  }
  agent.life_state = LifeState::Mature;
  return stats;
}

// Greedy evaluation episodes (epsilon = 0, no learner updates). Fitness is
// the mean true (unmasked) return; instinct-ratio counters accumulate for
// reporting. Episode seeds are shared across agents and generations.
inline std::vector<double> evaluate_agent(Agent& agent, MaskedEnv& env,
                                          int eval_episodes,
                                          std::uint64_t trial_seed) {
  if (agent.life_state != LifeState::Mature)
    throw std::logic_error("maturity_eval: agent must be Mature");
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(eval_episodes));
  for (int e = 0; e < eval_episodes; ++e) {
    Rng env_rng(derive_seed(trial_seed, Stream::Eval,
                            static_cast<std::uint64_t>(e)));
    Observation obs = env.reset(env_rng);
    while (true) {
      int action = -1;
      bool instinct = false;
      if (agent.tree) {
        const TickResult r = tick(*agent.tree, obs);
        if (r.chosen_action) {
          action = *r.chosen_action;
          instinct = true;
        }
      }
      if (!instinct) action = greedy_act(agent.learned, obs);
      StepOutcome out = env.step(action);
      ++agent.eval_total_steps;
      if (instinct) ++agent.eval_instinct_steps;
      obs = std::move(out.observation);
      if (out.terminal || out.truncated) break;
    }
    returns.push_back(env.hidden_return());
  }
  double sum = 0.0;
  for (double r : returns) sum += r;
  agent.fitness = sum / static_cast<double>(eval_episodes);
  agent.life_state = LifeState::Fertile;
  return returns;
}

// Next generation: copy elites verbatim, then fill by tournament selection,
// subtree crossover + mutation on the trees, and merge + Gaussian mutation
// on the inherited learned behavior. Parents are not modified.
inline std::vector<Agent> conception(const std::vector<Agent>& parents,
                                     const GpConfig& cfg,
                                     const PrimitiveSet& ps, Rng& rng,
                                     long& next_id) {
  for (const auto& p : parents) {
    if (p.life_state != LifeState::Fertile || !p.fitness || !p.tree)
      throw std::logic_error("conception: all parents must be Fertile");
  }

  auto born = [&next_id](BtNode tree, LearnedBehavior learned) {
    Agent a;
    a.id = next_id++;
    a.tree = std::move(tree);
    a.learned = std::move(learned);
    return a;
  };

  std::vector<Agent> next;
  next.reserve(parents.size());

  // Elites: best fitness first, ties to the lowest id.
  std::vector<std::size_t> order(parents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (*parents[a].fitness != *parents[b].fitness)
      return *parents[a].fitness > *parents[b].fitness;
    return parents[a].id < parents[b].id;
  });
  const std::size_t n_elite =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.elitism), parents.size());
  for (std::size_t i = 0; i < n_elite && next.size() < parents.size(); ++i) {
    const Agent& e = parents[order[i]];
    next.push_back(born(*e.tree, e.learned));
  }

  std::vector<TournamentEntry> entries(parents.size());
  for (std::size_t i = 0; i < parents.size(); ++i)
    entries[i] = {*parents[i].fitness, parents[i].id};

  while (next.size() < parents.size()) {
    const Agent& pa = parents[tournament_select(entries, cfg.tournament_k, rng)];
    const Agent& pb = parents[tournament_select(entries, cfg.tournament_k, rng)];
    auto [tree_a, tree_b] = subtree_crossover(*pa.tree, *pb.tree, cfg, rng);
    tree_a = subtree_mutation(tree_a, ps, cfg, rng);
    tree_b = subtree_mutation(tree_b, ps, cfg, rng);
    const LearnedBehavior merged = merge_learned(pa.learned, pb.learned);
    next.push_back(born(std::move(tree_a), mutate_inherited(merged, cfg, rng)));
    if (next.size() < parents.size())
      next.push_back(born(std::move(tree_b), mutate_inherited(merged, cfg, rng)));
  }
  return next;
}

// --------------------------------------------------------------------------
// Checkpoint format (evolutionary modes)

namespace detail {

inline nlohmann::json agent_to_json(const Agent& a) {
  nlohmann::json j{{"id", a.id},
                   {"tree", a.tree ? nlohmann::json(to_sexpr(*a.tree))
                                   : nlohmann::json(nullptr)},
                   {"learned", behavior_to_json(a.learned)},
                   {"life_state", static_cast<int>(a.life_state)},
                   {"instinct_steps", a.instinct_steps},
                   {"total_steps", a.total_steps},
                   {"eval_instinct_steps", a.eval_instinct_steps},
                   {"eval_total_steps", a.eval_total_steps}};
  j["fitness"] = a.fitness ? nlohmann::json(*a.fitness) : nlohmann::json(nullptr);
  return j;
}

inline Agent agent_from_json(const nlohmann::json& j) {
  Agent a;
  a.id = j.at("id").get<long>();
  if (!j.at("tree").is_null())
    a.tree = parse_sexpr(j.at("tree").get<std::string>());
  a.learned = behavior_from_json(j.at("learned"));
  a.life_state = static_cast<LifeState>(j.at("life_state").get<int>());
  if (!j.at("fitness").is_null()) a.fitness = j.at("fitness").get<double>();
  a.instinct_steps = j.at("instinct_steps").get<std::uint64_t>();
  a.total_steps = j.at("total_steps").get<std::uint64_t>();
  a.eval_instinct_steps = j.at("eval_instinct_steps").get<std::uint64_t>();
  a.eval_total_steps = j.at("eval_total_steps").get<std::uint64_t>();
  return a;
}

inline nlohmann::json record_to_json(const RunRecord& r) {
  return nlohmann::json{{"generation", r.generation},
                        {"evaluations", r.evaluations},
                        {"best_fitness", r.best_fitness},
                        {"mean_fitness", r.mean_fitness},
                        {"instinct_ratio", r.instinct_ratio},
                        {"solved", r.solved}};
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  return RunRecord{j.at("generation").get<long>(),
                   j.at("evaluations").get<long>(),
                   j.at("best_fitness").get<double>(),
                   j.at("mean_fitness").get<double>(),
                   j.at("instinct_ratio").get<double>(),
                   j.at("solved").get<bool>()};
}

inline constexpr const char* kCheckpointSchema = "evorl-checkpoint-1";

// Runs agent jobs on a small worker pool; any worker exception is rethrown
// on the caller after join.
inline void parallel_for(int n, int workers,
                         const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int w = std::clamp(workers, 1, n);
  if (w == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w));
  for (int t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// --------------------------------------------------------------------------
// Run modes

inline void validate_engine_config(const EngineConfig& cfg) {
  env_spec(cfg.env);
  validate_grid(cfg.grid);
  validate_gp_config(cfg.gp);
  if (!(cfg.fraction >= 0.0 && cfg.fraction <= 0.5))
    throw std::invalid_argument("engine: fraction must lie in [0, 0.5]");
  if (cfg.budget < 0) throw std::invalid_argument("engine: budget must be >= 0");
  if (cfg.episodes_per_agent < 1)
    throw std::invalid_argument("engine: episodes_per_agent must be >= 1");
  if (cfg.eval_episodes < 1)
    throw std::invalid_argument("engine: eval_episodes must be >= 1");
  if (cfg.eval_interval < 1)
    throw std::invalid_argument("engine: eval_interval must be >= 1");
  if (cfg.workers < 1) throw std::invalid_argument("engine: workers must be >= 1");
  if (static_cast<int>(cfg.grid.lower.size()) != env_spec(cfg.env).state_dim)
    throw std::invalid_argument("engine: grid does not match environment");
  if (cfg.learner.algo != "q" && cfg.learner.algo != "dqn") {
    if (cfg.learner.algo == "ppo")
      throw std::invalid_argument("learner algo 'ppo' is not implemented");
    throw std::invalid_argument("unknown learner algo '" + cfg.learner.algo + "'");
  }
}

namespace detail {

struct EvoState {
  long generation = 1;
  long next_id = 0;
  std::vector<Agent> population;
  std::vector<RunRecord> records;
  long consumed = 0;
  std::optional<long> solved_at;
  std::optional<Agent> best;
  bool complete = false;
};

inline void write_checkpoint(const EngineConfig& cfg, const EvoState& st) {
  if (!cfg.checkpoint_file) return;
  nlohmann::json j{{"schema", kCheckpointSchema},
                   {"mode", mode_name(cfg.mode)},
                   {"env", cfg.env},
                   {"generation", st.generation},
                   {"consumed", st.consumed},
                   {"next_id", st.next_id},
                   {"complete", st.complete}};
  j["solved_at"] =
      st.solved_at ? nlohmann::json(*st.solved_at) : nlohmann::json(nullptr);
  j["best"] = st.best ? agent_to_json(*st.best) : nlohmann::json(nullptr);
  nlohmann::json pop = nlohmann::json::array();
  for (const auto& a : st.population) pop.push_back(agent_to_json(a));
  j["population"] = std::move(pop);
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : st.records) recs.push_back(record_to_json(r));
  j["records"] = std::move(recs);
  std::ofstream out(*cfg.checkpoint_file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint file " +
                                     *cfg.checkpoint_file);
  out << j.dump() << '\n';
}

inline std::optional<EvoState> load_checkpoint(const EngineConfig& cfg) {
  if (!cfg.checkpoint_file || !cfg.resume_from_checkpoint) return std::nullopt;
  std::ifstream in(*cfg.checkpoint_file);
  if (!in) return std::nullopt;
  nlohmann::json j;
  in >> j;
  if (j.at("schema").get<std::string>() != kCheckpointSchema)
    throw std::runtime_error("checkpoint schema mismatch in " +
                             *cfg.checkpoint_file);
  if (j.at("mode").get<std::string>() != mode_name(cfg.mode) ||
      j.at("env").get<std::string>() != cfg.env)
    throw std::runtime_error("checkpoint does not match the run configuration");
  EvoState st;
  st.generation = j.at("generation").get<long>();
  st.consumed = j.at("consumed").get<long>();
  st.next_id = j.at("next_id").get<long>();
  st.complete = j.at("complete").get<bool>();
  if (!j.at("solved_at").is_null()) st.solved_at = j.at("solved_at").get<long>();
  if (!j.at("best").is_null()) st.best = agent_from_json(j.at("best"));
  for (const auto& a : j.at("population")) st.population.push_back(agent_from_json(a));
  for (const auto& r : j.at("records")) st.records.push_back(record_from_json(r));
  return st;
}

inline TrialResult finalize(const EngineConfig& cfg, EvoState&& st,
                            bool completed) {
  TrialResult res;
  res.records = std::move(st.records);
  res.ledger.cap = cfg.budget;
  res.ledger.consumed = st.consumed;
  res.ledger.solved_at = st.solved_at;
  res.solved = st.solved_at.has_value();
  res.solved_at = st.solved_at;
  if (st.best) {
    res.final_reward = st.best->fitness;
    res.final_instinct_ratio =
        st.best->instinct_ratio(cfg.measure_instinct_in_infancy);
  }
  res.best = std::move(st.best);
  res.completed = completed;
  return res;
}

inline TrialResult run_evolutionary(const EngineConfig& cfg) {
  const EnvSpec& spec = env_spec(cfg.env);
  const double threshold =
      cfg.solve_threshold_override.value_or(spec.reward_threshold);
  const PrimitiveSet ps = primitive_set_for(spec, cfg.grid, cfg.gp);
  const RewardlessMask mask = build_mask(
      cfg.grid, cfg.fraction, derive_seed(cfg.seed, Stream::Mask));
  const auto make_masked = [&] {
    return MaskedEnv(make_env(cfg.env), cfg.grid, mask);
  };
  const long per_agent_cost =
      cfg.mode == Mode::EaOnly ? 1 : cfg.episodes_per_agent;
  const auto pop_size = static_cast<std::size_t>(cfg.gp.population_size);

  EvoState st;
  if (auto loaded = load_checkpoint(cfg)) {
    st = std::move(*loaded);
    if (st.complete) return finalize(cfg, std::move(st), true);
    if (st.population.size() != pop_size)
      throw std::runtime_error("checkpoint population size mismatch");
  } else {
    // Ramped half-and-half initialization.
    const int span = cfg.gp.init_depth_max - cfg.gp.init_depth_min + 1;
    for (std::size_t i = 0; i < pop_size; ++i) {
      Rng init_rng(derive_seed(cfg.seed, Stream::PopInit,
                               static_cast<std::uint64_t>(i), 0));
      const TreeInit mode = i % 2 == 0 ? TreeInit::Full : TreeInit::Grow;
      const int depth =
          cfg.gp.init_depth_min + static_cast<int>((i / 2) % static_cast<std::size_t>(span));
      Agent a;
      a.id = st.next_id++;
      a.tree = random_tree(ps, depth, depth, mode, init_rng, cfg.gp.max_nodes);
      a.learned = fresh_behavior(
          cfg.learner, spec, cfg.grid,
          derive_seed(cfg.seed, Stream::PopInit, static_cast<std::uint64_t>(i), 1));
      st.population.push_back(std::move(a));
    }
  }

  int generations_this_call = 0;
  bool chunk_stop = false;
  while (st.generation <= cfg.gp.generations) {
    write_checkpoint(cfg, st);
    if (cfg.stop_after_generations &&
        generations_this_call >= *cfg.stop_after_generations) {
      chunk_stop = true;
      break;
    }

    // Infancy (Evo-RL) or instant maturation (EA-only) for as many agents as
    // the budget still affords; a shortfall ends the run cleanly.
    const long afford = (cfg.budget - st.consumed) / per_agent_cost;
    const std::size_t n_run =
        std::min(pop_size, static_cast<std::size_t>(std::max(0L, afford)));
    if (cfg.mode == Mode::EvoRl) {
      parallel_for(static_cast<int>(n_run), cfg.workers, [&](int i) {
        Agent& a = st.population[static_cast<std::size_t>(i)];
        auto learner = make_learner(
            cfg.learner, a.learned,
            derive_seed(cfg.seed, Stream::LearnerInit,
                        static_cast<std::uint64_t>(st.generation),
                        static_cast<std::uint64_t>(a.id)));
        MaskedEnv env = make_masked();
        run_infancy(a, *learner, env, cfg.episodes_per_agent, cfg.learner,
                    cfg.seed, st.generation);
        a.learned = learner->behavior();
      });
    } else {
      for (std::size_t i = 0; i < n_run; ++i)
        st.population[i].life_state = LifeState::Mature;
    }
    st.consumed += static_cast<long>(n_run) * per_agent_cost;
    if (n_run < pop_size) break;  // budget exhausted: run complete

    parallel_for(static_cast<int>(pop_size), cfg.workers, [&](int i) {
      MaskedEnv env = make_masked();
      evaluate_agent(st.population[static_cast<std::size_t>(i)], env,
                     cfg.eval_episodes, cfg.seed);
    });

    // Serial reduction in index order.
    std::size_t best_i = 0;
    double mean = 0.0;
    for (std::size_t i = 0; i < pop_size; ++i) {
      const Agent& a = st.population[i];
      mean += *a.fitness;
      const Agent& b = st.population[best_i];
      if (*a.fitness > *b.fitness ||
          (*a.fitness == *b.fitness && a.id < b.id))
        best_i = i;
    }
    mean /= static_cast<double>(pop_size);
    const Agent& gen_best = st.population[best_i];
    const bool solved = *gen_best.fitness >= threshold;
    st.records.push_back(RunRecord{
        st.generation, st.consumed, *gen_best.fitness, mean,
        gen_best.instinct_ratio(cfg.measure_instinct_in_infancy), solved});
    if (!st.best || *gen_best.fitness > *st.best->fitness)
      st.best = gen_best;

    if (solved) {
      st.solved_at = st.consumed;
      break;
    }
    if (st.generation == cfg.gp.generations) break;
    if ((cfg.budget - st.consumed) / per_agent_cost <= 0) break;

    Rng var_rng(derive_seed(cfg.seed, Stream::Variation,
                            static_cast<std::uint64_t>(st.generation)));
    st.population =
        conception(st.population, cfg.gp, ps, var_rng, st.next_id);
    ++st.generation;
    ++generations_this_call;
  }

  if (!chunk_stop) {
    st.complete = true;
    write_checkpoint(cfg, st);
  }
  return finalize(cfg, std::move(st), !chunk_stop);
}

inline TrialResult run_rl_only(const EngineConfig& cfg) {
  const EnvSpec& spec = env_spec(cfg.env);
  const double threshold =
      cfg.solve_threshold_override.value_or(spec.reward_threshold);
  const RewardlessMask mask = build_mask(
      cfg.grid, cfg.fraction, derive_seed(cfg.seed, Stream::Mask));
  MaskedEnv env(make_env(cfg.env), cfg.grid, mask);
  MaskedEnv eval_env(make_env(cfg.env), cfg.grid, mask);

  auto learner = make_learner(
      cfg.learner,
      fresh_behavior(cfg.learner, spec, cfg.grid,
                     derive_seed(cfg.seed, Stream::PopInit, 0, 1)),
      derive_seed(cfg.seed, Stream::LearnerInit, 0, 0));
  Rng explore(derive_seed(cfg.seed, Stream::Explore, 0, 0));

  TrialResult res;
  res.ledger.cap = cfg.budget;
  for (long ep = 1; ep <= cfg.budget; ++ep) {
    const double eps = epsilon_for_episode(cfg.learner, ep - 1);
    Rng env_rng(derive_seed(cfg.seed, Stream::Infancy, 0, 0,
                            static_cast<std::uint64_t>(ep)));
    Observation obs = env.reset(env_rng);
    while (true) {
      const int action = learner->act(obs, eps, explore);
      StepOutcome out = env.step(action);
      learner->observe(Transition{std::move(obs), action, out.reward,
                                  out.observation, out.terminal});
      obs = std::move(out.observation);
      if (out.terminal || out.truncated) break;
    }
    res.ledger.consumed = ep;

    if (ep % cfg.eval_interval == 0 || ep == cfg.budget) {
      const LearnedBehavior behavior = learner->behavior();
      double sum = 0.0;
      for (int e = 0; e < cfg.eval_episodes; ++e) {
        Rng eval_rng(derive_seed(cfg.seed, Stream::Eval,
                                 static_cast<std::uint64_t>(e)));
        Observation o = eval_env.reset(eval_rng);
        while (true) {
          StepOutcome out = eval_env.step(greedy_act(behavior, o));
          o = std::move(out.observation);
          if (out.terminal || out.truncated) break;
        }
        sum += eval_env.hidden_return();
      }
      const double mean = sum / static_cast<double>(cfg.eval_episodes);
      const bool solved = mean >= threshold;
      res.records.push_back(RunRecord{ep, ep, mean, mean, 0.0, solved});
      res.final_reward = mean;
      if (solved) {
        res.ledger.solved_at = ep;
        break;
      }
    }
  }
  res.solved = res.ledger.solved_at.has_value();
  res.solved_at = res.ledger.solved_at;
  return res;
}

}  // namespace detail

inline TrialResult run_trial(const EngineConfig& cfg) {
  validate_engine_config(cfg);
  if (cfg.mode == Mode::RlOnly) return detail::run_rl_only(cfg);
  return detail::run_evolutionary(cfg);
}

}  // namespace evorl
