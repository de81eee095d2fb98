#pragma once

// Experiment harness: run configuration (JSON file + overrides), multi-trial
// suites with derived per-trial seeds, statistics, and the artifact files
// (convergence CSVs, mask archives, suite summary JSON, table rows).
// A fixed (config, master seed) pair always produces byte-identical
// artifacts, with or without trial parallelism.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "evorl/engine.hpp"
#include "evorl/stats.hpp"
#include "evorl/text.hpp"

namespace evorl {

// Bad configuration (CLI exit code 1), as opposed to runtime faults (2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kSuiteSchema = "evorl-suite-1";

struct RunConfig {
  std::string env = "cartpole";
  std::string mode = "evo-rl";  // evo-rl | ea-only | rl-only
  std::string algo = "q";       // q | dqn ("ppo" is rejected as unimplemented)
  double fraction = 0.0;
  int trials = 10;
  std::uint64_t seed = 1;
  long budget = 60000;
  std::optional<int> generations;  // default: 200 (evo-rl), 2000 (ea-only)
  GpConfig gp;                     // gp.generations is filled from the above
  LearnerConfig learner;
  std::optional<int> epsilon_decay_episodes;  // default: infancy episodes,
                                              // or 500 for rl-only
  int episodes_per_agent = 10;
  int eval_episodes = 100;
  int eval_interval = 300;
  std::optional<std::vector<int>> bins_per_dim;
  std::optional<std::vector<double>> clip_lower;
  std::optional<std::vector<double>> clip_upper;
  std::string out = "runs/run";
  int workers = 1;
  int parallel_trials = 1;
  bool allow_any_fraction = false;
  bool require_solved = false;
  bool population_stddev = false;
  bool measure_instinct_in_infancy = false;
  bool checkpoint = true;
  bool resume = false;
  std::optional<double> solve_threshold_override;
};

// Column label used in tables: evo-rl runs carry the "e" prefix.
inline std::string algo_label(const RunConfig& cfg) {
  if (cfg.mode == "ea-only") return "ea-only";
  if (cfg.mode == "evo-rl") return "e" + cfg.algo;
  return cfg.algo;
}

// --------------------------------------------------------------------------
// JSON config (flat schema; unknown keys are rejected)

namespace detail {

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "env", "mode", "algo", "fraction", "trials", "seed", "budget",
      "generations", "population", "episodes_per_agent", "eval_episodes",
      "eval_interval", "tournament_k", "crossover_rate", "mutation_rate",
      "inherited_mutation_rate", "inherited_element_prob",
      "inherited_noise_sigma", "max_depth", "max_nodes", "init_depth_min",
      "init_depth_max", "elitism", "enable_repeat_nodes",
      "enable_parallel_nodes", "alpha", "gamma", "epsilon_start",
      "epsilon_end", "epsilon_decay_episodes", "dqn_hidden", "dqn_lr",
      "dqn_batch", "dqn_buffer", "dqn_train_interval", "dqn_target_sync",
      "bins_per_dim", "clip_lower", "clip_upper", "out", "workers",
      "parallel_trials", "allow_any_fraction", "require_solved",
      "population_stddev", "measure_instinct_in_infancy", "checkpoint",
      "resume", "solve_threshold_override"};
  return keys;
}

template <class T>
void maybe(const nlohmann::json& j, const char* key, T& into) {
  if (const auto it = j.find(key); it != j.end() && !it->is_null()) {
    try {
      into = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
  }
}

template <class T>
void maybe_opt(const nlohmann::json& j, const char* key,
               std::optional<T>& into) {
  if (const auto it = j.find(key); it != j.end() && !it->is_null()) {
    try {
      into = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
  }
}

}  // namespace detail

// Overlays JSON values onto an existing config (defaults or a prior layer).
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    const auto& keys = detail::config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("config: unknown key '" + key + "'");
  }
  detail::maybe(j, "env", cfg.env);
  detail::maybe(j, "mode", cfg.mode);
  detail::maybe(j, "algo", cfg.algo);
  detail::maybe(j, "fraction", cfg.fraction);
  detail::maybe(j, "trials", cfg.trials);
  detail::maybe(j, "seed", cfg.seed);
  detail::maybe(j, "budget", cfg.budget);
  detail::maybe_opt(j, "generations", cfg.generations);
  detail::maybe(j, "population", cfg.gp.population_size);
  detail::maybe(j, "episodes_per_agent", cfg.episodes_per_agent);
  detail::maybe(j, "eval_episodes", cfg.eval_episodes);
  detail::maybe(j, "eval_interval", cfg.eval_interval);
  detail::maybe(j, "tournament_k", cfg.gp.tournament_k);
  detail::maybe(j, "crossover_rate", cfg.gp.crossover_rate);
  detail::maybe(j, "mutation_rate", cfg.gp.mutation_rate);
  detail::maybe(j, "inherited_mutation_rate", cfg.gp.inherited_mutation_rate);
  detail::maybe(j, "inherited_element_prob", cfg.gp.inherited_element_prob);
  detail::maybe(j, "inherited_noise_sigma", cfg.gp.inherited_noise_sigma);
  detail::maybe(j, "max_depth", cfg.gp.max_depth);
  detail::maybe(j, "max_nodes", cfg.gp.max_nodes);
  detail::maybe(j, "init_depth_min", cfg.gp.init_depth_min);
  detail::maybe(j, "init_depth_max", cfg.gp.init_depth_max);
  detail::maybe(j, "elitism", cfg.gp.elitism);
  detail::maybe(j, "enable_repeat_nodes", cfg.gp.enable_repeat_nodes);
  detail::maybe(j, "enable_parallel_nodes", cfg.gp.enable_parallel_nodes);
  detail::maybe(j, "alpha", cfg.learner.alpha);
  detail::maybe(j, "gamma", cfg.learner.gamma);
  detail::maybe(j, "epsilon_start", cfg.learner.epsilon_start);
  detail::maybe(j, "epsilon_end", cfg.learner.epsilon_end);
  detail::maybe_opt(j, "epsilon_decay_episodes", cfg.epsilon_decay_episodes);
  detail::maybe(j, "dqn_hidden", cfg.learner.dqn_hidden);
  detail::maybe(j, "dqn_lr", cfg.learner.dqn_lr);
  detail::maybe(j, "dqn_batch", cfg.learner.dqn_batch);
  detail::maybe(j, "dqn_buffer", cfg.learner.dqn_buffer);
  detail::maybe(j, "dqn_train_interval", cfg.learner.dqn_train_interval);
  detail::maybe(j, "dqn_target_sync", cfg.learner.dqn_target_sync);
  detail::maybe_opt(j, "bins_per_dim", cfg.bins_per_dim);
  detail::maybe_opt(j, "clip_lower", cfg.clip_lower);
  detail::maybe_opt(j, "clip_upper", cfg.clip_upper);
  detail::maybe(j, "out", cfg.out);
  detail::maybe(j, "workers", cfg.workers);
  detail::maybe(j, "parallel_trials", cfg.parallel_trials);
  detail::maybe(j, "allow_any_fraction", cfg.allow_any_fraction);
  detail::maybe(j, "require_solved", cfg.require_solved);
  detail::maybe(j, "population_stddev", cfg.population_stddev);
  detail::maybe(j, "measure_instinct_in_infancy",
                cfg.measure_instinct_in_infancy);
  detail::maybe(j, "checkpoint", cfg.checkpoint);
  detail::maybe(j, "resume", cfg.resume);
  detail::maybe_opt(j, "solve_threshold_override",
                    cfg.solve_threshold_override);
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  apply_config_json(cfg, j);
  return cfg;
}

// Desk-scale preset: paper hyperparameters, 5 trials, 18,000-unit budget
// (60 generations for evo-rl, 600 for ea-only).
inline void apply_preset(RunConfig& cfg, const std::string& preset) {
  if (preset != "desk")
    throw ConfigError("unknown preset '" + preset + "' (available: desk)");
  cfg.trials = 5;
  cfg.budget = 18000;
  if (cfg.mode == "ea-only")
    cfg.generations = 600;
  else
    cfg.generations = 60;
}

// Fills mode-dependent defaults and checks every field; throws ConfigError.
inline void resolve_config(RunConfig& cfg) {
  if (cfg.mode != "evo-rl" && cfg.mode != "ea-only" && cfg.mode != "rl-only")
    throw ConfigError("config: unknown mode '" + cfg.mode +
                      "' (expected evo-rl, ea-only or rl-only)");
  if (cfg.algo == "ppo")
    throw ConfigError("config: learner algo 'ppo' is not implemented");
  if (cfg.algo != "q" && cfg.algo != "dqn")
    throw ConfigError("config: unknown algo '" + cfg.algo +
                      "' (expected q or dqn)");
  try {
    env_spec(cfg.env);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (!(cfg.fraction >= 0.0 && cfg.fraction <= 0.5))
    throw ConfigError("config: fraction must lie in [0, 0.5]");
  if (!cfg.allow_any_fraction) {
    bool tested = false;
    for (int k = 0; k <= 5; ++k)
      tested = tested || std::abs(cfg.fraction - 0.1 * k) < 1e-9;
    if (!tested)
      throw ConfigError(
          "config: fraction must be one of 0, 0.1, ..., 0.5 "
          "(pass allow_any_fraction to lift this)");
  }

  if (cfg.trials < 1) throw ConfigError("config: trials must be >= 1");
  if (cfg.budget < 0) throw ConfigError("config: budget must be >= 0");
  if (cfg.workers < 1 || cfg.parallel_trials < 1)
    throw ConfigError("config: workers/parallel_trials must be >= 1");

  if (!cfg.generations)
    cfg.generations = cfg.mode == "ea-only" ? 2000 : 200;
  cfg.gp.generations = *cfg.generations;

  if (!cfg.epsilon_decay_episodes)
    cfg.epsilon_decay_episodes =
        cfg.mode == "rl-only" ? 500 : cfg.episodes_per_agent;
  cfg.learner.epsilon_decay_episodes = *cfg.epsilon_decay_episodes;
  cfg.learner.algo = cfg.algo;

  try {
    validate_gp_config(cfg.gp);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.episodes_per_agent < 1 || cfg.eval_episodes < 1 ||
      cfg.eval_interval < 1)
    throw ConfigError("config: episode counts must be >= 1");
}

// Binning/clipping grid for the configured environment.
inline BinGrid resolve_grid(const RunConfig& cfg) {
  BinGrid grid = default_grid(cfg.env);
  const auto dims = grid.bins_per_dim.size();
  if (cfg.bins_per_dim) {
    if (cfg.bins_per_dim->size() != dims)
      throw ConfigError("config: bins_per_dim dimension mismatch");
    grid.bins_per_dim = *cfg.bins_per_dim;
  }
  if (cfg.clip_lower) {
    if (cfg.clip_lower->size() != dims)
      throw ConfigError("config: clip_lower dimension mismatch");
    grid.lower = *cfg.clip_lower;
  }
  if (cfg.clip_upper) {
    if (cfg.clip_upper->size() != dims)
      throw ConfigError("config: clip_upper dimension mismatch");
    grid.upper = *cfg.clip_upper;
  }
  try {
    validate_grid(grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return grid;
}

// The determinism-relevant part of a resolved config. Output paths and
// parallelism knobs are excluded on purpose: artifacts must not depend on
// them.
inline nlohmann::json semantic_config_json(const RunConfig& cfg) {
  const BinGrid grid = resolve_grid(cfg);
  nlohmann::json j{
      {"env", cfg.env},
      {"mode", cfg.mode},
      {"algo", cfg.algo},
      {"fraction", cfg.fraction},
      {"trials", cfg.trials},
      {"seed", cfg.seed},
      {"budget", cfg.budget},
      {"generations", cfg.gp.generations},
      {"population", cfg.gp.population_size},
      {"episodes_per_agent", cfg.episodes_per_agent},
      {"eval_episodes", cfg.eval_episodes},
      {"eval_interval", cfg.eval_interval},
      {"tournament_k", cfg.gp.tournament_k},
      {"crossover_rate", cfg.gp.crossover_rate},
      {"mutation_rate", cfg.gp.mutation_rate},
      {"inherited_mutation_rate", cfg.gp.inherited_mutation_rate},
      {"inherited_element_prob", cfg.gp.inherited_element_prob},
      {"inherited_noise_sigma", cfg.gp.inherited_noise_sigma},
      {"max_depth", cfg.gp.max_depth},
      {"max_nodes", cfg.gp.max_nodes},
      {"init_depth_min", cfg.gp.init_depth_min},
      {"init_depth_max", cfg.gp.init_depth_max},
      {"elitism", cfg.gp.elitism},
      {"enable_repeat_nodes", cfg.gp.enable_repeat_nodes},
      {"enable_parallel_nodes", cfg.gp.enable_parallel_nodes},
      {"alpha", cfg.learner.alpha},
      {"gamma", cfg.learner.gamma},
      {"epsilon_start", cfg.learner.epsilon_start},
      {"epsilon_end", cfg.learner.epsilon_end},
      {"epsilon_decay_episodes", cfg.learner.epsilon_decay_episodes},
      {"dqn_hidden", cfg.learner.dqn_hidden},
      {"dqn_lr", cfg.learner.dqn_lr},
      {"dqn_batch", cfg.learner.dqn_batch},
      {"dqn_buffer", cfg.learner.dqn_buffer},
      {"dqn_train_interval", cfg.learner.dqn_train_interval},
      {"dqn_target_sync", cfg.learner.dqn_target_sync},
      {"bins_per_dim", grid.bins_per_dim},
      {"clip_lower", grid.lower},
      {"clip_upper", grid.upper},
      {"population_stddev", cfg.population_stddev},
      {"measure_instinct_in_infancy", cfg.measure_instinct_in_infancy},
      {"checkpoint", cfg.checkpoint}};
  j["solve_threshold_override"] =
      cfg.solve_threshold_override ? nlohmann::json(*cfg.solve_threshold_override)
                                   : nlohmann::json(nullptr);
  return j;
}

// --------------------------------------------------------------------------
// Suite execution

struct TrialRow {
  int trial = 0;
  std::uint64_t trial_seed = 0;
  std::optional<double> final_reward;
  bool solved = false;
  std::optional<long> solved_at;
  double instinct_ratio = 0.0;
  long consumed = 0;
};

struct SuiteSummary {
  std::string label;
  std::vector<TrialRow> rows;
  std::optional<double> mean_reward;
  std::optional<double> sem_reward;
  double mean_ratio = 0.0;
  int solved_count = 0;
  bool solved_majority = false;
  std::optional<long> solved_at_median;
};

struct SuiteOutput {
  SuiteSummary summary;
  std::filesystem::path dir;
  nlohmann::json summary_json;
  std::string table_row;
};

namespace detail {

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline std::string convergence_csv(Mode mode,
                                   const std::vector<RunRecord>& records) {
  std::string csv = mode == Mode::RlOnly ? "eval_point" : "generation";
  csv += ",evaluations,best_fitness,mean_fitness,instinct_ratio,solved\n";
  for (const auto& r : records) {
    csv += std::to_string(r.generation);
    csv += ',';
    csv += std::to_string(r.evaluations);
    csv += ',';
    csv += format_double(r.best_fitness);
    csv += ',';
    csv += format_double(r.mean_fitness);
    csv += ',';
    csv += format_double(r.instinct_ratio);
    csv += ',';
    csv += r.solved ? '1' : '0';
    csv += '\n';
  }
  return csv;
}

inline std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

// Lower median keeps the value an actual solved_at count.
inline long median_long(std::vector<long> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[(xs.size() - 1) / 2];
}

}  // namespace detail

// Paper-style cell: "196.3 ± 0.3 @ 10,800" (the @ part only when a majority
// of trials solved).
inline std::string table_cell(const SuiteSummary& s) {
  if (!s.mean_reward) return "-";
  std::string cell = detail::fixed1(*s.mean_reward) + " ± " +
                     detail::fixed1(s.sem_reward.value_or(0.0));
  if (s.solved_majority && s.solved_at_median)
    cell += " @ " + format_grouped(*s.solved_at_median);
  return cell;
}

inline SuiteOutput run_suite(RunConfig cfg) {
  resolve_config(cfg);
  const BinGrid grid = resolve_grid(cfg);
  const Mode mode = mode_from_name(cfg.mode);

  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.out);
  fs::create_directories(out_dir);

  try {
    detail::write_file(out_dir / "config.json",
                       semantic_config_json(cfg).dump(2) + "\n");

    std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
    detail::parallel_for(cfg.trials, cfg.parallel_trials, [&](int t) {
      const fs::path trial_dir = out_dir / ("trial_" + std::to_string(t));
      fs::create_directories(trial_dir);

      EngineConfig ecfg;
      ecfg.mode = mode;
      ecfg.env = cfg.env;
      ecfg.fraction = cfg.fraction;
      ecfg.seed = derive_seed(cfg.seed, Stream::Trial,
                              static_cast<std::uint64_t>(t));
      ecfg.gp = cfg.gp;
      ecfg.learner = cfg.learner;
      ecfg.grid = grid;
      ecfg.budget = cfg.budget;
      ecfg.episodes_per_agent = cfg.episodes_per_agent;
      ecfg.eval_episodes = cfg.eval_episodes;
      ecfg.eval_interval = cfg.eval_interval;
      ecfg.solve_threshold_override = cfg.solve_threshold_override;
      ecfg.measure_instinct_in_infancy = cfg.measure_instinct_in_infancy;
      ecfg.workers = cfg.workers;
      if (cfg.checkpoint && mode != Mode::RlOnly)
        ecfg.checkpoint_file = (trial_dir / "checkpoint.json").string();
      ecfg.resume_from_checkpoint = cfg.resume;

      const RewardlessMask mask = build_mask(
          grid, cfg.fraction, derive_seed(ecfg.seed, Stream::Mask));
      detail::write_file(trial_dir / "mask.json",
                         mask_to_json(cfg.env, grid, mask).dump(2) + "\n");

      TrialResult res = run_trial(ecfg);
      detail::write_file(trial_dir / "convergence.csv",
                         detail::convergence_csv(mode, res.records));
      results[static_cast<std::size_t>(t)] = std::move(res);
    });

    // Aggregate in trial order.
    SuiteSummary summary;
    summary.label = algo_label(cfg);
    std::vector<double> finals;
    std::vector<double> ratios;
    std::vector<long> solved_ats;
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialResult& r = results[static_cast<std::size_t>(t)];
      TrialRow row;
      row.trial = t;
      row.trial_seed =
          derive_seed(cfg.seed, Stream::Trial, static_cast<std::uint64_t>(t));
      row.final_reward = r.final_reward;
      row.solved = r.solved;
      row.solved_at = r.solved_at;
      row.instinct_ratio = r.final_instinct_ratio;
      row.consumed = r.ledger.consumed;
      summary.rows.push_back(row);
      if (r.final_reward) finals.push_back(*r.final_reward);
      ratios.push_back(r.final_instinct_ratio);
      if (r.solved) {
        ++summary.solved_count;
        solved_ats.push_back(*r.solved_at);
      }
    }
    if (!finals.empty()) {
      summary.mean_reward = mean(finals);
      summary.sem_reward = sem(finals, cfg.population_stddev);
    }
    summary.mean_ratio = ratios.empty() ? 0.0 : mean(ratios);
    summary.solved_majority = 2 * summary.solved_count >= cfg.trials;
    if (!solved_ats.empty())
      summary.solved_at_median = detail::median_long(solved_ats);

    nlohmann::json jtrials = nlohmann::json::array();
    for (const auto& row : summary.rows) {
      nlohmann::json jt{{"trial", row.trial},
                        {"trial_seed", row.trial_seed},
                        {"solved", row.solved},
                        {"instinct_ratio", row.instinct_ratio},
                        {"consumed", row.consumed}};
      jt["final_reward"] = row.final_reward
                               ? nlohmann::json(*row.final_reward)
                               : nlohmann::json(nullptr);
      jt["solved_at"] = row.solved_at ? nlohmann::json(*row.solved_at)
                                      : nlohmann::json(nullptr);
      jtrials.push_back(jt);
    }
    nlohmann::json jsummary{{"schema", kSuiteSchema},
                            {"label", summary.label},
                            {"config", semantic_config_json(cfg)},
                            {"trials", jtrials}};
    nlohmann::json jagg{{"solved_trials", summary.solved_count},
                        {"solved_majority", summary.solved_majority},
                        {"mean_instinct_ratio", summary.mean_ratio}};
    jagg["mean"] = summary.mean_reward ? nlohmann::json(*summary.mean_reward)
                                       : nlohmann::json(nullptr);
    jagg["sem"] = summary.sem_reward ? nlohmann::json(*summary.sem_reward)
                                     : nlohmann::json(nullptr);
    jagg["solved_at_median"] = summary.solved_at_median
                                   ? nlohmann::json(*summary.solved_at_median)
                                   : nlohmann::json(nullptr);
    jsummary["aggregate"] = jagg;

    char frac_buf[16];
    std::snprintf(frac_buf, sizeof frac_buf, "%g%%", cfg.fraction * 100.0);
    const std::string row_text = cfg.env + " " + frac_buf + " " +
                                 summary.label + ": " + table_cell(summary);

    detail::write_file(out_dir / "suite_summary.json", jsummary.dump(2) + "\n");
    detail::write_file(out_dir / "table_row.txt", row_text + "\n");

    return SuiteOutput{std::move(summary), out_dir, std::move(jsummary),
                       row_text};
  } catch (const std::exception& e) {
    // Mark partial outputs so a half-written suite is never mistaken for a
    // finished one.
    std::ofstream marker(out_dir / "INCOMPLETE");
    marker << e.what() << "\n";
    throw;
  }
}

// --------------------------------------------------------------------------
// Report: merge suite summaries into a table-shaped grid
// (rows = env x fraction, columns = algorithm labels).

struct Report {
  std::string text;
  std::string csv;
};

inline Report make_report(const std::vector<nlohmann::json>& summaries) {
  struct Cell {
    std::optional<double> mean_v;
    std::optional<double> sem_v;
    int solved = 0;
    int trials = 0;
    bool majority = false;
    std::optional<long> at;
  };

  const std::vector<std::string> label_order{"ea-only", "q", "eq", "dqn",
                                             "edqn"};
  const std::vector<std::string> env_order{"cartpole", "acrobot",
                                           "mountaincar"};
  auto env_rank = [&](const std::string& e) {
    for (std::size_t i = 0; i < env_order.size(); ++i)
      if (env_order[i] == e) return static_cast<int>(i);
    return static_cast<int>(env_order.size());
  };

  std::map<std::pair<int, std::pair<std::string, long>>,
           std::map<std::string, Cell>>
      grid;  // key: (env rank, (env, fraction per-mille))

  std::vector<std::string> labels_seen;
  for (const auto& j : summaries) {
    if (!j.contains("schema") ||
        j.at("schema").get<std::string>() != kSuiteSchema)
      throw ConfigError(
          "report: suite summary schema mismatch (expected evorl-suite-1)");
    const auto& cfg = j.at("config");
    const std::string env = cfg.at("env").get<std::string>();
    const double fraction = cfg.at("fraction").get<double>();
    const std::string label = j.at("label").get<std::string>();
    const auto& agg = j.at("aggregate");

    Cell cell;
    if (!agg.at("mean").is_null()) cell.mean_v = agg.at("mean").get<double>();
    if (!agg.at("sem").is_null()) cell.sem_v = agg.at("sem").get<double>();
    cell.solved = agg.at("solved_trials").get<int>();
    cell.trials = cfg.at("trials").get<int>();
    cell.majority = agg.at("solved_majority").get<bool>();
    if (!agg.at("solved_at_median").is_null())
      cell.at = agg.at("solved_at_median").get<long>();

    const long frac_pm = std::lround(fraction * 1000.0);
    grid[{env_rank(env), {env, frac_pm}}][label] = cell;
    if (std::find(labels_seen.begin(), labels_seen.end(), label) ==
        labels_seen.end())
      labels_seen.push_back(label);
  }

  // Stable column order: canonical labels first, then any others as seen.
  std::vector<std::string> columns;
  for (const auto& l : label_order)
    if (std::find(labels_seen.begin(), labels_seen.end(), l) !=
        labels_seen.end())
      columns.push_back(l);
  for (const auto& l : labels_seen)
    if (std::find(columns.begin(), columns.end(), l) == columns.end())
      columns.push_back(l);

  auto cell_text = [](const Cell& c) -> std::string {
    if (!c.mean_v) return "-";
    std::string s =
        detail::fixed1(*c.mean_v) + " ± " + detail::fixed1(c.sem_v.value_or(0.0));
    if (c.majority && c.at) s += " @ " + format_grouped(*c.at);
    return s;
  };

  // Column widths for the text table.
  std::vector<std::size_t> width(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c)
    width[c] = columns[c].size();
  for (const auto& [key, cells] : grid) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto it = cells.find(columns[c]);
      if (it != cells.end())
        width[c] = std::max(width[c], cell_text(it->second).size());
    }
  }

  std::string text;
  std::string csv =
      "env,fraction,label,mean,sem,solved_trials,trials,solved_at_median\n";
  {
    char head[64];
    std::snprintf(head, sizeof head, "%-12s %-6s", "env", "frac");
    text += head;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      text += "  ";
      text += columns[c];
      text.append(width[c] - columns[c].size(), ' ');
    }
    text += '\n';
  }
  for (const auto& [key, cells] : grid) {
    const std::string& env = key.second.first;
    const double fraction = static_cast<double>(key.second.second) / 1000.0;
    char frac_buf[16];
    std::snprintf(frac_buf, sizeof frac_buf, "%g%%", fraction * 100.0);
    char head[64];
    std::snprintf(head, sizeof head, "%-12s %-6s", env.c_str(), frac_buf);
    text += head;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto it = cells.find(columns[c]);
      const std::string body =
          it != cells.end() ? cell_text(it->second) : std::string("-");
      text += "  ";
      text += body;
      text.append(width[c] - body.size(), ' ');
    }
    text += '\n';

    for (const auto& label : columns) {
      const auto it = cells.find(label);
      if (it == cells.end()) continue;
      const Cell& cell = it->second;
      csv += env + "," + format_double(fraction) + "," + label + ",";
      csv += cell.mean_v ? format_double(*cell.mean_v) : std::string();
      csv += ",";
      csv += cell.sem_v ? format_double(*cell.sem_v) : std::string();
      csv += ",";
      csv += std::to_string(cell.solved) + "," + std::to_string(cell.trials) +
             ",";
      csv += cell.at ? std::to_string(*cell.at) : std::string();
      csv += "\n";
    }
  }
  return Report{std::move(text), std::move(csv)};
}

inline Report report_from_dirs(const std::vector<std::string>& dirs) {
  std::vector<nlohmann::json> summaries;
  for (const auto& d : dirs) {
    const std::filesystem::path p = std::filesystem::path(d) / "suite_summary.json";
    std::ifstream in(p);
    if (!in)
      throw ConfigError("report: cannot read " + p.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("report: invalid JSON in " + p.string() + ": " +
                        e.what());
    }
    summaries.push_back(std::move(j));
  }
  return make_report(summaries);
}

}  // namespace evorl
