#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>

#include "common/helpers.hpp"
#include "evorl/harness.hpp"

using namespace evorl;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_suite(const std::string& out) {
  RunConfig cfg;
  cfg.env = "cartpole";
  cfg.mode = "evo-rl";
  cfg.algo = "q";
  cfg.fraction = 0.2;
  cfg.trials = 2;
  cfg.seed = 77;
  cfg.budget = 400;
  cfg.generations = 3;
  cfg.gp.population_size = 4;
  cfg.gp.tournament_k = 2;
  cfg.episodes_per_agent = 2;
  cfg.eval_episodes = 3;
  cfg.solve_threshold_override = 1e9;
  cfg.out = out;
  return cfg;
}

}  // namespace

TEST_CASE("config json applies known keys and rejects unknown ones") {
  const nlohmann::json j{{"env", "acrobot"},   {"mode", "rl-only"},
                         {"algo", "dqn"},      {"fraction", 0.4},
                         {"trials", 3},        {"alpha", 0.2},
                         {"max_depth", 5},     {"population", 12}};
  const RunConfig cfg = config_from_json(j);
  REQUIRE(cfg.env == "acrobot");
  REQUIRE(cfg.mode == "rl-only");
  REQUIRE(cfg.algo == "dqn");
  REQUIRE(cfg.fraction == 0.4);
  REQUIRE(cfg.trials == 3);
  REQUIRE(cfg.learner.alpha == 0.2);
  REQUIRE(cfg.gp.max_depth == 5);
  REQUIRE(cfg.gp.population_size == 12);

  REQUIRE_THROWS_AS(config_from_json({{"not_a_key", 1}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"trials", "three"}}), ConfigError);
}

TEST_CASE("config validation catches bad names and fractions") {
  RunConfig cfg;
  cfg.mode = "hybrid";
  REQUIRE_THROWS_AS(resolve_config(cfg), ConfigError);

  cfg = RunConfig{};
  cfg.algo = "ppo";
  REQUIRE_THROWS_WITH(resolve_config(cfg),
                      Catch::Matchers::ContainsSubstring("not implemented"));

  cfg = RunConfig{};
  cfg.env = "breakout";
  REQUIRE_THROWS_AS(resolve_config(cfg), ConfigError);

  cfg = RunConfig{};
  cfg.fraction = 0.25;
  REQUIRE_THROWS_AS(resolve_config(cfg), ConfigError);
  cfg.allow_any_fraction = true;
  REQUIRE_NOTHROW(resolve_config(cfg));

  cfg = RunConfig{};
  cfg.fraction = 0.6;
  cfg.allow_any_fraction = true;  // still outside the mask's domain
  REQUIRE_THROWS_AS(resolve_config(cfg), ConfigError);
}

TEST_CASE("mode-dependent defaults resolve as documented") {
  RunConfig evo;
  resolve_config(evo);
  REQUIRE(evo.gp.generations == 200);
  REQUIRE(evo.learner.epsilon_decay_episodes == evo.episodes_per_agent);

  RunConfig ea;
  ea.mode = "ea-only";
  resolve_config(ea);
  REQUIRE(ea.gp.generations == 2000);

  RunConfig rl;
  rl.mode = "rl-only";
  resolve_config(rl);
  REQUIRE(rl.learner.epsilon_decay_episodes == 500);
}

TEST_CASE("desk preset shrinks trials and budget, keeps rates") {
  RunConfig evo;
  apply_preset(evo, "desk");
  REQUIRE(evo.trials == 5);
  REQUIRE(evo.budget == 18000);
  REQUIRE(evo.generations == 60);
  REQUIRE(evo.gp.crossover_rate == 0.5);
  REQUIRE(evo.gp.mutation_rate == 0.15);

  RunConfig ea;
  ea.mode = "ea-only";
  apply_preset(ea, "desk");
  REQUIRE(ea.generations == 600);

  REQUIRE_THROWS_AS(apply_preset(ea, "bench"), ConfigError);
}

TEST_CASE("grid overrides must match the environment dimensions") {
  RunConfig cfg;
  cfg.bins_per_dim = std::vector<int>{8, 8};
  REQUIRE_THROWS_AS(resolve_grid(cfg), ConfigError);
  cfg.bins_per_dim = std::vector<int>{8, 8, 8, 8};
  REQUIRE(resolve_grid(cfg).total_bins() == 4096);
}

TEST_CASE("run_suite writes the full artifact set") {
  const fs::path dir = testutil::fresh_dir("suite_artifacts");
  RunConfig cfg = tiny_suite((dir / "suite").string());
  cfg.trials = 1;
  const SuiteOutput out = run_suite(cfg);

  REQUIRE(fs::exists(out.dir / "config.json"));
  REQUIRE(fs::exists(out.dir / "suite_summary.json"));
  REQUIRE(fs::exists(out.dir / "table_row.txt"));
  REQUIRE(fs::exists(out.dir / "trial_0" / "convergence.csv"));
  REQUIRE(fs::exists(out.dir / "trial_0" / "mask.json"));
  REQUIRE(fs::exists(out.dir / "trial_0" / "checkpoint.json"));
  REQUIRE(!fs::exists(out.dir / "INCOMPLETE"));

  // Single trial: SEM is zero, CSV carries the fixed header.
  REQUIRE(out.summary.sem_reward == 0.0);
  const std::string csv = testutil::slurp(out.dir / "trial_0" / "convergence.csv");
  REQUIRE(csv.rfind(
              "generation,evaluations,best_fitness,mean_fitness,"
              "instinct_ratio,solved\n", 0) == 0);

  // Summary aggregates recompute from the per-trial rows.
  std::vector<double> finals;
  for (const auto& row : out.summary.rows)
    finals.push_back(row.final_reward.value());
  REQUIRE(out.summary.mean_reward == Catch::Approx(mean(finals)).margin(1e-12));
}

TEST_CASE("rl-only convergence CSV uses eval_point") {
  const fs::path dir = testutil::fresh_dir("suite_rl");
  RunConfig cfg = tiny_suite((dir / "suite").string());
  cfg.mode = "rl-only";
  cfg.trials = 1;
  cfg.budget = 20;
  cfg.eval_interval = 5;
  cfg.eval_episodes = 2;
  const SuiteOutput out = run_suite(cfg);
  const std::string csv = testutil::slurp(out.dir / "trial_0" / "convergence.csv");
  REQUIRE(csv.rfind("eval_point,", 0) == 0);
  REQUIRE(out.summary.rows[0].consumed == 20);
}

TEST_CASE("identical seeds give byte-identical artifacts, any parallelism") {
  const fs::path dir = testutil::fresh_dir("suite_determinism");
  RunConfig a = tiny_suite((dir / "a").string());
  RunConfig b = tiny_suite((dir / "b").string());
  b.parallel_trials = 2;
  b.workers = 3;
  const SuiteOutput out_a = run_suite(a);
  const SuiteOutput out_b = run_suite(b);
  REQUIRE(testutil::dirs_equal(out_a.dir, out_b.dir));

  // And a rerun over the same directory reproduces itself.
  const SuiteOutput out_c = run_suite(a);
  REQUIRE(testutil::dirs_equal(out_a.dir, out_c.dir));
}

TEST_CASE("different master seeds give different artifacts") {
  const fs::path dir = testutil::fresh_dir("suite_seeds");
  RunConfig a = tiny_suite((dir / "a").string());
  RunConfig b = tiny_suite((dir / "b").string());
  b.seed = 78;
  run_suite(a);
  run_suite(b);
  REQUIRE(testutil::slurp(dir / "a" / "trial_0" / "convergence.csv") !=
          testutil::slurp(dir / "b" / "trial_0" / "convergence.csv"));
}

TEST_CASE("report merges summaries into one grid") {
  const fs::path dir = testutil::fresh_dir("report");
  RunConfig q = tiny_suite((dir / "q").string());
  q.mode = "rl-only";
  q.budget = 20;
  q.eval_interval = 10;
  q.eval_episodes = 2;
  const SuiteOutput q_out = run_suite(q);

  RunConfig eq = tiny_suite((dir / "eq").string());
  const SuiteOutput eq_out = run_suite(eq);

  // One summary -> one data row.
  const Report single = make_report({q_out.summary_json});
  REQUIRE(std::count(single.text.begin(), single.text.end(), '\n') == 2);
  REQUIRE(single.text.find("cartpole") != std::string::npos);

  // Same env/fraction, two algorithms -> one row, two populated columns.
  const Report both = report_from_dirs(
      {(dir / "q").string(), (dir / "eq").string()});
  REQUIRE(std::count(both.text.begin(), both.text.end(), '\n') == 2);
  REQUIRE(both.text.find(" q") != std::string::npos);
  REQUIRE(both.text.find("eq") != std::string::npos);
  // CSV: header + one line per (env, fraction, label).
  REQUIRE(std::count(both.csv.begin(), both.csv.end(), '\n') == 3);
}

TEST_CASE("report rejects version-mismatched summaries") {
  nlohmann::json bogus{{"schema", "evorl-suite-0"}};
  REQUIRE_THROWS_AS(make_report({bogus}), ConfigError);
  const fs::path dir = testutil::fresh_dir("report_bad");
  REQUIRE_THROWS_AS(report_from_dirs({dir.string()}), ConfigError);
}

TEST_CASE("filesystem failures mark the suite incomplete") {
  const fs::path dir = testutil::fresh_dir("suite_fail");
  RunConfig cfg = tiny_suite((dir / "suite").string());
  // Sabotage trial 0: its checkpoint path is an (unwritable) directory.
  fs::create_directories(dir / "suite" / "trial_0" / "checkpoint.json");
  bool threw = false;
  try {
    run_suite(cfg);
  } catch (const std::exception&) {
    threw = true;
  }
  REQUIRE(threw);
  REQUIRE(fs::exists(dir / "suite" / "INCOMPLETE"));
}

TEST_CASE("table cells follow the paper's formatting") {
  SuiteSummary s;
  s.mean_reward = 196.25;
  s.sem_reward = 0.31;
  s.solved_majority = true;
  s.solved_at_median = 10800;
  REQUIRE(table_cell(s) == "196.2 ± 0.3 @ 10,800");
  s.solved_majority = false;
  REQUIRE(table_cell(s) == "196.2 ± 0.3");
  REQUIRE(format_grouped(1200300) == "1,200,300");
  REQUIRE(format_grouped(42) == "42");
}
