// evorl - experiment harness CLI.
//
//   evorl run [--config FILE] [--preset desk] [--env E --mode M --algo A
//             --fraction F --seed S --trials T --budget B --out DIR ...]
//   evorl report DIR... [--csv FILE]
//
// Precedence: built-in defaults < config file < --preset < EVORL_SEED <
// explicit flags. Exit codes: 0 success, 1 config error, 2 runtime fault,
// 3 unsolved while --require-solved is set.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evorl/harness.hpp"

namespace {

struct RunFlags {
  std::string config_file;
  std::string preset;
  std::optional<std::string> env, mode, algo, out;
  std::optional<double> fraction;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials, generations, workers, parallel_trials;
  std::optional<long> budget;
  bool allow_any_fraction = false;
  bool require_solved = false;
  bool population_stddev = false;
  bool resume = false;
  bool no_checkpoint = false;
};

evorl::RunConfig assemble_config(const RunFlags& f) {
  evorl::RunConfig cfg;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in)
      throw evorl::ConfigError("cannot read config file " + f.config_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw evorl::ConfigError("invalid JSON in " + f.config_file + ": " +
                               e.what());
    }
    evorl::apply_config_json(cfg, j);
  }
  if (f.mode) cfg.mode = *f.mode;  // preset needs the final mode
  if (!f.preset.empty()) evorl::apply_preset(cfg, f.preset);
  if (const char* env_seed = std::getenv("EVORL_SEED")) {
    try {
      cfg.seed = static_cast<std::uint64_t>(evorl::parse_long(env_seed));
    } catch (const std::invalid_argument&) {
      throw evorl::ConfigError("EVORL_SEED is not an integer");
    }
  }
  if (f.env) cfg.env = *f.env;
  if (f.algo) cfg.algo = *f.algo;
  if (f.fraction) cfg.fraction = *f.fraction;
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.generations) cfg.generations = *f.generations;
  if (f.budget) cfg.budget = *f.budget;
  if (f.out) cfg.out = *f.out;
  if (f.workers) cfg.workers = *f.workers;
  if (f.parallel_trials) cfg.parallel_trials = *f.parallel_trials;
  if (f.allow_any_fraction) cfg.allow_any_fraction = true;
  if (f.require_solved) cfg.require_solved = true;
  if (f.population_stddev) cfg.population_stddev = true;
  if (f.resume) cfg.resume = true;
  if (f.no_checkpoint) cfg.checkpoint = false;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary-driven reinforcement learning experiments"};
  app.require_subcommand(1);

  RunFlags flags;
  CLI::App* run = app.add_subcommand("run", "execute a multi-trial suite");
  run->add_option("--config", flags.config_file, "JSON config file");
  run->add_option("--preset", flags.preset, "named preset (desk)");
  run->add_option("--env", flags.env, "cartpole | acrobot | mountaincar");
  run->add_option("--mode", flags.mode, "evo-rl | ea-only | rl-only");
  run->add_option("--algo", flags.algo, "q | dqn");
  run->add_option("--fraction", flags.fraction, "rewardless-state fraction");
  run->add_option("--seed", flags.seed, "master seed");
  run->add_option("--trials", flags.trials, "independent trials");
  run->add_option("--generations", flags.generations, "generation cap");
  run->add_option("--budget", flags.budget, "evaluation budget");
  run->add_option("--out", flags.out, "output directory");
  run->add_option("--workers", flags.workers,
                  "threads for per-generation agent work");
  run->add_option("--parallel-trials", flags.parallel_trials,
                  "trials run concurrently");
  run->add_flag("--allow-any-fraction", flags.allow_any_fraction,
                "accept fractions outside {0, .1, ..., .5}");
  run->add_flag("--require-solved", flags.require_solved,
                "exit 3 unless a majority of trials solved");
  run->add_flag("--population-stddev", flags.population_stddev,
                "N-denominator stddev in the SEM");
  run->add_flag("--resume", flags.resume,
                "resume trials from their checkpoints");
  run->add_flag("--no-checkpoint", flags.no_checkpoint,
                "skip per-generation population checkpoints");

  std::vector<std::string> report_dirs;
  std::string report_csv;
  CLI::App* report =
      app.add_subcommand("report", "merge suite summaries into one table");
  report->add_option("dirs", report_dirs, "suite output directories")
      ->required();
  report->add_option("--csv", report_csv, "also write the table as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const evorl::RunConfig cfg = assemble_config(flags);
      const evorl::SuiteOutput out = evorl::run_suite(cfg);
      std::cout << out.table_row << "\n";
      std::cout << "artifacts: " << out.dir.string() << "\n";
      if (cfg.require_solved && !out.summary.solved_majority) {
        std::cerr << "required solved majority not reached ("
                  << out.summary.solved_count << "/" << cfg.trials << ")\n";
        return 3;
      }
      return 0;
    }
    const evorl::Report rep = evorl::report_from_dirs(report_dirs);
    std::cout << rep.text;
    if (!report_csv.empty()) {
      std::ofstream out(report_csv, std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + report_csv);
      out << rep.csv;
    }
    return 0;
  } catch (const evorl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
