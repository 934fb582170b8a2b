// silfd: command-line front end for the Chain learning-from-demonstrations lab.
//
//   silfd gen-demos --n-adversarial K --out PATH
//   silfd train --variant V [--config PATH] [--seed S] [--out DIR] [--demos PATH | --n-adversarial K]
//   silfd sweep --settings 0,1,9,29,49,99 --seeds 5 --variant V [--out DIR]
//   silfd eval --checkpoint PATH [--episodes 100]
//
// Exit codes: 0 success, 2 configuration/usage error, 3 numerical divergence,
// 1 any other failure (including a sweep with failed runs).

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "silfd/config.hpp"
#include "silfd/demos.hpp"
#include "silfd/errors.hpp"
#include "silfd/rollout.hpp"
#include "silfd/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

std::pair<std::string, std::string> split_override(const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0)
    throw silfd::ConfigError("--set expects key=value, got '" + item + "'");
  return {item.substr(0, eq), item.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-imitation learning from demonstrations on the Chain environment"};
  app.require_subcommand(1);

  // gen-demos
  auto* gen = app.add_subcommand("gen-demos", "Write 1 optimal + K adversarial demonstrations");
  int gen_adversarial = 0;
  int gen_optimal = 1;
  int gen_grid = silfd::kDefaultGridSize;
  std::string gen_out;
  gen->add_option("--n-adversarial", gen_adversarial, "Adversarial (all-left) demonstrations")
      ->required()
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--n-optimal", gen_optimal, "Optimal (all-right) demonstrations")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--grid-size", gen_grid, "Chain grid side N")->check(CLI::Range(2, 100000));
  gen->add_option("--out", gen_out, "Output JSONL path")->required();

  // train
  auto* train = app.add_subcommand("train", "Train one variant and write a run directory");
  std::string variant_name;
  std::string config_path;
  std::string demos_path;
  std::string train_out;
  std::uint64_t seed = 0;
  int train_adversarial = -1;
  int train_optimal = 1;
  std::vector<std::string> sets;
  train->add_option("--variant", variant_name, "ppo | sil | silfd | silfbc | bcsil | bc")
      ->required();
  train->add_option("--config", config_path, "Flat JSON config file");
  auto* seed_opt = train->add_option("--seed", seed, "Master seed");
  train->add_option("--out", train_out, "Run directory (default $SILFD_OUT_DIR/<variant>-seed<S>)");
  train->add_option("--demos", demos_path, "Demonstration JSONL file");
  train->add_option("--n-adversarial", train_adversarial,
                    "Generate 1 optimal + K adversarial demonstrations")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--n-optimal", train_optimal, "Optimal demonstrations with --n-adversarial")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--set", sets, "Override a config key: key=value (repeatable)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run every (setting, seed) pair and summarize");
  std::string settings_csv;
  int sweep_seeds = 5;
  std::string sweep_variant;
  std::string sweep_out;
  std::string sweep_config;
  std::vector<std::string> sweep_sets;
  int jobs = 0;
  sweep->add_option("--settings", settings_csv, "Adversarial demo counts, comma separated")
      ->required();
  sweep->add_option("--seeds", sweep_seeds, "Seeds per setting (0..S-1)")->check(CLI::PositiveNumber);
  sweep->add_option("--variant", sweep_variant, "Variant to run")->required();
  sweep->add_option("--out", sweep_out, "Sweep root directory");
  sweep->add_option("--config", sweep_config, "Flat JSON config file passed to every run");
  sweep->add_option("--set", sweep_sets, "Override passed to every run: key=value");
  sweep->add_option("--jobs", jobs, "Concurrent runs (default: hardware threads)")
      ->check(CLI::NonNegativeNumber);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint's actor");
  std::string checkpoint;
  int episodes = 100;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", checkpoint, "checkpoint.json or actor weights")->required();
  eval->add_option("--episodes", episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "Action-sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen) {
      const silfd::DemoSet set = silfd::mix(gen_optimal, gen_adversarial, gen_grid);
      if (!gen_out.empty() && fs::path(gen_out).has_parent_path())
        fs::create_directories(fs::path(gen_out).parent_path());
      silfd::save_demos(set, gen_out);
      std::cout << "wrote " << set.episodes.size() << " episodes to " << gen_out << "\n";
      return 0;
    }

    if (*train) {
      silfd::TrainConfig cfg;
      json overrides = json::object();
      if (!config_path.empty()) cfg = silfd::load_config_file(config_path, cfg);
      cfg = silfd::apply_override(cfg, "variant", json(variant_name).dump());
      overrides["variant"] = variant_name;
      if (seed_opt->count() > 0) {
        cfg.seed = seed;
        overrides["seed"] = seed;
      }
      if (!demos_path.empty()) {
        cfg.demos_path = demos_path;
        overrides["demos_path"] = demos_path;
      }
      if (train_adversarial >= 0) {
        cfg.adversarial_count = train_adversarial;
        cfg.optimal_count = train_optimal;
        overrides["adversarial_count"] = train_adversarial;
        overrides["optimal_count"] = train_optimal;
      }
      for (const auto& item : sets) {
        const auto [key, value] = split_override(item);
        cfg = silfd::apply_override(cfg, key, value);
        overrides[key] = value;
      }
      cfg.validate();
      const fs::path out =
          train_out.empty()
              ? silfd::default_output_root() /
                    (std::string(silfd::to_string(cfg.variant)) + "-seed" + std::to_string(cfg.seed))
              : fs::path(train_out);
      const auto result = silfd::run_training(cfg, overrides, out);
      if (!result.records.empty()) {
        const auto& last = result.records.back();
        std::cout << "final eval mean " << last.eval_mean_return << " (min " << last.eval_min_return
                  << ", max " << last.eval_max_return << ") after " << last.transitions
                  << " transitions; run directory " << out.string() << "\n";
      }
      return 0;
    }

    if (*sweep) {
      silfd::SweepOptions options;
      options.settings = silfd::parse_settings(settings_csv);
      options.seeds = sweep_seeds;
      options.variant = silfd::variant_from_string(sweep_variant);
      options.out_dir = sweep_out.empty()
                            ? silfd::default_output_root() /
                                  ("sweep-" + std::string(silfd::to_string(options.variant)))
                            : fs::path(sweep_out);
      if (!sweep_config.empty()) options.config_path = fs::absolute(sweep_config);
      for (const auto& item : sweep_sets) options.overrides.push_back(split_override(item));
      options.jobs = jobs;
      options.executable = fs::read_symlink("/proc/self/exe");
      fs::create_directories(options.out_dir);
      const auto rows = silfd::run_sweep(options);
      int failed = 0;
      for (const auto& row : rows) {
        std::cout << "adversarial=" << row.adversarial_count << " completed=" << row.completed
                  << "/" << row.runs << " solved=" << row.solved << " mean=" << row.mean
                  << " min=" << row.min << " max=" << row.max << "\n";
        failed += row.failed;
      }
      std::cout << "summary: " << (options.out_dir / "summary.csv").string() << "\n";
      return failed == 0 ? 0 : 1;
    }

    if (*eval) {
      const silfd::Checkpoint ckpt = silfd::load_checkpoint(checkpoint);
      silfd::Rng rng(silfd::derive_seed(eval_seed, "eval"));
      const auto stats = silfd::evaluate_policy(ckpt.actor, ckpt.grid_size,
                                                static_cast<std::size_t>(episodes), rng);
      std::cout << json{{"episodes", stats.episodes},
                        {"mean", stats.mean},
                        {"min", stats.min},
                        {"max", stats.max}}
                       .dump()
                << "\n";
      return 0;
    }
  } catch (const silfd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const silfd::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const silfd::DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
