#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "silfd/config.hpp"
#include "silfd/rollout.hpp"
#include "silfd/trainer.hpp"

namespace silfd {

/// Output root used when no --out is given: $SILFD_OUT_DIR, else "runs".
std::filesystem::path default_output_root();

/// Trains one configuration into `out_dir`:
///   config.json     resolved flat config (+ "overrides" as given)
///   metrics.jsonl   one MetricsRecord per line, appended as produced
///   timing.jsonl    wall-clock seconds per record
///   demo_fractions.jsonl  demo fraction of every SIL update (SIL variants)
///   checkpoint.json actor and critic weights
/// metrics.jsonl is flushed per line, so a failed run keeps its partial rows.
TrainResult run_training(const TrainConfig& cfg, const nlohmann::json& overrides,
                         const std::filesystem::path& out_dir);

nlohmann::json checkpoint_json(const AgentNets& nets, int grid_size);

struct Checkpoint {
  NetParams actor;
  std::optional<NetParams> critic;
  int grid_size = kDefaultGridSize;
};

/// Accepts a checkpoint.json or a bare actor NetParams document.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& metrics_jsonl);
std::vector<double> read_demo_fractions(const std::filesystem::path& demo_fractions_jsonl);

/// "0,1,9,9" -> {0, 1, 9}; order of first occurrence. Throws ConfigError.
std::vector<int> parse_settings(const std::string& csv);

struct SweepOptions {
  std::vector<int> settings;
  int seeds = 5;
  Variant variant = Variant::kSILfD;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  int jobs = 0;  // 0 = hardware concurrency
  std::filesystem::path executable;
};

struct SweepRow {
  int adversarial_count = 0;
  int runs = 0;
  int completed = 0;
  int failed = 0;
  int solved = 0;  // completed runs with final eval mean within 1 of 100
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

std::filesystem::path sweep_run_dir(const std::filesystem::path& root, int setting, int seed);

/// Launches one `train` process per (setting, seed) through `executable`,
/// at most `jobs` at a time, then writes summary.csv. Failed runs are
/// recorded and do not stop the others.
std::vector<SweepRow> run_sweep(const SweepOptions& options);

/// Recomputes the per-setting summary from each run's metrics.jsonl (final row).
std::vector<SweepRow> summarize_sweep(const std::filesystem::path& root,
                                      const std::vector<int>& settings, int seeds);

void write_summary_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace silfd
