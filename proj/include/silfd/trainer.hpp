#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"
#include "silfd/agent.hpp"
#include "silfd/config.hpp"
#include "silfd/demos.hpp"
#include "silfd/rollout.hpp"

namespace silfd {

/// One evaluation point. Optional fields are null for variants that do not
/// produce them.
struct MetricsRecord {
  std::int64_t transitions = 0;
  double eval_mean_return = 0.0;
  double eval_min_return = 0.0;
  double eval_max_return = 0.0;
  std::optional<double> demo_fraction_mean;  // of the most recent SIL update
  std::optional<double> ppo_policy_loss;
  std::optional<double> ppo_value_loss;
  std::optional<double> ppo_entropy;
  std::optional<double> sil_policy_loss;
  std::optional<double> sil_value_loss;
  std::optional<double> demo_value_mean;  // mean critic value over pinned states
  std::int64_t sil_updates = 0;
  double wall_seconds = 0.0;  // not part of the deterministic metrics line

  /// Deterministic metrics.jsonl object (wall_seconds excluded).
  nlohmann::json to_json() const;
  static MetricsRecord from_json(const nlohmann::json& doc);
};

struct TrainResult {
  std::vector<MetricsRecord> records;
  std::vector<double> sil_demo_fractions;  // one entry per SIL update
  AgentNets nets;
  std::optional<double> bc_final_loss;
  std::size_t pinned_transitions = 0;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;

/// Loads demos_path, or mixes optimal/adversarial counts. Throws ConfigError
/// when the config names no demo source.
DemoSet resolve_demos(const TrainConfig& cfg);

/// Runs one variant end to end: rollout, PPO update, buffer push and SIL
/// update per iteration, evaluating every eval_every transitions. Each
/// record is handed to `sink` as soon as it exists.
TrainResult train(const TrainConfig& cfg, const MetricsSink& sink = {});

/// Same, with demonstrations supplied by the caller.
TrainResult train(const TrainConfig& cfg, const DemoSet* demos, const MetricsSink& sink = {});

}  // namespace silfd
