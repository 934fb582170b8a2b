#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "silfd/bc.hpp"
#include "silfd/ppo.hpp"
#include "silfd/replay_buffer.hpp"
#include "silfd/sil.hpp"

namespace silfd {

enum class Variant { kPPO, kSIL, kSILfD, kSILfBC, kBCSIL, kBCEval };

std::string_view to_string(Variant variant);
/// Accepts ppo, sil, silfd, silfbc, bcsil, bc (case-insensitive). Throws ConfigError.
Variant variant_from_string(std::string_view name);

/// Whether the variant needs a demonstration set.
bool needs_demos(Variant variant);
/// Whether the variant runs SIL updates from a replay buffer.
bool uses_sil(Variant variant);

/// Full run configuration. Defaults are the Chain hyperparameters.
struct TrainConfig {
  Variant variant = Variant::kSILfD;
  int grid_size = kDefaultGridSize;
  std::uint64_t seed = 0;

  // Demonstrations: a JSONL file, or generated from counts when no file is given.
  std::string demos_path;
  int optimal_count = 0;
  int adversarial_count = 0;

  std::int64_t total_transitions = 1000000;
  std::int64_t rollout_steps = 1000;
  std::int64_t eval_every = 25000;
  std::int64_t eval_episodes = 100;

  // Shared by PPO and SIL.
  double gamma = 0.99;
  double entropy_coef = 0.01;
  double lr = 2e-4;

  double ppo_clip = 0.2;
  double gae_lambda = 0.95;
  std::int64_t ppo_minibatch = 32;
  std::int64_t ppo_epochs = 3;

  std::int64_t sil_epochs = 40;
  std::int64_t sil_batch_size = 256;
  double sil_loss_weight = 10.0;
  double sil_value_loss_weight = 0.01;

  std::int64_t replay_capacity = 100000;
  double priority_alpha = 0.6;
  double priority_beta = 0.1;
  double priority_epsilon = 1e-6;

  double bc_lr = 1e-3;
  std::int64_t bc_batch_size = 32;
  std::int64_t bc_epochs = 4096;
  std::int64_t bc_rollouts = 1000;

  PPOConfig ppo() const;
  SILConfig sil() const;
  BCConfig bc() const;
  ReplayParams replay() const;

  bool has_demo_source() const { return !demos_path.empty() || optimal_count + adversarial_count > 0; }

  /// Throws ConfigError on any invalid value, including a missing demo
  /// source for variants that need one (unless the caller supplies demos).
  void validate(bool demos_supplied = false) const;
};

/// Flat JSON object, one key per field (sorted keys).
nlohmann::json to_json(const TrainConfig& cfg);

/// Applies every key of a flat JSON object on top of `base`. Unknown keys and
/// wrongly typed values raise ConfigError. The key "overrides" is ignored so
/// a resolved-config echo can be fed back in.
TrainConfig apply_config_json(TrainConfig base, const nlohmann::json& doc);

/// Applies one `key=value` override; the value is parsed as JSON when it
/// parses, otherwise taken as a string.
TrainConfig apply_override(TrainConfig base, std::string_view key, std::string_view value);

TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base = {});

}  // namespace silfd
