#include "silfd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "silfd/bc.hpp"
#include "silfd/errors.hpp"
#include "silfd/ppo.hpp"
#include "silfd/replay_buffer.hpp"
#include "silfd/rng.hpp"
#include "silfd/sil.hpp"

namespace silfd {

namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return doc.at(key).get<double>();
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

json MetricsRecord::to_json() const {
  json doc;
  doc["transitions"] = transitions;
  doc["eval_mean_return"] = eval_mean_return;
  doc["eval_min_return"] = eval_min_return;
  doc["eval_max_return"] = eval_max_return;
  doc["demo_fraction_mean"] = optional_json(demo_fraction_mean);
  doc["ppo_policy_loss"] = optional_json(ppo_policy_loss);
  doc["ppo_value_loss"] = optional_json(ppo_value_loss);
  doc["ppo_entropy"] = optional_json(ppo_entropy);
  doc["sil_policy_loss"] = optional_json(sil_policy_loss);
  doc["sil_value_loss"] = optional_json(sil_value_loss);
  doc["demo_value_mean"] = optional_json(demo_value_mean);
  doc["sil_updates"] = sil_updates;
  return doc;
}

MetricsRecord MetricsRecord::from_json(const json& doc) {
  MetricsRecord r;
  r.transitions = doc.at("transitions").get<std::int64_t>();
  r.eval_mean_return = doc.at("eval_mean_return").get<double>();
  r.eval_min_return = doc.at("eval_min_return").get<double>();
  r.eval_max_return = doc.at("eval_max_return").get<double>();
  r.demo_fraction_mean = optional_from(doc, "demo_fraction_mean");
  r.ppo_policy_loss = optional_from(doc, "ppo_policy_loss");
  r.ppo_value_loss = optional_from(doc, "ppo_value_loss");
  r.ppo_entropy = optional_from(doc, "ppo_entropy");
  r.sil_policy_loss = optional_from(doc, "sil_policy_loss");
  r.sil_value_loss = optional_from(doc, "sil_value_loss");
  r.demo_value_mean = optional_from(doc, "demo_value_mean");
  if (doc.contains("sil_updates")) r.sil_updates = doc.at("sil_updates").get<std::int64_t>();
  return r;
}

DemoSet resolve_demos(const TrainConfig& cfg) {
  if (!cfg.demos_path.empty()) {
    DemoSet set = load_demos(cfg.demos_path);
    if (set.provenance.grid_size != cfg.grid_size)
      throw ConfigError("demo file grid size " + std::to_string(set.provenance.grid_size) +
                        " does not match grid_size " + std::to_string(cfg.grid_size));
    if (set.episodes.empty()) throw ConfigError("demo file holds no episodes");
    return set;
  }
  if (cfg.optimal_count + cfg.adversarial_count > 0)
    return mix(cfg.optimal_count, cfg.adversarial_count, cfg.grid_size);
  throw ConfigError("no demonstration source configured");
}

TrainResult train(const TrainConfig& cfg, const MetricsSink& sink) {
  if (needs_demos(cfg.variant)) {
    cfg.validate();
    const DemoSet demos = resolve_demos(cfg);
    return train(cfg, &demos, sink);
  }
  return train(cfg, nullptr, sink);
}

TrainResult train(const TrainConfig& cfg, const DemoSet* demos, const MetricsSink& sink) {
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&started] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };
  if (needs_demos(cfg.variant)) {
    if (demos == nullptr || demos->episodes.empty())
      throw ConfigError("variant " + std::string(to_string(cfg.variant)) + " needs demonstrations");
    cfg.validate(/*demos_supplied=*/true);
  } else {
    cfg.validate();
  }

  const PPOConfig ppo_cfg = cfg.ppo();
  const SILConfig sil_cfg = cfg.sil();
  const auto grid = cfg.grid_size;

  TrainResult result;
  result.nets = make_agent_nets(derive_seed(cfg.seed, "actor-init"),
                                derive_seed(cfg.seed, "critic-init"));
  Rng rollout_rng(derive_seed(cfg.seed, "rollout"));
  Rng replay_rng(derive_seed(cfg.seed, "replay"));
  Rng shuffle_rng(derive_seed(cfg.seed, "ppo-shuffle"));
  Rng eval_rng(derive_seed(cfg.seed, "eval"));
  PrioritizedBuffer buffer(cfg.replay());

  auto emit = [&](MetricsRecord record) {
    record.wall_seconds = elapsed();
    if (sink) sink(record);
    result.records.push_back(std::move(record));
  };

  std::optional<BCResult> bc;
  if (cfg.variant == Variant::kSILfBC || cfg.variant == Variant::kBCSIL ||
      cfg.variant == Variant::kBCEval) {
    bc = bc_train(*demos, cfg.bc(), derive_seed(cfg.seed, "bc"));
    result.bc_final_loss = bc->final_loss;
  }

  switch (cfg.variant) {
    case Variant::kSILfD:
      buffer.pin_demos(*demos, result.nets.critic, cfg.gamma);
      break;
    case Variant::kSILfBC: {
      Rng bc_rollout_rng(derive_seed(cfg.seed, "bc-rollout"));
      const DemoSet rollouts = collect_policy_demos(
          bc->actor, grid, static_cast<std::size_t>(cfg.bc_rollouts), bc_rollout_rng);
      buffer.pin_demos(rollouts, result.nets.critic, cfg.gamma);
      break;
    }
    case Variant::kBCSIL:
      result.nets.actor = bc->actor;
      result.nets.actor_opt = OptState::fresh(result.nets.actor);
      break;
    case Variant::kBCEval: {
      result.nets.actor = bc->actor;
      const EvalStats stats = evaluate_policy(result.nets.actor, grid,
                                              static_cast<std::size_t>(cfg.eval_episodes), eval_rng);
      MetricsRecord record;
      record.eval_mean_return = stats.mean;
      record.eval_min_return = stats.min;
      record.eval_max_return = stats.max;
      emit(std::move(record));
      return result;
    }
    case Variant::kPPO:
    case Variant::kSIL:
      break;
  }
  result.pinned_transitions = buffer.demo_count();
  const std::vector<Observation> demo_states = buffer.demo_observations();

  RolloutCollector collector(grid);
  std::vector<Episode> completed;
  PPOMetrics last_ppo;
  std::optional<SILMetrics> last_sil;
  std::int64_t transitions = 0;
  std::int64_t next_eval = cfg.eval_every;

  auto record_point = [&]() {
    const EvalStats stats = evaluate_policy(result.nets.actor, grid,
                                            static_cast<std::size_t>(cfg.eval_episodes), eval_rng);
    MetricsRecord record;
    record.transitions = transitions;
    record.eval_mean_return = stats.mean;
    record.eval_min_return = stats.min;
    record.eval_max_return = stats.max;
    record.ppo_policy_loss = last_ppo.policy_loss;
    record.ppo_value_loss = last_ppo.value_loss;
    record.ppo_entropy = last_ppo.entropy;
    if (last_sil) {
      record.demo_fraction_mean = last_sil->demo_fraction_mean;
      record.sil_policy_loss = last_sil->policy_loss;
      record.sil_value_loss = last_sil->value_loss;
    }
    if (!demo_states.empty()) {
      record.demo_value_mean = mean_of(critic_values(result.nets.critic, demo_states));
      if (!std::isfinite(*record.demo_value_mean))
        throw DivergenceError("critic value on demonstration states is not finite");
    }
    record.sil_updates = static_cast<std::int64_t>(result.sil_demo_fractions.size());
    emit(std::move(record));
  };

  while (transitions < cfg.total_transitions) {
    const auto steps = std::min(cfg.rollout_steps, cfg.total_transitions - transitions);
    completed.clear();
    const RolloutBatch batch =
        collector.collect(result.nets, static_cast<std::size_t>(steps), rollout_rng, completed);
    transitions += steps;
    last_ppo = ppo_update(result.nets, batch, ppo_cfg, shuffle_rng);

    if (uses_sil(cfg.variant)) {
      for (const auto& ep : completed) buffer.push_episode(ep, result.nets.critic, cfg.gamma);
      if (!buffer.empty()) {
        last_sil = sil_update(result.nets, buffer, sil_cfg, replay_rng);
        result.sil_demo_fractions.push_back(last_sil->demo_fraction_mean);
      }
    }
    if (transitions >= next_eval) {
      record_point();
      while (next_eval <= transitions) next_eval += cfg.eval_every;
    }
  }
  if (cfg.total_transitions > 0 &&
      (result.records.empty() || result.records.back().transitions != transitions))
    record_point();
  return result;
}

}  // namespace silfd
