#pragma once

#include <span>
#include <vector>

#include "silfd/agent.hpp"
#include "silfd/rng.hpp"
#include "silfd/rollout.hpp"

namespace silfd {

struct PPOConfig {
  double clip = 0.2;
  double gae_lambda = 0.95;
  double entropy_coef = 0.01;
  double lr = 2e-4;
  std::size_t minibatch = 32;
  int epochs = 3;
  double gamma = 0.99;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct PPOMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  std::size_t gradient_steps = 0;
};

/// Loss values and gradients for one PPO minibatch.
struct PPOMinibatchResult {
  double policy_loss = 0.0;  // -mean(min(rho*A, clip(rho)*A)) - c_H * mean(H)
  double surrogate = 0.0;    // mean(min(rho*A, clip(rho)*A)) before the sign flip
  double value_loss = 0.0;   // mean((target - V)^2)
  double entropy = 0.0;
  double clip_fraction = 0.0;
  Gradients actor_grads;
  Gradients critic_grads;
};

/// `advantages` are the raw GAE values of the selected rows; they are
/// normalized here unless their standard deviation is below 1e-8.
PPOMinibatchResult ppo_minibatch(const AgentNets& nets, const RolloutBatch& rollout,
                                 std::span<const std::size_t> rows,
                                 std::span<const double> advantages,
                                 std::span<const double> value_targets, const PPOConfig& cfg);

/// pi_new(a|s) / pi_old(a|s) for every rollout row.
std::vector<double> probability_ratios(const NetParams& actor, const RolloutBatch& rollout);

/// Several epochs of clipped-surrogate updates over shuffled minibatches;
/// the critic regresses on lambda-return targets.
PPOMetrics ppo_update(AgentNets& nets, const RolloutBatch& rollout, const PPOConfig& cfg, Rng& rng);

}  // namespace silfd
