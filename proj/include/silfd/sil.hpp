#pragma once

#include <span>
#include <vector>

#include "silfd/agent.hpp"
#include "silfd/replay_buffer.hpp"
#include "silfd/rng.hpp"

namespace silfd {

struct SILConfig {
  int batches_per_update = 40;
  std::size_t batch_size = 256;
  double loss_weight = 10.0;        // w_sil
  double value_loss_weight = 0.01;  // beta
  double entropy_coef = 0.01;
  double lr = 2e-4;
  double gamma = 0.99;

  void validate() const;
};

/// Self-imitation loss on one batch:
///   policy = -mean(w * log pi(a|s) * max(R - V, 0)) - c_H * mean(w * H)
///   value  =  mean(w * max(R - V, 0)^2)
/// Gradients are of loss_weight * (policy + value_loss_weight * value); the
/// clipped advantage is held constant in the policy term.
struct SILBatchResult {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  std::vector<double> clipped_advantages;
  Gradients actor_grads;
  Gradients critic_grads;
};

SILBatchResult sil_batch_loss(const AgentNets& nets, std::span<const Transition> batch,
                              std::span<const double> weights, const SILConfig& cfg);

struct SILMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double mean_clipped_advantage = 0.0;
  double demo_fraction_mean = 0.0;
};

/// batches_per_update prioritized batches, one Adam step each; sampled
/// priorities are refreshed with the batch's clipped advantages.
SILMetrics sil_update(AgentNets& nets, PrioritizedBuffer& buffer, const SILConfig& cfg, Rng& rng);

}  // namespace silfd
