#include "silfd/sil.hpp"

#include <algorithm>
#include <cmath>

#include "silfd/errors.hpp"

namespace silfd {

void SILConfig::validate() const {
  if (batches_per_update <= 0) throw ConfigError("sil_epochs must be positive");
  if (batch_size == 0) throw ConfigError("sil_batch_size must be positive");
  if (!(loss_weight > 0.0)) throw ConfigError("sil_loss_weight must be positive");
  if (!(value_loss_weight > 0.0)) throw ConfigError("sil_value_loss_weight must be positive");
  if (!(entropy_coef >= 0.0)) throw ConfigError("entropy_coef must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("sil lr must be positive");
}

SILBatchResult sil_batch_loss(const AgentNets& nets, std::span<const Transition> batch,
                              std::span<const double> weights, const SILConfig& cfg) {
  const std::size_t n = batch.size();
  if (n == 0 || weights.size() != n) throw std::invalid_argument("sil_batch_loss: bad batch");
  const double inv_n = 1.0 / static_cast<double>(n);

  Matrix inputs(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    inputs(static_cast<Eigen::Index>(i), 0) = batch[i].observation.h;
    inputs(static_cast<Eigen::Index>(i), 1) = batch[i].observation.v;
  }

  SILBatchResult result;
  result.clipped_advantages.resize(n);

  const ForwardResult critic_fwd = forward(nets.critic, inputs);
  Matrix value_grad(static_cast<Eigen::Index>(n), 1);
  double value_loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double adv = std::max(batch[i].return_r - critic_fwd.outputs(r, 0), 0.0);
    result.clipped_advantages[i] = adv;
    value_loss += weights[i] * adv * adv;
    // d/dV of w * max(R - V, 0)^2 is -2 w A+ (zero when clipped)
    value_grad(r, 0) = cfg.loss_weight * cfg.value_loss_weight * (-2.0 * weights[i] * adv) * inv_n;
  }
  result.value_loss = value_loss * inv_n;
  result.critic_grads = backward(nets.critic, critic_fwd.tape, value_grad);

  const ForwardResult actor_fwd = forward(nets.actor, inputs);
  const CategoricalHead head = categorical_head(actor_fwd.outputs);
  const Matrix entropy_grad = entropy_logit_grad(head);
  Matrix logit_grad(head.log_probs.rows(), head.log_probs.cols());
  double policy_loss = 0.0;
  double entropy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const int action = batch[i].action;
    const double adv = result.clipped_advantages[i];
    const double w = weights[i];
    policy_loss += -w * head.log_probs(r, action) * adv;
    entropy += w * head.entropy(r);
    for (Eigen::Index a = 0; a < logit_grad.cols(); ++a) {
      const double p = std::exp(head.log_probs(r, a));
      const double dlogp = (a == action ? 1.0 : 0.0) - p;
      logit_grad(r, a) =
          cfg.loss_weight * (-w * adv * dlogp - cfg.entropy_coef * w * entropy_grad(r, a)) * inv_n;
    }
  }
  result.entropy = entropy * inv_n;
  result.policy_loss = policy_loss * inv_n - cfg.entropy_coef * result.entropy;
  result.actor_grads = backward(nets.actor, actor_fwd.tape, logit_grad);
  return result;
}

SILMetrics sil_update(AgentNets& nets, PrioritizedBuffer& buffer, const SILConfig& cfg, Rng& rng) {
  if (buffer.empty()) throw std::logic_error("sil_update: replay buffer is empty");
  SILMetrics metrics;
  double adv_sum = 0.0;
  std::size_t adv_count = 0;
  for (int b = 0; b < cfg.batches_per_update; ++b) {
    const SampledBatch batch = buffer.sample(cfg.batch_size, rng);
    SILBatchResult loss = sil_batch_loss(nets, batch.transitions, batch.weights, cfg);
    if (!std::isfinite(loss.policy_loss) || !std::isfinite(loss.value_loss))
      throw DivergenceError("non-finite SIL loss");
    adam_step(nets.actor, loss.actor_grads, nets.actor_opt, cfg.lr);
    adam_step(nets.critic, loss.critic_grads, nets.critic_opt, cfg.lr);
    buffer.update_priorities(batch.indices, loss.clipped_advantages);

    metrics.policy_loss += loss.policy_loss;
    metrics.value_loss += loss.value_loss;
    metrics.demo_fraction_mean += batch.demo_fraction;
    for (double a : loss.clipped_advantages) adv_sum += a;
    adv_count += loss.clipped_advantages.size();
  }
  const double batches = static_cast<double>(cfg.batches_per_update);
  metrics.policy_loss /= batches;
  metrics.value_loss /= batches;
  metrics.demo_fraction_mean /= batches;
  metrics.mean_clipped_advantage = adv_sum / static_cast<double>(adv_count);
  return metrics;
}

}  // namespace silfd
