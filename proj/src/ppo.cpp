#include "silfd/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "silfd/advantage.hpp"
#include "silfd/errors.hpp"
#include "silfd/replay_buffer.hpp"

namespace silfd {

void PPOConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo clip must be in (0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must be in [0, 1]");
  if (!(entropy_coef >= 0.0)) throw ConfigError("entropy_coef must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("ppo lr must be positive");
  if (minibatch == 0) throw ConfigError("ppo minibatch must be positive");
  if (epochs <= 0) throw ConfigError("ppo epochs must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in [0, 1]");
}

PPOMinibatchResult ppo_minibatch(const AgentNets& nets, const RolloutBatch& rollout,
                                 std::span<const std::size_t> rows,
                                 std::span<const double> advantages,
                                 std::span<const double> value_targets, const PPOConfig& cfg) {
  const std::size_t batch = rows.size();
  if (batch == 0 || advantages.size() != batch || value_targets.size() != batch)
    throw std::invalid_argument("ppo_minibatch: inconsistent minibatch sizes");
  const double inv_batch = 1.0 / static_cast<double>(batch);

  std::vector<double> adv(advantages.begin(), advantages.end());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) * inv_batch;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var * inv_batch);
  if (stddev >= 1e-8)
    for (double& a : adv) a = (a - mean) / stddev;

  Matrix inputs(static_cast<Eigen::Index>(batch), kObservationDim);
  for (std::size_t i = 0; i < batch; ++i) {
    const Observation& o = rollout.observations.at(rows[i]);
    inputs(static_cast<Eigen::Index>(i), 0) = o.h;
    inputs(static_cast<Eigen::Index>(i), 1) = o.v;
  }

  PPOMinibatchResult result;
  const ForwardResult actor_fwd = forward(nets.actor, inputs);
  const CategoricalHead head = categorical_head(actor_fwd.outputs);
  const Matrix entropy_grad = entropy_logit_grad(head);
  Matrix logit_grad = Matrix::Zero(head.log_probs.rows(), head.log_probs.cols());

  double surrogate = 0.0;
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const int action = rollout.actions[rows[i]];
    const double ratio = std::exp(head.log_probs(r, action) - rollout.log_prob_old[rows[i]]);
    const double bounded = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const double unclipped_term = ratio * adv[i];
    const double clipped_term = bounded * adv[i];
    if (bounded != ratio) ++clipped;
    double coeff = 0.0;  // d(surrogate_i)/d(log pi(a_i))
    if (unclipped_term <= clipped_term) {
      surrogate += unclipped_term;
      coeff = unclipped_term;
    } else {
      surrogate += clipped_term;
    }
    // loss_i = -surrogate_i - c_H * H_i, averaged over the batch
    for (Eigen::Index a = 0; a < logit_grad.cols(); ++a) {
      const double p = std::exp(head.log_probs(r, a));
      const double dlogp = (a == action ? 1.0 : 0.0) - p;
      logit_grad(r, a) = (-coeff * dlogp - cfg.entropy_coef * entropy_grad(r, a)) * inv_batch;
    }
  }
  result.surrogate = surrogate * inv_batch;
  result.entropy = head.entropy.mean();
  result.policy_loss = -result.surrogate - cfg.entropy_coef * result.entropy;
  result.clip_fraction = static_cast<double>(clipped) * inv_batch;
  result.actor_grads = backward(nets.actor, actor_fwd.tape, logit_grad);

  const ForwardResult critic_fwd = forward(nets.critic, inputs);
  Matrix value_grad(static_cast<Eigen::Index>(batch), 1);
  double value_loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double err = critic_fwd.outputs(r, 0) - value_targets[i];
    value_loss += err * err;
    value_grad(r, 0) = 2.0 * err * inv_batch;
  }
  result.value_loss = value_loss * inv_batch;
  result.critic_grads = backward(nets.critic, critic_fwd.tape, value_grad);
  return result;
}

std::vector<double> probability_ratios(const NetParams& actor, const RolloutBatch& rollout) {
  const CategoricalHead head =
      categorical_head(predict(actor, observation_matrix(rollout.observations)));
  std::vector<double> ratios(rollout.size());
  for (std::size_t i = 0; i < rollout.size(); ++i)
    ratios[i] = std::exp(head.log_probs(static_cast<Eigen::Index>(i), rollout.actions[i]) -
                         rollout.log_prob_old[i]);
  return ratios;
}

PPOMetrics ppo_update(AgentNets& nets, const RolloutBatch& rollout, const PPOConfig& cfg,
                      Rng& rng) {
  const std::size_t steps = rollout.size();
  if (steps == 0) throw std::invalid_argument("ppo_update: empty rollout");
  std::vector<double> values(rollout.value_old);
  values.push_back(rollout.bootstrap_value);
  const std::vector<double> advantages =
      compute_gae(rollout.rewards, values, rollout.dones, cfg.gamma, cfg.gae_lambda);
  std::vector<double> targets(steps);
  for (std::size_t i = 0; i < steps; ++i) targets[i] = advantages[i] + rollout.value_old[i];

  std::vector<std::size_t> order(steps);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> mb_adv;
  std::vector<double> mb_targets;

  PPOMetrics metrics;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < steps; start += cfg.minibatch) {
      const std::size_t end = std::min(steps, start + cfg.minibatch);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      mb_adv.clear();
      mb_targets.clear();
      for (std::size_t r : rows) {
        mb_adv.push_back(advantages[r]);
        mb_targets.push_back(targets[r]);
      }
      PPOMinibatchResult mb = ppo_minibatch(nets, rollout, rows, mb_adv, mb_targets, cfg);
      if (!std::isfinite(mb.policy_loss) || !std::isfinite(mb.value_loss))
        throw DivergenceError("non-finite PPO loss");
      adam_step(nets.actor, mb.actor_grads, nets.actor_opt, cfg.lr);
      adam_step(nets.critic, mb.critic_grads, nets.critic_opt, cfg.lr);
      metrics.policy_loss += mb.policy_loss;
      metrics.value_loss += mb.value_loss;
      metrics.entropy += mb.entropy;
      metrics.clip_fraction += mb.clip_fraction;
      ++metrics.gradient_steps;
    }
  }
  const double n = static_cast<double>(metrics.gradient_steps);
  metrics.policy_loss /= n;
  metrics.value_loss /= n;
  metrics.entropy /= n;
  metrics.clip_fraction /= n;
  return metrics;
}

}  // namespace silfd
