#include "silfd/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "silfd/replay_buffer.hpp"

namespace silfd {

AgentNets make_agent_nets(std::uint64_t actor_seed, std::uint64_t critic_seed) {
  AgentNets nets;
  nets.actor = mlp_init({kObservationDim, kHiddenWidth, kHiddenWidth, kNumActions}, actor_seed);
  nets.critic = mlp_init({kObservationDim, kHiddenWidth, kHiddenWidth, 1}, critic_seed);
  nets.actor_opt = OptState::fresh(nets.actor);
  nets.critic_opt = OptState::fresh(nets.critic);
  return nets;
}

int sample_action(const Eigen::Ref<const Eigen::RowVectorXd>& log_probs, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  const int last = static_cast<int>(log_probs.size()) - 1;
  for (int a = 0; a < last; ++a) {
    cumulative += std::exp(log_probs(a));
    if (u < cumulative) return a;
  }
  return last;
}

RolloutCollector::RolloutCollector(int grid_size)
    : grid_size_(grid_size), state_(reset(grid_size)) {}

RolloutBatch RolloutCollector::collect(const AgentNets& nets, std::size_t steps, Rng& rng,
                                       std::vector<Episode>& completed) {
  RolloutBatch batch;
  batch.observations.reserve(steps);
  batch.actions.reserve(steps);
  batch.rewards.reserve(steps);
  batch.log_prob_old.reserve(steps);
  batch.value_old.reserve(steps);
  batch.dones.reserve(steps);

  Matrix input(1, kObservationDim);
  for (std::size_t i = 0; i < steps; ++i) {
    const Observation obs = observe(state_);
    input(0, 0) = obs.h;
    input(0, 1) = obs.v;
    const CategoricalHead head = categorical_head(predict(nets.actor, input));
    const double value = predict(nets.critic, input)(0, 0);
    const int action = sample_action(head.log_probs.row(0), rng);
    const StepResult result = step(state_, action);

    batch.observations.push_back(obs);
    batch.actions.push_back(action);
    batch.rewards.push_back(result.reward);
    batch.log_prob_old.push_back(head.log_probs(0, action));
    batch.value_old.push_back(value);
    batch.dones.push_back(result.done);

    current_.observations.push_back(obs);
    current_.actions.push_back(action);
    current_.rewards.push_back(result.reward);
    if (result.done) {
      current_.total_return =
          std::accumulate(current_.rewards.begin(), current_.rewards.end(), 0.0);
      current_.source = EpisodeSource::kAgent;
      completed.push_back(std::move(current_));
      current_ = Episode{};
      state_ = reset(grid_size_);
    } else {
      state_ = result.next;
    }
  }
  if (!batch.dones.empty() && !batch.dones.back()) {
    const Observation obs = observe(state_);
    input(0, 0) = obs.h;
    input(0, 1) = obs.v;
    batch.bootstrap_value = predict(nets.critic, input)(0, 0);
  }
  return batch;
}

std::vector<Episode> run_policy_episodes(const NetParams& actor, int grid_size,
                                         std::size_t episodes, Rng& rng, EpisodeSource source) {
  std::vector<Episode> out(episodes);
  std::vector<ChainState> states(episodes, reset(grid_size));
  if (episodes == 0) return out;
  Matrix inputs(static_cast<Eigen::Index>(episodes), kObservationDim);
  // All chain episodes have the same length, so the batch advances in lockstep.
  for (int t = 0; t < grid_size - 1; ++t) {
    for (std::size_t e = 0; e < episodes; ++e) {
      const Observation obs = observe(states[e]);
      inputs(static_cast<Eigen::Index>(e), 0) = obs.h;
      inputs(static_cast<Eigen::Index>(e), 1) = obs.v;
      out[e].observations.push_back(obs);
    }
    const CategoricalHead head = categorical_head(predict(actor, inputs));
    for (std::size_t e = 0; e < episodes; ++e) {
      const int action = sample_action(head.log_probs.row(static_cast<Eigen::Index>(e)), rng);
      const StepResult result = step(states[e], action);
      out[e].actions.push_back(action);
      out[e].rewards.push_back(result.reward);
      states[e] = result.next;
    }
  }
  for (auto& ep : out) {
    ep.total_return = std::accumulate(ep.rewards.begin(), ep.rewards.end(), 0.0);
    ep.source = source;
  }
  return out;
}

EvalStats evaluate_policy(const NetParams& actor, int grid_size, std::size_t episodes, Rng& rng) {
  EvalStats stats;
  stats.episodes = episodes;
  if (episodes == 0) return stats;
  const auto runs = run_policy_episodes(actor, grid_size, episodes, rng);
  double sum = 0.0;
  stats.min = runs.front().total_return;
  stats.max = runs.front().total_return;
  for (const auto& ep : runs) {
    sum += ep.total_return;
    stats.min = std::min(stats.min, ep.total_return);
    stats.max = std::max(stats.max, ep.total_return);
  }
  stats.mean = sum / static_cast<double>(episodes);
  return stats;
}

}  // namespace silfd
