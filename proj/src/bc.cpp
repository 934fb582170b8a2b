#include "silfd/bc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "silfd/agent.hpp"
#include "silfd/errors.hpp"
#include "silfd/rollout.hpp"

namespace silfd {

namespace {

struct Dataset {
  Matrix inputs;
  std::vector<int> actions;
};

Dataset flatten(const DemoSet& demos) {
  Dataset data;
  const auto total = static_cast<Eigen::Index>(demos.transition_count());
  data.inputs.resize(total, kObservationDim);
  data.actions.reserve(static_cast<std::size_t>(total));
  Eigen::Index row = 0;
  for (const auto& ep : demos.episodes) {
    for (std::size_t t = 0; t < ep.size(); ++t, ++row) {
      data.inputs(row, 0) = ep.observations[t].h;
      data.inputs(row, 1) = ep.observations[t].v;
      data.actions.push_back(ep.actions[t]);
    }
  }
  return data;
}

double dataset_loss(const NetParams& actor, const Dataset& data) {
  const CategoricalHead head = categorical_head(predict(actor, data.inputs));
  double loss = 0.0;
  for (std::size_t i = 0; i < data.actions.size(); ++i)
    loss -= head.log_probs(static_cast<Eigen::Index>(i), data.actions[i]);
  return loss / static_cast<double>(data.actions.size());
}

}  // namespace

void BCConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("bc_lr must be positive");
  if (batch_size == 0) throw ConfigError("bc_batch_size must be positive");
  if (epochs < 0) throw ConfigError("bc_epochs must be >= 0");
}

double bc_loss(const NetParams& actor, const DemoSet& demos) {
  if (demos.transition_count() == 0) throw std::invalid_argument("bc_loss: no demonstrations");
  return dataset_loss(actor, flatten(demos));
}

BCResult bc_train(const DemoSet& demos, const BCConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (demos.transition_count() == 0) throw ConfigError("behavioral cloning needs demonstrations");
  const Dataset data = flatten(demos);
  const std::size_t total = data.actions.size();

  BCResult result;
  result.actor = mlp_init({kObservationDim, kHiddenWidth, kHiddenWidth, kNumActions},
                          derive_seed(seed, "bc-init"));
  OptState opt = OptState::fresh(result.actor);
  Rng rng(derive_seed(seed, "bc-shuffle"));
  result.initial_loss = dataset_loss(result.actor, data);
  result.epoch_losses.reserve(static_cast<std::size_t>(cfg.epochs));

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < total; start += cfg.batch_size) {
      const std::size_t end = std::min(total, start + cfg.batch_size);
      const auto rows = static_cast<Eigen::Index>(end - start);
      Matrix inputs(rows, kObservationDim);
      for (Eigen::Index i = 0; i < rows; ++i) inputs.row(i) = data.inputs.row(order[start + i]);
      const ForwardResult fwd = forward(result.actor, inputs);
      const CategoricalHead head = categorical_head(fwd.outputs);
      Matrix grad = head.log_probs.array().exp();
      double loss = 0.0;
      for (Eigen::Index i = 0; i < rows; ++i) {
        const int action = data.actions[order[start + i]];
        loss -= head.log_probs(i, action);
        grad(i, action) -= 1.0;
      }
      grad /= static_cast<double>(rows);
      loss /= static_cast<double>(rows);
      if (!std::isfinite(loss)) throw DivergenceError("non-finite behavioral cloning loss");
      adam_step(result.actor, backward(result.actor, fwd.tape, grad), opt, cfg.lr);
      epoch_loss += loss;
      ++batches;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
  }
  result.final_loss = dataset_loss(result.actor, data);
  return result;
}

DemoSet collect_policy_demos(const NetParams& actor, int grid_size, std::size_t episodes,
                             Rng& rng) {
  DemoSet set;
  set.episodes = run_policy_episodes(actor, grid_size, episodes, rng, EpisodeSource::kBcRollout);
  set.provenance.generator = "bc-rollout";
  set.provenance.grid_size = grid_size;
  set.provenance.bc_rollout_count = static_cast<int>(episodes);
  return set;
}

}  // namespace silfd
