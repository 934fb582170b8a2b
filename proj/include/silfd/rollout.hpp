#pragma once

#include <vector>

#include "silfd/agent.hpp"
#include "silfd/chain_env.hpp"
#include "silfd/demos.hpp"
#include "silfd/rng.hpp"

namespace silfd {

/// On-policy data for one PPO update. log_prob_old and value_old are recorded
/// with the parameters that collected the data.
struct RolloutBatch {
  std::vector<Observation> observations;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> log_prob_old;
  std::vector<double> value_old;
  std::vector<bool> dones;
  double bootstrap_value = 0.0;  // V of the state after the last step, 0 if terminal

  std::size_t size() const { return actions.size(); }
};

/// Draws an action index from one row of log-probabilities.
int sample_action(const Eigen::Ref<const Eigen::RowVectorXd>& log_probs, Rng& rng);

/// Steps the chain environment with the current actor. An episode cut by the
/// end of a rollout continues on the next call.
class RolloutCollector {
 public:
  explicit RolloutCollector(int grid_size = kDefaultGridSize);

  /// Collects exactly `steps` transitions; episodes finished along the way
  /// are appended to `completed`.
  RolloutBatch collect(const AgentNets& nets, std::size_t steps, Rng& rng,
                       std::vector<Episode>& completed);

  int grid_size() const { return grid_size_; }

 private:
  int grid_size_;
  ChainState state_;
  Episode current_;
};

/// Runs complete episodes with a policy, no learning.
std::vector<Episode> run_policy_episodes(const NetParams& actor, int grid_size,
                                         std::size_t episodes, Rng& rng,
                                         EpisodeSource source = EpisodeSource::kAgent);

struct EvalStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t episodes = 0;
};

/// Mean/min/max undiscounted return over `episodes` stochastic episodes.
EvalStats evaluate_policy(const NetParams& actor, int grid_size, std::size_t episodes, Rng& rng);

}  // namespace silfd
