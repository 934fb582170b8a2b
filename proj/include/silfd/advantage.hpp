#pragma once

#include <span>
#include <vector>

namespace silfd {

/// Discounted returns of a complete episode: R_t = r_t + gamma * R_{t+1},
/// with R_last = r_last.
std::vector<double> compute_returns(std::span<const double> rewards, double gamma);

/// Generalized advantage estimation over a rollout that may span several
/// episodes. `values` holds T+1 entries: V(s_0..s_{T-1}) and the bootstrap
/// value of the state after the last step. done_t cuts both the bootstrap
/// and the trace at step t.
std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                const std::vector<bool>& dones, double gamma, double lambda);

}  // namespace silfd
