#include "silfd/advantage.hpp"

#include <stdexcept>

namespace silfd {

std::vector<double> compute_returns(std::span<const double> rewards, double gamma) {
  if (rewards.empty()) throw std::invalid_argument("compute_returns: empty reward sequence");
  std::vector<double> returns(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    returns[t] = running;
  }
  return returns;
}

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                const std::vector<bool>& dones, double gamma, double lambda) {
  const std::size_t steps = rewards.size();
  if (values.size() != steps + 1 || dones.size() != steps)
    throw std::invalid_argument("compute_gae: expected T rewards, T+1 values and T dones");
  std::vector<double> advantages(steps);
  double running = 0.0;
  for (std::size_t t = steps; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * live * values[t + 1] - values[t];
    running = delta + gamma * lambda * live * running;
    advantages[t] = running;
  }
  return advantages;
}

}  // namespace silfd
