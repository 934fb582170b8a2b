#pragma once

#include <cstdint>

#include "silfd/mlp.hpp"

namespace silfd {

inline constexpr int kObservationDim = 2;
inline constexpr int kHiddenWidth = 32;

/// Separate actor (observation -> action logits) and critic
/// (observation -> value) networks, each with its own Adam state.
struct AgentNets {
  NetParams actor;
  NetParams critic;
  OptState actor_opt;
  OptState critic_opt;
};

/// [2, 32, 32, 2] actor and [2, 32, 32, 1] critic.
AgentNets make_agent_nets(std::uint64_t actor_seed, std::uint64_t critic_seed);

}  // namespace silfd
