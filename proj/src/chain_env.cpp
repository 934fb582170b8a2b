#include "silfd/chain_env.hpp"

#include <stdexcept>
#include <string>

namespace silfd {

double right_move_penalty(int n) { return 60.0 / static_cast<double>(n - 1); }

ChainState reset(int n) {
  if (n < 2) throw std::invalid_argument("chain grid size must be >= 2, got " + std::to_string(n));
  return ChainState{0, 0, n};
}

StepResult step(const ChainState& state, int action) {
  if (state.n < 2 || state.row < 0 || state.col < 0 || state.col > state.row)
    throw std::invalid_argument("invalid chain state");
  if (state.terminal()) throw std::logic_error("cannot step a terminal chain state");
  if (action != kActionLeft && action != kActionRight)
    throw std::invalid_argument("chain action must be 0 (left) or 1 (right)");

  StepResult result;
  result.next = state;
  result.next.row += 1;
  if (action == kActionRight) {
    result.next.col += 1;
    result.reward = -right_move_penalty(state.n);
  } else if (state.col > 0) {
    result.next.col -= 1;
  }
  result.done = result.next.terminal();
  if (result.done && result.next.col == state.n - 1) result.reward += kTerminalBonus;
  return result;
}

Observation observe(const ChainState& state) {
  const double span = static_cast<double>(state.n - 1);
  return Observation{2.0 * state.col / span - 1.0, 2.0 * state.row / span - 1.0};
}

}  // namespace silfd
