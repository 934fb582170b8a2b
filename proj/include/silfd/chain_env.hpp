#pragma once

#include <array>

namespace silfd {

inline constexpr int kDefaultGridSize = 40;
inline constexpr int kNumActions = 2;
inline constexpr int kActionLeft = 0;
inline constexpr int kActionRight = 1;

/// Position on the N x N grid. Every step moves one row down, so col <= row.
struct ChainState {
  int row = 0;
  int col = 0;
  int n = kDefaultGridSize;

  bool terminal() const { return row == n - 1; }
  bool operator==(const ChainState&) const = default;
};

/// Both components normalized to [-1, 1].
struct Observation {
  double h = -1.0;
  double v = -1.0;

  bool operator==(const Observation&) const = default;
};

struct StepResult {
  ChainState next;
  double reward = 0.0;
  bool done = false;
};

/// Per-right-move penalty: the full all-right path costs 60 in penalties.
double right_move_penalty(int n);

/// Terminal bonus for reaching the bottom-right corner; exceeds the maximum
/// penalty sum (60) by 100.
inline constexpr double kTerminalBonus = 160.0;
inline constexpr double kOptimalReturn = 100.0;

ChainState reset(int n = kDefaultGridSize);
StepResult step(const ChainState& state, int action);
Observation observe(const ChainState& state);

}  // namespace silfd
