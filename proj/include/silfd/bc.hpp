#pragma once

#include <cstdint>
#include <vector>

#include "silfd/demos.hpp"
#include "silfd/mlp.hpp"
#include "silfd/rng.hpp"

namespace silfd {

struct BCConfig {
  double lr = 1e-3;
  std::size_t batch_size = 32;
  int epochs = 4096;  // full passes over all demonstrated (s, a) pairs

  void validate() const;
};

struct BCResult {
  NetParams actor;
  double initial_loss = 0.0;         // full-dataset cross-entropy before training
  double final_loss = 0.0;           // ... and after
  std::vector<double> epoch_losses;  // mean minibatch loss within each epoch
};

/// Mean cross-entropy -log pi(a|s) over every demonstrated step.
double bc_loss(const NetParams& actor, const DemoSet& demos);

/// Maximum-likelihood behavioral cloning into a fresh [2, 32, 32, 2] actor.
BCResult bc_train(const DemoSet& demos, const BCConfig& cfg, std::uint64_t seed);

/// Rolls out a (BC) policy and packages the episodes as a demo set whose
/// episodes are tagged bc-rollout. No return filtering.
DemoSet collect_policy_demos(const NetParams& actor, int grid_size, std::size_t episodes,
                             Rng& rng);

}  // namespace silfd
