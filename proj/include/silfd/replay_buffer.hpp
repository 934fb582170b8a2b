#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "silfd/chain_env.hpp"
#include "silfd/demos.hpp"
#include "silfd/mlp.hpp"
#include "silfd/rng.hpp"

namespace silfd {

/// Binary sum tree over a fixed number of leaves. Internal nodes are
/// recomputed from their children on every write, so the root always equals
/// the rounded sum of the leaves.
class SumTree {
 public:
  explicit SumTree(std::size_t leaves = 0);

  std::size_t leaves() const { return leaves_; }
  void set(std::size_t leaf, double value);
  double get(std::size_t leaf) const { return nodes_[base_ + leaf]; }
  double total() const { return nodes_.empty() ? 0.0 : nodes_[1]; }

  /// Leaf whose cumulative interval contains mass, for mass in [0, total()).
  std::size_t find(double mass) const;

 private:
  std::size_t leaves_;
  std::size_t base_;
  std::vector<double> nodes_;
};

struct Transition {
  Observation observation;
  int action = 0;
  double return_r = 0.0;  // discounted Monte-Carlo return from this step
  bool is_demo = false;
};

struct ReplayParams {
  std::size_t capacity = 100000;
  double alpha = 0.6;   // priority exponent
  double beta = 0.1;    // importance-sampling exponent
  double epsilon = 1e-6;
};

struct SampledBatch {
  std::vector<Transition> transitions;
  std::vector<std::size_t> indices;
  std::vector<double> weights;
  double demo_fraction = 0.0;
};

double demo_fraction_of(std::span<const Transition> batch);

/// Prioritized replay. Demonstrations occupy slots [0, demo_count) and are
/// never evicted; agent experience lives in a FIFO ring of `capacity` slots
/// after them. Priorities are max(R - V, 0) + epsilon.
class PrioritizedBuffer {
 public:
  explicit PrioritizedBuffer(ReplayParams params = {});

  /// Only valid on a buffer with no demos and no agent data.
  void pin_demos(const DemoSet& demos, const NetParams& critic, double gamma);
  /// Episode must be complete (ends in a terminal step).
  void push_episode(const Episode& episode, const NetParams& critic, double gamma);

  SampledBatch sample(std::size_t batch_size, Rng& rng) const;
  void update_priorities(std::span<const std::size_t> indices, std::span<const double> advantages);

  std::size_t size() const { return demo_count_ + agent_count_; }
  std::size_t demo_count() const { return demo_count_; }
  std::size_t agent_count() const { return agent_count_; }
  bool empty() const { return size() == 0; }
  const ReplayParams& params() const { return params_; }

  /// Buffer index: [0, demo_count) are demos, the rest agent ring slots.
  /// Valid indices are always [0, size()).
  const Transition& at(std::size_t index) const;
  /// Agent transition by age, 0 = oldest still stored.
  const Transition& agent_at(std::size_t age) const;
  double priority(std::size_t index) const;
  double probability(std::size_t index) const;
  /// Sum of priority^alpha held at the tree root.
  double total_mass() const { return tree_.total(); }
  /// Same sum recomputed directly from the leaves.
  double leaf_mass_sum() const;

  std::vector<Observation> demo_observations() const;

 private:
  void ensure_storage();
  void write_slot(std::size_t slot, const Transition& t, double priority);
  double clipped_priority(double advantage) const;

  ReplayParams params_;
  std::vector<Transition> slots_;
  std::vector<double> priorities_;
  SumTree tree_;
  std::size_t demo_count_ = 0;
  std::size_t agent_count_ = 0;
  std::size_t agent_head_ = 0;  // ring position of the oldest agent transition
  bool demos_pinned_ = false;
  bool allocated_ = false;
};

/// Critic values for a list of observations (one batched forward).
std::vector<double> critic_values(const NetParams& critic, std::span<const Observation> obs);

Matrix observation_matrix(std::span<const Observation> obs);

}  // namespace silfd
