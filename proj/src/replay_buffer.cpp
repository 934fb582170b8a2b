#include "silfd/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "silfd/advantage.hpp"

namespace silfd {

SumTree::SumTree(std::size_t leaves) : leaves_(leaves), base_(1) {
  while (base_ < leaves_) base_ <<= 1;
  nodes_.assign(leaves_ == 0 ? 0 : 2 * base_, 0.0);
}

void SumTree::set(std::size_t leaf, double value) {
  if (leaf >= leaves_) throw std::out_of_range("sum tree leaf out of range");
  std::size_t node = base_ + leaf;
  nodes_[node] = value;
  for (node >>= 1; node >= 1; node >>= 1) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
}

std::size_t SumTree::find(double mass) const {
  if (leaves_ == 0 || total() <= 0.0) throw std::logic_error("sum tree has no mass");
  std::size_t node = 1;
  while (node < base_) {
    const double left = nodes_[2 * node];
    const double right = nodes_[2 * node + 1];
    // Rounding can leave mass just past the left subtree when the right one is empty.
    if (mass < left || right <= 0.0) {
      node = 2 * node;
    } else {
      mass -= left;
      node = 2 * node + 1;
    }
  }
  return node - base_;
}

double demo_fraction_of(std::span<const Transition> batch) {
  if (batch.empty()) return 0.0;
  const auto demos = std::count_if(batch.begin(), batch.end(),
                                   [](const Transition& t) { return t.is_demo; });
  return static_cast<double>(demos) / static_cast<double>(batch.size());
}

Matrix observation_matrix(std::span<const Observation> obs) {
  Matrix m(static_cast<Eigen::Index>(obs.size()), 2);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = obs[i].h;
    m(static_cast<Eigen::Index>(i), 1) = obs[i].v;
  }
  return m;
}

std::vector<double> critic_values(const NetParams& critic, std::span<const Observation> obs) {
  if (obs.empty()) return {};
  const Matrix out = predict(critic, observation_matrix(obs));
  return std::vector<double>(out.data(), out.data() + out.rows());
}

PrioritizedBuffer::PrioritizedBuffer(ReplayParams params) : params_(params) {
  if (params_.capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  if (!(params_.epsilon > 0.0)) throw std::invalid_argument("priority floor must be positive");
}

double PrioritizedBuffer::clipped_priority(double advantage) const {
  if (!std::isfinite(advantage)) throw std::invalid_argument("non-finite advantage");
  return std::max(advantage, 0.0) + params_.epsilon;
}

void PrioritizedBuffer::ensure_storage() {
  if (allocated_) return;
  const std::size_t total = demo_count_ + params_.capacity;
  slots_.resize(total);
  priorities_.assign(total, 0.0);
  tree_ = SumTree(total);
  allocated_ = true;
}

void PrioritizedBuffer::write_slot(std::size_t slot, const Transition& t, double priority) {
  slots_[slot] = t;
  priorities_[slot] = priority;
  tree_.set(slot, std::pow(priority, params_.alpha));
}

void PrioritizedBuffer::pin_demos(const DemoSet& demos, const NetParams& critic, double gamma) {
  if (demos_pinned_ || allocated_)
    throw std::logic_error("demonstrations can only be pinned once, into an empty buffer");
  demo_count_ = demos.transition_count();
  demos_pinned_ = true;
  ensure_storage();
  std::size_t slot = 0;
  for (const auto& ep : demos.episodes) {
    const auto returns = compute_returns(ep.rewards, gamma);
    const auto values = critic_values(critic, ep.observations);
    for (std::size_t t = 0; t < ep.size(); ++t) {
      write_slot(slot++, Transition{ep.observations[t], ep.actions[t], returns[t], true},
                 clipped_priority(returns[t] - values[t]));
    }
  }
}

void PrioritizedBuffer::push_episode(const Episode& episode, const NetParams& critic,
                                     double gamma) {
  if (episode.actions.empty()) throw std::invalid_argument("cannot push an empty episode");
  if (episode.observations.size() != episode.actions.size() ||
      episode.rewards.size() != episode.actions.size())
    throw std::invalid_argument("episode field lengths differ");
  // A complete chain episode of L steps starts at row 0 and makes its last
  // decision at row L-1 of an (L+1)-sized grid.
  const int steps = static_cast<int>(episode.size());
  const ChainState first{0, 0, steps + 1};
  const ChainState last{steps - 1, 0, steps + 1};
  if (episode.observations.front().v != observe(first).v ||
      episode.observations.back().v != observe(last).v)
    throw std::invalid_argument("cannot push an incomplete episode");
  ensure_storage();
  const auto returns = compute_returns(episode.rewards, gamma);
  const auto values = critic_values(critic, episode.observations);
  const std::size_t capacity = params_.capacity;
  for (std::size_t t = 0; t < episode.size(); ++t) {
    std::size_t ring;
    if (agent_count_ < capacity) {
      ring = agent_count_++;
    } else {
      ring = agent_head_;
      agent_head_ = (agent_head_ + 1) % capacity;
    }
    write_slot(demo_count_ + ring,
               Transition{episode.observations[t], episode.actions[t], returns[t], false},
               clipped_priority(returns[t] - values[t]));
  }
}

SampledBatch PrioritizedBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  SampledBatch batch;
  batch.transitions.reserve(batch_size);
  batch.indices.reserve(batch_size);
  batch.weights.reserve(batch_size);
  const double total = tree_.total();
  const double n = static_cast<double>(size());
  double max_weight = 0.0;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t index = tree_.find(rng.uniform() * total);
    const double p = tree_.get(index) / total;
    const double w = std::pow(n * p, -params_.beta);
    max_weight = std::max(max_weight, w);
    batch.indices.push_back(index);
    batch.transitions.push_back(slots_[index]);
    batch.weights.push_back(w);
  }
  for (double& w : batch.weights) w /= max_weight;
  batch.demo_fraction = demo_fraction_of(batch.transitions);
  return batch;
}

void PrioritizedBuffer::update_priorities(std::span<const std::size_t> indices,
                                          std::span<const double> advantages) {
  if (indices.size() != advantages.size())
    throw std::invalid_argument("indices and advantages differ in length");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size())
      throw std::out_of_range("replay index " + std::to_string(indices[i]) + " out of range");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double p = clipped_priority(advantages[i]);
    priorities_[indices[i]] = p;
    tree_.set(indices[i], std::pow(p, params_.alpha));
  }
}

const Transition& PrioritizedBuffer::at(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("replay index out of range");
  return slots_[index];
}

const Transition& PrioritizedBuffer::agent_at(std::size_t age) const {
  if (age >= agent_count_) throw std::out_of_range("agent age out of range");
  const std::size_t ring =
      agent_count_ < params_.capacity ? age : (agent_head_ + age) % params_.capacity;
  return slots_[demo_count_ + ring];
}

double PrioritizedBuffer::priority(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("replay index out of range");
  return priorities_[index];
}

double PrioritizedBuffer::probability(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("replay index out of range");
  return tree_.get(index) / tree_.total();
}

double PrioritizedBuffer::leaf_mass_sum() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < size(); ++i) sum += tree_.get(i);
  return sum;
}

std::vector<Observation> PrioritizedBuffer::demo_observations() const {
  std::vector<Observation> obs;
  obs.reserve(demo_count_);
  for (std::size_t i = 0; i < demo_count_; ++i) obs.push_back(slots_[i].observation);
  return obs;
}

}  // namespace silfd
