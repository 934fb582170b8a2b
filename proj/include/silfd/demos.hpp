#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "silfd/chain_env.hpp"

namespace silfd {

enum class EpisodeSource { kOptimalExpert, kAdversarialExpert, kBcRollout, kAgent };

std::string_view to_string(EpisodeSource source);
EpisodeSource episode_source_from_string(std::string_view name);

/// One complete episode. observations[t] is the state the agent acted in at
/// step t; rewards[t] the reward of that step.
struct Episode {
  std::vector<Observation> observations;
  std::vector<int> actions;
  std::vector<double> rewards;
  double total_return = 0.0;
  EpisodeSource source = EpisodeSource::kAgent;

  std::size_t size() const { return actions.size(); }
  bool operator==(const Episode&) const = default;
};

struct DemoProvenance {
  std::string generator = "mix";
  int grid_size = kDefaultGridSize;
  int optimal_count = 0;
  int adversarial_count = 0;
  int bc_rollout_count = 0;

  bool operator==(const DemoProvenance&) const = default;
};

struct DemoSet {
  std::vector<Episode> episodes;
  DemoProvenance provenance;

  std::size_t transition_count() const;
  bool operator==(const DemoSet&) const = default;
};

/// Builds an episode by replaying actions through the environment from reset.
Episode replay_actions(int n, const std::vector<int>& actions, EpisodeSource source);

Episode generate_optimal(int n = kDefaultGridSize);
Episode generate_adversarial(int n = kDefaultGridSize);

/// Optimal episodes first, then adversarial ones.
DemoSet mix(int optimal_count, int adversarial_count, int n = kDefaultGridSize);

/// Checks lengths, the stored total, and that replaying the actions through
/// the environment reproduces observations and rewards bit for bit.
/// Throws std::invalid_argument describing the first mismatch.
void validate_episode(const Episode& episode, int n);

/// JSONL: a provenance header line, then one episode object per line.
/// Written to a temporary file and renamed into place.
void save_demos(const DemoSet& set, const std::filesystem::path& path);

/// Throws ParseError (with line number) on malformed or inconsistent input.
DemoSet load_demos(const std::filesystem::path& path);

std::string serialize_demos(const DemoSet& set);
DemoSet parse_demos(std::string_view text);

}  // namespace silfd
