#include "silfd/demos.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "silfd/errors.hpp"

namespace silfd {

namespace {

using nlohmann::json;

json episode_to_json(const Episode& ep) {
  json doc;
  doc["source"] = std::string(to_string(ep.source));
  doc["actions"] = ep.actions;
  doc["rewards"] = ep.rewards;
  json obs = json::array();
  for (const auto& o : ep.observations) obs.push_back({o.h, o.v});
  doc["observations"] = std::move(obs);
  doc["total_return"] = ep.total_return;
  return doc;
}

Episode episode_from_json(const json& doc) {
  Episode ep;
  ep.source = episode_source_from_string(doc.at("source").get<std::string>());
  ep.actions = doc.at("actions").get<std::vector<int>>();
  ep.rewards = doc.at("rewards").get<std::vector<double>>();
  for (const auto& pair : doc.at("observations")) {
    if (!pair.is_array() || pair.size() != 2)
      throw std::invalid_argument("observation must be a [h, v] pair");
    ep.observations.push_back(Observation{pair[0].get<double>(), pair[1].get<double>()});
  }
  ep.total_return = doc.at("total_return").get<double>();
  return ep;
}

}  // namespace

std::string_view to_string(EpisodeSource source) {
  switch (source) {
    case EpisodeSource::kOptimalExpert: return "optimal-expert";
    case EpisodeSource::kAdversarialExpert: return "adversarial-expert";
    case EpisodeSource::kBcRollout: return "bc-rollout";
    case EpisodeSource::kAgent: return "agent";
  }
  return "agent";
}

EpisodeSource episode_source_from_string(std::string_view name) {
  if (name == "optimal-expert") return EpisodeSource::kOptimalExpert;
  if (name == "adversarial-expert") return EpisodeSource::kAdversarialExpert;
  if (name == "bc-rollout") return EpisodeSource::kBcRollout;
  if (name == "agent") return EpisodeSource::kAgent;
  throw std::invalid_argument("unknown episode source '" + std::string(name) + "'");
}

std::size_t DemoSet::transition_count() const {
  std::size_t n = 0;
  for (const auto& ep : episodes) n += ep.size();
  return n;
}

Episode replay_actions(int n, const std::vector<int>& actions, EpisodeSource source) {
  Episode ep;
  ep.source = source;
  ChainState state = reset(n);
  for (int action : actions) {
    ep.observations.push_back(observe(state));
    const StepResult result = step(state, action);
    ep.actions.push_back(action);
    ep.rewards.push_back(result.reward);
    state = result.next;
  }
  ep.total_return = std::accumulate(ep.rewards.begin(), ep.rewards.end(), 0.0);
  return ep;
}

Episode generate_optimal(int n) {
  if (n < 2) throw std::invalid_argument("grid size must be >= 2");
  return replay_actions(n, std::vector<int>(n - 1, kActionRight), EpisodeSource::kOptimalExpert);
}

Episode generate_adversarial(int n) {
  if (n < 2) throw std::invalid_argument("grid size must be >= 2");
  return replay_actions(n, std::vector<int>(n - 1, kActionLeft),
                        EpisodeSource::kAdversarialExpert);
}

DemoSet mix(int optimal_count, int adversarial_count, int n) {
  if (optimal_count < 0 || adversarial_count < 0)
    throw std::invalid_argument("demonstration counts must be non-negative");
  if (optimal_count + adversarial_count == 0)
    throw std::invalid_argument("at least one demonstration is required");
  DemoSet set;
  set.provenance = DemoProvenance{"mix", n, optimal_count, adversarial_count, 0};
  const Episode optimal = generate_optimal(n);
  const Episode adversarial = generate_adversarial(n);
  set.episodes.insert(set.episodes.end(), optimal_count, optimal);
  set.episodes.insert(set.episodes.end(), adversarial_count, adversarial);
  return set;
}

void validate_episode(const Episode& ep, int n) {
  if (ep.actions.empty()) throw std::invalid_argument("episode has no steps");
  if (ep.rewards.size() != ep.actions.size() || ep.observations.size() != ep.actions.size())
    throw std::invalid_argument("episode field lengths differ");
  if (ep.actions.size() != static_cast<std::size_t>(n - 1))
    throw std::invalid_argument("episode length " + std::to_string(ep.actions.size()) +
                                " does not equal N-1 = " + std::to_string(n - 1));
  const double sum = std::accumulate(ep.rewards.begin(), ep.rewards.end(), 0.0);
  if (!std::isfinite(ep.total_return) || std::abs(sum - ep.total_return) > 1e-9)
    throw std::invalid_argument("total_return " + std::to_string(ep.total_return) +
                                " does not match reward sum " + std::to_string(sum));
  for (int a : ep.actions)
    if (a != kActionLeft && a != kActionRight)
      throw std::invalid_argument("action out of range");
  const Episode replayed = replay_actions(n, ep.actions, ep.source);
  for (std::size_t t = 0; t < ep.actions.size(); ++t) {
    if (replayed.rewards[t] != ep.rewards[t])
      throw std::invalid_argument("reward at step " + std::to_string(t) +
                                  " does not match environment replay");
    if (!(replayed.observations[t] == ep.observations[t]))
      throw std::invalid_argument("observation at step " + std::to_string(t) +
                                  " does not match environment replay");
  }
}

std::string serialize_demos(const DemoSet& set) {
  std::ostringstream out;
  json header;
  header["provenance"] = {{"generator", set.provenance.generator},
                          {"grid_size", set.provenance.grid_size},
                          {"optimal_count", set.provenance.optimal_count},
                          {"adversarial_count", set.provenance.adversarial_count},
                          {"bc_rollout_count", set.provenance.bc_rollout_count},
                          {"episodes", set.episodes.size()}};
  out << header.dump() << '\n';
  for (const auto& ep : set.episodes) out << episode_to_json(ep).dump() << '\n';
  return out.str();
}

DemoSet parse_demos(std::string_view text) {
  DemoSet set;
  std::size_t expected_episodes = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    const bool terminated = end != std::string_view::npos;
    if (!terminated) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!terminated) throw ParseError(line_no, "truncated line (missing newline)");
    if (line.empty()) throw ParseError(line_no, "empty line");

    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        const auto& p = doc.at("provenance");
        set.provenance.generator = p.at("generator").get<std::string>();
        set.provenance.grid_size = p.at("grid_size").get<int>();
        set.provenance.optimal_count = p.at("optimal_count").get<int>();
        set.provenance.adversarial_count = p.at("adversarial_count").get<int>();
        set.provenance.bc_rollout_count = p.at("bc_rollout_count").get<int>();
        expected_episodes = p.at("episodes").get<std::size_t>();
        if (set.provenance.grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");
        have_header = true;
        continue;
      }
      Episode ep = episode_from_json(doc);
      validate_episode(ep, set.provenance.grid_size);
      set.episodes.push_back(std::move(ep));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!have_header) throw ParseError(line_no, "missing provenance header");
  if (set.episodes.size() != expected_episodes)
    throw ParseError(line_no, "expected " + std::to_string(expected_episodes) +
                                  " episodes, found " + std::to_string(set.episodes.size()));
  return set;
}

void save_demos(const DemoSet& set, const std::filesystem::path& path) {
  const std::string text = serialize_demos(set);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

DemoSet load_demos(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_demos(buf.str());
}

}  // namespace silfd
