#include "property_checks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "silfd/advantage.hpp"
#include "silfd/agent.hpp"
#include "silfd/demos.hpp"
#include "silfd/mlp.hpp"
#include "silfd/replay_buffer.hpp"
#include "silfd/rng.hpp"
#include "silfd/rollout.hpp"
#include "silfd/sil.hpp"

namespace silfd::checks {

namespace fs = std::filesystem;

namespace {

double pair_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  const double diff = std::abs(analytic - numeric);
  return scale < 1e-8 ? diff : diff / scale;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo, double hi) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Visits every scalar parameter of a net (weights then bias, layer by layer).
template <typename Fn>
void for_each_parameter(NetParams& params, Fn&& fn) {
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto& layer = params.layers[k];
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) fn(k, true, i, j, layer.weight(i, j));
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) fn(k, false, i, 0, layer.bias(i));
  }
}

double grad_entry(const Gradients& g, std::size_t k, bool weight, Eigen::Index i, Eigen::Index j) {
  return weight ? g.layers[k].weight(i, j) : g.layers[k].bias(i);
}

// Worst central-difference mismatch of `grads` against the scalar loss `f`.
template <typename Loss>
double worst_fd_error(NetParams params, const Gradients& grads, Loss&& f, double h = 1e-5) {
  double worst = 0.0;
  for_each_parameter(params, [&](std::size_t k, bool weight, Eigen::Index i, Eigen::Index j,
                                 double& slot) {
    const double saved = slot;
    slot = saved + h;
    const double up = f(params);
    slot = saved - h;
    const double down = f(params);
    slot = saved;
    worst = std::max(worst, pair_error(grad_entry(grads, k, weight, i, j), (up - down) / (2 * h)));
  });
  return worst;
}

bool same_transition(const Transition& a, const Transition& b) {
  return a.observation == b.observation && a.action == b.action && a.return_r == b.return_r &&
         a.is_demo == b.is_demo;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

double chi_square_critical_001(int dof) {
  static const double table[] = {6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090,
                                 21.666, 23.209, 24.725, 26.217, 27.688, 29.141, 30.578};
  if (dof < 1 || dof > 15) throw std::out_of_range("chi-square table covers 1..15 dof");
  return table[dof - 1];
}

CheckResult gradient_check(const std::vector<int>& sizes, int batch, std::uint64_t seed,
                           double tolerance) {
  Rng rng(seed);
  NetParams params = mlp_init(sizes, seed);
  // Nonzero biases so every code path carries signal.
  for (auto& layer : params.layers)
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-0.5, 0.5);
  const Matrix inputs = random_matrix(batch, sizes.front(), rng, -1.0, 1.0);
  const Matrix output_grad = random_matrix(batch, sizes.back(), rng, -1.0, 1.0);

  const ForwardResult fwd = forward(params, inputs);
  const Gradients grads = backward(params, fwd.tape, output_grad);
  const double worst = worst_fd_error(params, grads, [&](const NetParams& p) {
    return predict(p, inputs).cwiseProduct(output_grad).sum();
  });
  CheckResult r;
  r.worst = worst;
  r.pass = worst < tolerance;
  r.detail = "max relative error " + std::to_string(worst);
  return r;
}

CheckResult returns_oracle(int length, std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  std::vector<double> rewards(length);
  for (double& x : rewards) x = rng.uniform(-5.0, 5.0);
  const double gamma = rng.uniform(0.5, 1.0);
  const auto got = compute_returns(rewards, gamma);
  double worst = 0.0;
  for (int t = 0; t < length; ++t) {
    double expected = 0.0;
    for (int k = t; k < length; ++k) expected += std::pow(gamma, k - t) * rewards[k];
    worst = std::max(worst, std::abs(expected - got[t]));
  }
  return {worst < tolerance, worst, "max abs error " + std::to_string(worst)};
}

CheckResult gae_oracle(int length, std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  std::vector<double> rewards(length);
  std::vector<double> values(length + 1);
  std::vector<bool> dones(length);
  for (double& x : rewards) x = rng.uniform(-5.0, 5.0);
  for (double& x : values) x = rng.uniform(-5.0, 5.0);
  for (int t = 0; t < length; ++t) dones[t] = rng.uniform() < 0.25;
  const double gamma = rng.uniform(0.5, 1.0);
  const double lambda = rng.uniform(0.0, 1.0);
  const auto got = compute_gae(rewards, values, dones, gamma, lambda);

  std::vector<double> delta(length);
  for (int t = 0; t < length; ++t)
    delta[t] = rewards[t] + gamma * (dones[t] ? 0.0 : values[t + 1]) - values[t];
  double worst = 0.0;
  for (int t = 0; t < length; ++t) {
    double expected = 0.0;
    for (int k = 0; t + k < length; ++k) {
      bool cut = false;
      for (int j = 0; j < k; ++j) cut = cut || dones[t + j];
      if (cut) break;
      expected += std::pow(gamma * lambda, k) * delta[t + k];
    }
    worst = std::max(worst, std::abs(expected - got[t]));
  }
  return {worst < tolerance, worst, "max abs error " + std::to_string(worst)};
}

CheckResult sampling_chi_square(int elements, int draws, std::uint64_t seed) {
  if (elements < 2 || elements > 16) throw std::invalid_argument("2..16 elements");
  // A single optimal episode on an (elements+1) grid gives `elements` pinned steps.
  ReplayParams params;
  params.capacity = 1;
  PrioritizedBuffer buffer(params);
  buffer.pin_demos(mix(1, 0, elements + 1), mlp_init({2, 1}, 0), 0.99);

  Rng rng(seed);
  std::vector<std::size_t> indices(elements);
  std::vector<double> advantages(elements);
  for (int i = 0; i < elements; ++i) {
    indices[i] = static_cast<std::size_t>(i);
    advantages[i] = rng.uniform(0.5, 5.0);
  }
  buffer.update_priorities(indices, advantages);

  std::vector<double> expected(elements);
  double mass = 0.0;
  for (int i = 0; i < elements; ++i) mass += std::pow(advantages[i] + params.epsilon, params.alpha);
  for (int i = 0; i < elements; ++i)
    expected[i] = std::pow(advantages[i] + params.epsilon, params.alpha) / mass;

  std::vector<double> counts(elements, 0.0);
  int drawn = 0;
  while (drawn < draws) {
    const int take = std::min(256, draws - drawn);
    const SampledBatch batch = buffer.sample(static_cast<std::size_t>(take), rng);
    for (std::size_t idx : batch.indices) counts[idx] += 1.0;
    drawn += take;
  }
  double stat = 0.0;
  for (int i = 0; i < elements; ++i) {
    const double e = expected[i] * draws;
    stat += (counts[i] - e) * (counts[i] - e) / e;
  }
  const double critical = chi_square_critical_001(elements - 1);
  CheckResult r;
  r.worst = stat;
  r.pass = stat < critical;
  r.detail = "chi2 " + std::to_string(stat) + " vs critical " + std::to_string(critical) +
             " (dof " + std::to_string(elements - 1) + ")";
  return r;
}

CheckResult sil_null_gradient(std::uint64_t seed) {
  Rng rng(seed);
  const AgentNets nets = make_agent_nets(derive_seed(seed, "actor"), derive_seed(seed, "critic"));
  const int n = 12;
  std::vector<Transition> batch(n);
  std::vector<double> weights(n);
  std::vector<Observation> obs(n);
  for (int i = 0; i < n; ++i) obs[i] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  const auto values = critic_values(nets.critic, obs);
  for (int i = 0; i < n; ++i) {
    batch[i].observation = obs[i];
    batch[i].action = rng.uniform() < 0.5 ? kActionLeft : kActionRight;
    batch[i].return_r = values[i] - rng.uniform(0.0, 5.0);
    weights[i] = rng.uniform(0.1, 1.0);
  }
  SILConfig cfg;
  const SILBatchResult result = sil_batch_loss(nets, batch, weights, cfg);

  double critic_max = 0.0;
  for (const auto& layer : result.critic_grads.layers) {
    critic_max = std::max(critic_max, layer.weight.cwiseAbs().maxCoeff());
    critic_max = std::max(critic_max, layer.bias.cwiseAbs().maxCoeff());
  }
  const bool advantages_zero = std::all_of(result.clipped_advantages.begin(),
                                           result.clipped_advantages.end(),
                                           [](double a) { return a == 0.0; });

  // Only the weighted-entropy bonus remains: loss = -w_sil * c_H * mean(w * H).
  const Matrix inputs = observation_matrix(obs);
  const double actor_err = worst_fd_error(nets.actor, result.actor_grads, [&](const NetParams& p) {
    const CategoricalHead head = categorical_head(predict(p, inputs));
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += weights[i] * head.entropy(i);
    return -cfg.loss_weight * cfg.entropy_coef * total / n;
  });

  CheckResult r;
  r.worst = std::max(actor_err, critic_max);
  r.pass = advantages_zero && critic_max == 0.0 && result.value_loss == 0.0 && actor_err < 1e-4;
  r.detail = "critic |grad| max " + std::to_string(critic_max) + ", actor vs entropy-only " +
             std::to_string(actor_err);
  return r;
}

CheckResult buffer_pinning_capacity(std::uint64_t seed) {
  const int grid = 10;
  ReplayParams params;
  params.capacity = 100;
  PrioritizedBuffer buffer(params);
  const AgentNets nets = make_agent_nets(derive_seed(seed, "actor"), derive_seed(seed, "critic"));
  buffer.pin_demos(mix(1, 2, grid), nets.critic, 0.99);
  const std::size_t pinned = buffer.demo_count();
  std::vector<Transition> demos;
  std::vector<double> demo_priorities;
  for (std::size_t i = 0; i < pinned; ++i) {
    demos.push_back(buffer.at(i));
    demo_priorities.push_back(buffer.priority(i));
  }

  Rng rng(seed);
  std::vector<Transition> pushed;
  bool ok = pinned == 27;
  std::string detail;
  for (int e = 0; e < 40 && ok; ++e) {
    const auto episodes = run_policy_episodes(nets.actor, grid, 1, rng);
    const auto returns = compute_returns(episodes[0].rewards, 0.99);
    for (std::size_t t = 0; t < episodes[0].size(); ++t)
      pushed.push_back({episodes[0].observations[t], episodes[0].actions[t], returns[t], false});
    buffer.push_episode(episodes[0], nets.critic, 0.99);
    if (buffer.demo_count() != pinned) {
      ok = false;
      detail = "demo count changed";
    }
    if (buffer.agent_count() > params.capacity) {
      ok = false;
      detail = "agent region exceeded capacity";
    }
    for (std::size_t i = 0; i < pinned && ok; ++i) {
      if (!same_transition(buffer.at(i), demos[i]) || buffer.priority(i) != demo_priorities[i]) {
        ok = false;
        detail = "pinned transition " + std::to_string(i) + " changed";
      }
    }
  }
  if (ok) {
    const std::size_t kept = std::min(pushed.size(), params.capacity);
    ok = buffer.agent_count() == kept && buffer.size() == pinned + kept;
    for (std::size_t age = 0; age < kept && ok; ++age)
      ok = same_transition(buffer.agent_at(age), pushed[pushed.size() - kept + age]);
    if (!ok) detail = "agent region is not the newest transitions in FIFO order";
  }
  if (ok) detail = std::to_string(pushed.size()) + " pushes, " + std::to_string(pinned) +
                   " pinned intact, agent region " + std::to_string(buffer.agent_count());
  return {ok, 0.0, detail};
}

CheckResult sum_tree_consistency(std::uint64_t seed) {
  ReplayParams params;
  params.capacity = 500;
  PrioritizedBuffer buffer(params);
  const AgentNets nets = make_agent_nets(derive_seed(seed, "actor"), derive_seed(seed, "critic"));
  buffer.pin_demos(mix(1, 9, kDefaultGridSize), nets.critic, 0.99);
  Rng rng(seed);
  for (int e = 0; e < 20; ++e)
    buffer.push_episode(run_policy_episodes(nets.actor, kDefaultGridSize, 1, rng)[0], nets.critic,
                        0.99);
  double worst = 0.0;
  bool idempotent = true;
  for (int round = 0; round < 200; ++round) {
    std::vector<std::size_t> idx(32);
    std::vector<double> adv(32);
    for (int i = 0; i < 32; ++i) {
      idx[i] = static_cast<std::size_t>(rng.uniform() * static_cast<double>(buffer.size()));
      adv[i] = rng.uniform(-50.0, 150.0);
    }
    buffer.update_priorities(idx, adv);
    std::vector<double> before(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) before[i] = buffer.priority(i);
    buffer.update_priorities(idx, adv);
    for (std::size_t i = 0; i < buffer.size(); ++i) idempotent = idempotent && buffer.priority(i) == before[i];

    double direct = 0.0;
    for (std::size_t i = 0; i < buffer.size(); ++i)
      direct += std::pow(buffer.priority(i), params.alpha);
    worst = std::max(worst, std::abs(buffer.total_mass() - direct) / direct);
  }
  return {worst <= 1e-6 && idempotent, worst,
          "root vs leaf-sum relative error " + std::to_string(worst) +
              (idempotent ? "" : ", refresh not idempotent")};
}

CheckResult demo_round_trip(int adversarial_count) {
  const DemoSet set = mix(1, adversarial_count, kDefaultGridSize);
  const fs::path dir = fs::temp_directory_path() /
                       ("silfd-roundtrip-" + std::to_string(::getpid()) + "-" +
                        std::to_string(adversarial_count));
  fs::create_directories(dir);
  save_demos(set, dir / "a.jsonl");
  const DemoSet loaded = load_demos(dir / "a.jsonl");
  save_demos(loaded, dir / "b.jsonl");
  const std::string a = read_file(dir / "a.jsonl");
  const std::string b = read_file(dir / "b.jsonl");
  fs::remove_all(dir);
  const bool ok = loaded == set && a == b && a == serialize_demos(set);
  return {ok, 0.0, std::to_string(a.size()) + " bytes, " + (ok ? "identical" : "differs")};
}

}  // namespace silfd::checks
