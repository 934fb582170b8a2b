#include "silfd/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "silfd/errors.hpp"

namespace silfd {

namespace {

using nlohmann::json;

// Visits every serialized field as (key, reference). Keeps to_json and the
// parser in sync.
template <typename Config, typename F>
void for_each_field(Config& c, F&& f) {
  f("variant", c.variant);
  f("grid_size", c.grid_size);
  f("seed", c.seed);
  f("demos_path", c.demos_path);
  f("optimal_count", c.optimal_count);
  f("adversarial_count", c.adversarial_count);
  f("total_transitions", c.total_transitions);
  f("rollout_steps", c.rollout_steps);
  f("eval_every", c.eval_every);
  f("eval_episodes", c.eval_episodes);
  f("gamma", c.gamma);
  f("entropy_coef", c.entropy_coef);
  f("lr", c.lr);
  f("ppo_clip", c.ppo_clip);
  f("gae_lambda", c.gae_lambda);
  f("ppo_minibatch", c.ppo_minibatch);
  f("ppo_epochs", c.ppo_epochs);
  f("sil_epochs", c.sil_epochs);
  f("sil_batch_size", c.sil_batch_size);
  f("sil_loss_weight", c.sil_loss_weight);
  f("sil_value_loss_weight", c.sil_value_loss_weight);
  f("replay_capacity", c.replay_capacity);
  f("priority_alpha", c.priority_alpha);
  f("priority_beta", c.priority_beta);
  f("priority_epsilon", c.priority_epsilon);
  f("bc_lr", c.bc_lr);
  f("bc_batch_size", c.bc_batch_size);
  f("bc_epochs", c.bc_epochs);
  f("bc_rollouts", c.bc_rollouts);
}

void assign(std::string_view key, Variant& field, const json& value) {
  if (!value.is_string()) throw ConfigError(std::string(key) + " must be a string");
  field = variant_from_string(value.get<std::string>());
}

void assign(std::string_view key, std::string& field, const json& value) {
  if (!value.is_string()) throw ConfigError(std::string(key) + " must be a string");
  field = value.get<std::string>();
}

void assign(std::string_view key, double& field, const json& value) {
  if (!value.is_number()) throw ConfigError(std::string(key) + " must be a number");
  field = value.get<double>();
}

template <typename Int>
void assign(std::string_view key, Int& field, const json& value) {
  // Accept integral floats such as 1e6.
  if (value.is_number_integer() || value.is_number_unsigned()) {
    field = value.get<Int>();
    return;
  }
  if (value.is_number_float()) {
    const double d = value.get<double>();
    if (d == static_cast<double>(static_cast<std::int64_t>(d))) {
      field = static_cast<Int>(d);
      return;
    }
  }
  throw ConfigError(std::string(key) + " must be an integer");
}

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kPPO: return "ppo";
    case Variant::kSIL: return "sil";
    case Variant::kSILfD: return "silfd";
    case Variant::kSILfBC: return "silfbc";
    case Variant::kBCSIL: return "bcsil";
    case Variant::kBCEval: return "bc";
  }
  return "ppo";
}

Variant variant_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ppo") return Variant::kPPO;
  if (lower == "sil") return Variant::kSIL;
  if (lower == "silfd") return Variant::kSILfD;
  if (lower == "silfbc") return Variant::kSILfBC;
  if (lower == "bcsil") return Variant::kBCSIL;
  if (lower == "bc" || lower == "bc-eval") return Variant::kBCEval;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

bool needs_demos(Variant variant) {
  return variant == Variant::kSILfD || variant == Variant::kSILfBC ||
         variant == Variant::kBCSIL || variant == Variant::kBCEval;
}

bool uses_sil(Variant variant) {
  return variant == Variant::kSIL || variant == Variant::kSILfD || variant == Variant::kSILfBC ||
         variant == Variant::kBCSIL;
}

PPOConfig TrainConfig::ppo() const {
  PPOConfig c;
  c.clip = ppo_clip;
  c.gae_lambda = gae_lambda;
  c.entropy_coef = entropy_coef;
  c.lr = lr;
  c.minibatch = static_cast<std::size_t>(std::max<std::int64_t>(ppo_minibatch, 0));
  c.epochs = static_cast<int>(ppo_epochs);
  c.gamma = gamma;
  return c;
}

SILConfig TrainConfig::sil() const {
  SILConfig c;
  c.batches_per_update = static_cast<int>(sil_epochs);
  c.batch_size = static_cast<std::size_t>(std::max<std::int64_t>(sil_batch_size, 0));
  c.loss_weight = sil_loss_weight;
  c.value_loss_weight = sil_value_loss_weight;
  c.entropy_coef = entropy_coef;
  c.lr = lr;
  c.gamma = gamma;
  return c;
}

BCConfig TrainConfig::bc() const {
  BCConfig c;
  c.lr = bc_lr;
  c.batch_size = static_cast<std::size_t>(std::max<std::int64_t>(bc_batch_size, 0));
  c.epochs = static_cast<int>(bc_epochs);
  return c;
}

ReplayParams TrainConfig::replay() const {
  ReplayParams p;
  p.capacity = static_cast<std::size_t>(std::max<std::int64_t>(replay_capacity, 0));
  p.alpha = priority_alpha;
  p.beta = priority_beta;
  p.epsilon = priority_epsilon;
  return p;
}

void TrainConfig::validate(bool demos_supplied) const {
  if (grid_size < 2) throw ConfigError("grid_size must be >= 2");
  if (optimal_count < 0 || adversarial_count < 0)
    throw ConfigError("demonstration counts must be >= 0");
  if (total_transitions < 0) throw ConfigError("total_transitions must be >= 0");
  if (rollout_steps <= 0) throw ConfigError("rollout_steps must be positive");
  if (eval_every <= 0) throw ConfigError("eval_every must be positive");
  if (eval_episodes <= 0) throw ConfigError("eval_episodes must be positive");
  if (replay_capacity <= 0) throw ConfigError("replay_capacity must be positive");
  if (!(priority_alpha >= 0.0)) throw ConfigError("priority_alpha must be >= 0");
  if (!(priority_beta >= 0.0)) throw ConfigError("priority_beta must be >= 0");
  if (!(priority_epsilon > 0.0)) throw ConfigError("priority_epsilon must be positive");
  if (bc_rollouts < 0) throw ConfigError("bc_rollouts must be >= 0");
  if (variant == Variant::kSILfBC && bc_rollouts == 0)
    throw ConfigError("silfbc needs bc_rollouts > 0");
  ppo().validate();
  sil().validate();
  bc().validate();
  if (needs_demos(variant) && !demos_supplied && !has_demo_source())
    throw ConfigError("variant " + std::string(to_string(variant)) +
                      " needs demonstrations (--demos PATH or --n-adversarial K)");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  json doc = json::object();
  auto put = [&doc](const char* key, const auto& field) {
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, Variant>) {
      doc[key] = std::string(to_string(field));
    } else {
      doc[key] = field;
    }
  };
  for_each_field(cfg, put);
  return doc;
}

TrainConfig apply_config_json(TrainConfig base, const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a flat JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "overrides") continue;
    bool matched = false;
    for_each_field(base, [&](const char* name, auto& field) {
      if (key != name) return;
      matched = true;
      try {
        assign(key, field, value);
      } catch (const json::exception& e) {
        throw ConfigError(key + ": " + e.what());
      }
    });
    if (!matched) throw ConfigError("unknown config key '" + key + "'");
  }
  return base;
}

TrainConfig apply_override(TrainConfig base, std::string_view key, std::string_view value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = std::string(value);
  }
  json doc = json::object();
  doc[std::string(key)] = parsed;
  return apply_config_json(std::move(base), doc);
}

TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return apply_config_json(std::move(base), doc);
}

}  // namespace silfd
