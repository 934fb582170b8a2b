#include "silfd/runner.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "silfd/errors.hpp"

extern char** environ;

namespace silfd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

fs::path default_output_root() {
  if (const char* env = std::getenv("SILFD_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "runs";
}

json checkpoint_json(const AgentNets& nets, int grid_size) {
  json doc;
  doc["grid_size"] = grid_size;
  doc["actor"] = to_json(nets.actor);
  doc["critic"] = to_json(nets.critic);
  return doc;
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  Checkpoint ckpt;
  try {
    if (doc.contains("actor")) {
      ckpt.actor = net_params_from_json(doc.at("actor"));
      if (doc.contains("critic")) ckpt.critic = net_params_from_json(doc.at("critic"));
      if (doc.contains("grid_size")) ckpt.grid_size = doc.at("grid_size").get<int>();
    } else {
      ckpt.actor = net_params_from_json(doc);
    }
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("corrupt checkpoint: ") + e.what());
  }
  if (ckpt.actor.in_dim() != 2 || ckpt.actor.out_dim() != kNumActions)
    throw ParseError(0, "checkpoint actor must map 2 inputs to 2 action logits");
  if (ckpt.grid_size < 2) throw ParseError(0, "checkpoint grid_size must be >= 2");
  return ckpt;
}

TrainResult run_training(const TrainConfig& cfg, const json& overrides, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  json echo = to_json(cfg);
  echo["overrides"] = overrides.is_null() ? json::object() : overrides;
  write_text_atomic(out_dir / "config.json", echo.dump(2) + "\n");

  std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream timing(out_dir / "timing.jsonl", std::ios::binary | std::ios::trunc);
  if (!metrics || !timing) throw std::runtime_error("cannot write metrics in " + out_dir.string());

  auto sink = [&](const MetricsRecord& record) {
    metrics << record.to_json().dump() << '\n';
    metrics.flush();
    timing << json{{"transitions", record.transitions}, {"wall_seconds", record.wall_seconds}}.dump()
           << '\n';
    timing.flush();
  };
  TrainResult result = train(cfg, sink);
  if (!result.sil_demo_fractions.empty()) {
    std::ostringstream schedule;
    for (std::size_t i = 0; i < result.sil_demo_fractions.size(); ++i)
      schedule << json{{"sil_update", i + 1}, {"demo_fraction", result.sil_demo_fractions[i]}}.dump()
               << '\n';
    write_text_atomic(out_dir / "demo_fractions.jsonl", schedule.str());
  }
  write_text_atomic(out_dir / "checkpoint.json",
                    checkpoint_json(result.nets, cfg.grid_size).dump() + "\n");
  return result;
}

std::vector<MetricsRecord> read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  std::vector<MetricsRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(MetricsRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return records;
}

std::vector<double> read_demo_fractions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  std::vector<double> fractions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fractions.push_back(json::parse(line).at("demo_fraction").get<double>());
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return fractions;
}

std::vector<int> parse_settings(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("invalid setting '" + item + "'");
    }
    if (used != item.size() || value < 0) throw ConfigError("invalid setting '" + item + "'");
    if (std::find(out.begin(), out.end(), value) == out.end()) out.push_back(value);
  }
  if (out.empty()) throw ConfigError("--settings must name at least one setting");
  return out;
}

fs::path sweep_run_dir(const fs::path& root, int setting, int seed) {
  return root / ("adv" + std::to_string(setting)) / ("seed" + std::to_string(seed));
}

namespace {

struct Job {
  int setting;
  int seed;
  fs::path dir;
};

pid_t spawn_job(const SweepOptions& options, const Job& job) {
  fs::create_directories(job.dir);
  std::vector<std::string> args = {options.executable.string(),
                                   "train",
                                   "--variant",
                                   std::string(to_string(options.variant)),
                                   "--seed",
                                   std::to_string(job.seed),
                                   "--out",
                                   job.dir.string()};
  if (needs_demos(options.variant)) {
    args.push_back("--n-adversarial");
    args.push_back(std::to_string(job.setting));
  }
  if (options.config_path) {
    args.push_back("--config");
    args.push_back(options.config_path->string());
  }
  for (const auto& [key, value] : options.overrides) {
    args.push_back("--set");
    args.push_back(key + "=" + value);
  }
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  const std::string log = (job.dir / "run.log").string();
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) return -1;
  return pid;
}

void write_status(const fs::path& dir, int exit_code) {
  write_text_atomic(dir / "status.json", json{{"exit_code", exit_code}}.dump() + "\n");
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepOptions& options) {
  if (options.settings.empty()) throw ConfigError("sweep needs at least one setting");
  if (options.seeds <= 0) throw ConfigError("--seeds must be positive");
  std::vector<Job> queue;
  for (int setting : options.settings)
    for (int seed = 0; seed < options.seeds; ++seed)
      queue.push_back({setting, seed, sweep_run_dir(options.out_dir, setting, seed)});

  int jobs = options.jobs > 0 ? options.jobs
                              : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::map<pid_t, Job> running;
  std::size_t next = 0;
  while (next < queue.size() || !running.empty()) {
    while (next < queue.size() && static_cast<int>(running.size()) < jobs) {
      const Job& job = queue[next++];
      const pid_t pid = spawn_job(options, job);
      if (pid < 0) {
        std::cerr << "failed to launch run " << job.dir << "\n";
        write_status(job.dir, 127);
        continue;
      }
      std::cerr << "started " << job.dir.string() << "\n";
      running.emplace(pid, job);
    }
    if (running.empty()) continue;
    int status = 0;
    const pid_t done = waitpid(-1, &status, 0);
    if (done < 0) break;
    auto it = running.find(done);
    if (it == running.end()) continue;
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    write_status(it->second.dir, code);
    std::cerr << (code == 0 ? "finished " : "FAILED ") << it->second.dir.string()
              << " (exit " << code << ")\n";
    running.erase(it);
  }

  auto rows = summarize_sweep(options.out_dir, options.settings, options.seeds);
  write_summary_csv(rows, options.out_dir / "summary.csv");
  return rows;
}

std::vector<SweepRow> summarize_sweep(const fs::path& root, const std::vector<int>& settings,
                                      int seeds) {
  std::vector<SweepRow> rows;
  for (int setting : settings) {
    SweepRow row;
    row.adversarial_count = setting;
    std::vector<double> finals;
    for (int seed = 0; seed < seeds; ++seed) {
      ++row.runs;
      const fs::path dir = sweep_run_dir(root, setting, seed);
      bool ok = false;
      try {
        std::ifstream status_in(dir / "status.json");
        const bool exited_ok =
            status_in && json::parse(status_in).at("exit_code").get<int>() == 0;
        if (exited_ok) {
          const auto records = read_metrics(dir / "metrics.jsonl");
          if (!records.empty()) {
            finals.push_back(records.back().eval_mean_return);
            ok = true;
          }
        }
      } catch (const std::exception&) {
        ok = false;
      }
      if (ok) {
        ++row.completed;
        if (std::abs(finals.back() - kOptimalReturn) <= 1.0) ++row.solved;
      } else {
        ++row.failed;
      }
    }
    if (!finals.empty()) {
      double sum = 0.0;
      for (double f : finals) sum += f;
      row.mean = sum / static_cast<double>(finals.size());
      row.min = *std::min_element(finals.begin(), finals.end());
      row.max = *std::max_element(finals.begin(), finals.end());
    } else {
      row.mean = row.min = row.max = std::nan("");
    }
    rows.push_back(row);
  }
  return rows;
}

void write_summary_csv(const std::vector<SweepRow>& rows, const fs::path& path) {
  std::ostringstream out;
  out << "adversarial_count,runs,completed,failed,solved,mean,min,max\n";
  for (const auto& r : rows) {
    out << r.adversarial_count << ',' << r.runs << ',' << r.completed << ',' << r.failed << ','
        << r.solved << ',' << format_number(r.mean) << ',' << format_number(r.min) << ','
        << format_number(r.max) << '\n';
  }
  write_text_atomic(path, out.str());
}

}  // namespace silfd
