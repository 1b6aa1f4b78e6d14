#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hgac/checkpoint.hpp"
#include "hgac/harness/incidence_dump.hpp"
#include "hgac/harness/metrics.hpp"
#include "hgac/harness/svg.hpp"

namespace hgac {

/// Everything one experiment needs: scenario, algorithm mode, training
/// schedule, output directory, heatmap cadence.
struct RunConfig {
  ScenarioConfig scenario;
  IncidenceMode mode = IncidenceMode::MlpGenerated;
  TrainConfig train;
  CriticConfig critic;
  std::string out_dir;
  long heatmap_period = 0;  // episodes between incidence dumps, 0 = off

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario.to_json();
    j["algo"] = incidence_mode_name(mode);
    j["out_dir"] = out_dir;
    j["heatmap_period"] = heatmap_period;
    j["train"] = {{"gamma", train.gamma},
                  {"omega", train.omega},
                  {"tau", train.tau},
                  {"critic_lr", train.critic_lr},
                  {"actor_lr", train.actor_lr},
                  {"batch_size", train.batch_size},
                  {"buffer_capacity", train.buffer_capacity},
                  {"updates_per_cycle", train.updates_per_cycle},
                  {"steps_per_cycle", train.steps_per_cycle},
                  {"horizon", train.horizon},
                  {"total_episodes", train.total_episodes},
                  {"workers", train.workers},
                  {"seed", train.seed},
                  {"deterministic", train.deterministic}};
    j["critic_net"] = {{"embed_dim", critic.embed_dim},   {"conv_hidden", critic.conv_hidden},
                       {"head_out", critic.head_out},     {"heads", critic.heads},
                       {"gen_hidden", critic.gen_hidden}, {"attn_dim", critic.attn_dim},
                       {"q_hidden", critic.q_hidden},     {"hyperedges", critic.hyperedges}};
    return j;
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.scenario = ScenarioConfig::from_json(j.at("scenario"));
    c.mode = parse_incidence_mode(j.at("algo").get<std::string>());
    c.out_dir = j.value("out_dir", "");
    c.heatmap_period = j.value("heatmap_period", 0L);
    const auto& t = j.at("train");
    c.train.gamma = t.at("gamma");
    c.train.omega = t.at("omega");
    c.train.tau = t.at("tau");
    c.train.critic_lr = t.at("critic_lr");
    c.train.actor_lr = t.at("actor_lr");
    c.train.batch_size = t.at("batch_size");
    c.train.buffer_capacity = t.at("buffer_capacity");
    c.train.updates_per_cycle = t.at("updates_per_cycle");
    c.train.steps_per_cycle = t.at("steps_per_cycle");
    c.train.horizon = t.at("horizon");
    c.train.total_episodes = t.at("total_episodes");
    c.train.workers = t.at("workers");
    c.train.seed = t.at("seed");
    c.train.deterministic = t.at("deterministic");
    const auto& n = j.at("critic_net");
    c.critic.embed_dim = n.at("embed_dim");
    c.critic.conv_hidden = n.at("conv_hidden");
    c.critic.head_out = n.at("head_out");
    c.critic.heads = n.at("heads");
    c.critic.gen_hidden = n.at("gen_hidden");
    c.critic.attn_dim = n.at("attn_dim");
    c.critic.q_hidden = n.at("q_hidden");
    c.critic.hyperedges = n.at("hyperedges");
    return c;
  }
};

struct RunResult {
  std::vector<EpisodeRow> rows;
  std::string metrics_path;
  std::string checkpoint_path;
  std::string manifest_path;
  double final_window_mean(int window) const {
    if (rows.empty()) return 0.0;
    size_t take = std::min<size_t>(window, rows.size());
    double s = 0.0;
    for (size_t i = rows.size() - take; i < rows.size(); ++i) s += rows[i].team_return;
    return s / take;
  }
};

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

/// Executes a training run: metrics.csv per episode, periodic incidence
/// dumps, a final checkpoint, curve.svg and a manifest that allows exact
/// reproduction.
inline RunResult run_experiment(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.out_dir.empty()) throw ConfigError("run: output directory not set");
  fs::create_directories(cfg.out_dir);
  fs::create_directories(fs::path(cfg.out_dir) / "incidence");

  Trainer trainer(cfg.scenario, cfg.train, cfg.mode, cfg.critic);
  RunResult result;
  result.metrics_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
  MetricsWriter csv(result.metrics_path, trainer.env_spec().n_agents());

  long last_dump = -1;
  TrainCallbacks cb;
  cb.on_episode = [&](const EpisodeRow& row) {
    csv.write(row);
    result.rows.push_back(row);
  };
  cb.on_cycle = [&](long episodes_done) {
    if (cfg.heatmap_period <= 0) return;
    long mark = (episodes_done / cfg.heatmap_period) * cfg.heatmap_period;
    if (mark <= last_dump || trainer.buffer().size() == 0) return;
    last_dump = mark;
    auto batch = trainer.recent_batch(std::min<size_t>(cfg.train.batch_size,
                                                       trainer.buffer().size()));
    char tag[32];
    std::snprintf(tag, sizeof(tag), "ep%06ld", mark);
    dump_incidence(trainer.critic(), trainer.online_params(), batch,
                   (fs::path(cfg.out_dir) / "incidence").string(), tag);
  };

  trainer.train(cb);
  csv.flush();

  result.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.bin").string();
  save_checkpoint(trainer.online_params(), result.checkpoint_path,
                  (fs::path(cfg.out_dir) / "checkpoint.json").string());

  std::vector<double> team;
  team.reserve(result.rows.size());
  for (const auto& r : result.rows) team.push_back(r.team_return);
  write_curve_svg((fs::path(cfg.out_dir) / "curve.svg").string(), team, 100,
                  cfg.scenario.name + " / " + incidence_mode_name(cfg.mode));

  nlohmann::json manifest;
  manifest["config"] = cfg.to_json();
  manifest["checkpoint_sha1"] = git_blob_sha1(read_file_bytes(result.checkpoint_path));
  manifest["metrics_sha1"] = git_blob_sha1(read_file_bytes(result.metrics_path));
  manifest["episodes"] = result.rows.size();
  result.manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();
  std::ofstream mf(result.manifest_path);
  mf << manifest.dump(2) << "\n";
  return result;
}

/// Re-runs the experiment recorded in `run_dir`'s manifest into a scratch
/// directory and checks that metrics.csv is byte-identical and the checkpoint
/// hash matches. Meaningful for deterministic (single-worker) runs.
inline bool replay_check(const std::string& run_dir, std::string* message = nullptr) {
  namespace fs = std::filesystem;
  nlohmann::json manifest;
  {
    std::ifstream f((fs::path(run_dir) / "manifest.json").string());
    if (!f) throw ConfigError("replay-check: no manifest.json in '" + run_dir + "'");
    f >> manifest;
  }
  RunConfig cfg = RunConfig::from_json(manifest.at("config"));
  fs::path scratch = fs::path(run_dir) / "replay_scratch";
  fs::remove_all(scratch);
  cfg.out_dir = scratch.string();
  RunResult replay = run_experiment(cfg);

  std::string original = read_file_bytes((fs::path(run_dir) / "metrics.csv").string());
  std::string redo = read_file_bytes(replay.metrics_path);
  bool metrics_ok = original == redo;
  bool ckpt_ok = manifest.at("checkpoint_sha1").get<std::string>() ==
                 git_blob_sha1(read_file_bytes(replay.checkpoint_path));
  fs::remove_all(scratch);
  if (message) {
    *message = std::string("metrics ") + (metrics_ok ? "identical" : "DIFFER") +
               ", checkpoint hash " + (ckpt_ok ? "matches" : "DIFFERS");
  }
  return metrics_ok && ckpt_ok;
}

}  // namespace hgac
