// Command-line experiment runner: train, evaluate baselines, export
// incidence heatmaps, verify reproducibility.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "hgac/harness/baselines.hpp"
#include "hgac/harness/runner.hpp"

namespace fs = std::filesystem;
using namespace hgac;

namespace {

// Output paths resolve against $HGAC_OUT_ROOT when relative.
std::string resolve_out(const std::string& path) {
  const char* root = std::getenv("HGAC_OUT_ROOT");
  if (!root || *root == '\0' || path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(root) / path).string();
}

ScenarioConfig load_scenario(const std::string& scenario, const std::string& config_path) {
  if (!config_path.empty()) return ScenarioConfig::from_file(config_path);
  return ScenarioConfig::resolve(scenario);
}

std::vector<uint64_t> seed_list(uint64_t first, int count) {
  std::vector<uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<uint64_t>(i));
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypergraph-convolution actor-critic experiment harness"};
  app.require_subcommand(1);

  // ---- run ------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "train one configuration and write artifacts");
  std::string scenario = "cn_small", scenario_config, algo = "hgac", out_dir;
  RunConfig rc;
  run_cmd->add_option("--scenario", scenario, "builtin scenario name or config path");
  run_cmd->add_option("--scenario-config", scenario_config, "explicit scenario JSON path");
  run_cmd->add_option("--algo", algo, "hgac | att-hgac | hgac-con");
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--seed", rc.train.seed, "master seed");
  run_cmd->add_option("--episodes", rc.train.total_episodes, "total episodes");
  run_cmd->add_option("--horizon", rc.train.horizon, "steps per episode");
  run_cmd->add_option("--workers", rc.train.workers, "rollout workers");
  run_cmd->add_option("--gamma", rc.train.gamma, "discount factor");
  run_cmd->add_option("--omega", rc.train.omega, "entropy temperature");
  run_cmd->add_option("--tau", rc.train.tau, "target update rate");
  run_cmd->add_option("--critic-lr", rc.train.critic_lr, "critic learning rate");
  run_cmd->add_option("--actor-lr", rc.train.actor_lr, "actor learning rate");
  run_cmd->add_option("--batch", rc.train.batch_size, "update batch size");
  run_cmd->add_option("--buffer", rc.train.buffer_capacity, "replay capacity");
  run_cmd->add_option("--updates-per-cycle", rc.train.updates_per_cycle,
                      "critic+actor updates per cycle");
  run_cmd->add_option("--steps-per-cycle", rc.train.steps_per_cycle,
                      "environment steps between update phases");
  run_cmd->add_option("--heads", rc.critic.heads, "hypergraph heads");
  run_cmd->add_option("--embed-dim", rc.critic.embed_dim, "agent feature width");
  run_cmd->add_option("--hyperedges", rc.critic.hyperedges,
                      "hyperedge count for hgac mode (0 = agent count)");
  run_cmd->add_option("--heatmap-period", rc.heatmap_period,
                      "episodes between incidence dumps (0 = off)");
  run_cmd->add_flag("--deterministic", rc.train.deterministic,
                    "single worker, zeroed wall-clock column");

  // ---- eval-baselines ---------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval-baselines",
                                      "report random and scripted-greedy returns");
  std::string eval_scenario = "cn_small", eval_config, eval_out;
  uint64_t eval_seed = 1;
  int eval_n_seeds = 1, eval_horizon = 25;
  long eval_episodes = 500;
  eval_cmd->add_option("--scenario", eval_scenario, "builtin scenario name or config path");
  eval_cmd->add_option("--scenario-config", eval_config, "explicit scenario JSON path");
  eval_cmd->add_option("--seed", eval_seed, "first seed");
  eval_cmd->add_option("--n-seeds", eval_n_seeds, "number of seeds");
  eval_cmd->add_option("--episodes", eval_episodes, "episodes per seed");
  eval_cmd->add_option("--horizon", eval_horizon, "steps per episode");
  eval_cmd->add_option("--out", eval_out, "optional baselines.json path");

  // ---- dump-incidence ----------------------------------------------------
  auto* dump_cmd = app.add_subcommand("dump-incidence",
                                      "export batch-averaged incidence heatmaps");
  std::string dump_scenario = "cn_small", dump_config, dump_algo = "hgac";
  std::string dump_checkpoint, dump_out = ".", dump_tag = "incidence";
  uint64_t dump_seed = 1;
  int dump_episodes = 4, dump_horizon = 25;
  dump_cmd->add_option("--scenario", dump_scenario, "builtin scenario name or config path");
  dump_cmd->add_option("--scenario-config", dump_config, "explicit scenario JSON path");
  dump_cmd->add_option("--algo", dump_algo, "hgac | att-hgac | hgac-con");
  dump_cmd->add_option("--checkpoint", dump_checkpoint, "checkpoint.bin to load")->required();
  dump_cmd->add_option("--out", dump_out, "output directory");
  dump_cmd->add_option("--tag", dump_tag, "file name prefix");
  dump_cmd->add_option("--seed", dump_seed, "rollout seed");
  dump_cmd->add_option("--episodes", dump_episodes, "episodes to average over");
  dump_cmd->add_option("--horizon", dump_horizon, "steps per episode");

  // ---- replay-check -----------------------------------------------------
  auto* replay_cmd = app.add_subcommand("replay-check",
                                        "re-run a finished run and compare artifacts");
  std::string replay_dir;
  replay_cmd->add_option("--run-dir", replay_dir, "directory with manifest.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      rc.scenario = load_scenario(scenario, scenario_config);
      rc.mode = parse_incidence_mode(algo);
      rc.out_dir = resolve_out(out_dir);
      RunResult res = run_experiment(rc);
      std::cout << "wrote " << res.metrics_path << " (" << res.rows.size()
                << " episodes), checkpoint " << res.checkpoint_path << "\n";
      return 0;
    }
    if (*eval_cmd) {
      ScenarioConfig sc = load_scenario(eval_scenario, eval_config);
      BaselineReport report =
          eval_baselines(sc, seed_list(eval_seed, eval_n_seeds), eval_episodes, eval_horizon);
      std::cout << report.to_json().dump(2) << "\n";
      if (!eval_out.empty()) {
        std::ofstream f(resolve_out(eval_out));
        f << report.to_json().dump(2) << "\n";
      }
      return 0;
    }
    if (*dump_cmd) {
      ScenarioConfig sc = load_scenario(dump_scenario, dump_config);
      auto env = make_env(sc);
      CriticNet critic(env->spec(), parse_incidence_mode(dump_algo), {}, sc.static_groups);
      ParamStore store = load_checkpoint(dump_checkpoint);
      auto actors = make_actors(env->spec());
      std::vector<Transition> transitions =
          collect_transitions(sc, actors, store, dump_seed, dump_episodes, dump_horizon);
      std::vector<const Transition*> batch;
      for (const auto& t : transitions) batch.push_back(&t);
      auto paths = dump_incidence(critic, store, batch, resolve_out(dump_out), dump_tag);
      for (const auto& p : paths) std::cout << p << "\n";
      return 0;
    }
    if (*replay_cmd) {
      std::string message;
      bool ok = replay_check(resolve_out(replay_dir), &message);
      std::cout << (ok ? "PASS" : "FAIL") << ": " << message << "\n";
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
