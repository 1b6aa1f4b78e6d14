#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgac/envs/scenario.hpp"

namespace hgac {

struct BaselineStats {
  double mean = 0.0;
  double stddev = 0.0;
  long episodes = 0;
};

struct BaselineReport {
  std::string scenario;
  BaselineStats random;
  BaselineStats greedy;

  nlohmann::json to_json() const {
    return {{"scenario", scenario},
            {"random", {{"mean", random.mean}, {"stddev", random.stddev}, {"episodes", random.episodes}}},
            {"greedy", {{"mean", greedy.mean}, {"stddev", greedy.stddev}, {"episodes", greedy.episodes}}}};
  }
};

namespace baseline_detail {

inline BaselineStats stats_of(const std::vector<double>& xs) {
  BaselineStats s;
  s.episodes = static_cast<long>(xs.size());
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / xs.size());
  return s;
}

}  // namespace baseline_detail

/// Mean-over-agents episodic return of one episode under a uniform-random
/// joint policy.
inline double random_policy_episode(Env& env, uint64_t env_seed, uint64_t policy_seed,
                                    int horizon) {
  env.reset(env_seed);
  Rng rng(policy_seed);
  const EnvSpec& spec = env.spec();
  double total = 0.0;
  for (int t = 0; t < horizon; ++t) {
    std::vector<int> actions(spec.n_agents());
    for (int i = 0; i < spec.n_agents(); ++i) actions[i] = rng.uniform_int(spec.n_actions(i));
    StepResult r = env.step(actions);
    for (double x : r.rewards) total += x;
  }
  return total / spec.n_agents();
}

/// Same under the scripted per-scenario greedy policy.
inline double greedy_policy_episode(Env& env, uint64_t env_seed, int horizon) {
  env.reset(env_seed);
  double total = 0.0;
  for (int t = 0; t < horizon; ++t) {
    StepResult r = env.step(env.scripted_greedy_actions());
    for (double x : r.rewards) total += x;
  }
  return total / env.spec().n_agents();
}

/// Uniform-random and scripted-greedy episodic team returns over
/// `episodes_per_seed` episodes for each seed, pooled.
inline BaselineReport eval_baselines(const ScenarioConfig& scenario,
                                     const std::vector<uint64_t>& seeds,
                                     long episodes_per_seed, int horizon) {
  if (seeds.empty()) throw ConfigError("eval_baselines: need at least one seed");
  auto env = make_env(scenario);
  std::vector<double> random_returns, greedy_returns;
  random_returns.reserve(seeds.size() * episodes_per_seed);
  greedy_returns.reserve(seeds.size() * episodes_per_seed);
  for (uint64_t seed : seeds) {
    for (long e = 0; e < episodes_per_seed; ++e) {
      uint64_t env_seed = derive_seed(derive_seed(seed, 0xBA5E), static_cast<uint64_t>(e));
      random_returns.push_back(random_policy_episode(
          *env, env_seed, derive_seed(seed, 0xF00D + static_cast<uint64_t>(e)), horizon));
      greedy_returns.push_back(greedy_policy_episode(*env, env_seed, horizon));
    }
  }
  BaselineReport report;
  report.scenario = scenario.name.empty() ? scenario.scenario : scenario.name;
  report.random = baseline_detail::stats_of(random_returns);
  report.greedy = baseline_detail::stats_of(greedy_returns);
  return report;
}

}  // namespace hgac
