#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hgac/harness/metrics.hpp"
#include "hgac/learner.hpp"

namespace hgac {

/// Batch-averaged incidence matrices, one (N x M) tensor per head.
/// Cell (j, i) is the membership of agent j in hyperedge i averaged over the
/// batch of joint observation/action samples.
inline std::vector<Tensor> average_incidence(const CriticNet& critic, ParamStore& store,
                                             const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw ConfigError("average_incidence: empty batch");
  Tape t;
  CriticNet::Batch packed =
      learner_detail::pack_transitions(critic, batch, /*use_next=*/false, nullptr);
  CriticNet::Graph g = critic.build(t, store, packed);
  std::vector<Tensor> out;
  for (int h : g.incidence) {
    const Tensor& v = t.val(h);
    Tensor mean(1, v.rows, v.cols);
    for (int b = 0; b < v.batch; ++b)
      for (size_t i = 0; i < v.slice_size(); ++i) mean.v[i] += v.data(b)[i];
    for (double& x : mean.v) x /= v.batch;
    out.push_back(std::move(mean));
  }
  return out;
}

/// Writes one CSV per head (<tag>_head<k>.csv under dir). Values are printed
/// with 12 significant digits.
inline std::vector<std::string> dump_incidence(const CriticNet& critic, ParamStore& store,
                                               const std::vector<const Transition*>& batch,
                                               const std::string& dir,
                                               const std::string& tag) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::vector<Tensor> heads = average_incidence(critic, store, batch);
  std::vector<std::string> paths;
  for (size_t k = 0; k < heads.size(); ++k) {
    std::string path = (fs::path(dir) / (tag + "_head" + std::to_string(k) + ".csv")).string();
    std::ofstream f(path);
    if (!f) throw ConfigError("dump_incidence: cannot open '" + path + "' for writing");
    const Tensor& h = heads[k];
    for (int i = 0; i < h.rows; ++i) {
      for (int j = 0; j < h.cols; ++j) {
        if (j) f << ',';
        f << fmt_double(h.at(0, i, j), 12);
      }
      f << "\n";
    }
    if (!f) throw ConfigError("dump_incidence: write failed for '" + path + "'");
    paths.push_back(path);
  }
  return paths;
}

/// Rolls out `episodes` fresh episodes with the given actor parameters and
/// returns the collected transitions (used to feed incidence dumps).
inline std::vector<Transition> collect_transitions(const ScenarioConfig& scenario,
                                                   const std::vector<ActorNet>& actors,
                                                   ParamStore& store, uint64_t seed,
                                                   int episodes, int horizon) {
  auto env = make_env(scenario);
  const EnvSpec& spec = env->spec();
  Rng action_rng(derive_seed(seed, 0xD1CE));
  std::vector<Transition> out;
  out.reserve(static_cast<size_t>(episodes) * horizon);
  for (int e = 0; e < episodes; ++e) {
    auto obs = env->reset(derive_seed(seed, 0xE9 + static_cast<uint64_t>(e)));
    for (int t = 0; t < horizon; ++t) {
      std::vector<int> actions(spec.n_agents());
      for (int i = 0; i < spec.n_agents(); ++i) {
        PolicyDistribution d = actors[spec.role_of(i)].forward(obs[i], store);
        actions[i] = action_rng.categorical(d.probs);
      }
      StepResult res = env->step(actions);
      Transition tr;
      tr.obs = obs;
      tr.actions = actions;
      tr.rewards = res.rewards;
      tr.next_obs = res.obs;
      tr.done = res.done;
      out.push_back(std::move(tr));
      obs = res.obs;
    }
  }
  return out;
}

}  // namespace hgac
