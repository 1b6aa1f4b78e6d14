#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "hgac/agents.hpp"
#include "hgac/envs/scenario.hpp"
#include "hgac/optimizer.hpp"

namespace hgac {

/// One replay record.
struct Transition {
  std::vector<std::vector<double>> obs;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::vector<double>> next_obs;
  bool done = false;
};

/// Fixed-capacity ring. After capacity + k inserts it holds exactly the last
/// `capacity` transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw ConfigError("ReplayBuffer: capacity must be positive");
    ring_.reserve(capacity);
  }

  void push(Transition t) {
    if (ring_.size() < cap_) {
      ring_.push_back(std::move(t));
    } else {
      ring_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % cap_;
  }

  size_t size() const { return ring_.size(); }
  size_t capacity() const { return cap_; }

  /// Uniform sample with replacement. Pointers stay valid until the next push.
  std::vector<const Transition*> sample(size_t n, Rng& rng) const {
    if (ring_.size() < n)
      throw ContractError("ReplayBuffer: cannot sample " + std::to_string(n) +
                          " from " + std::to_string(ring_.size()));
    std::vector<const Transition*> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i)
      out.push_back(&ring_[static_cast<size_t>(rng.uniform_int(static_cast<int>(ring_.size())))]);
    return out;
  }

  /// The most recent min(n, size) transitions, oldest first.
  std::vector<const Transition*> latest(size_t n) const {
    size_t take = std::min(n, ring_.size());
    std::vector<const Transition*> out;
    out.reserve(take);
    for (size_t i = 0; i < take; ++i)
      out.push_back(&ring_[(next_ + cap_ - take + i) % cap_]);
    return out;
  }

 private:
  std::vector<Transition> ring_;
  size_t cap_;
  size_t next_ = 0;
};

struct TrainConfig {
  double gamma = 0.99;
  double omega = 0.01;  // entropy temperature (fixed)
  double tau = 0.005;
  double critic_lr = 1e-3;
  double actor_lr = 1e-3;
  int batch_size = 256;
  size_t buffer_capacity = 100000;
  int updates_per_cycle = 4;
  int steps_per_cycle = 100;  // environment steps between update phases
  int horizon = 25;           // episode length T (time limit, not terminal)
  long total_episodes = 0;
  int workers = 2;
  uint64_t seed = 1;
  bool deterministic = false;  // forces one worker and zeroed wall-clock

  void validate() const {
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("TrainConfig: gamma must be in [0,1)");
    if (omega < 0.0) throw ConfigError("TrainConfig: omega must be nonnegative");
    if (tau <= 0.0 || tau > 1.0) throw ConfigError("TrainConfig: tau must be in (0,1]");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch size must be positive");
    if (horizon < 1) throw ConfigError("TrainConfig: horizon must be positive");
    if (workers < 1) throw ConfigError("TrainConfig: need at least one worker");
    if (steps_per_cycle < 1) throw ConfigError("TrainConfig: steps_per_cycle must be positive");
    if (total_episodes < 0) throw ConfigError("TrainConfig: total_episodes must be nonnegative");
  }
};

namespace learner_detail {

inline CriticNet::Batch pack_transitions(const CriticNet& critic,
                                         const std::vector<const Transition*>& batch,
                                         bool use_next,
                                         const std::vector<std::vector<int>>* actions_override) {
  std::vector<CriticInput> inputs(batch.size());
  std::vector<const CriticInput*> ptrs(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    inputs[i].obs = use_next ? batch[i]->next_obs : batch[i]->obs;
    inputs[i].actions = actions_override ? (*actions_override)[i] : batch[i]->actions;
    ptrs[i] = &inputs[i];
  }
  return critic.pack(ptrs);
}

inline Tensor pack_role_obs(const std::vector<const Transition*>& batch,
                            const RoleInfo& role, int agent0, bool use_next) {
  Tensor out(static_cast<int>(batch.size()), role.count, role.obs_dim);
  for (size_t e = 0; e < batch.size(); ++e) {
    const auto& obs = use_next ? batch[e]->next_obs : batch[e]->obs;
    for (int a = 0; a < role.count; ++a)
      std::copy(obs[agent0 + a].begin(), obs[agent0 + a].end(),
                out.data(static_cast<int>(e)) + static_cast<size_t>(a) * role.obs_dim);
  }
  return out;
}

}  // namespace learner_detail

/// Per-agent bootstrap targets from the target networks:
///   target_i = r_i + gamma * (1 - done) * (Qbar_i(o', a') - omega * log pibar_i(a'_i|o'_i))
/// with one joint a' sampled from the target policies. Runs entirely on
/// throwaway tapes, so no gradient can reach any online parameter.
inline Tensor compute_targets(const std::vector<const Transition*>& batch,
                              const CriticNet& critic, const std::vector<ActorNet>& actors,
                              ParamStore& target_store, const TrainConfig& cfg, Rng& rng) {
  int b = static_cast<int>(batch.size());
  int n = critic.n_agents();
  std::vector<std::vector<int>> next_actions(b, std::vector<int>(n, 0));
  Tensor sampled_logp(1, b, n);

  int agent0 = 0;
  for (size_t r = 0; r < critic.roles().size(); ++r) {
    const RoleInfo& role = critic.roles()[r];
    Tape t;
    int obs = t.leaf(learner_detail::pack_role_obs(batch, role, agent0, /*use_next=*/true));
    const Tensor& lp = t.val(actors[r].log_probs(t, target_store, obs));
    for (int e = 0; e < b; ++e)
      for (int a = 0; a < role.count; ++a) {
        std::vector<double> probs(role.n_actions);
        for (int k = 0; k < role.n_actions; ++k) probs[k] = std::exp(lp.at(e, a, k));
        int act = rng.categorical(probs);
        next_actions[e][agent0 + a] = act;
        sampled_logp.at(0, e, agent0 + a) = lp.at(e, a, act);
      }
    agent0 += role.count;
  }

  Tape t;
  CriticNet::Batch packed =
      learner_detail::pack_transitions(critic, batch, /*use_next=*/true, &next_actions);
  CriticNet::Graph g = critic.build(t, target_store, packed);

  Tensor targets(b, n, 1);
  for (int e = 0; e < b; ++e) {
    double cut = batch[e]->done ? 0.0 : 1.0;
    for (int i = 0; i < n; ++i) {
      double soft_q = t.val(g.q).at(e, i, 0) - cfg.omega * sampled_logp.at(0, e, i);
      double target = batch[e]->rewards[i] + cfg.gamma * cut * soft_q;
      if (!std::isfinite(target))
        throw NumericError("compute_targets: non-finite target for batch element " +
                           std::to_string(e) + ", agent " + std::to_string(i));
      targets.at(e, i, 0) = target;
    }
  }
  return targets;
}

/// L = sum_i mean_batch (Q_i(o,a) - target_i)^2. Populates gradients for all
/// critic parameters (targets are constants).
inline double critic_loss(const std::vector<const Transition*>& batch,
                          const CriticNet& critic, ParamStore& online_store,
                          const Tensor& targets) {
  Tape t;
  CriticNet::Batch packed =
      learner_detail::pack_transitions(critic, batch, /*use_next=*/false, nullptr);
  CriticNet::Graph g = critic.build(t, online_store, packed);
  int diff = t.sub(g.q, t.leaf(targets));
  int loss = t.scale(t.sum_all(t.mul(diff, diff)), 1.0 / static_cast<double>(batch.size()));
  double value = t.val(loss).v[0];
  t.backward(loss);
  t.write_param_grads();
  return value;
}

struct PolicyGradStats {
  double actor_loss = 0.0;
  double entropy = 0.0;
};

/// Exact counterfactual baseline: the policy expectation of Q over the
/// agent's own discrete actions, other agents' actions fixed.
inline double exact_baseline(const std::vector<double>& probs,
                             const std::vector<double>& q_per_action) {
  if (probs.size() != q_per_action.size())
    throw ConfigError("exact_baseline: probability/value length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) s += probs[i] * q_per_action[i];
  return s;
}

/// Counterfactual-baseline policy gradient. For each agent i and a fresh
/// sample a_i ~ pi_i(o_i):
///   grad contribution = grad log pi_i(a_i|o_i) * (-omega * log pi_i(a_i|o_i) + A)
///   A = Q_i(o, (a_i, a_-i)) - sum_a' pi_i(a'|o_i) Q_i(o, (a', a_-i))
/// with a_-i from the stored joint action and the baseline expectation taken
/// exactly over the discrete action set. Critic parameters stay frozen: every
/// Q evaluation happens on a tape that is never differentiated.
inline PolicyGradStats policy_gradient(const std::vector<const Transition*>& batch,
                                       const CriticNet& critic,
                                       const std::vector<ActorNet>& actors,
                                       ParamStore& online_store, const TrainConfig& cfg,
                                       Rng& rng) {
  int b = static_cast<int>(batch.size());
  PolicyGradStats stats;
  double entropy_sum = 0.0;
  int entropy_count = 0;

  int agent0 = 0;
  for (size_t r = 0; r < critic.roles().size(); ++r) {
    const RoleInfo& role = critic.roles()[r];
    Tape t;
    int obs = t.leaf(learner_detail::pack_role_obs(batch, role, agent0, /*use_next=*/false));
    int lp_node = actors[r].log_probs(t, online_store, obs);
    const Tensor& lp = t.val(lp_node);

    std::vector<std::vector<int>> sampled(b, std::vector<int>(role.count, 0));
    std::vector<std::vector<double>> coeff(b, std::vector<double>(role.count, 0.0));

    for (int a = 0; a < role.count; ++a) {
      int agent = agent0 + a;
      // Fresh samples from the current policy.
      for (int e = 0; e < b; ++e) {
        std::vector<double> probs(role.n_actions);
        double ent = 0.0;
        for (int k = 0; k < role.n_actions; ++k) {
          probs[k] = std::exp(lp.at(e, a, k));
          ent -= probs[k] * lp.at(e, a, k);
        }
        entropy_sum += ent;
        ++entropy_count;
        sampled[e][a] = rng.categorical(probs);
      }
      // All counterfactual Q values for this agent in one batched pass:
      // batch element e*|A| + k holds joint action (a_i = k, a_-i from e).
      std::vector<CriticInput> variants;
      variants.reserve(static_cast<size_t>(b) * role.n_actions);
      std::vector<const CriticInput*> ptrs;
      ptrs.reserve(variants.capacity());
      for (int e = 0; e < b; ++e)
        for (int k = 0; k < role.n_actions; ++k) {
          CriticInput in;
          in.obs = batch[e]->obs;
          in.actions = batch[e]->actions;
          in.actions[agent] = k;
          variants.push_back(std::move(in));
        }
      for (const auto& v : variants) ptrs.push_back(&v);
      Tape ct;
      CriticNet::Graph cg = critic.build(ct, online_store, critic.pack(ptrs), agent);
      for (int e = 0; e < b; ++e) {
        std::vector<double> probs(role.n_actions), q_cf(role.n_actions);
        for (int k = 0; k < role.n_actions; ++k) {
          probs[k] = std::exp(lp.at(e, a, k));
          q_cf[k] = ct.val(cg.q).at(e * role.n_actions + k, 0, 0);
        }
        double advantage = q_cf[sampled[e][a]] - exact_baseline(probs, q_cf);
        coeff[e][a] = -cfg.omega * lp.at(e, a, sampled[e][a]) + advantage;
      }
    }

    int surrogate = t.scale(t.select_mul_sum(lp_node, sampled, coeff),
                            -1.0 / static_cast<double>(b));
    stats.actor_loss += t.val(surrogate).v[0];
    t.backward(surrogate);
    t.write_param_grads();
    agent0 += role.count;
  }
  stats.entropy = entropy_count > 0 ? entropy_sum / entropy_count : 0.0;
  return stats;
}

/// One emitted metrics record per completed episode.
struct EpisodeRow {
  long episode = 0;
  std::vector<double> agent_returns;
  double team_return = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;
  double seconds = 0.0;
};

struct TrainCallbacks {
  std::function<void(const EpisodeRow&)> on_episode;
  /// Called at the single-threaded point after each update phase.
  std::function<void(long episodes_done)> on_cycle;
};

/// Alternates rollout collection (decentralized actors, local observations
/// only) with update phases (critic step, policy step, polyak step). Rollout
/// workers own independent environments and RNG streams and append through a
/// serialized point; updates run exclusively on the coordinating thread.
class Trainer {
 public:
  Trainer(const ScenarioConfig& scenario, const TrainConfig& cfg, IncidenceMode mode,
          CriticConfig critic_cfg = {})
      : scenario_(scenario),
        cfg_(cfg),
        mode_(mode),
        buffer_(cfg.buffer_capacity),
        learner_rng_(derive_seed(cfg.seed, 0xBEEF)) {
    cfg_.validate();
    if (cfg_.deterministic) cfg_.workers = 1;
    auto probe = make_env(scenario_);
    spec_ = probe->spec();
    if (mode_ == IncidenceMode::Static && scenario_.static_groups.empty())
      throw ConfigError("trainer: hgac-con mode requires static_groups in the scenario config");
    critic_ = std::make_unique<CriticNet>(spec_, mode_, critic_cfg, scenario_.static_groups);
    actors_ = make_actors(spec_);
    Rng init_rng(derive_seed(cfg_.seed, 0x1217));
    critic_->init_params(online_, init_rng);
    for (const auto& a : actors_) a.init_params(online_, init_rng);
    target_ = online_;
    adam_critic_ = Adam({cfg_.critic_lr});
    adam_actor_ = Adam({cfg_.actor_lr});
  }

  const EnvSpec& env_spec() const { return spec_; }
  const CriticNet& critic() const { return *critic_; }
  const std::vector<ActorNet>& actors() const { return actors_; }
  ParamStore& online_params() { return online_; }
  ParamStore& target_params() { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  const TrainConfig& config() const { return cfg_; }
  IncidenceMode mode() const { return mode_; }

  std::vector<const Transition*> recent_batch(int n) const { return buffer_.latest(n); }

  void train(const TrainCallbacks& cb = {}) {
    if (cfg_.total_episodes == 0) return;
    auto t0 = std::chrono::steady_clock::now();
    episodes_done_ = 0;

    struct Worker {
      std::unique_ptr<Env> env;
      Rng action_rng{0};
      std::vector<std::vector<double>> obs;
      std::vector<double> returns;
      int t = 0;
      long local_episode = 0;
      uint64_t seed_base = 0;
    };
    std::vector<Worker> workers(cfg_.workers);
    for (int w = 0; w < cfg_.workers; ++w) {
      workers[w].env = make_env(scenario_);
      workers[w].action_rng = Rng(derive_seed(cfg_.seed, 0xAC7100 + w));
      workers[w].seed_base = derive_seed(cfg_.seed, 0xE41 + w);
      workers[w].obs = workers[w].env->reset(derive_seed(workers[w].seed_base, 0));
      workers[w].returns.assign(spec_.n_agents(), 0.0);
    }

    auto run_worker = [&](Worker& wk, int quota) {
      for (int s = 0; s < quota; ++s) {
        if (episodes_done_.load() >= cfg_.total_episodes) return;
        std::vector<int> actions(spec_.n_agents());
        for (int i = 0; i < spec_.n_agents(); ++i) {
          int role = spec_.role_of(i);
          PolicyDistribution d = actors_[role].forward(wk.obs[i], online_);
          actions[i] = wk.action_rng.categorical(d.probs);
        }
        StepResult res = wk.env->step(actions);
        Transition tr;
        tr.obs = wk.obs;
        tr.actions = actions;
        tr.rewards = res.rewards;
        tr.next_obs = res.obs;
        tr.done = res.done;
        {
          std::lock_guard<std::mutex> lock(buffer_mutex_);
          buffer_.push(std::move(tr));
        }
        for (int i = 0; i < spec_.n_agents(); ++i) wk.returns[i] += res.rewards[i];
        wk.obs = res.obs;
        ++wk.t;
        if (wk.t >= cfg_.horizon) {
          EpisodeRow row;
          row.agent_returns = wk.returns;
          double team = 0.0;
          for (double x : wk.returns) team += x;
          row.team_return = team / spec_.n_agents();
          {
            std::lock_guard<std::mutex> lock(metrics_mutex_);
            row.episode = episodes_done_.fetch_add(1);
            row.critic_loss = last_critic_loss_;
            row.actor_loss = last_actor_loss_;
            row.entropy = last_entropy_;
            row.seconds = cfg_.deterministic
                              ? 0.0
                              : std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
            if (cb.on_episode) cb.on_episode(row);
          }
          ++wk.local_episode;
          wk.obs = wk.env->reset(derive_seed(wk.seed_base, static_cast<uint64_t>(wk.local_episode)));
          wk.returns.assign(spec_.n_agents(), 0.0);
          wk.t = 0;
        }
      }
    };

    while (episodes_done_.load() < cfg_.total_episodes) {
      if (cfg_.workers == 1) {
        run_worker(workers[0], cfg_.steps_per_cycle);
      } else {
        std::vector<std::thread> threads;
        int base = cfg_.steps_per_cycle / cfg_.workers;
        int extra = cfg_.steps_per_cycle % cfg_.workers;
        for (int w = 0; w < cfg_.workers; ++w)
          threads.emplace_back(run_worker, std::ref(workers[w]), base + (w < extra ? 1 : 0));
        for (auto& th : threads) th.join();
      }

      if (buffer_.size() >= static_cast<size_t>(cfg_.batch_size)) {
        for (int u = 0; u < cfg_.updates_per_cycle; ++u) {
          auto cbatch = buffer_.sample(static_cast<size_t>(cfg_.batch_size), learner_rng_);
          Tensor targets = compute_targets(cbatch, *critic_, actors_, target_, cfg_, learner_rng_);
          double closs = critic_loss(cbatch, *critic_, online_, targets);
          adam_critic_.step(online_, "critic/");
          auto abatch = buffer_.sample(static_cast<size_t>(cfg_.batch_size), learner_rng_);
          PolicyGradStats pg =
              policy_gradient(abatch, *critic_, actors_, online_, cfg_, learner_rng_);
          adam_actor_.step(online_, "actor/");
          polyak_update(target_, online_, cfg_.tau);
          {
            std::lock_guard<std::mutex> lock(metrics_mutex_);
            last_critic_loss_ = closs;
            last_actor_loss_ = pg.actor_loss;
            last_entropy_ = pg.entropy;
          }
          ++updates_done_;
        }
      }
      if (cb.on_cycle) cb.on_cycle(episodes_done_.load());
    }
  }

  long updates_done() const { return updates_done_; }

 private:
  ScenarioConfig scenario_;
  TrainConfig cfg_;
  IncidenceMode mode_;
  EnvSpec spec_;
  std::unique_ptr<CriticNet> critic_;
  std::vector<ActorNet> actors_;
  ParamStore online_, target_;
  Adam adam_critic_{AdamConfig{}}, adam_actor_{AdamConfig{}};
  ReplayBuffer buffer_;
  Rng learner_rng_;
  std::mutex buffer_mutex_, metrics_mutex_;
  std::atomic<long> episodes_done_{0};
  long updates_done_ = 0;
  double last_critic_loss_ = 0.0, last_actor_loss_ = 0.0, last_entropy_ = 0.0;
};

}  // namespace hgac
