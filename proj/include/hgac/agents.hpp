#pragma once

#include <string>
#include <vector>

#include "hgac/envs/env.hpp"
#include "hgac/hypergraph.hpp"
#include "hgac/mlp.hpp"

namespace hgac {

/// Per-agent categorical policy over a discrete action set.
struct PolicyDistribution {
  std::vector<double> probs;
  std::vector<double> log_probs;
};

/// Joint observations plus one action index per agent, in global agent
/// order (roles contiguous).
struct CriticInput {
  std::vector<std::vector<double>> obs;
  std::vector<int> actions;
};

struct CriticOutput {
  std::vector<double> q;
  std::vector<Tensor> incidence_per_head;
};

enum class IncidenceMode { MlpGenerated, Attention, Static };

inline std::string incidence_mode_name(IncidenceMode m) {
  switch (m) {
    case IncidenceMode::MlpGenerated: return "hgac";
    case IncidenceMode::Attention: return "att-hgac";
    case IncidenceMode::Static: return "hgac-con";
  }
  return "?";
}

inline IncidenceMode parse_incidence_mode(const std::string& s) {
  if (s == "hgac") return IncidenceMode::MlpGenerated;
  if (s == "att-hgac") return IncidenceMode::Attention;
  if (s == "hgac-con") return IncidenceMode::Static;
  throw ConfigError("unknown algorithm mode '" + s + "' (hgac | att-hgac | hgac-con)");
}

/// Decentralized actor for one role. Agents of the same role share these
/// parameters; heterogeneous roles get their own set.
class ActorNet {
 public:
  ActorNet(std::string role, int obs_dim, int n_actions, int hidden = 64)
      : role_(std::move(role)),
        obs_dim_(obs_dim),
        n_actions_(n_actions),
        spec_({obs_dim, hidden, n_actions}, Activation::Relu, Activation::Identity) {}

  const std::string& role() const { return role_; }
  int obs_dim() const { return obs_dim_; }
  int n_actions() const { return n_actions_; }
  std::string prefix() const { return "actor/" + role_; }

  void init_params(ParamStore& store, Rng& rng) const {
    init_mlp_params(store, prefix(), spec_, rng);
  }

  /// (B, n, obs_dim) -> (B, n, |A|) log-probabilities.
  int log_probs(Tape& t, ParamStore& store, int obs) const {
    return t.log_softmax_rows(mlp_forward(t, spec_, store, prefix(), obs));
  }

  PolicyDistribution forward(const std::vector<double>& obs, ParamStore& store) const {
    if (static_cast<int>(obs.size()) != obs_dim_)
      throw ConfigError("actor_forward: observation size " + std::to_string(obs.size()) +
                        " does not match role '" + role_ + "' (" +
                        std::to_string(obs_dim_) + ")");
    Tape t;
    int lp = log_probs(t, store, t.leaf(Tensor::from_rows({obs})));
    PolicyDistribution d;
    d.log_probs = t.val(lp).v;
    d.probs.resize(d.log_probs.size());
    for (size_t i = 0; i < d.probs.size(); ++i) d.probs[i] = std::exp(d.log_probs[i]);
    return d;
  }

 private:
  std::string role_;
  int obs_dim_;
  int n_actions_;
  MlpSpec spec_;
};

inline std::vector<ActorNet> make_actors(const EnvSpec& spec, int hidden = 64) {
  std::vector<ActorNet> actors;
  actors.reserve(spec.roles.size());
  for (const auto& r : spec.roles) actors.emplace_back(r.name, r.obs_dim, r.n_actions, hidden);
  return actors;
}

struct CriticConfig {
  int embed_dim = 32;    // width of the per-agent feature x_i
  int conv_hidden = 32;  // first convolution layer output width
  int head_out = 32;     // second convolution layer output width
  int heads = 4;         // number of parallel hypergraph heads K
  int gen_hidden = 64;   // generator perceptron hidden width
  int attn_dim = 32;     // query/key projection width
  int q_hidden = 64;     // Q-head hidden width
  int hyperedges = 0;    // M for the generated mode; 0 means M = N
};

/// Centralized critic: role-specific linear embeddings feed a shared trunk of
/// K hypergraph heads. Each head generates its own incidence matrix (or
/// shares the configured static one), applies two convolution layers, and the
/// Q head maps concatenate(x_i, x'_i1..x'_iK) to one value per agent. All
/// trunk parameters are shared across agents.
class CriticNet {
 public:
  CriticNet(const EnvSpec& env_spec, IncidenceMode mode, CriticConfig cfg = {},
            std::vector<std::vector<int>> static_groups = {})
      : roles_(env_spec.roles), mode_(mode), cfg_(cfg) {
    n_agents_ = env_spec.n_agents();
    if (mode_ == IncidenceMode::Static) {
      if (static_groups.empty())
        throw ConfigError("critic: static incidence mode requires configured groups");
      static_h_ = static_incidence(static_groups, n_agents_);
      m_ = static_h_.cols;
    } else if (mode_ == IncidenceMode::Attention) {
      m_ = n_agents_;
    } else {
      m_ = cfg_.hyperedges > 0 ? cfg_.hyperedges : n_agents_;
    }
    for (const auto& r : roles_)
      embed_specs_.push_back(MlpSpec({r.obs_dim + r.n_actions, cfg_.embed_dim},
                                     Activation::Relu, Activation::Identity));
    gen_spec_ = MlpSpec({cfg_.embed_dim, cfg_.gen_hidden, m_}, Activation::Relu,
                        Activation::Identity);
    q_spec_ = MlpSpec({cfg_.embed_dim + cfg_.heads * cfg_.head_out, cfg_.q_hidden, 1},
                      Activation::Relu, Activation::Identity);
  }

  int n_agents() const { return n_agents_; }
  int n_hyperedges() const { return m_; }
  int heads() const { return cfg_.heads; }
  IncidenceMode mode() const { return mode_; }
  const std::vector<RoleInfo>& roles() const { return roles_; }
  const Tensor& static_h() const { return static_h_; }
  const CriticConfig& config() const { return cfg_; }

  void init_params(ParamStore& store, Rng& rng) const {
    for (size_t r = 0; r < roles_.size(); ++r)
      init_mlp_params(store, embed_prefix(static_cast<int>(r)), embed_specs_[r], rng);
    for (int k = 0; k < cfg_.heads; ++k) {
      if (mode_ == IncidenceMode::MlpGenerated) {
        init_mlp_params(store, gen_prefix(k), gen_spec_, rng);
      } else if (mode_ == IncidenceMode::Attention) {
        double bound = std::sqrt(6.0 / (cfg_.attn_dim + cfg_.embed_dim));
        for (const char* nm : {"wq", "wk"}) {
          Tensor& w = store.add(attn_prefix(k) + "/" + nm, cfg_.attn_dim, cfg_.embed_dim);
          for (double& x : w.v) x = rng.uniform(-bound, bound);
        }
      }
      auto glorot = [&](const std::string& name, int rows, int cols) {
        Tensor& w = store.add(name, rows, cols);
        double bound = std::sqrt(6.0 / (rows + cols));
        for (double& x : w.v) x = rng.uniform(-bound, bound);
      };
      glorot(conv_prefix(k) + "/p0", cfg_.embed_dim, cfg_.conv_hidden);
      glorot(conv_prefix(k) + "/p1", cfg_.conv_hidden, cfg_.head_out);
      store.add(edge_weight_name(k), m_, 1);  // log-weights start at 0 -> w = 1
    }
    init_mlp_params(store, qhead_prefix(), q_spec_, rng);
  }

  /// Per-role (B, n_r, obs_dim) and one-hot (B, n_r, |A_r|) inputs.
  struct Batch {
    std::vector<Tensor> obs;
    std::vector<Tensor> act;
    int size = 0;
  };

  Batch pack(const std::vector<const CriticInput*>& inputs) const {
    int b = static_cast<int>(inputs.size());
    if (b == 0) throw ConfigError("critic: empty batch");
    Batch out;
    out.size = b;
    int agent0 = 0;
    for (const auto& role : roles_) {
      Tensor obs(b, role.count, role.obs_dim);
      Tensor act(b, role.count, role.n_actions);
      for (int e = 0; e < b; ++e) {
        const CriticInput& in = *inputs[e];
        if (static_cast<int>(in.obs.size()) != n_agents_ ||
            static_cast<int>(in.actions.size()) != n_agents_)
          throw ConfigError("critic: input does not cover all agents");
        for (int a = 0; a < role.count; ++a) {
          int agent = agent0 + a;
          if (static_cast<int>(in.obs[agent].size()) != role.obs_dim)
            throw ConfigError("critic: observation size mismatch for agent " +
                              std::to_string(agent));
          std::copy(in.obs[agent].begin(), in.obs[agent].end(),
                    obs.data(e) + static_cast<size_t>(a) * role.obs_dim);
          int action = in.actions[agent];
          if (action < 0 || action >= role.n_actions)
            throw ConfigError("critic: action index out of range for agent " +
                              std::to_string(agent));
          act.at(e, a, action) = 1.0;
        }
      }
      out.obs.push_back(std::move(obs));
      out.act.push_back(std::move(act));
      agent0 += role.count;
    }
    return out;
  }

  struct Graph {
    int q = -1;                  // (B, N, 1)
    int x = -1;                  // (B, N, embed_dim)
    std::vector<int> incidence;  // per head
  };

  /// Builds the critic graph. With q_agent >= 0 the Q head is evaluated for
  /// that agent's row only (the trunk is unchanged); each Q row is an
  /// independent product, so the value is bit-identical to the full pass.
  Graph build(Tape& t, ParamStore& store, const Batch& batch, int q_agent = -1) const {
    std::vector<int> embeds;
    for (size_t r = 0; r < roles_.size(); ++r) {
      int in = t.concat_cols({t.leaf(batch.obs[r]), t.leaf(batch.act[r])});
      embeds.push_back(
          mlp_forward(t, embed_specs_[r], store, embed_prefix(static_cast<int>(r)), in));
    }
    Graph g;
    g.x = embeds.size() == 1 ? embeds[0] : t.concat_rows(embeds);

    std::vector<int> head_feats;
    for (int k = 0; k < cfg_.heads; ++k) {
      int h;
      switch (mode_) {
        case IncidenceMode::MlpGenerated:
          h = mlp_incidence(t, g.x, gen_spec_, store, gen_prefix(k));
          break;
        case IncidenceMode::Attention:
          h = attention_incidence(t, g.x, t.param(store, attn_prefix(k) + "/wq"),
                                  t.param(store, attn_prefix(k) + "/wk"));
          break;
        case IncidenceMode::Static:
          h = t.leaf(static_h_);
          break;
      }
      g.incidence.push_back(h);
      int logw = t.param(store, edge_weight_name(k));
      int c1 = hypergraph_convolve_fused(t, g.x, h, logw,
                                         t.param(store, conv_prefix(k) + "/p0"),
                                         Activation::Relu);
      int c2 = hypergraph_convolve_fused(t, c1, h, logw,
                                         t.param(store, conv_prefix(k) + "/p1"),
                                         Activation::Relu);
      head_feats.push_back(c2);
    }

    std::vector<int> cat_inputs{g.x};
    cat_inputs.insert(cat_inputs.end(), head_feats.begin(), head_feats.end());
    if (q_agent >= 0) {
      if (q_agent >= n_agents_) throw ConfigError("critic: q_agent out of range");
      for (int& id : cat_inputs) id = t.slice_rows(id, q_agent, q_agent + 1);
    }
    g.q = mlp_forward(t, q_spec_, store, qhead_prefix(), t.concat_cols(cat_inputs));
    return g;
  }

  /// Full forward pass for one joint sample.
  CriticOutput forward(const CriticInput& input, ParamStore& store) const {
    Tape t;
    Batch b = pack({&input});
    Graph g = build(t, store, b);
    CriticOutput out;
    out.q.resize(n_agents_);
    for (int i = 0; i < n_agents_; ++i) out.q[i] = t.val(g.q).at(0, i, 0);
    for (int h : g.incidence) out.incidence_per_head.push_back(t.val(h));
    return out;
  }

  /// Q_i for every alternative action of `agent`, other agents' actions
  /// fixed. Each entry is a full re-evaluation: the incidence matrices are
  /// regenerated because actions feed the generators.
  std::vector<double> counterfactual_q(const CriticInput& input, int agent,
                                       ParamStore& store) const {
    if (agent < 0 || agent >= n_agents_)
      throw ConfigError("counterfactual_q: agent index out of range");
    int role = role_of(agent);
    int n_actions = roles_[role].n_actions;
    std::vector<CriticInput> variants(n_actions, input);
    std::vector<const CriticInput*> ptrs;
    ptrs.reserve(n_actions);
    for (int a = 0; a < n_actions; ++a) {
      variants[a].actions[agent] = a;
      ptrs.push_back(&variants[a]);
    }
    Tape t;
    Graph g = build(t, store, pack(ptrs), agent);
    std::vector<double> out(n_actions);
    for (int a = 0; a < n_actions; ++a) out[a] = t.val(g.q).at(a, 0, 0);
    return out;
  }

  int role_of(int agent) const {
    int off = 0;
    for (size_t r = 0; r < roles_.size(); ++r) {
      off += roles_[r].count;
      if (agent < off) return static_cast<int>(r);
    }
    throw ConfigError("critic: agent index out of range");
  }

  std::string embed_prefix(int role) const { return "critic/embed/" + roles_[role].name; }
  std::string gen_prefix(int head) const { return "critic/gen" + std::to_string(head); }
  std::string attn_prefix(int head) const { return "critic/attn" + std::to_string(head); }
  std::string conv_prefix(int head) const { return "critic/conv" + std::to_string(head); }
  std::string edge_weight_name(int head) const {
    return "critic/edge" + std::to_string(head) + "/logw";
  }
  std::string qhead_prefix() const { return "critic/qhead"; }

 private:
  std::vector<RoleInfo> roles_;
  IncidenceMode mode_;
  CriticConfig cfg_;
  int n_agents_ = 0;
  int m_ = 0;
  Tensor static_h_;
  std::vector<MlpSpec> embed_specs_;
  MlpSpec gen_spec_;
  MlpSpec q_spec_;
};

}  // namespace hgac
