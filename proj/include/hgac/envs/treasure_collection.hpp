#pragma once

#include "hgac/envs/env.hpp"

namespace hgac {

/// Cooperative Treasure Collection: hunters pick up colored treasures and
/// deliver them to the bank of the matching color. Pickups pay the hunter
/// individually, deliveries pay everyone, hunter collisions are penalized.
/// Treasure i has color i % banks; a carried treasure rides on its carrier
/// and respawns at a fresh position once deposited.
class TreasureCollectionEnv : public Env {
 public:
  struct Params {
    int hunters = 3;
    int banks = 1;
    int treasures = 3;
    double step_size = 0.1;
    double radius = 0.1;
    double pickup_bonus = 1.0;
    double deposit_bonus = 1.0;
    double collision_penalty = 0.5;
  };

  explicit TreasureCollectionEnv(const Params& p) : p_(p), rng_(0) {
    if (p.hunters < 1 || p.banks < 1 || p.treasures < 1)
      throw ConfigError("treasure_collection: need hunters, banks and treasures");
    // own pos + other hunters + banks + treasures + carry flag + color one-hots
    int obs = 2 + 2 * (p.hunters - 1) + 2 * p.banks + 2 * p.treasures + 1 +
              p.treasures * p.banks;
    int bank_obs = 2 + 2 * p.hunters + 2 * (p.banks - 1) + 2 * p.treasures + 1 +
                   p.treasures * p.banks;
    spec_.roles = {{"hunter", p.hunters, obs, kMoveActions},
                   {"bank", p.banks, bank_obs, kMoveActions}};
  }

  const EnvSpec& spec() const override { return spec_; }
  std::string scenario_name() const override { return "treasure_collection"; }

  std::vector<std::vector<double>> reset(uint64_t seed) override {
    rng_ = Rng(seed);
    hunters_.resize(p_.hunters);
    banks_.resize(p_.banks);
    treasures_.resize(p_.treasures);
    for (auto& h : hunters_) h = sample_position(rng_);
    for (auto& b : banks_) b = sample_position(rng_);
    for (auto& t : treasures_) t = sample_position(rng_);
    carried_by_.assign(p_.treasures, -1);
    carrying_.assign(p_.hunters, -1);
    return all_obs();
  }

  StepResult step(const std::vector<int>& actions) override {
    check_actions(spec_, actions);
    for (int i = 0; i < p_.hunters; ++i)
      hunters_[i] = apply_move(hunters_[i], actions[i], p_.step_size);
    for (int b = 0; b < p_.banks; ++b)
      banks_[b] = apply_move(banks_[b], actions[p_.hunters + b], p_.step_size);
    for (int t = 0; t < p_.treasures; ++t)
      if (carried_by_[t] >= 0) treasures_[t] = hunters_[carried_by_[t]];

    std::vector<double> rewards(spec_.n_agents(), 0.0);
    int pickups = 0;
    for (int i = 0; i < p_.hunters; ++i) {
      if (carrying_[i] >= 0) continue;
      for (int t = 0; t < p_.treasures; ++t) {
        if (carried_by_[t] >= 0) continue;
        if (dist(hunters_[i], treasures_[t]) < p_.radius) {
          carried_by_[t] = i;
          carrying_[i] = t;
          treasures_[t] = hunters_[i];
          rewards[i] += p_.pickup_bonus;
          ++pickups;
          break;
        }
      }
    }

    int deposits = 0;
    for (int i = 0; i < p_.hunters; ++i) {
      int t = carrying_[i];
      if (t < 0) continue;
      int color = treasure_color(t);
      if (dist(hunters_[i], banks_[color]) < p_.radius) {
        ++deposits;
        carrying_[i] = -1;
        carried_by_[t] = -1;
        treasures_[t] = sample_position(rng_);
      }
    }
    if (deposits > 0)
      for (double& r : rewards) r += p_.deposit_bonus * deposits;

    int collisions = 0;
    for (int i = 0; i < p_.hunters; ++i)
      for (int j = i + 1; j < p_.hunters; ++j)
        if (dist(hunters_[i], hunters_[j]) < p_.radius) {
          rewards[i] -= p_.collision_penalty;
          rewards[j] -= p_.collision_penalty;
          ++collisions;
        }

    StepResult r;
    r.obs = all_obs();
    r.rewards = std::move(rewards);
    r.done = false;
    r.info["pickups"] = pickups;
    r.info["deposits"] = deposits;
    r.info["collisions"] = collisions;
    return r;
  }

  std::vector<int> scripted_greedy_actions() const override {
    std::vector<int> acts(spec_.n_agents(), kNoop);
    for (int i = 0; i < p_.hunters; ++i) {
      if (carrying_[i] >= 0) {
        acts[i] = greedy_move(hunters_[i], banks_[treasure_color(carrying_[i])],
                              p_.step_size);
        continue;
      }
      int target = -1;
      double best = 0.0;
      for (int t = 0; t < p_.treasures; ++t) {
        if (carried_by_[t] >= 0) continue;
        double d = dist(hunters_[i], treasures_[t]);
        if (target < 0 || d < best) {
          target = t;
          best = d;
        }
      }
      if (target >= 0) acts[i] = greedy_move(hunters_[i], treasures_[target], p_.step_size);
    }
    return acts;  // banks hold still
  }

  int treasure_color(int t) const { return t % p_.banks; }
  const std::vector<Vec2>& hunter_positions() const { return hunters_; }
  const std::vector<Vec2>& bank_positions() const { return banks_; }
  const std::vector<Vec2>& treasure_positions() const { return treasures_; }
  const std::vector<int>& carrying() const { return carrying_; }
  const Params& params() const { return p_; }

  /// Direct state injection for scripted scenarios and tests. `carrying`
  /// maps hunter -> treasure index or -1.
  void set_world(std::vector<Vec2> hunters, std::vector<Vec2> banks,
                 std::vector<Vec2> treasures, std::vector<int> carrying) {
    if (static_cast<int>(hunters.size()) != p_.hunters ||
        static_cast<int>(banks.size()) != p_.banks ||
        static_cast<int>(treasures.size()) != p_.treasures ||
        static_cast<int>(carrying.size()) != p_.hunters)
      throw ConfigError("treasure_collection: set_world size mismatch");
    hunters_ = std::move(hunters);
    banks_ = std::move(banks);
    treasures_ = std::move(treasures);
    carrying_ = std::move(carrying);
    carried_by_.assign(p_.treasures, -1);
    for (int i = 0; i < p_.hunters; ++i)
      if (carrying_[i] >= 0) {
        carried_by_[carrying_[i]] = i;
        treasures_[carrying_[i]] = hunters_[i];
      }
  }

 private:
  std::vector<std::vector<double>> all_obs() const {
    int n = spec_.n_agents();
    std::vector<std::vector<double>> obs(n);
    for (int a = 0; a < n; ++a) {
      bool is_hunter = a < p_.hunters;
      Vec2 self = is_hunter ? hunters_[a] : banks_[a - p_.hunters];
      std::vector<double>& o = obs[a];
      o.push_back(self.x);
      o.push_back(self.y);
      for (int j = 0; j < p_.hunters; ++j) {
        if (is_hunter && j == a) continue;
        o.push_back(hunters_[j].x - self.x);
        o.push_back(hunters_[j].y - self.y);
      }
      for (int b = 0; b < p_.banks; ++b) {
        if (!is_hunter && b == a - p_.hunters) continue;
        o.push_back(banks_[b].x - self.x);
        o.push_back(banks_[b].y - self.y);
      }
      for (const auto& t : treasures_) {
        o.push_back(t.x - self.x);
        o.push_back(t.y - self.y);
      }
      o.push_back(is_hunter && carrying_[a] >= 0 ? 1.0 : 0.0);
      for (int t = 0; t < p_.treasures; ++t)
        for (int c = 0; c < p_.banks; ++c)
          o.push_back(treasure_color(t) == c ? 1.0 : 0.0);
    }
    return obs;
  }

  Params p_;
  EnvSpec spec_;
  Rng rng_;
  std::vector<Vec2> hunters_, banks_, treasures_;
  std::vector<int> carried_by_;  // treasure -> hunter or -1
  std::vector<int> carrying_;    // hunter -> treasure or -1
};

}  // namespace hgac
