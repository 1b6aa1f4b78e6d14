#pragma once

#include "hgac/envs/env.hpp"

namespace hgac {

/// Rover-Tower: rovers and towers are paired randomly every episode. A tower
/// sees its paired rover, the landmarks and the pair's destination; its
/// action is one of |landmarks| message symbols. A rover sees nothing but
/// every tower's previous-step message (one step of latency, zeros before the
/// first messages) and must reach the destination. Each step both members of
/// a pair receive minus the rover-to-destination distance.
class RoverTowerEnv : public Env {
 public:
  struct Params {
    int pairs = 2;      // rovers == towers
    int landmarks = 2;
    double step_size = 0.1;
  };

  explicit RoverTowerEnv(const Params& p) : p_(p), rng_(0) {
    if (p.pairs < 1 || p.landmarks < 1)
      throw ConfigError("rover_tower: need at least one pair and landmark");
    int rover_obs = p.pairs * p.landmarks;
    int tower_obs = 2 + 2 * p.landmarks + p.landmarks;
    spec_.roles = {{"rover", p.pairs, rover_obs, kMoveActions},
                   {"tower", p.pairs, tower_obs, p.landmarks}};
  }

  const EnvSpec& spec() const override { return spec_; }
  std::string scenario_name() const override { return "rover_tower"; }

  std::vector<std::vector<double>> reset(uint64_t seed) override {
    rng_ = Rng(seed);
    rovers_.resize(p_.pairs);
    towers_.resize(p_.pairs);
    landmarks_.resize(p_.landmarks);
    for (auto& r : rovers_) r = sample_position(rng_);
    for (auto& t : towers_) t = sample_position(rng_);
    for (auto& l : landmarks_) l = sample_position(rng_);
    tower_of_rover_ = rng_.permutation(p_.pairs);
    rover_of_tower_.assign(p_.pairs, 0);
    for (int r = 0; r < p_.pairs; ++r) rover_of_tower_[tower_of_rover_[r]] = r;
    destination_.resize(p_.pairs);
    for (int& d : destination_) d = rng_.uniform_int(p_.landmarks);
    last_message_.assign(p_.pairs, -1);
    return all_obs();
  }

  StepResult step(const std::vector<int>& actions) override {
    check_actions(spec_, actions);
    for (int r = 0; r < p_.pairs; ++r)
      rovers_[r] = apply_move(rovers_[r], actions[r], p_.step_size);
    for (int t = 0; t < p_.pairs; ++t) last_message_[t] = actions[p_.pairs + t];

    StepResult res;
    res.rewards.assign(spec_.n_agents(), 0.0);
    double total_dist = 0.0;
    for (int r = 0; r < p_.pairs; ++r) {
      double d = dist(rovers_[r], landmarks_[destination_[r]]);
      total_dist += d;
      res.rewards[r] = -d;
      res.rewards[p_.pairs + tower_of_rover_[r]] = -d;
    }
    res.obs = all_obs();
    res.done = false;
    res.info["total_dist"] = total_dist;
    return res;
  }

  std::vector<int> scripted_greedy_actions() const override {
    // Towers signal the true destination; rovers decode their own tower's
    // previous message (the script is given the pairing).
    std::vector<int> acts(spec_.n_agents(), kNoop);
    for (int t = 0; t < p_.pairs; ++t)
      acts[p_.pairs + t] = destination_[rover_of_tower_[t]];
    for (int r = 0; r < p_.pairs; ++r) {
      int msg = last_message_[tower_of_rover_[r]];
      if (msg >= 0) acts[r] = greedy_move(rovers_[r], landmarks_[msg], p_.step_size);
    }
    return acts;
  }

  const std::vector<Vec2>& rover_positions() const { return rovers_; }
  const std::vector<Vec2>& tower_positions() const { return towers_; }
  const std::vector<Vec2>& landmark_positions() const { return landmarks_; }
  const std::vector<int>& tower_of_rover() const { return tower_of_rover_; }
  const std::vector<int>& destinations() const { return destination_; }
  const std::vector<int>& last_messages() const { return last_message_; }
  const Params& params() const { return p_; }

 private:
  std::vector<std::vector<double>> all_obs() const {
    std::vector<std::vector<double>> obs(spec_.n_agents());
    for (int r = 0; r < p_.pairs; ++r) {
      std::vector<double>& o = obs[r];
      o.assign(p_.pairs * p_.landmarks, 0.0);
      for (int t = 0; t < p_.pairs; ++t)
        if (last_message_[t] >= 0) o[t * p_.landmarks + last_message_[t]] = 1.0;
    }
    for (int t = 0; t < p_.pairs; ++t) {
      std::vector<double>& o = obs[p_.pairs + t];
      int r = rover_of_tower_[t];
      o.push_back(rovers_[r].x);
      o.push_back(rovers_[r].y);
      for (const auto& l : landmarks_) {
        o.push_back(l.x);
        o.push_back(l.y);
      }
      for (int d = 0; d < p_.landmarks; ++d)
        o.push_back(destination_[r] == d ? 1.0 : 0.0);
    }
    return obs;
  }

  Params p_;
  EnvSpec spec_;
  Rng rng_;
  std::vector<Vec2> rovers_, towers_, landmarks_;
  std::vector<int> tower_of_rover_, rover_of_tower_;
  std::vector<int> destination_;
  std::vector<int> last_message_;
};

}  // namespace hgac
