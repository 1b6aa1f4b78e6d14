#pragma once

#include "hgac/envs/env.hpp"

namespace hgac {

/// Cooperative Navigation: hunters jointly cover landmarks. All agents share
/// one reward: minus the sum over landmarks of the distance to the nearest
/// hunter, minus a penalty per colliding hunter pair.
class CooperativeNavigationEnv : public Env {
 public:
  struct Params {
    int hunters = 2;
    int landmarks = 2;
    double step_size = 0.1;
    double radius = 0.1;
    double dist_coef = 1.0;
    double collision_penalty = 1.0;
  };

  explicit CooperativeNavigationEnv(const Params& p) : p_(p), rng_(0) {
    if (p.hunters < 1 || p.landmarks < 1)
      throw ConfigError("cooperative_navigation: need at least one hunter and landmark");
    int obs = 2 + 2 * (p.hunters - 1) + 2 * p.landmarks;
    spec_.roles = {{"hunter", p.hunters, obs, kMoveActions}};
  }

  const EnvSpec& spec() const override { return spec_; }
  std::string scenario_name() const override { return "cooperative_navigation"; }

  std::vector<std::vector<double>> reset(uint64_t seed) override {
    rng_ = Rng(seed);
    hunters_.resize(p_.hunters);
    landmarks_.resize(p_.landmarks);
    for (auto& h : hunters_) h = sample_position(rng_);
    for (auto& l : landmarks_) l = sample_position(rng_);
    return all_obs();
  }

  StepResult step(const std::vector<int>& actions) override {
    check_actions(spec_, actions);
    for (int i = 0; i < p_.hunters; ++i)
      hunters_[i] = apply_move(hunters_[i], actions[i], p_.step_size);

    double dist_term = 0.0;
    for (const auto& l : landmarks_) {
      double best = dist(hunters_[0], l);
      for (int i = 1; i < p_.hunters; ++i) best = std::min(best, dist(hunters_[i], l));
      dist_term += best;
    }
    int collisions = 0;
    for (int i = 0; i < p_.hunters; ++i)
      for (int j = i + 1; j < p_.hunters; ++j)
        if (dist(hunters_[i], hunters_[j]) < p_.radius) ++collisions;

    double shared = -p_.dist_coef * dist_term - p_.collision_penalty * collisions;
    StepResult r;
    r.obs = all_obs();
    r.rewards.assign(p_.hunters, shared);
    r.done = false;
    r.info["collisions"] = collisions;
    r.info["sum_min_dist"] = dist_term;
    return r;
  }

  std::vector<int> scripted_greedy_actions() const override {
    // Each hunter heads for the nearest landmark not already covered by
    // some hunter; if everything is covered, the nearest landmark.
    std::vector<int> acts(p_.hunters, kNoop);
    std::vector<bool> covered(p_.landmarks, false);
    for (int l = 0; l < p_.landmarks; ++l)
      for (const auto& h : hunters_)
        if (dist(h, landmarks_[l]) < p_.radius) covered[l] = true;
    for (int i = 0; i < p_.hunters; ++i) {
      int target = -1;
      double best = 0.0;
      for (int l = 0; l < p_.landmarks; ++l) {
        if (covered[l]) continue;
        double d = dist(hunters_[i], landmarks_[l]);
        if (target < 0 || d < best) {
          target = l;
          best = d;
        }
      }
      if (target < 0) {
        for (int l = 0; l < p_.landmarks; ++l) {
          double d = dist(hunters_[i], landmarks_[l]);
          if (target < 0 || d < best) {
            target = l;
            best = d;
          }
        }
      }
      acts[i] = greedy_move(hunters_[i], landmarks_[target], p_.step_size);
    }
    return acts;
  }

  const std::vector<Vec2>& hunter_positions() const { return hunters_; }
  const std::vector<Vec2>& landmark_positions() const { return landmarks_; }
  const Params& params() const { return p_; }

  /// Direct state injection for scripted scenarios and tests.
  void set_positions(std::vector<Vec2> hunters, std::vector<Vec2> landmarks) {
    if (static_cast<int>(hunters.size()) != p_.hunters ||
        static_cast<int>(landmarks.size()) != p_.landmarks)
      throw ConfigError("cooperative_navigation: set_positions size mismatch");
    hunters_ = std::move(hunters);
    landmarks_ = std::move(landmarks);
  }

 private:
  std::vector<std::vector<double>> all_obs() const {
    std::vector<std::vector<double>> obs(p_.hunters);
    for (int i = 0; i < p_.hunters; ++i) {
      std::vector<double>& o = obs[i];
      o.reserve(spec_.roles[0].obs_dim);
      o.push_back(hunters_[i].x);
      o.push_back(hunters_[i].y);
      for (int j = 0; j < p_.hunters; ++j) {
        if (j == i) continue;
        o.push_back(hunters_[j].x - hunters_[i].x);
        o.push_back(hunters_[j].y - hunters_[i].y);
      }
      for (const auto& l : landmarks_) {
        o.push_back(l.x - hunters_[i].x);
        o.push_back(l.y - hunters_[i].y);
      }
    }
    return obs;
  }

  Params p_;
  EnvSpec spec_;
  Rng rng_;
  std::vector<Vec2> hunters_;
  std::vector<Vec2> landmarks_;
};

}  // namespace hgac
