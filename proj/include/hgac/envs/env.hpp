#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hgac/common.hpp"
#include "hgac/rng.hpp"

namespace hgac {

/// One block of identically-shaped agents. Agent indices are grouped by role
/// in declaration order, so each role occupies a contiguous index range.
struct RoleInfo {
  std::string name;
  int count = 0;
  int obs_dim = 0;
  int n_actions = 0;
};

struct EnvSpec {
  std::vector<RoleInfo> roles;

  int n_agents() const {
    int n = 0;
    for (const auto& r : roles) n += r.count;
    return n;
  }
  bool homogeneous() const { return roles.size() == 1; }

  int role_of(int agent) const {
    int off = 0;
    for (size_t r = 0; r < roles.size(); ++r) {
      off += roles[r].count;
      if (agent < off) return static_cast<int>(r);
    }
    throw ConfigError("EnvSpec: agent index out of range");
  }
  int role_offset(int role) const {
    int off = 0;
    for (int r = 0; r < role; ++r) off += roles[r].count;
    return off;
  }
  int obs_dim(int agent) const { return roles[role_of(agent)].obs_dim; }
  int n_actions(int agent) const { return roles[role_of(agent)].n_actions; }
};

struct StepResult {
  std::vector<std::vector<double>> obs;
  std::vector<double> rewards;
  bool done = false;
  std::map<std::string, double> info;
};

/// Markov-game interface. (seed, action sequence) fully determines every
/// StepResult; instances are independent and owned by a single worker.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::string scenario_name() const = 0;

  /// Reseeds the episode stream and samples a fresh world state.
  virtual std::vector<std::vector<double>> reset(uint64_t seed) = 0;
  virtual StepResult step(const std::vector<int>& actions) = 0;

  /// Scripted reference policy used by the baseline evaluator. May read
  /// internal state (for rover-tower it is given the pairing as an oracle).
  virtual std::vector<int> scripted_greedy_actions() const = 0;
};

/// The five movement actions shared by every mobile agent.
enum MoveAction { kNoop = 0, kEast = 1, kWest = 2, kNorth = 3, kSouth = 4 };
inline constexpr int kMoveActions = 5;

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline double dist(const Vec2& a, const Vec2& b) {
  double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

inline double clamp_arena(double v) { return std::max(-1.0, std::min(1.0, v)); }

inline Vec2 apply_move(Vec2 p, int action, double step) {
  switch (action) {
    case kNoop: break;
    case kEast: p.x += step; break;
    case kWest: p.x -= step; break;
    case kNorth: p.y += step; break;
    case kSouth: p.y -= step; break;
    default:
      throw ContractError("apply_move: invalid movement action " + std::to_string(action));
  }
  p.x = clamp_arena(p.x);
  p.y = clamp_arena(p.y);
  return p;
}

inline Vec2 sample_position(Rng& rng) {
  double x = rng.uniform(-1.0, 1.0);
  double y = rng.uniform(-1.0, 1.0);
  return {x, y};
}

/// The movement action that brings `from` closest to `to` (noop wins ties).
inline int greedy_move(const Vec2& from, const Vec2& to, double step) {
  int best = kNoop;
  double best_d = dist(apply_move(from, kNoop, step), to);
  for (int a = 1; a < kMoveActions; ++a) {
    double d = dist(apply_move(from, a, step), to);
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  return best;
}

inline void check_actions(const EnvSpec& spec, const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) != spec.n_agents())
    throw ContractError("step: expected " + std::to_string(spec.n_agents()) +
                        " actions, got " + std::to_string(actions.size()));
  for (size_t i = 0; i < actions.size(); ++i) {
    int n = spec.n_actions(static_cast<int>(i));
    if (actions[i] < 0 || actions[i] >= n)
      throw ContractError("step: action " + std::to_string(actions[i]) +
                          " out of range for agent " + std::to_string(i));
  }
}

}  // namespace hgac
