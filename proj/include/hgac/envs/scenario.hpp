#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgac/envs/cooperative_navigation.hpp"
#include "hgac/envs/rover_tower.hpp"
#include "hgac/envs/treasure_collection.hpp"

namespace hgac {

/// Scenario declaration: entity counts, radii, reward constants and the
/// static hypergraph groups used by the fixed-structure mode. Loads from a
/// JSON file; a handful of named desk-scale and full-scale configs ship
/// built in.
struct ScenarioConfig {
  std::string scenario;  // cooperative_navigation | treasure_collection | rover_tower
  std::string name;

  int hunters = 0;
  int landmarks = 0;
  int banks = 0;
  int treasures = 0;
  int pairs = 0;

  double step_size = 0.1;
  double radius = 0.1;
  double dist_coef = 1.0;
  double collision_penalty = 1.0;
  double pickup_bonus = 1.0;
  double deposit_bonus = 1.0;

  std::vector<std::vector<int>> static_groups;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["name"] = name;
    j["hunters"] = hunters;
    j["landmarks"] = landmarks;
    j["banks"] = banks;
    j["treasures"] = treasures;
    j["pairs"] = pairs;
    j["step_size"] = step_size;
    j["radius"] = radius;
    j["dist_coef"] = dist_coef;
    j["collision_penalty"] = collision_penalty;
    j["pickup_bonus"] = pickup_bonus;
    j["deposit_bonus"] = deposit_bonus;
    j["static_groups"] = static_groups;
    return j;
  }

  static ScenarioConfig from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    c.scenario = j.at("scenario").get<std::string>();
    c.name = j.value("name", c.scenario);
    c.hunters = j.value("hunters", 0);
    c.landmarks = j.value("landmarks", 0);
    c.banks = j.value("banks", 0);
    c.treasures = j.value("treasures", 0);
    c.pairs = j.value("pairs", 0);
    c.step_size = j.value("step_size", 0.1);
    c.radius = j.value("radius", 0.1);
    c.dist_coef = j.value("dist_coef", 1.0);
    c.collision_penalty = j.value("collision_penalty", c.scenario == "treasure_collection" ? 0.5 : 1.0);
    c.pickup_bonus = j.value("pickup_bonus", 1.0);
    c.deposit_bonus = j.value("deposit_bonus", 1.0);
    if (j.contains("static_groups"))
      c.static_groups = j.at("static_groups").get<std::vector<std::vector<int>>>();
    return c;
  }

  static ScenarioConfig from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("scenario: cannot open config file '" + path + "'");
    nlohmann::json j;
    f >> j;
    return from_json(j);
  }

  /// Named desk-scale and full-scale presets.
  static ScenarioConfig builtin(const std::string& name) {
    ScenarioConfig c;
    c.name = name;
    if (name == "cn_small") {
      c.scenario = "cooperative_navigation";
      c.hunters = 2;
      c.landmarks = 2;
      c.static_groups = {{0, 1}};
    } else if (name == "cn_3v3") {
      c.scenario = "cooperative_navigation";
      c.hunters = 3;
      c.landmarks = 3;
      c.static_groups = {{0, 1, 2}};
    } else if (name == "cn_full") {
      c.scenario = "cooperative_navigation";
      c.hunters = 5;
      c.landmarks = 5;
      c.static_groups = {{0, 1, 2, 3, 4}};
    } else if (name == "ctc_small") {
      c.scenario = "treasure_collection";
      c.hunters = 3;
      c.banks = 1;
      c.treasures = 3;
      c.collision_penalty = 0.5;
      c.static_groups = {{0, 1, 2}, {3}, {0, 1, 2, 3}};
    } else if (name == "ctc_full") {
      c.scenario = "treasure_collection";
      c.hunters = 6;
      c.banks = 2;
      c.treasures = 6;
      c.collision_penalty = 0.5;
      c.static_groups = {{0, 1, 2, 3, 4, 5}, {6, 7}, {0, 1, 2, 3, 4, 5, 6, 7}};
    } else if (name == "rt_small") {
      c.scenario = "rover_tower";
      c.pairs = 2;
      c.landmarks = 2;
    } else if (name == "rt_full") {
      c.scenario = "rover_tower";
      c.pairs = 4;
      c.landmarks = 4;
    } else {
      throw ConfigError("scenario: unknown builtin '" + name + "'");
    }
    return c;
  }

  /// Resolve a --scenario argument: builtin name first, then a file path.
  static ScenarioConfig resolve(const std::string& name_or_path) {
    try {
      return builtin(name_or_path);
    } catch (const ConfigError&) {
      return from_file(name_or_path);
    }
  }
};

inline std::unique_ptr<Env> make_env(const ScenarioConfig& c) {
  if (c.scenario == "cooperative_navigation") {
    CooperativeNavigationEnv::Params p;
    p.hunters = c.hunters;
    p.landmarks = c.landmarks;
    p.step_size = c.step_size;
    p.radius = c.radius;
    p.dist_coef = c.dist_coef;
    p.collision_penalty = c.collision_penalty;
    return std::make_unique<CooperativeNavigationEnv>(p);
  }
  if (c.scenario == "treasure_collection") {
    TreasureCollectionEnv::Params p;
    p.hunters = c.hunters;
    p.banks = c.banks;
    p.treasures = c.treasures;
    p.step_size = c.step_size;
    p.radius = c.radius;
    p.pickup_bonus = c.pickup_bonus;
    p.deposit_bonus = c.deposit_bonus;
    p.collision_penalty = c.collision_penalty;
    return std::make_unique<TreasureCollectionEnv>(p);
  }
  if (c.scenario == "rover_tower") {
    RoverTowerEnv::Params p;
    p.pairs = c.pairs;
    p.landmarks = c.landmarks;
    p.step_size = c.step_size;
    return std::make_unique<RoverTowerEnv>(p);
  }
  throw ConfigError("scenario: unknown scenario '" + c.scenario + "'");
}

}  // namespace hgac
