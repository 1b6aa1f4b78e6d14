#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hgac/harness/baselines.hpp"
#include "hgac/harness/runner.hpp"
#include "testutil.hpp"

using namespace hgac;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("hgac_harness_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

std::vector<std::vector<double>> parse_csv(const std::string& path, bool skip_header = false) {
  std::vector<std::vector<double>> rows;
  auto lines = read_lines(path);
  for (size_t i = skip_header ? 1 : 0; i < lines.size(); ++i) {
    std::vector<double> row;
    std::stringstream ss(lines[i]);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

RunConfig tiny_run(const std::string& out, uint64_t seed = 1) {
  RunConfig rc;
  rc.scenario = ScenarioConfig::builtin("cn_small");
  rc.mode = IncidenceMode::MlpGenerated;
  rc.train.total_episodes = 10;
  rc.train.seed = seed;
  rc.train.deterministic = true;
  rc.train.batch_size = 32;
  rc.train.steps_per_cycle = 50;
  rc.critic = CriticConfig{8, 6, 5, 2, 8, 4, 8, 0};
  rc.out_dir = out;
  return rc;
}

}  // namespace

TEST_CASE("metrics header matches the stable schema", "[metrics]") {
  REQUIRE(MetricsWriter::header(2) ==
          "episode,team_return,agent_return_0,agent_return_1,critic_loss,actor_loss,"
          "entropy,seconds");
}

TEST_CASE("fmt_double is locale-free and round-trips", "[metrics]") {
  REQUIRE(fmt_double(0.5) == "0.5");
  REQUIRE(fmt_double(-1.25) == "-1.25");
  double v = -0.12345678901234567;
  double back = std::stod(fmt_double(v, 12));
  REQUIRE(testutil::rel_err(back, v) <= 1e-11);
}

TEST_CASE("run writes one metrics row per episode plus artifacts", "[run]") {
  fs::path dir = scratch_dir("rows");
  RunResult res = run_experiment(tiny_run((dir / "r1").string()));
  REQUIRE(res.rows.size() == 10);
  auto lines = read_lines(res.metrics_path);
  REQUIRE(lines.size() == 11);  // header + 10 rows
  REQUIRE(lines[0] == MetricsWriter::header(2));
  auto rows = parse_csv((dir / "r1/metrics.csv").string(), /*skip_header=*/true);
  for (size_t i = 0; i < rows.size(); ++i) REQUIRE(rows[i][0] == double(i));
  REQUIRE(fs::exists(dir / "r1/checkpoint.bin"));
  REQUIRE(fs::exists(dir / "r1/checkpoint.json"));
  REQUIRE(fs::exists(dir / "r1/curve.svg"));
  REQUIRE(fs::exists(dir / "r1/manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("identical deterministic runs produce byte-identical metrics", "[run][determinism]") {
  fs::path dir = scratch_dir("det");
  RunResult a = run_experiment(tiny_run((dir / "a").string(), 11));
  RunResult b = run_experiment(tiny_run((dir / "b").string(), 11));
  REQUIRE(read_file_bytes(a.metrics_path) == read_file_bytes(b.metrics_path));
  REQUIRE(read_file_bytes(a.checkpoint_path) == read_file_bytes(b.checkpoint_path));
  fs::remove_all(dir);
}

TEST_CASE("manifest records the config echo and checkpoint hash", "[run][manifest]") {
  fs::path dir = scratch_dir("manifest");
  RunConfig rc = tiny_run((dir / "m").string(), 5);
  RunResult res = run_experiment(rc);
  nlohmann::json manifest;
  std::ifstream(res.manifest_path) >> manifest;
  REQUIRE(manifest.at("config").at("algo") == "hgac");
  REQUIRE(manifest.at("config").at("train").at("seed") == 5);
  REQUIRE(manifest.at("checkpoint_sha1").get<std::string>() ==
          git_blob_sha1(read_file_bytes(res.checkpoint_path)));
  RunConfig back = RunConfig::from_json(manifest.at("config"));
  REQUIRE(back.train.seed == 5);
  REQUIRE(back.scenario.hunters == 2);
  fs::remove_all(dir);
}

TEST_CASE("replay-check reproduces a deterministic run", "[run][replay]") {
  fs::path dir = scratch_dir("replay");
  run_experiment(tiny_run((dir / "orig").string(), 21));
  std::string message;
  REQUIRE(replay_check((dir / "orig").string(), &message));
  REQUIRE(message.find("identical") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("incidence dump: attention diagonals are exactly 1", "[dump]") {
  fs::path dir = scratch_dir("dump_attn");
  EnvSpec spec;
  spec.roles = {{"unit", 3, 4, 3}};
  CriticNet net(spec, IncidenceMode::Attention, CriticConfig{8, 6, 5, 4, 8, 4, 8, 0});
  ParamStore store;
  Rng rng(5);
  net.init_params(store, rng);
  std::vector<Transition> ts;
  Rng trng(9);
  for (int e = 0; e < 16; ++e) {
    Transition t;
    for (int i = 0; i < 3; ++i) {
      std::vector<double> o(4), o2(4);
      for (double& x : o) x = trng.uniform(-1, 1);
      for (double& x : o2) x = trng.uniform(-1, 1);
      t.obs.push_back(o);
      t.next_obs.push_back(o2);
      t.actions.push_back(trng.uniform_int(3));
      t.rewards.push_back(0.0);
    }
    ts.push_back(std::move(t));
  }
  std::vector<const Transition*> batch;
  for (auto& t : ts) batch.push_back(&t);
  auto paths = dump_incidence(net, store, batch, dir.string(), "attn");
  REQUIRE(paths.size() == 4);
  for (const auto& p : paths) {
    auto rows = parse_csv(p);
    REQUIRE(rows.size() == 3);
    for (int i = 0; i < 3; ++i) {
      REQUIRE(rows[i].size() == 3);
      REQUIRE(rows[i][i] == 1.0);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("incidence dump: zeroed generator head gives uniform 1/M", "[dump]") {
  fs::path dir = scratch_dir("dump_mlp");
  EnvSpec spec;
  spec.roles = {{"unit", 4, 3, 2}};
  CriticNet net(spec, IncidenceMode::MlpGenerated, CriticConfig{8, 6, 5, 1, 8, 4, 8, 0});
  ParamStore store;
  Rng rng(6);
  net.init_params(store, rng);
  std::fill(store.value("critic/gen0/w1").v.begin(), store.value("critic/gen0/w1").v.end(), 0.0);
  std::fill(store.value("critic/gen0/b1").v.begin(), store.value("critic/gen0/b1").v.end(), 0.0);

  std::vector<Transition> ts;
  Rng trng(4);
  for (int e = 0; e < 8; ++e) {
    Transition t;
    for (int i = 0; i < 4; ++i) {
      std::vector<double> o(3), o2(3);
      for (double& x : o) x = trng.uniform(-1, 1);
      for (double& x : o2) x = trng.uniform(-1, 1);
      t.obs.push_back(o);
      t.next_obs.push_back(o2);
      t.actions.push_back(trng.uniform_int(2));
      t.rewards.push_back(0.0);
    }
    ts.push_back(std::move(t));
  }
  std::vector<const Transition*> batch;
  for (auto& t : ts) batch.push_back(&t);
  auto paths = dump_incidence(net, store, batch, dir.string(), "uni");
  auto rows = parse_csv(paths[0]);
  for (const auto& row : rows)
    for (double x : row) REQUIRE_THAT(x, Catch::Matchers::WithinAbs(0.25, 1e-12));
  fs::remove_all(dir);
}

TEST_CASE("incidence dump values round-trip at 12 significant digits", "[dump]") {
  fs::path dir = scratch_dir("dump_rt12");
  EnvSpec spec;
  spec.roles = {{"unit", 3, 4, 3}};
  CriticNet net(spec, IncidenceMode::MlpGenerated, CriticConfig{8, 6, 5, 2, 8, 4, 8, 0});
  ParamStore store;
  Rng rng(15);
  net.init_params(store, rng);
  std::vector<Transition> ts;
  Rng trng(2);
  for (int e = 0; e < 6; ++e) {
    Transition t;
    for (int i = 0; i < 3; ++i) {
      std::vector<double> o(4), o2(4);
      for (double& x : o) x = trng.uniform(-1, 1);
      for (double& x : o2) x = trng.uniform(-1, 1);
      t.obs.push_back(o);
      t.next_obs.push_back(o2);
      t.actions.push_back(trng.uniform_int(3));
      t.rewards.push_back(0.0);
    }
    ts.push_back(std::move(t));
  }
  std::vector<const Transition*> batch;
  for (auto& t : ts) batch.push_back(&t);
  std::vector<Tensor> internal = average_incidence(net, store, batch);
  auto paths = dump_incidence(net, store, batch, dir.string(), "prec");
  for (size_t k = 0; k < paths.size(); ++k) {
    auto rows = parse_csv(paths[k]);
    for (int i = 0; i < internal[k].rows; ++i)
      for (int j = 0; j < internal[k].cols; ++j)
        REQUIRE(testutil::rel_err(rows[i][j], internal[k].at(0, i, j)) <= 1e-11);
  }
  fs::remove_all(dir);
}

TEST_CASE("static-mode run dumps the constant 0/1 incidence", "[dump][static]") {
  fs::path dir = scratch_dir("dump_static");
  RunConfig rc;
  rc.scenario = ScenarioConfig::builtin("ctc_small");
  rc.mode = IncidenceMode::Static;
  rc.train.total_episodes = 8;
  rc.train.deterministic = true;
  rc.train.batch_size = 32;
  rc.train.steps_per_cycle = 50;
  rc.critic = CriticConfig{8, 6, 5, 2, 8, 4, 8, 0};
  rc.out_dir = (dir / "run").string();
  rc.heatmap_period = 4;
  run_experiment(rc);

  Tensor expected = static_incidence(rc.scenario.static_groups, 4);
  std::vector<fs::path> dumps;
  for (const auto& entry : fs::directory_iterator(dir / "run/incidence"))
    dumps.push_back(entry.path());
  REQUIRE(dumps.size() >= 2);
  for (const auto& p : dumps) {
    auto rows = parse_csv(p.string());
    REQUIRE(rows.size() == 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 3; ++j) {
        REQUIRE((rows[i][j] == 0.0 || rows[i][j] == 1.0));
        REQUIRE(rows[i][j] == expected.at(0, i, j));
      }
  }
  fs::remove_all(dir);
}

TEST_CASE("baselines: greedy dominates random on cooperative navigation", "[baselines]") {
  BaselineReport r = eval_baselines(ScenarioConfig::builtin("cn_small"), {1, 2}, 50, 25);
  REQUIRE(r.greedy.mean > r.random.mean);
  REQUIRE(r.random.episodes == 100);
}

TEST_CASE("baselines are reproducible per seed set", "[baselines][determinism]") {
  auto a = eval_baselines(ScenarioConfig::builtin("rt_small"), {3, 4}, 25, 25);
  auto b = eval_baselines(ScenarioConfig::builtin("rt_small"), {3, 4}, 25, 25);
  REQUIRE(a.random.mean == b.random.mean);
  REQUIRE(a.greedy.mean == b.greedy.mean);
  REQUIRE(a.random.stddev == b.random.stddev);
}

TEST_CASE("greedy CN return matches a hand simulation on 1v1", "[baselines][oracle]") {
  ScenarioConfig scen;
  scen.scenario = "cooperative_navigation";
  scen.name = "cn_1v1";
  scen.hunters = 1;
  scen.landmarks = 1;
  auto env = make_env(scen);
  double got = greedy_policy_episode(*env, 77, 25);

  // independent simulation: read the post-reset state, then walk greedily
  auto env2 = make_env(scen);
  env2->reset(77);
  auto* cn = dynamic_cast<CooperativeNavigationEnv*>(env2.get());
  Vec2 h = cn->hunter_positions()[0];
  Vec2 l = cn->landmark_positions()[0];
  double want = 0.0;
  for (int t = 0; t < 25; ++t) {
    Vec2 best = h;
    double best_d = dist(h, l);
    const double moves[5][2] = {{0, 0}, {0.1, 0}, {-0.1, 0}, {0, 0.1}, {0, -0.1}};
    for (const auto& mv : moves) {
      Vec2 cand{clamp_arena(h.x + mv[0]), clamp_arena(h.y + mv[1])};
      double d = dist(cand, l);
      if (d < best_d) {
        best_d = d;
        best = cand;
      }
    }
    h = best;
    want -= dist(h, l);
  }
  REQUIRE_THAT(got, Catch::Matchers::WithinAbs(want, 1e-12));
}

TEST_CASE("smoothing window averages the trailing history", "[svg]") {
  std::vector<double> xs = {1, 2, 3, 4, 5};
  auto sm = smooth_series(xs, 3);
  REQUIRE(sm[0] == 1.0);
  REQUIRE(sm[1] == 1.5);
  REQUIRE_THAT(sm[4], Catch::Matchers::WithinAbs(4.0, 1e-12));
}

TEST_CASE("curve svg renders a polyline", "[svg]") {
  fs::path dir = scratch_dir("svg");
  std::vector<double> ys;
  for (int i = 0; i < 200; ++i) ys.push_back(-10.0 + 0.05 * i);
  write_curve_svg((dir / "curve.svg").string(), ys, 100, "test");
  std::string body = read_file_bytes((dir / "curve.svg").string());
  REQUIRE(body.find("<polyline") != std::string::npos);
  REQUIRE(body.find("</svg>") != std::string::npos);
  fs::remove_all(dir);
}
