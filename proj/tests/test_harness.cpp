#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "decmarl/harness.hpp"

using namespace decmarl;

namespace {

std::filesystem::path write_temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream f(p, std::ios::binary);
  f << text;
  return p;
}

// 5x5 map with two agents spawning adjacent (always in contact) and a third
// far away in the opposite corner. Scenario 1 sends everyone to the third
// object at (3,4).
const char* kClusterMap =
    "5 5\n"
    "12O..\n"
    ".....\n"
    "..O..\n"
    ".....\n"
    "3..O.\n";

ScenarioConfig tiny_config() {
  ScenarioConfig c;
  c.episodes = 1;
  c.max_steps = 10;
  c.batch = 8;
  c.replay_capacity = 64;
  return c;
}

std::string serialize_run(const RunResult& r) {
  std::ostringstream out;
  out << kMetricsHeader << '\n';
  write_metrics_row(out, r.config, r.summary);
  write_episodes_csv(out, r);
  write_sessions_csv(out, r);
  write_learning_curve_csv(out, r);
  write_diagnostics_csv(out, r);
  return out.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

TEST_CASE("agent type flags follow the ablation ladder") {
  const auto a1 = flags_for(AgentType::A1);
  CHECK_FALSE(a1.use_mental_state);
  CHECK_FALSE(a1.use_time_awareness);
  CHECK_FALSE(a1.use_communication);
  CHECK_FALSE(a1.use_goal_awareness);

  const auto a2 = flags_for(AgentType::A2);
  CHECK(a2.use_mental_state);
  CHECK_FALSE(a2.use_time_awareness);
  CHECK_FALSE(a2.use_communication);
  CHECK_FALSE(a2.use_goal_awareness);

  const auto a3 = flags_for(AgentType::A3);
  CHECK(a3.use_mental_state);
  CHECK(a3.use_time_awareness);
  CHECK_FALSE(a3.use_communication);
  CHECK_FALSE(a3.use_goal_awareness);

  const auto a4 = flags_for(AgentType::A4);
  CHECK(a4.use_mental_state);
  CHECK(a4.use_time_awareness);
  CHECK(a4.use_communication);
  CHECK_FALSE(a4.use_goal_awareness);

  const auto a5 = flags_for(AgentType::A5);
  CHECK(a5.use_mental_state);
  CHECK(a5.use_time_awareness);
  CHECK(a5.use_communication);
  CHECK(a5.use_goal_awareness);
}

TEST_CASE("agent type names round-trip and reject junk") {
  for (AgentType t : {AgentType::A1, AgentType::A2, AgentType::A3, AgentType::A4,
                      AgentType::A5})
    CHECK(parse_agent_type(to_string(t)) == t);
  CHECK(to_string(AgentType::A3) == "a3");
  CHECK_THROWS_AS(parse_agent_type("a6"), ConfigError);
  CHECK_THROWS_AS(parse_agent_type("A1"), ConfigError);

  CHECK(parse_difficulty("easy") == Difficulty::Easy);
  CHECK(parse_difficulty("hard") == Difficulty::Hard);
  CHECK_THROWS_AS(parse_difficulty("medium"), ConfigError);

  CHECK(parse_novelty("time") == NoveltyMode::Time);
  CHECK(parse_novelty("count") == NoveltyMode::Count);
  CHECK(to_string(NoveltyMode::Count) == "count");
  CHECK_THROWS_AS(parse_novelty("banana"), ConfigError);
}

TEST_CASE("intrinsic weight is zeroed for the two non-time-aware types") {
  ScenarioConfig c;
  c.alpha = 0.37;
  c.agent_type = AgentType::A1;
  CHECK(effective_alpha(c) == 0.0);
  c.agent_type = AgentType::A2;
  CHECK(effective_alpha(c) == 0.0);
  c.agent_type = AgentType::A3;
  CHECK(effective_alpha(c) == 0.37);
  c.agent_type = AgentType::A4;
  CHECK(effective_alpha(c) == 0.37);
  c.agent_type = AgentType::A5;
  CHECK(effective_alpha(c) == 0.37);
}

TEST_CASE("per-episode reward averaging divides by the arrival step count") {
  const std::vector<double> rs{1.0, 2.0, 3.0};
  CHECK(avg_reward(rs, 3) == 2.0);
  CHECK(avg_reward(std::vector<double>{-0.5}, 1) == -0.5);
  CHECK_THROWS_AS(avg_reward(rs, 2), ConfigError);   // list size must equal T_i
  CHECK_THROWS_AS(avg_reward(rs, 0), ConfigError);
  CHECK_THROWS_AS(avg_reward(std::vector<double>{}, 0), ConfigError);
}

TEST_CASE("run summaries aggregate hand-checked episode metrics") {
  // Episode means 0.3 and 0.6 -> overall 0.45, population std
  // sqrt(((0.3-0.45)^2 + (0.6-0.45)^2)/2) = 0.15.
  std::vector<EpisodeMetrics> eps(2);
  eps[0].episode = 0;
  eps[0].agents = {{0.2, 10, true}, {0.4, 20, false}};
  eps[1].episode = 1;
  eps[1].agents = {{0.5, 30, true}, {0.7, 40, true}};

  CHECK(eps[0].agent_mean() == Catch::Approx(0.3).epsilon(1e-12));
  CHECK(overall_performance(eps) == Catch::Approx(0.45).epsilon(1e-12));

  const RunSummary s = summarize(eps);
  CHECK(s.r_overall == Catch::Approx(0.45).epsilon(1e-12));
  CHECK(s.r_std == Catch::Approx(0.15).epsilon(1e-9));
  CHECK(s.mean_steps == Catch::Approx(25.0));
  CHECK(s.reach_rate == Catch::Approx(0.75));

  CHECK(overall_performance({}) == 0.0);
  const RunSummary empty = summarize({});
  CHECK(empty.r_overall == 0.0);
  CHECK(empty.r_std == 0.0);
}

TEST_CASE("config keys accept dash and underscore spellings") {
  ScenarioConfig c;
  CHECK(apply_config_kv(c, "max_steps", "17"));
  CHECK(c.max_steps == 17);
  CHECK(apply_config_kv(c, "max-steps", "23"));
  CHECK(c.max_steps == 23);

  CHECK(apply_config_kv(c, "env", "large"));
  CHECK(c.env == "large");
  CHECK(apply_config_kv(c, "difficulty", "hard"));
  CHECK(c.difficulty == Difficulty::Hard);
  CHECK(apply_config_kv(c, "scenario", "2"));
  CHECK(c.scenario == 2);
  CHECK(apply_config_kv(c, "agent_type", "a4"));
  CHECK(c.agent_type == AgentType::A4);
  CHECK(apply_config_kv(c, "n_agents", "3"));
  CHECK(apply_config_kv(c, "episodes", "42"));
  CHECK(c.episodes == 42);
  CHECK(apply_config_kv(c, "seed", "12345"));
  CHECK(c.seed == 12345u);
  CHECK(apply_config_kv(c, "alpha", "0.25"));
  CHECK(c.alpha == 0.25);
  CHECK(apply_config_kv(c, "beta", "0.5"));
  CHECK(apply_config_kv(c, "lambda_stay", "0.4"));
  CHECK(c.lambda_stay == 0.4);
  CHECK(apply_config_kv(c, "gamma", "0.9"));
  CHECK(apply_config_kv(c, "tau", "0.01"));
  CHECK(apply_config_kv(c, "actor_lr", "0.001"));
  CHECK(apply_config_kv(c, "critic_lr", "0.002"));
  CHECK(apply_config_kv(c, "batch", "16"));
  CHECK(c.batch == 16);
  CHECK(apply_config_kv(c, "replay_capacity", "500"));
  CHECK(c.replay_capacity == 500);
  CHECK(apply_config_kv(c, "r_obs", "3"));
  CHECK(apply_config_kv(c, "p_toggle", "0.1"));
  CHECK(apply_config_kv(c, "time_increment", "0.02"));
  CHECK(apply_config_kv(c, "j_threshold", "0.6"));
  CHECK(apply_config_kv(c, "eps_start", "0.8"));
  CHECK(apply_config_kv(c, "eps_end", "0.1"));
  CHECK(apply_config_kv(c, "novelty", "count"));
  CHECK(c.novelty == NoveltyMode::Count);
  CHECK(apply_config_kv(c, "persist_mental_state", "off"));
  CHECK_FALSE(c.persist_mental_state);
  CHECK(apply_config_kv(c, "instrument", "yes"));
  CHECK(c.instrument_params);
  CHECK(apply_config_kv(c, "diagnostics", "1"));
  CHECK(c.diagnostics);
  CHECK(apply_config_kv(c, "layout", "/tmp/whatever.txt"));
  CHECK(c.layout_file == "/tmp/whatever.txt");

  CHECK_FALSE(apply_config_kv(c, "no_such_key", "1"));
}

TEST_CASE("config values that fail to parse raise configuration errors") {
  ScenarioConfig c;
  CHECK_THROWS_AS(apply_config_kv(c, "episodes", "ten"), ConfigError);
  CHECK_THROWS_AS(apply_config_kv(c, "alpha", "fast"), ConfigError);
  CHECK_THROWS_AS(apply_config_kv(c, "episodes", "99999999999999999999"), ConfigError);
  CHECK_THROWS_AS(apply_config_kv(c, "difficulty", "medium"), ConfigError);
  CHECK_THROWS_AS(apply_config_kv(c, "agent_type", "a9"), ConfigError);
  CHECK_THROWS_AS(apply_config_kv(c, "novelty", "x"), ConfigError);
  CHECK_THROWS_AS(apply_config_kv(c, "diagnostics", "maybe"), ConfigError);
}

TEST_CASE("boolean config values accept the usual spellings") {
  for (const char* v : {"true", "1", "yes", "on"}) CHECK(parse_bool(v));
  for (const char* v : {"false", "0", "no", "off"}) CHECK_FALSE(parse_bool(v));
  CHECK_THROWS_AS(parse_bool("si"), ConfigError);
}

TEST_CASE("config files support comments, whitespace, and overrides") {
  const auto path = write_temp_file("decmarl_cfg_good.cfg",
                                    "# run shape\n"
                                    "episodes = 7\n"
                                    "\n"
                                    "  alpha=0.2  # first value\n"
                                    "alpha = 0.7\n"
                                    "agent_type = a3   # trailing comment\n");
  ScenarioConfig c;
  apply_config_file(c, path.string());
  CHECK(c.episodes == 7);
  CHECK(c.alpha == 0.7);  // later line wins
  CHECK(c.agent_type == AgentType::A3);
}

TEST_CASE("config files report the offending line") {
  SECTION("unknown key") {
    const auto path = write_temp_file("decmarl_cfg_unknown.cfg",
                                      "episodes = 3\n"
                                      "bogus_key = 1\n");
    try {
      ScenarioConfig c;
      apply_config_file(c, path.string());
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
      CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
  }
  SECTION("missing equals sign") {
    const auto path = write_temp_file("decmarl_cfg_noeq.cfg", "episodes 3\n");
    ScenarioConfig c;
    CHECK_THROWS_AS(apply_config_file(c, path.string()), ConfigError);
  }
  SECTION("missing file") {
    ScenarioConfig c;
    CHECK_THROWS_AS(apply_config_file(c, "/nonexistent/decmarl.cfg"), ConfigError);
  }
  SECTION("extra handler consumes custom keys") {
    const auto path = write_temp_file("decmarl_cfg_extra.cfg",
                                      "episodes = 3\n"
                                      "out-dir = /tmp/x\n");
    ScenarioConfig c;
    std::string seen_key, seen_value;
    apply_config_file(c, path.string(), [&](const std::string& k, const std::string& v) {
      seen_key = k;
      seen_value = v;
      return k == "out-dir";
    });
    CHECK(c.episodes == 3);
    CHECK(seen_key == "out-dir");
    CHECK(seen_value == "/tmp/x");
  }
}

TEST_CASE("configuration validation rejects out-of-range settings") {
  const ScenarioConfig good;
  CHECK_NOTHROW(validate_config(good));

  const auto rejects = [&](auto&& tweak) {
    ScenarioConfig c;
    tweak(c);
    CHECK_THROWS_AS(validate_config(c), ConfigError);
  };
  rejects([](ScenarioConfig& c) { c.env = "medium"; });
  rejects([](ScenarioConfig& c) { c.scenario = 3; });
  rejects([](ScenarioConfig& c) { c.n_agents = 0; });
  rejects([](ScenarioConfig& c) { c.episodes = 0; });
  rejects([](ScenarioConfig& c) { c.max_steps = 0; });
  rejects([](ScenarioConfig& c) { c.alpha = -0.1; });
  rejects([](ScenarioConfig& c) { c.alpha = 1.1; });
  rejects([](ScenarioConfig& c) { c.beta = 2.0; });
  rejects([](ScenarioConfig& c) { c.lambda_stay = 0.0; });  // open interval
  rejects([](ScenarioConfig& c) { c.lambda_stay = 1.0; });
  rejects([](ScenarioConfig& c) { c.gamma = 1.5; });
  rejects([](ScenarioConfig& c) { c.tau = -0.1; });
  rejects([](ScenarioConfig& c) { c.actor_lr = 0.0; });
  rejects([](ScenarioConfig& c) { c.critic_lr = -1.0; });
  rejects([](ScenarioConfig& c) { c.batch = 0; });
  rejects([](ScenarioConfig& c) { c.replay_capacity = c.batch - 1; });
  rejects([](ScenarioConfig& c) { c.r_obs = 0; });
  rejects([](ScenarioConfig& c) { c.p_toggle = 1.5; });
  rejects([](ScenarioConfig& c) { c.time_increment = 0.0; });
  rejects([](ScenarioConfig& c) { c.j_threshold = -0.5; });
  rejects([](ScenarioConfig& c) { c.eps_start = 1.5; });
  rejects([](ScenarioConfig& c) { c.eps_end = -0.1; });

  // A custom layout lifts the env-name restriction.
  ScenarioConfig custom;
  custom.env = "maze";
  custom.layout_file = "/tmp/some_layout.txt";
  CHECK_NOTHROW(validate_config(custom));
}

TEST_CASE("config labels name every axis of the run") {
  ScenarioConfig c;
  c.env = "base";
  c.difficulty = Difficulty::Easy;
  c.scenario = 1;
  c.agent_type = AgentType::A5;
  c.seed = 7;
  CHECK(config_label(c) == "base/easy/s1/a5/seed=7");
  c.difficulty = Difficulty::Hard;
  c.scenario = 2;
  c.agent_type = AgentType::A2;
  CHECK(config_label(c) == "base/hard/s2/a2/seed=7");
}

TEST_CASE("simulations wire goals, schedule, and rewards from the config") {
  ScenarioConfig cfg = tiny_config();
  cfg.episodes = 4;  // anneal over 4 * 10 / 2 = 20 ticks
  cfg.scenario = 2;
  auto sim = build_sim(cfg);

  // Base map objects scan in row-major order: (2,3), (7,3), (5,7).
  CHECK(sim->world.agent_goal(0) == Cell{2, 3});
  CHECK(sim->world.agent_goal(1) == Cell{2, 3});
  CHECK(sim->world.agent_goal(2) == Cell{7, 3});
  for (int i = 0; i < 3; ++i)
    CHECK(sim->agents[i].mind.goal() == sim->world.agent_goal(i));

  CHECK(sim->schedule.at(0) == Catch::Approx(0.9));
  CHECK(sim->schedule.at(10) == Catch::Approx(0.475));
  CHECK(sim->schedule.at(20) == Catch::Approx(0.05));

  CHECK(sim->rewards.delta_max == 20);
  CHECK(sim->rewards.alpha == Catch::Approx(cfg.alpha));  // a5 keeps alpha
  CHECK(sim->rewards.lambda_stay == Catch::Approx(cfg.lambda_stay));

  cfg.agent_type = AgentType::A2;
  auto sim2 = build_sim(cfg);
  CHECK(sim2->rewards.alpha == 0.0);
}

TEST_CASE("simulation building rejects impossible setups") {
  ScenarioConfig cfg = tiny_config();
  cfg.env = "nowhere";
  CHECK_THROWS_AS(build_sim(cfg), ConfigError);

  cfg = tiny_config();
  cfg.n_agents = 4;  // base map only provides 3 starts
  CHECK_THROWS_AS(build_sim(cfg), ConfigError);

  cfg = tiny_config();
  cfg.layout_file = "/nonexistent/map.txt";
  CHECK_THROWS_AS(build_sim(cfg), ConfigError);
}

TEST_CASE("mental state persistence across episodes is controlled by config") {
  ScenarioConfig cfg = tiny_config();
  cfg.agent_type = AgentType::A2;
  cfg.max_steps = 1;
  auto sim = build_sim(cfg);

  run_episode(*sim, 0);
  // One absorb at the (0,0) corner with radius 2 sees exactly the 3x3 clip.
  CHECK(sim->agents[0].mind.known_count() == 9);
  CHECK(sim->agents[0].mind.at({0, 0}).visits == 1);

  run_episode(*sim, 1);
  CHECK(sim->agents[0].mind.at({0, 0}).visits == 2);  // persisted across episodes

  sim->cfg.persist_mental_state = false;
  run_episode(*sim, 2);
  CHECK(sim->agents[0].mind.at({0, 0}).visits == 1);  // wiped at the boundary
}

TEST_CASE("the leanest agent type never populates its mental state") {
  ScenarioConfig cfg = tiny_config();
  cfg.agent_type = AgentType::A1;
  auto sim = build_sim(cfg);
  run_episode(*sim, 0);
  for (const AgentRuntime& a : sim->agents) CHECK(a.mind.known_count() == 0);
}

TEST_CASE("agents that spawn on their goal score a full-reward one-step episode") {
  ScenarioConfig cfg = tiny_config();
  auto sim = build_sim(cfg);
  sim->world.set_agent_goal(0, sim->world.agent_start(0));

  const EpisodeMetrics em = run_episode(*sim, 0);
  CHECK(em.agents[0].avg_r == 1.0);
  CHECK(em.agents[0].steps_to_goal == 1);
  CHECK(em.agents[0].reached);

  SECTION("everyone on goal ends the episode before any tick") {
    for (int i = 0; i < 3; ++i)
      sim->world.set_agent_goal(i, sim->world.agent_start(i));
    const long tick_before = sim->global_tick;
    const EpisodeMetrics all = run_episode(*sim, 1);
    CHECK(sim->global_tick == tick_before);
    for (const AgentEpisode& a : all.agents) {
      CHECK(a.avg_r == 1.0);
      CHECK(a.steps_to_goal == 1);
      CHECK(a.reached);
    }
  }
}

TEST_CASE("a scripted walk to the goal stops accumulating at arrival") {
  ScenarioConfig cfg = tiny_config();
  cfg.agent_type = AgentType::A2;  // alpha = 0, so move rewards are extrinsic only
  cfg.max_steps = 5;
  auto sim = build_sim(cfg);
  sim->world.set_agent_goal(0, Cell{2, 0});  // two steps right of the start
  sim->action_override = [](int agent, const GridWorld&) -> std::optional<Action> {
    return agent == 0 ? Action::Right : Action::Stay;
  };

  const EpisodeMetrics em = run_episode(*sim, 0);
  // Step 1 moves to (1,0): extrinsic 1 - 1/20. Step 2 lands on the goal: +1.
  // The agent then freezes, so the average runs over exactly two rewards.
  const double expected = ((1.0 - 1.0 / 20.0) + 1.0) / 2.0;
  CHECK(em.agents[0].avg_r == Catch::Approx(expected).epsilon(1e-12));
  CHECK(em.agents[0].steps_to_goal == 2);
  CHECK(em.agents[0].reached);
}

TEST_CASE("scripted failure modes produce the documented penalty averages") {
  ScenarioConfig cfg = tiny_config();
  cfg.agent_type = AgentType::A1;
  cfg.max_steps = 5;

  SECTION("stalling pays the deliberate-stay penalty every step") {
    auto sim = build_sim(cfg);
    sim->action_override = [](int, const GridWorld&) { return Action::Stay; };
    const EpisodeMetrics em = run_episode(*sim, 0);
    for (const AgentEpisode& a : em.agents) {
      CHECK(a.avg_r == Catch::Approx(-0.5));
      CHECK(a.steps_to_goal == 5);  // never arrived: reported as max_steps
      CHECK_FALSE(a.reached);
    }
  }
  SECTION("walking into the wall pays the collision penalty every step") {
    auto sim = build_sim(cfg);
    sim->action_override = [](int agent, const GridWorld&) -> std::optional<Action> {
      if (agent != 0) return Action::Stay;
      return Action::Left;  // off the west edge from (0,0)
    };
    const EpisodeMetrics em = run_episode(*sim, 0);
    CHECK(em.agents[0].avg_r == -1.0);
    CHECK_FALSE(em.agents[0].reached);
  }
}

TEST_CASE("adjacent stationary agents run one session per tick with goal awareness") {
  const auto map = write_temp_file("decmarl_cluster.txt", kClusterMap);
  ScenarioConfig cfg = tiny_config();
  cfg.layout_file = map.string();
  cfg.env = "cluster";
  cfg.agent_type = AgentType::A5;
  cfg.instrument_params = true;
  auto sim = build_sim(cfg);
  sim->action_override = [](int, const GridWorld&) { return Action::Stay; };

  KnowledgePacket::constructed_count = 0;
  run_episode(*sim, 0);

  // Agents 0 and 1 sit one cell apart for all 10 ticks; agent 2 is out of
  // range. That yields two sessions and two peer packets per tick.
  CHECK(sim->stats.sessions == 20);
  CHECK(sim->stats.packets == 20);
  CHECK(KnowledgePacket::constructed_count == 20);

  // Only the first tick's empty-mind packets pass the overlap gate (J = 0);
  // afterwards the windows overlap at J = 0.75 and then 1.0.
  CHECK(sim->stats.aggregations == 2);
  CHECK(sim->stats.param_guard_violations == 0);

  // Agent 1's window covers column x=3, which agent 0 cannot see. Those three
  // cells arrive by merge on tick 2 and stay fresher in the sender's packets
  // on every later tick, so each of ticks 2..10 adopts exactly three records.
  CHECK(sim->stats.merged_cells == 27);

  REQUIRE(sim->session_log.size() == 20);
  CHECK(sim->session_log[0].step == 1);
  CHECK(sim->session_log[0].agent == 0);
  CHECK(sim->session_log[1].step == 1);
  CHECK(sim->session_log[1].agent == 1);
  REQUIRE(sim->session_log[0].outcome.j_values.size() == 1);
  CHECK(sim->session_log[0].outcome.j_values[0] == 0.0);
  CHECK(sim->session_log[0].outcome.peers == 1);
  CHECK(sim->session_log[0].outcome.advisors == 0);
  CHECK(sim->session_log[0].outcome.aggregation_applied);
  CHECK(sim->session_log[2].step == 2);
  CHECK(sim->session_log[2].outcome.j_values[0] == 0.75);
  CHECK_FALSE(sim->session_log[2].outcome.aggregation_applied);
  CHECK(sim->session_log[4].outcome.j_values[0] == 1.0);
}

TEST_CASE("without goal awareness the same encounters merge but never aggregate") {
  const auto map = write_temp_file("decmarl_cluster.txt", kClusterMap);
  ScenarioConfig cfg = tiny_config();
  cfg.layout_file = map.string();
  cfg.env = "cluster";
  cfg.agent_type = AgentType::A4;
  cfg.instrument_params = true;
  auto sim = build_sim(cfg);
  sim->action_override = [](int, const GridWorld&) { return Action::Stay; };

  run_episode(*sim, 0);

  CHECK(sim->stats.sessions == 20);
  // Tick 1 offers empty minds, and advisor packets with nothing to share are
  // suppressed; ticks 2..10 carry one full-records packet per session.
  CHECK(sim->stats.packets == 18);
  CHECK(sim->stats.aggregations == 0);
  CHECK(sim->stats.merged_cells == 27);
  CHECK(sim->stats.param_guard_violations == 0);
  for (const SessionLogRow& row : sim->session_log) {
    CHECK(row.outcome.peers == 0);
    CHECK(row.outcome.j_values.empty());
    CHECK_FALSE(row.outcome.aggregation_applied);
  }
}

TEST_CASE("communication-free types construct no packets at all") {
  for (AgentType t : {AgentType::A1, AgentType::A2, AgentType::A3}) {
    const auto map = write_temp_file("decmarl_cluster.txt", kClusterMap);
    ScenarioConfig cfg = tiny_config();
    cfg.layout_file = map.string();
    cfg.env = "cluster";
    cfg.agent_type = t;
    KnowledgePacket::constructed_count = 0;
    const RunResult r = run_single(cfg);
    CHECK(KnowledgePacket::constructed_count == 0);
    CHECK(r.stats.sessions == 0);
    CHECK(r.stats.packets == 0);
    CHECK(r.stats.aggregations == 0);
    CHECK(r.stats.merged_cells == 0);
    CHECK(r.sessions.empty());
  }
}

TEST_CASE("full runs are deterministic for a fixed seed") {
  ScenarioConfig cfg = tiny_config();
  cfg.episodes = 2;
  cfg.seed = 3;
  cfg.diagnostics = true;

  const RunResult a = run_single(cfg);
  const RunResult b = run_single(cfg);
  CHECK(serialize_run(a) == serialize_run(b));

  REQUIRE(a.episodes.size() == 2);
  CHECK(a.episodes[0].episode == 0);
  CHECK(a.episodes[1].episode == 1);
  for (const EpisodeMetrics& e : a.episodes) {
    REQUIRE(e.agents.size() == 3);
    for (const AgentEpisode& ag : e.agents) {
      CHECK(ag.avg_r >= -1.0);
      CHECK(ag.avg_r <= 1.0);
    }
  }
  CHECK(a.summary.reach_rate >= 0.0);
  CHECK(a.summary.reach_rate <= 1.0);
  CHECK(a.summary.mean_steps >= 1.0);
  CHECK(a.summary.mean_steps <= cfg.max_steps);

  ScenarioConfig other = cfg;
  other.seed = 4;
  const RunResult c = run_single(other);
  CHECK(serialize_run(a) != serialize_run(c));
}

TEST_CASE("metric rows render with fixed six-decimal formatting") {
  CHECK(fmt6(0.5) == "0.500000");
  CHECK(fmt6(-1.0) == "-1.000000");
  CHECK(fmt6(0.0) == "0.000000");

  ScenarioConfig cfg;
  cfg.env = "base";
  cfg.difficulty = Difficulty::Hard;
  cfg.scenario = 2;
  cfg.agent_type = AgentType::A4;
  cfg.seed = 9;
  cfg.episodes = 100;
  cfg.max_steps = 300;
  RunSummary s;
  s.r_overall = 0.125;
  s.r_std = 0.5;
  s.mean_steps = 42.25;
  s.reach_rate = 1.0;

  std::ostringstream out;
  write_metrics_row(out, cfg, s);
  CHECK(out.str() ==
        "base,hard,2,a4,9,100,300,0.125000,0.500000,42.250000,1.000000\n");
  CHECK(split_csv(kMetricsHeader).size() == 11);
  CHECK(split_csv(out.str()).size() == 11);
}

TEST_CASE("per-episode and session tables use one-based agent columns") {
  RunResult r;
  r.config = ScenarioConfig{};
  EpisodeMetrics em;
  em.episode = 0;
  em.agents = {{0.5, 3, true}, {-0.25, 5, false}};
  r.episodes.push_back(em);

  std::ostringstream eps;
  write_episodes_csv(eps, r);
  CHECK(eps.str() ==
        "episode,agent,avg_r,steps_to_goal,reached\n"
        "0,1,0.500000,3,1\n"
        "0,2,-0.250000,5,0\n");

  SessionLogRow row;
  row.step = 7;
  row.agent = 0;
  row.outcome.contacts = 2;
  row.outcome.peers = 1;
  row.outcome.advisors = 1;
  row.outcome.packets = 2;
  row.outcome.merged_cells = 4;
  row.outcome.j_values = {0.25, 0.5};
  row.outcome.aggregation_applied = true;
  r.sessions.push_back(row);

  std::ostringstream ses;
  write_sessions_csv(ses, r);
  CHECK(ses.str() ==
        "step,agent,contacts,peers,advisors,j_values,merged_cells,aggregation_applied\n"
        "7,1,2,1,1,0.250000;0.500000,4,1\n");

  std::ostringstream curve;
  write_learning_curve_csv(curve, r);
  CHECK(curve.str() ==
        "episode,avg_r_agent1,avg_r_agent2,mean_avg_r\n"
        "0,0.500000,-0.250000,0.125000\n");

  r.diagnostics.push_back({3, 1, 0.5, 0.01, 0.9});
  std::ostringstream diag;
  write_diagnostics_csv(diag, r);
  CHECK(diag.str() ==
        "step,agent,reward,critic_loss,epsilon\n"
        "3,2,0.500000,0.010000,0.900000\n");
}

TEST_CASE("run output directories contain the expected files") {
  RunResult r;
  r.config = ScenarioConfig{};
  EpisodeMetrics em;
  em.episode = 0;
  em.agents = {{0.5, 3, true}};
  r.episodes.push_back(em);
  r.summary = summarize(r.episodes);

  const auto dir = std::filesystem::temp_directory_path() / "decmarl_outputs_test";
  std::filesystem::remove_all(dir);

  write_run_outputs(r, dir);
  CHECK(std::filesystem::exists(dir / "metrics.csv"));
  CHECK(std::filesystem::exists(dir / "episodes.csv"));
  CHECK(std::filesystem::exists(dir / "sessions.csv"));
  CHECK(std::filesystem::exists(dir / "learning_curve.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "diagnostics.csv"));

  r.config.diagnostics = true;
  write_run_outputs(r, dir);
  CHECK(std::filesystem::exists(dir / "diagnostics.csv"));

  std::ifstream metrics(dir / "metrics.csv");
  std::string header;
  std::getline(metrics, header);
  CHECK(header == kMetricsHeader);
  std::filesystem::remove_all(dir);
}

TEST_CASE("batch runs enumerate every configuration with stepped seeds") {
  ScenarioConfig base = tiny_config();
  base.max_steps = 5;
  base.seed = 10;
  MatrixSpec spec;
  spec.envs = {"base"};
  spec.difficulties = {Difficulty::Easy};
  spec.scenarios = {1};
  spec.types = {AgentType::A1, AgentType::A5};
  spec.seeds = 2;

  int callbacks = 0;
  const auto rows = run_matrix(base, spec, [&](const ScenarioConfig&, const RunSummary&) {
    ++callbacks;
  });
  REQUIRE(rows.size() == 4);
  CHECK(callbacks == 4);
  CHECK(rows[0].config.agent_type == AgentType::A1);
  CHECK(rows[0].config.seed == 10u);
  CHECK(rows[1].config.agent_type == AgentType::A1);
  CHECK(rows[1].config.seed == 11u);
  CHECK(rows[2].config.agent_type == AgentType::A5);
  CHECK(rows[2].config.seed == 10u);
  CHECK(rows[3].config.agent_type == AgentType::A5);
  CHECK(rows[3].config.seed == 11u);

  std::ostringstream csv1, csv2;
  write_matrix_csv(csv1, rows);
  const auto rows2 = run_matrix(base, spec);
  write_matrix_csv(csv2, rows2);
  CHECK(csv1.str() == csv2.str());

  std::string first_line;
  std::istringstream in(csv1.str());
  std::getline(in, first_line);
  CHECK(first_line == kMetricsHeader);
  int data_lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++data_lines;
  CHECK(data_lines == 4);
}

TEST_CASE("a failing configuration aborts the batch with its label") {
  ScenarioConfig base = tiny_config();
  base.n_agents = 4;  // no map in the matrix offers four starts
  MatrixSpec spec;
  spec.envs = {"base"};
  spec.difficulties = {Difficulty::Easy};
  spec.scenarios = {1};
  spec.types = {AgentType::A1};
  spec.seeds = 1;
  try {
    run_matrix(base, spec);
    FAIL("expected the matrix to abort");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("base/easy/s1/a1/seed=1") != std::string::npos);
  }
}
