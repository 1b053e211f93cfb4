#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "decmarl/encoding.hpp"
#include "decmarl/grid.hpp"
#include "decmarl/layout.hpp"
#include "decmarl/learner.hpp"
#include "decmarl/mental_state.hpp"
#include "decmarl/protocol.hpp"

namespace decmarl {

// Ablation ladder: each type adds one capability on top of the previous.
enum class AgentType { A1, A2, A3, A4, A5 };

struct AgentTypeFlags {
  bool use_mental_state = false;
  bool use_time_awareness = false;
  bool use_communication = false;
  bool use_goal_awareness = false;
};

inline AgentTypeFlags flags_for(AgentType t) {
  switch (t) {
    case AgentType::A1: return {false, false, false, false};
    case AgentType::A2: return {true, false, false, false};
    case AgentType::A3: return {true, true, false, false};
    case AgentType::A4: return {true, true, true, false};
    case AgentType::A5: return {true, true, true, true};
  }
  throw ConfigError("unknown agent type");
}

inline std::string to_string(AgentType t) {
  switch (t) {
    case AgentType::A1: return "a1";
    case AgentType::A2: return "a2";
    case AgentType::A3: return "a3";
    case AgentType::A4: return "a4";
    case AgentType::A5: return "a5";
  }
  return "?";
}

inline AgentType parse_agent_type(const std::string& s) {
  if (s == "a1") return AgentType::A1;
  if (s == "a2") return AgentType::A2;
  if (s == "a3") return AgentType::A3;
  if (s == "a4") return AgentType::A4;
  if (s == "a5") return AgentType::A5;
  throw ConfigError("unknown agent type '" + s + "' (expected a1..a5)");
}

inline Difficulty parse_difficulty(const std::string& s) {
  if (s == "easy") return Difficulty::Easy;
  if (s == "hard") return Difficulty::Hard;
  throw ConfigError("unknown difficulty '" + s + "' (expected easy|hard)");
}

inline std::string to_string(NoveltyMode m) {
  return m == NoveltyMode::Time ? "time" : "count";
}

inline NoveltyMode parse_novelty(const std::string& s) {
  if (s == "time") return NoveltyMode::Time;
  if (s == "count") return NoveltyMode::Count;
  throw ConfigError("unknown novelty mode '" + s + "' (expected time|count)");
}

struct ScenarioConfig {
  std::string env = "base";
  Difficulty difficulty = Difficulty::Easy;
  int scenario = 1;
  AgentType agent_type = AgentType::A5;
  int n_agents = 3;
  int episodes = 100;
  int max_steps = 300;
  std::uint64_t seed = 1;
  double alpha = 0.1;
  double beta = 0.1;
  double lambda_stay = 0.5;
  double gamma = 0.99;
  double tau = 1e-3;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  int batch = 64;
  long replay_capacity = 100000;
  int r_obs = 2;
  double p_toggle = 0.02;
  double time_increment = 0.01;
  double j_threshold = 0.5;
  double eps_start = 0.9;
  double eps_end = 0.05;
  NoveltyMode novelty = NoveltyMode::Time;
  bool persist_mental_state = true;
  bool instrument_params = false;
  bool diagnostics = false;
  std::string layout_file;  // overrides the built-in env map when set
};

inline void validate_config(const ScenarioConfig& c) {
  if (c.layout_file.empty() && c.env != "base" && c.env != "large")
    throw ConfigError("env must be base or large (or provide a layout file)");
  if (c.scenario != 1 && c.scenario != 2) throw ConfigError("scenario must be 1 or 2");
  if (c.n_agents < 1) throw ConfigError("n_agents must be positive");
  if (c.episodes < 1) throw ConfigError("episodes must be positive");
  if (c.max_steps < 1) throw ConfigError("max_steps must be positive");
  if (c.alpha < 0 || c.alpha > 1) throw ConfigError("alpha must lie in [0,1]");
  if (c.beta < 0 || c.beta > 1) throw ConfigError("beta must lie in [0,1]");
  if (c.lambda_stay <= 0 || c.lambda_stay >= 1)
    throw ConfigError("lambda_stay must lie in (0,1)");
  if (c.gamma < 0 || c.gamma > 1) throw ConfigError("gamma must lie in [0,1]");
  if (c.tau < 0 || c.tau > 1) throw ConfigError("tau must lie in [0,1]");
  if (c.actor_lr <= 0 || c.critic_lr <= 0)
    throw ConfigError("learning rates must be positive");
  if (c.batch < 1) throw ConfigError("batch must be positive");
  if (c.replay_capacity < c.batch)
    throw ConfigError("replay capacity must be at least the batch size");
  if (c.r_obs < 1) throw ConfigError("observation radius must be >= 1");
  if (c.p_toggle < 0 || c.p_toggle > 1) throw ConfigError("p_toggle must lie in [0,1]");
  if (c.time_increment <= 0) throw ConfigError("time_increment must be positive");
  if (c.j_threshold < 0 || c.j_threshold > 1)
    throw ConfigError("j_threshold must lie in [0,1]");
  if (c.eps_start < 0 || c.eps_start > 1 || c.eps_end < 0 || c.eps_end > 1)
    throw ConfigError("epsilon bounds must lie in [0,1]");
}

// The two leanest types never blend in intrinsic reward.
inline double effective_alpha(const ScenarioConfig& c) {
  return flags_for(c.agent_type).use_time_awareness ? c.alpha : 0.0;
}

inline std::string config_label(const ScenarioConfig& c) {
  return c.env + "/" + to_string(c.difficulty) + "/s" + std::to_string(c.scenario) +
         "/" + to_string(c.agent_type) + "/seed=" + std::to_string(c.seed);
}

// --- key=value configuration -------------------------------------------------

inline std::string trim_copy(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

// Applies one setting; returns false when the key is not a scenario field so
// callers can layer their own keys (output dir, seed counts) on top.
inline bool apply_config_kv(ScenarioConfig& c, std::string key, const std::string& value) {
  for (char& ch : key)
    if (ch == '_') ch = '-';
  try {
    if (key == "env") c.env = value;
    else if (key == "difficulty") c.difficulty = parse_difficulty(value);
    else if (key == "scenario") c.scenario = std::stoi(value);
    else if (key == "agent-type") c.agent_type = parse_agent_type(value);
    else if (key == "n-agents") c.n_agents = std::stoi(value);
    else if (key == "episodes") c.episodes = std::stoi(value);
    else if (key == "max-steps") c.max_steps = std::stoi(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "alpha") c.alpha = std::stod(value);
    else if (key == "beta") c.beta = std::stod(value);
    else if (key == "lambda-stay") c.lambda_stay = std::stod(value);
    else if (key == "gamma") c.gamma = std::stod(value);
    else if (key == "tau") c.tau = std::stod(value);
    else if (key == "actor-lr") c.actor_lr = std::stod(value);
    else if (key == "critic-lr") c.critic_lr = std::stod(value);
    else if (key == "batch") c.batch = std::stoi(value);
    else if (key == "replay-capacity") c.replay_capacity = std::stol(value);
    else if (key == "r-obs") c.r_obs = std::stoi(value);
    else if (key == "p-toggle") c.p_toggle = std::stod(value);
    else if (key == "time-increment") c.time_increment = std::stod(value);
    else if (key == "j-threshold") c.j_threshold = std::stod(value);
    else if (key == "eps-start") c.eps_start = std::stod(value);
    else if (key == "eps-end") c.eps_end = std::stod(value);
    else if (key == "novelty") c.novelty = parse_novelty(value);
    else if (key == "persist-mental-state") c.persist_mental_state = parse_bool(value);
    else if (key == "instrument") c.instrument_params = parse_bool(value);
    else if (key == "diagnostics") c.diagnostics = parse_bool(value);
    else if (key == "layout") c.layout_file = value;
    else return false;
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad value '" + value + "' for config key '" + key + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("value '" + value + "' out of range for config key '" + key + "'");
  }
  return true;
}

// key=value lines, '#' comments. Settings here override earlier flag values.
inline void apply_config_file(
    ScenarioConfig& c, const std::string& path,
    const std::function<bool(const std::string&, const std::string&)>& extra = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim_copy(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim_copy(stripped.substr(0, eq));
    const std::string value = trim_copy(stripped.substr(eq + 1));
    if (apply_config_kv(c, key, value)) continue;
    if (extra && extra(key, value)) continue;
    throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
}

// --- metrics -----------------------------------------------------------------

struct AgentEpisode {
  double avg_r = 0.0;
  int steps_to_goal = 0;
  bool reached = false;
};

struct EpisodeMetrics {
  int episode = 0;
  std::vector<AgentEpisode> agents;

  double agent_mean() const {
    double s = 0.0;
    for (const AgentEpisode& a : agents) s += a.avg_r;
    return s / agents.size();
  }
};

inline double avg_reward(std::span<const double> rewards, int t_i) {
  if (t_i < 1 || rewards.size() != static_cast<std::size_t>(t_i))
    throw ConfigError("avg_reward: reward list must hold exactly T_i entries");
  double s = 0.0;
  for (double r : rewards) s += r;
  return s / t_i;
}

inline double overall_performance(std::span<const EpisodeMetrics> eps) {
  double s = 0.0;
  for (const EpisodeMetrics& e : eps) s += e.agent_mean();
  return eps.empty() ? 0.0 : s / eps.size();
}

struct RunSummary {
  double r_overall = 0.0;
  double r_std = 0.0;  // population std across episodes of the agent-mean
  double mean_steps = 0.0;
  double reach_rate = 0.0;
};

inline RunSummary summarize(std::span<const EpisodeMetrics> eps) {
  RunSummary s;
  if (eps.empty()) return s;
  double sum = 0.0, sumsq = 0.0;
  long steps = 0, reached = 0, agents = 0;
  for (const EpisodeMetrics& e : eps) {
    const double m = e.agent_mean();
    sum += m;
    sumsq += m * m;
    for (const AgentEpisode& a : e.agents) {
      steps += a.steps_to_goal;
      reached += a.reached ? 1 : 0;
      ++agents;
    }
  }
  const double n = static_cast<double>(eps.size());
  s.r_overall = sum / n;
  s.r_std = std::sqrt(std::max(0.0, sumsq / n - s.r_overall * s.r_overall));
  s.mean_steps = static_cast<double>(steps) / agents;
  s.reach_rate = static_cast<double>(reached) / agents;
  return s;
}

// --- simulation state --------------------------------------------------------

struct RunStats {
  long sessions = 0;  // sessions that actually had a contact
  long packets = 0;
  long aggregations = 0;
  long merged_cells = 0;
  long param_guard_violations = 0;  // parameter changes outside aggregation
};

struct SessionLogRow {
  long step = 0;  // global tick, cumulative across episodes
  int agent = 0;
  SessionOutcome outcome;
};

struct DiagnosticsRow {
  long step = 0;
  int agent = 0;
  double reward = 0.0;
  double critic_loss = 0.0;
  double epsilon = 0.0;
};

struct AgentRuntime {
  MentalState mind;
  std::unique_ptr<AgentBrain> brain;
  Rng action_rng;
  double reward_sum = 0.0;
  int steps = 0;
  bool reached = false;
  int t_arrive = 0;
};

// Everything one run owns. Brains keep a pointer to `tables`, so a Sim lives
// behind a unique_ptr and never moves.
struct Sim {
  ScenarioConfig cfg;
  AgentTypeFlags flags;
  GridWorld world;
  EmbeddingTables tables;
  std::vector<AgentRuntime> agents;
  EpsilonSchedule schedule;
  RewardParams rewards;
  long global_tick = 0;
  RunStats stats;
  std::vector<SessionLogRow> session_log;
  std::vector<DiagnosticsRow> diagnostics;
  // Test hook: scripted action for an agent this tick, or nullopt to let the
  // brain choose.
  std::function<std::optional<Action>(int, const GridWorld&)> action_override;

  // scratch reused across ticks
  std::vector<MentalState> mind_snaps;
  std::vector<std::vector<double>> actor_snaps;
  std::vector<std::vector<double>> critic_snaps;
  std::vector<ContactSnapshot> snaps;
  std::vector<double> x, xn;

  Sim(const ScenarioConfig& c, GridWorld w, EmbeddingTables t)
      : cfg(c), flags(flags_for(c.agent_type)), world(std::move(w)),
        tables(std::move(t)) {}
  Sim(const Sim&) = delete;
  Sim& operator=(const Sim&) = delete;
};

inline std::unique_ptr<Sim> build_sim(const ScenarioConfig& cfg) {
  validate_config(cfg);
  const Layout lay = cfg.layout_file.empty() ? builtin_layout(cfg.env)
                                             : load_layout_file(cfg.layout_file);
  GridWorld world = build_world(lay, cfg.difficulty, cfg.scenario, cfg.n_agents,
                                cfg.p_toggle, derive_seed(cfg.seed, 0x17));
  EmbeddingTables tables =
      build_tables(derive_seed(cfg.seed, 0xE), world.width(), world.height());
  auto sim = std::make_unique<Sim>(cfg, std::move(world), std::move(tables));

  BrainConfig bc;
  bc.gamma = cfg.gamma;
  bc.tau = cfg.tau;
  bc.actor_lr = cfg.actor_lr;
  bc.critic_lr = cfg.critic_lr;
  bc.batch = static_cast<std::size_t>(cfg.batch);
  bc.replay_capacity = static_cast<std::size_t>(cfg.replay_capacity);

  const int n = sim->world.num_agents();
  sim->agents.reserve(n);
  for (int i = 0; i < n; ++i)
    sim->agents.push_back(
        {MentalState(sim->world.width(), sim->world.height(), sim->world.agent_goal(i),
                     cfg.time_increment),
         std::make_unique<AgentBrain>(&sim->tables, bc, derive_seed(cfg.seed, 0xB0 + i)),
         Rng(derive_seed(cfg.seed, 0xA0 + i))});
  sim->schedule = {cfg.eps_start, cfg.eps_end,
                   static_cast<long>(cfg.episodes) * cfg.max_steps / 2};
  sim->rewards = {effective_alpha(cfg), cfg.lambda_stay,
                  sim->world.width() + sim->world.height()};
  sim->actor_snaps.resize(n);
  sim->critic_snaps.resize(n);
  sim->snaps.resize(n);
  sim->x.resize(kActorInputDim);
  sim->xn.resize(kActorInputDim);
  return sim;
}

// One episode: dynamics first, then agents in index order, each running
// observe -> absorb -> tick -> session -> act -> reward -> store -> learn.
// Agents at their goal freeze (time still passes for their mental state).
inline EpisodeMetrics run_episode(Sim& sim, int episode_index) {
  const ScenarioConfig& cfg = sim.cfg;
  const AgentTypeFlags fl = sim.flags;
  const int n = sim.world.num_agents();

  sim.world.reset_episode();
  if (!cfg.persist_mental_state)
    for (AgentRuntime& a : sim.agents) a.mind.reset();
  for (int i = 0; i < n; ++i) {
    AgentRuntime& a = sim.agents[i];
    a.reward_sum = 0.0;
    a.steps = 0;
    a.reached = sim.world.agent_position(i) == sim.world.agent_goal(i);
    a.t_arrive = a.reached ? 0 : cfg.max_steps;
  }

  for (int t = 1; t <= cfg.max_steps; ++t) {
    bool all_reached = true;
    for (const AgentRuntime& a : sim.agents) all_reached = all_reached && a.reached;
    if (all_reached) break;

    const double eps = sim.schedule.at(sim.global_tick);
    ++sim.global_tick;
    sim.world.step_dynamics();

    if (fl.use_communication) {
      // Packets must reflect tick-start state, so snapshot every mind (and,
      // when anyone could come within range this tick, every parameter set)
      // before the agents move or merge.
      sim.mind_snaps.clear();
      sim.mind_snaps.reserve(n);
      for (int i = 0; i < n; ++i) sim.mind_snaps.push_back(sim.agents[i].mind);
      bool contact_possible = false;
      for (int i = 0; i < n && !contact_possible; ++i)
        for (int j = i + 1; j < n; ++j)
          if (chebyshev(sim.world.agent_position(i), sim.world.agent_position(j)) <=
              cfg.r_obs + 2) {
            contact_possible = true;
            break;
          }
      for (int i = 0; i < n; ++i) {
        sim.snaps[i].id = i;
        sim.snaps[i].goal = sim.world.agent_goal(i);
        sim.snaps[i].mind = &sim.mind_snaps[i];
        if (fl.use_goal_awareness && contact_possible) {
          const auto ap = sim.agents[i].brain->actor().params();
          const auto cp = sim.agents[i].brain->critic().params();
          sim.actor_snaps[i].assign(ap.begin(), ap.end());
          sim.critic_snaps[i].assign(cp.begin(), cp.end());
          sim.snaps[i].actor_params = sim.actor_snaps[i];
          sim.snaps[i].critic_params = sim.critic_snaps[i];
        } else {
          sim.snaps[i].actor_params = {};
          sim.snaps[i].critic_params = {};
        }
      }
    }

    for (int i = 0; i < n; ++i) {
      AgentRuntime& ag = sim.agents[i];
      if (ag.reached) {
        ag.mind.tick();
        continue;
      }
      const Observation obs = sim.world.observe(i, cfg.r_obs);
      if (fl.use_mental_state) ag.mind.absorb(obs);
      ag.mind.tick();

      if (fl.use_communication) {
        const std::uint64_t before =
            cfg.instrument_params ? param_fingerprint(*ag.brain) : 0;
        SessionOutcome so =
            run_session(sim.world, i, ag.mind, ag.brain.get(), sim.snaps,
                        fl.use_goal_awareness, cfg.beta, cfg.j_threshold, cfg.r_obs);
        if (cfg.instrument_params && param_fingerprint(*ag.brain) != before &&
            !so.aggregation_applied)
          ++sim.stats.param_guard_violations;
        if (so.contacts > 0) {
          ++sim.stats.sessions;
          sim.stats.packets += so.packets;
          sim.stats.merged_cells += so.merged_cells;
          if (so.aggregation_applied) ++sim.stats.aggregations;
          sim.session_log.push_back({sim.global_tick, i, std::move(so)});
        }
      }

      actor_input_into(sim.world.agent_position(i), sim.world.agent_goal(i), ag.mind,
                       sim.tables, fl.use_time_awareness, cfg.novelty, sim.x.data());
      std::optional<Action> forced;
      if (sim.action_override) forced = sim.action_override(i, sim.world);
      const Action a =
          forced ? *forced : ag.brain->select_action(sim.x, eps, ag.action_rng);
      const MoveOutcome mo = sim.world.apply_action(i, a);
      const bool at_goal = mo.position == sim.world.agent_goal(i);
      const double r_ext = extrinsic_reward(sim.world, i, sim.rewards);
      const double r_agg =
          combined_move_reward(r_ext, ag.mind, sim.rewards.alpha, cfg.novelty);
      const double r = step_reward(mo.kind, at_goal, r_agg, cfg.lambda_stay);
      ag.reward_sum += r;
      ++ag.steps;
      actor_input_into(mo.position, sim.world.agent_goal(i), ag.mind, sim.tables,
                       fl.use_time_awareness, cfg.novelty, sim.xn.data());

      Transition tr;
      tr.x.assign(sim.x.begin(), sim.x.end());
      tr.action = static_cast<int>(a);
      tr.reward = r;
      tr.x_next.assign(sim.xn.begin(), sim.xn.end());
      tr.done = at_goal;
      ag.brain->push_transition(std::move(tr));
      const UpdateResult ur = ag.brain->update();

      if (cfg.diagnostics)
        sim.diagnostics.push_back({sim.global_tick, i, r, ur.critic_loss, eps});
      if (at_goal) {
        ag.reached = true;
        ag.t_arrive = t;
      }
    }
  }

  EpisodeMetrics em;
  em.episode = episode_index;
  em.agents.reserve(n);
  for (int i = 0; i < n; ++i) {
    const AgentRuntime& a = sim.agents[i];
    AgentEpisode ae;
    if (a.steps == 0) {  // spawned on the goal
      ae.avg_r = 1.0;
      ae.steps_to_goal = 1;
      ae.reached = true;
    } else {
      ae.avg_r = a.reward_sum / a.steps;
      ae.steps_to_goal = a.t_arrive;
      ae.reached = a.reached;
    }
    em.agents.push_back(ae);
  }
  return em;
}

struct RunResult {
  ScenarioConfig config;
  std::vector<EpisodeMetrics> episodes;
  std::vector<SessionLogRow> sessions;
  std::vector<DiagnosticsRow> diagnostics;
  RunStats stats;
  RunSummary summary;
};

inline RunResult run_single(const ScenarioConfig& cfg) {
  auto sim = build_sim(cfg);
  RunResult result;
  result.config = cfg;
  result.episodes.reserve(cfg.episodes);
  for (int ep = 0; ep < cfg.episodes; ++ep)
    result.episodes.push_back(run_episode(*sim, ep));
  result.sessions = std::move(sim->session_log);
  result.diagnostics = std::move(sim->diagnostics);
  result.stats = sim->stats;
  result.summary = summarize(result.episodes);
  return result;
}

// --- CSV output --------------------------------------------------------------

inline std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline constexpr const char* kMetricsHeader =
    "env,difficulty,scenario,agent_type,seed,episodes,max_steps,"
    "r_overall,r_std,mean_steps,reach_rate";

inline void write_metrics_row(std::ostream& out, const ScenarioConfig& cfg,
                              const RunSummary& s) {
  out << cfg.env << ',' << to_string(cfg.difficulty) << ',' << cfg.scenario << ','
      << to_string(cfg.agent_type) << ',' << cfg.seed << ',' << cfg.episodes << ','
      << cfg.max_steps << ',' << fmt6(s.r_overall) << ',' << fmt6(s.r_std) << ','
      << fmt6(s.mean_steps) << ',' << fmt6(s.reach_rate) << '\n';
}

inline void write_episodes_csv(std::ostream& out, const RunResult& r) {
  out << "episode,agent,avg_r,steps_to_goal,reached\n";
  for (const EpisodeMetrics& e : r.episodes)
    for (std::size_t i = 0; i < e.agents.size(); ++i)
      out << e.episode << ',' << i + 1 << ',' << fmt6(e.agents[i].avg_r) << ','
          << e.agents[i].steps_to_goal << ',' << (e.agents[i].reached ? 1 : 0) << '\n';
}

inline void write_sessions_csv(std::ostream& out, const RunResult& r) {
  out << "step,agent,contacts,peers,advisors,j_values,merged_cells,aggregation_applied\n";
  for (const SessionLogRow& row : r.sessions) {
    out << row.step << ',' << row.agent + 1 << ',' << row.outcome.contacts << ','
        << row.outcome.peers << ',' << row.outcome.advisors << ',';
    for (std::size_t k = 0; k < row.outcome.j_values.size(); ++k) {
      if (k) out << ';';
      out << fmt6(row.outcome.j_values[k]);
    }
    out << ',' << row.outcome.merged_cells << ','
        << (row.outcome.aggregation_applied ? 1 : 0) << '\n';
  }
}

inline void write_learning_curve_csv(std::ostream& out, const RunResult& r) {
  const std::size_t n = r.episodes.empty() ? 0 : r.episodes.front().agents.size();
  out << "episode";
  for (std::size_t i = 1; i <= n; ++i) out << ",avg_r_agent" << i;
  out << ",mean_avg_r\n";
  for (const EpisodeMetrics& e : r.episodes) {
    out << e.episode;
    for (const AgentEpisode& a : e.agents) out << ',' << fmt6(a.avg_r);
    out << ',' << fmt6(e.agent_mean()) << '\n';
  }
}

inline void write_diagnostics_csv(std::ostream& out, const RunResult& r) {
  out << "step,agent,reward,critic_loss,epsilon\n";
  for (const DiagnosticsRow& d : r.diagnostics)
    out << d.step << ',' << d.agent + 1 << ',' << fmt6(d.reward) << ','
        << fmt6(d.critic_loss) << ',' << fmt6(d.epsilon) << '\n';
}

inline void write_run_outputs(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "metrics.csv", std::ios::binary);
    f << kMetricsHeader << '\n';
    write_metrics_row(f, r.config, r.summary);
  }
  {
    std::ofstream f(dir / "episodes.csv", std::ios::binary);
    write_episodes_csv(f, r);
  }
  {
    std::ofstream f(dir / "sessions.csv", std::ios::binary);
    write_sessions_csv(f, r);
  }
  {
    std::ofstream f(dir / "learning_curve.csv", std::ios::binary);
    write_learning_curve_csv(f, r);
  }
  if (r.config.diagnostics) {
    std::ofstream f(dir / "diagnostics.csv", std::ios::binary);
    write_diagnostics_csv(f, r);
  }
}

// --- matrix ------------------------------------------------------------------

struct MatrixSpec {
  std::vector<std::string> envs = {"base", "large"};
  std::vector<Difficulty> difficulties = {Difficulty::Easy, Difficulty::Hard};
  std::vector<int> scenarios = {1, 2};
  std::vector<AgentType> types = {AgentType::A1, AgentType::A2, AgentType::A3,
                                  AgentType::A4, AgentType::A5};
  int seeds = 1;
};

struct MatrixRow {
  ScenarioConfig config;
  RunSummary summary;
};

// Every (env, difficulty, scenario, type, seed) combination, sequentially;
// seeds count up from the base seed. A failing run aborts the whole matrix
// with the offending configuration named.
inline std::vector<MatrixRow> run_matrix(
    const ScenarioConfig& base, const MatrixSpec& spec,
    const std::function<void(const ScenarioConfig&, const RunSummary&)>& on_row = {}) {
  std::vector<MatrixRow> rows;
  for (const std::string& env : spec.envs)
    for (Difficulty diff : spec.difficulties)
      for (int scenario : spec.scenarios)
        for (AgentType type : spec.types)
          for (int k = 0; k < spec.seeds; ++k) {
            ScenarioConfig cfg = base;
            cfg.env = env;
            cfg.difficulty = diff;
            cfg.scenario = scenario;
            cfg.agent_type = type;
            cfg.seed = base.seed + static_cast<std::uint64_t>(k);
            try {
              const RunResult r = run_single(cfg);
              rows.push_back({cfg, r.summary});
              if (on_row) on_row(cfg, r.summary);
            } catch (const std::exception& e) {
              throw std::runtime_error("run failed for " + config_label(cfg) + ": " +
                                       e.what());
            }
          }
  return rows;
}

inline void write_matrix_csv(std::ostream& out, std::span<const MatrixRow> rows) {
  out << kMetricsHeader << '\n';
  for (const MatrixRow& r : rows) write_metrics_row(out, r.config, r.summary);
}

}  // namespace decmarl
