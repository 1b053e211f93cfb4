#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "decmarl/harness.hpp"

namespace {

using namespace decmarl;

struct CliState {
  ScenarioConfig cfg;
  std::string difficulty = "easy";
  std::string agent_type = "a5";
  std::string novelty = "time";
  std::string out_dir = "out";
  std::string config_file;
  int seeds = 1;
};

void add_hyper_flags(CLI::App* sub, CliState& st) {
  sub->add_option("--seed", st.cfg.seed, "Master seed");
  sub->add_option("--episodes", st.cfg.episodes, "Episodes per run");
  sub->add_option("--max-steps", st.cfg.max_steps, "Step cap per episode");
  sub->add_option("--n-agents", st.cfg.n_agents, "Number of agents");
  sub->add_option("--alpha", st.cfg.alpha, "Intrinsic reward blend factor");
  sub->add_option("--beta", st.cfg.beta, "Parameter aggregation damping");
  sub->add_option("--lambda-stay", st.cfg.lambda_stay, "Penalty for staying off-goal");
  sub->add_option("--gamma", st.cfg.gamma, "Discount factor");
  sub->add_option("--tau", st.cfg.tau, "Soft target update rate");
  sub->add_option("--actor-lr", st.cfg.actor_lr, "Actor learning rate");
  sub->add_option("--critic-lr", st.cfg.critic_lr, "Critic learning rate");
  sub->add_option("--batch", st.cfg.batch, "Replay batch size");
  sub->add_option("--replay-capacity", st.cfg.replay_capacity, "Replay buffer capacity");
  sub->add_option("--r-obs", st.cfg.r_obs, "Observation radius (Chebyshev)");
  sub->add_option("--p-toggle", st.cfg.p_toggle, "Per-step dynamic obstacle toggle probability");
  sub->add_option("--time-increment", st.cfg.time_increment, "Duration added per step to known cells");
  sub->add_option("--j-threshold", st.cfg.j_threshold, "Jaccard gate for peer parameter selection");
  sub->add_option("--eps-start", st.cfg.eps_start, "Initial exploration rate");
  sub->add_option("--eps-end", st.cfg.eps_end, "Final exploration rate");
  sub->add_option("--novelty", st.novelty, "Novelty function: time or count");
  sub->add_flag("--no-persist-mental-state",
                [&st](std::int64_t) { st.cfg.persist_mental_state = false; },
                "Wipe mental states at episode boundaries");
  sub->add_flag("--instrument", st.cfg.instrument_params,
                "Fingerprint parameters around every session");
  sub->add_flag("--diagnostics", st.cfg.diagnostics, "Emit per-step diagnostics.csv");
  sub->add_option("--config", st.config_file,
                  "key=value file; settings here override flags");
  sub->add_option("--out", st.out_dir, "Output directory");
}

void add_scenario_flags(CLI::App* sub, CliState& st) {
  sub->add_option("--env", st.cfg.env, "Map: base or large");
  sub->add_option("--difficulty", st.difficulty, "easy or hard");
  sub->add_option("--scenario", st.cfg.scenario, "1 (shared goal) or 2 (split goals)");
  sub->add_option("--agent-type", st.agent_type, "a1..a5");
  sub->add_option("--layout", st.cfg.layout_file, "Layout file overriding --env");
}

// Flags land in string temporaries; fold them into the config, then let the
// config file override anything.
void finalize(CliState& st, bool allow_extra) {
  st.cfg.difficulty = parse_difficulty(st.difficulty);
  st.cfg.agent_type = parse_agent_type(st.agent_type);
  st.cfg.novelty = parse_novelty(st.novelty);
  if (st.config_file.empty()) return;
  auto extra = [&st, allow_extra](const std::string& key, const std::string& value) {
    if (!allow_extra) return false;
    if (key == "out" || key == "out-dir" || key == "out_dir") {
      st.out_dir = value;
      return true;
    }
    if (key == "seeds") {
      st.seeds = std::stoi(value);
      return true;
    }
    return false;
  };
  apply_config_file(st.cfg, st.config_file, extra);
}

int cmd_run(CliState& st) {
  finalize(st, true);
  const RunResult r = run_single(st.cfg);
  write_run_outputs(r, st.out_dir);
  std::printf("%s  r_overall=%s r_std=%s mean_steps=%s reach_rate=%s\n",
              config_label(st.cfg).c_str(), fmt6(r.summary.r_overall).c_str(),
              fmt6(r.summary.r_std).c_str(), fmt6(r.summary.mean_steps).c_str(),
              fmt6(r.summary.reach_rate).c_str());
  std::printf("sessions=%ld packets=%ld aggregations=%ld merged_cells=%ld\n",
              r.stats.sessions, r.stats.packets, r.stats.aggregations,
              r.stats.merged_cells);
  if (st.cfg.instrument_params)
    std::printf("param_guard_violations=%ld\n", r.stats.param_guard_violations);
  std::printf("wrote %s/{metrics,episodes,sessions,learning_curve%s}.csv\n",
              st.out_dir.c_str(), st.cfg.diagnostics ? ",diagnostics" : "");
  return 0;
}

int cmd_matrix(CliState& st) {
  finalize(st, true);
  MatrixSpec spec;
  spec.seeds = st.seeds;
  const auto on_row = [](const ScenarioConfig& cfg, const RunSummary& s) {
    std::printf("%s  r_overall=%s r_std=%s\n", config_label(cfg).c_str(),
                fmt6(s.r_overall).c_str(), fmt6(s.r_std).c_str());
    std::fflush(stdout);
  };
  const auto rows = run_matrix(st.cfg, spec, on_row);
  std::filesystem::create_directories(st.out_dir);
  const auto path = std::filesystem::path(st.out_dir) / "metrics.csv";
  std::ofstream f(path, std::ios::binary);
  write_matrix_csv(f, rows);
  std::printf("wrote %s (%zu rows)\n", path.string().c_str(), rows.size());
  return 0;
}

int cmd_dump_tables(CliState& st) {
  finalize(st, false);
  const Layout lay = st.cfg.layout_file.empty() ? builtin_layout(st.cfg.env)
                                                : load_layout_file(st.cfg.layout_file);
  const EmbeddingTables tables =
      build_tables(derive_seed(st.cfg.seed, 0xE), lay.width, lay.height);
  if (st.out_dir == "out" || st.out_dir == "-") {
    dump_tables_csv(tables, std::cout);
  } else {
    std::ofstream f(st.out_dir, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file: " + st.out_dir);
    dump_tables_csv(tables, f);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-agent RL laboratory"};
  app.require_subcommand(1);
  CliState st;

  CLI::App* run = app.add_subcommand("run", "Train one configuration and write CSVs");
  add_scenario_flags(run, st);
  add_hyper_flags(run, st);

  CLI::App* matrix = app.add_subcommand(
      "matrix", "Run the full env x difficulty x scenario x type grid");
  add_hyper_flags(matrix, st);
  matrix->add_option("--seeds", st.seeds, "Seeds per combination (base seed counts up)");

  CLI::App* dump = app.add_subcommand("dump-tables", "Emit the frozen embedding tables");
  dump->add_option("--env", st.cfg.env, "Map: base or large");
  dump->add_option("--layout", st.cfg.layout_file, "Layout file overriding --env");
  dump->add_option("--seed", st.cfg.seed, "Master seed");
  dump->add_option("--out", st.out_dir, "Output file ('-' for stdout)");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(st);
    if (matrix->parsed()) return cmd_matrix(st);
    if (dump->parsed()) return cmd_dump_tables(st);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const decmarl::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
