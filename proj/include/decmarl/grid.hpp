#pragma once

#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "decmarl/layout.hpp"
#include "decmarl/rng.hpp"
#include "decmarl/types.hpp"

namespace decmarl {

enum class Difficulty { Easy, Hard };

inline const char* to_string(Difficulty d) {
  return d == Difficulty::Easy ? "easy" : "hard";
}

// Labels for all in-bounds cells within Chebyshev distance R of center,
// in row-major order. The center cell itself labels Agent.
struct Observation {
  Cell center;
  std::vector<std::pair<Cell, MaskLabel>> records;
};

// Ground-truth grid state: the only holder of global state in a run.
// Mutation is single-threaded; values copy and move freely.
class GridWorld {
 public:
  GridWorld() = default;

  static GridWorld from_layout(const Layout& lay, Difficulty difficulty,
                               double p_toggle, std::uint64_t seed) {
    validate_layout(lay);
    GridWorld w;
    w.width_ = lay.width;
    w.height_ = lay.height;
    w.static_.assign(static_cast<std::size_t>(lay.width) * lay.height, 0);
    w.dyn_active_.assign(w.static_.size(), 0);
    for (const Cell& c : lay.static_obstacles) w.static_[w.index(c)] = 1;
    w.dyn_sites_ = lay.dynamic_sites;
    w.objects_ = lay.objects;
    w.starts_ = lay.agent_starts;
    w.positions_ = lay.agent_starts;
    w.goals_.assign(lay.agent_starts.size(), Cell{0, 0});
    w.difficulty_ = difficulty;
    w.p_toggle_ = p_toggle;
    w.rng_.seed(seed);
    return w;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  long step_counter() const { return step_; }
  Difficulty difficulty() const { return difficulty_; }
  int num_agents() const { return static_cast<int>(positions_.size()); }

  bool in_bounds(const Cell& c) const {
    return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
  }
  std::size_t index(const Cell& c) const {
    return static_cast<std::size_t>(c.y) * width_ + c.x;
  }

  bool is_static_obstacle(const Cell& c) const { return static_[index(c)] != 0; }
  bool is_dynamic_active(const Cell& c) const { return dyn_active_[index(c)] != 0; }
  bool is_blocked(const Cell& c) const {
    return static_[index(c)] != 0 || dyn_active_[index(c)] != 0;
  }
  bool is_object(const Cell& c) const {
    return std::find(objects_.begin(), objects_.end(), c) != objects_.end();
  }
  bool any_agent_at(const Cell& c) const {
    return std::find(positions_.begin(), positions_.end(), c) != positions_.end();
  }

  const std::vector<Cell>& objects() const { return objects_; }
  const std::vector<Cell>& dynamic_sites() const { return dyn_sites_; }
  Cell agent_position(int agent) const { return positions_.at(agent); }
  Cell agent_goal(int agent) const { return goals_.at(agent); }
  Cell agent_start(int agent) const { return starts_.at(agent); }

  void set_agent_goal(int agent, const Cell& goal) {
    if (!in_bounds(goal)) throw ConfigError("goal out of bounds");
    goals_.at(agent) = goal;
  }

  // Test/fixture hook; refuses obstacle cells.
  void set_agent_position(int agent, const Cell& pos) {
    if (!in_bounds(pos) || is_blocked(pos))
      throw ConfigError("agent position blocked or out of bounds");
    positions_.at(agent) = pos;
  }

  void set_dynamic_active(const Cell& site, bool active) {
    if (std::find(dyn_sites_.begin(), dyn_sites_.end(), site) == dyn_sites_.end())
      throw ConfigError("not a dynamic obstacle site");
    if (active && (any_agent_at(site) || is_object(site)))
      throw ConfigError("cannot activate obstacle on occupied or object cell");
    dyn_active_[index(site)] = active ? 1 : 0;
  }

  // Hard mode: each site independently toggles with probability p_toggle;
  // activations onto occupied or object cells are skipped. Easy mode leaves
  // obstacles untouched. The step counter advances either way.
  void step_dynamics() {
    ++step_;
    if (difficulty_ != Difficulty::Hard) return;
    for (const Cell& site : dyn_sites_) {
      const double u = next_unit(rng_);
      if (u >= p_toggle_) continue;
      const std::size_t i = index(site);
      if (dyn_active_[i]) {
        dyn_active_[i] = 0;
      } else if (!any_agent_at(site) && !is_object(site)) {
        dyn_active_[i] = 1;
      }
    }
  }

  // An agent at its goal is frozen and always stays deliberately. Moves into
  // a boundary or obstacle leave the position unchanged and report Blocked.
  // Agents may share cells.
  MoveOutcome apply_action(int agent, Action action) {
    const Cell pos = positions_.at(agent);
    if (pos == goals_.at(agent)) return {MoveKind::DeliberateStay, pos};
    if (action == Action::Stay) return {MoveKind::DeliberateStay, pos};
    const Cell d = action_delta(action);
    const Cell target{pos.x + d.x, pos.y + d.y};
    if (!in_bounds(target) || is_blocked(target)) return {MoveKind::Blocked, pos};
    positions_[agent] = target;
    return {MoveKind::Moved, target};
  }

  MaskLabel ground_truth_label(const Cell& c) const {
    if (any_agent_at(c)) return MaskLabel::Agent;
    if (is_object(c)) return MaskLabel::Object;
    if (is_blocked(c)) return MaskLabel::Obstacle;
    return MaskLabel::Empty;
  }

  Observation observe(int agent, int radius) const {
    if (radius < 1) throw ConfigError("observation radius must be >= 1");
    const Cell c = positions_.at(agent);
    Observation obs;
    obs.center = c;
    for (int y = std::max(0, c.y - radius); y <= std::min(height_ - 1, c.y + radius); ++y)
      for (int x = std::max(0, c.x - radius); x <= std::min(width_ - 1, c.x + radius); ++x)
        obs.records.emplace_back(Cell{x, y}, ground_truth_label({x, y}));
    return obs;
  }

  std::vector<int> contacts_in_range(int agent, int radius) const {
    std::vector<int> out;
    const Cell c = positions_.at(agent);
    for (int j = 0; j < num_agents(); ++j) {
      if (j == agent) continue;
      if (chebyshev(c, positions_[j]) <= radius) out.push_back(j);
    }
    return out;
  }

  // BFS hop count over 4-connected non-obstacle cells of the current
  // ground-truth map; nullopt when unreachable.
  std::optional<int> shortest_path_len(const Cell& from, const Cell& to) const {
    if (!in_bounds(from) || !in_bounds(to))
      throw ConfigError("shortest_path_len: cell out of bounds");
    if (from == to) return 0;
    if (is_blocked(from) || is_blocked(to)) return std::nullopt;
    std::vector<int> dist(static_cast<std::size_t>(width_) * height_, -1);
    std::deque<Cell> queue;
    dist[index(from)] = 0;
    queue.push_back(from);
    while (!queue.empty()) {
      const Cell cur = queue.front();
      queue.pop_front();
      const int d = dist[index(cur)];
      for (int a = 0; a < 4; ++a) {
        const Cell delta = action_delta(static_cast<Action>(a));
        const Cell next{cur.x + delta.x, cur.y + delta.y};
        if (!in_bounds(next) || is_blocked(next)) continue;
        if (dist[index(next)] != -1) continue;
        if (next == to) return d + 1;
        dist[index(next)] = d + 1;
        queue.push_back(next);
      }
    }
    return std::nullopt;
  }

  // Episode boundary: positions back to starts, dynamic obstacles cleared,
  // step counter zeroed. The dynamics RNG stream continues.
  void reset_episode() {
    positions_ = starts_;
    std::fill(dyn_active_.begin(), dyn_active_.end(), 0);
    step_ = 0;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> static_;
  std::vector<std::uint8_t> dyn_active_;
  std::vector<Cell> dyn_sites_;
  std::vector<Cell> objects_;
  std::vector<Cell> starts_;
  std::vector<Cell> positions_;
  std::vector<Cell> goals_;
  long step_ = 0;
  double p_toggle_ = 0.0;
  Difficulty difficulty_ = Difficulty::Easy;
  Rng rng_;
};

// Scenario goal assignment over a 3-object layout: scenario 1 sends every
// agent to G3; scenario 2 sends agents 1-2 to G1 and the rest to G2.
inline GridWorld build_world(const Layout& lay, Difficulty difficulty, int scenario,
                             int n_agents, double p_toggle, std::uint64_t seed) {
  if (lay.objects.size() != 3)
    throw ConfigError("scenario layouts require exactly 3 objects, got " +
                      std::to_string(lay.objects.size()));
  if (n_agents < 1 || n_agents > static_cast<int>(lay.agent_starts.size()))
    throw ConfigError("layout provides " + std::to_string(lay.agent_starts.size()) +
                      " agent starts, requested " + std::to_string(n_agents));
  if (scenario != 1 && scenario != 2)
    throw ConfigError("scenario must be 1 or 2");
  if (scenario == 2 && n_agents < 3)
    throw ConfigError("scenario 2 needs at least 3 agents");

  Layout trimmed = lay;
  trimmed.agent_starts.resize(n_agents);
  GridWorld world = GridWorld::from_layout(trimmed, difficulty, p_toggle, seed);
  for (int i = 0; i < n_agents; ++i) {
    Cell goal;
    if (scenario == 1) {
      goal = lay.objects[2];
    } else {
      goal = (i < 2) ? lay.objects[0] : lay.objects[1];
    }
    world.set_agent_goal(i, goal);
  }
  return world;
}

}  // namespace decmarl
