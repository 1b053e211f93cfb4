#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "decmarl/mental_state.hpp"
#include "decmarl/rng.hpp"
#include "decmarl/types.hpp"

namespace decmarl {

inline constexpr int kStateDim = 64;
inline constexpr int kGoalDim = 16;
inline constexpr int kObsDim = 64;
inline constexpr int kMaskDim = 16;
inline constexpr int kActionDim = 16;
inline constexpr int kPooledDim = kStateDim + kMaskDim;              // 80
inline constexpr int kActorInputDim = kStateDim + kGoalDim + kPooledDim;  // 160
inline constexpr int kCriticInputDim = kActorInputDim + kActionDim;  // 176

// Frozen categorical embedding lookups, identical for every agent built
// from the same seed. Entries are i.i.d. uniform in [-1, 1].
struct EmbeddingTables {
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
  std::vector<double> state;   // cells x 64
  std::vector<double> goal;    // cells x 16
  std::vector<double> obs;     // cells x 64 (protocol payloads only)
  std::vector<double> mask;    // 5 x 16
  std::vector<double> action;  // 5 x 16

  int cells() const { return width * height; }
  std::size_t cell_index(const Cell& c) const {
    return static_cast<std::size_t>(c.y) * width + c.x;
  }
  const double* state_row(const Cell& c) const {
    return state.data() + cell_index(c) * kStateDim;
  }
  const double* goal_row(const Cell& c) const {
    return goal.data() + cell_index(c) * kGoalDim;
  }
  const double* mask_row(MaskLabel m) const {
    return mask.data() + static_cast<std::size_t>(m) * kMaskDim;
  }
  const double* action_row(Action a) const {
    return action.data() + static_cast<std::size_t>(a) * kActionDim;
  }
};

inline EmbeddingTables build_tables(std::uint64_t seed, int width, int height) {
  if (width <= 0 || height <= 0)
    throw ConfigError("embedding tables need positive dimensions");
  EmbeddingTables t;
  t.width = width;
  t.height = height;
  t.seed = seed;
  Rng rng(seed);
  auto fill = [&rng](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (double& x : v) x = next_uniform(rng, -1.0, 1.0);
  };
  const std::size_t cells = static_cast<std::size_t>(width) * height;
  fill(t.state, cells * kStateDim);
  fill(t.goal, cells * kGoalDim);
  fill(t.obs, cells * kObsDim);
  fill(t.mask, static_cast<std::size_t>(kNumMaskLabels) * kMaskDim);
  fill(t.action, static_cast<std::size_t>(kNumActions) * kActionDim);
  return t;
}

// Novelty scale applied to a cell's embedding in time-aware pooling.
// Unknown cells (and unvisited cells in count mode) scale by 1.
inline double pooling_scale(const CellBelief& b, NoveltyMode mode) {
  if (mode == NoveltyMode::Time)
    return b.mask == MaskLabel::Unknown ? 1.0 : time_novelty(b.duration);
  return b.visits >= 1 ? count_novelty(b.visits) : 1.0;
}

// Average over all cells of concat(state embedding, mask embedding), each
// cell scaled by its novelty when time awareness is on.
inline void pool_mental_state_into(const MentalState& ms, const EmbeddingTables& t,
                                   bool time_aware, NoveltyMode mode, double* out) {
  const int cells = ms.total_cells();
  for (int k = 0; k < kPooledDim; ++k) out[k] = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(cells); ++i) {
    const CellBelief& b = ms.at(i);
    const double u = time_aware ? pooling_scale(b, mode) : 1.0;
    const double* es = t.state.data() + i * kStateDim;
    const double* em = t.mask_row(b.mask);
    for (int k = 0; k < kStateDim; ++k) out[k] += u * es[k];
    for (int k = 0; k < kMaskDim; ++k) out[kStateDim + k] += u * em[k];
  }
  const double inv = 1.0 / cells;
  for (int k = 0; k < kPooledDim; ++k) out[k] *= inv;
}

inline std::vector<double> pool_mental_state(const MentalState& ms,
                                             const EmbeddingTables& t,
                                             bool time_aware,
                                             NoveltyMode mode = NoveltyMode::Time) {
  std::vector<double> out(kPooledDim);
  pool_mental_state_into(ms, t, time_aware, mode, out.data());
  return out;
}

// concat(e_s, e_g, pooled mental state) -> 160 dims.
inline void actor_input_into(const Cell& s, const Cell& g, const MentalState& ms,
                             const EmbeddingTables& t, bool time_aware,
                             NoveltyMode mode, double* out) {
  const double* es = t.state_row(s);
  const double* eg = t.goal_row(g);
  for (int k = 0; k < kStateDim; ++k) out[k] = es[k];
  for (int k = 0; k < kGoalDim; ++k) out[kStateDim + k] = eg[k];
  pool_mental_state_into(ms, t, time_aware, mode, out + kStateDim + kGoalDim);
}

inline std::vector<double> actor_input(const Cell& s, const Cell& g,
                                       const MentalState& ms, const EmbeddingTables& t,
                                       bool time_aware,
                                       NoveltyMode mode = NoveltyMode::Time) {
  std::vector<double> out(kActorInputDim);
  actor_input_into(s, g, ms, t, time_aware, mode, out.data());
  return out;
}

// concat(actor input, e_a) -> 176 dims.
inline std::vector<double> critic_input(const Cell& s, const Cell& g,
                                        const MentalState& ms, Action a,
                                        const EmbeddingTables& t, bool time_aware,
                                        NoveltyMode mode = NoveltyMode::Time) {
  std::vector<double> out(kCriticInputDim);
  actor_input_into(s, g, ms, t, time_aware, mode, out.data());
  const double* ea = t.action_row(a);
  for (int k = 0; k < kActionDim; ++k) out[kActorInputDim + k] = ea[k];
  return out;
}

inline void dump_tables_csv(const EmbeddingTables& t, std::ostream& out) {
  char buf[32];
  auto emit = [&](const char* name, const std::vector<double>& v, int dim) {
    const std::size_t rows = v.size() / dim;
    for (std::size_t r = 0; r < rows; ++r) {
      out << name << ',' << r;
      for (int k = 0; k < dim; ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", v[r * dim + k]);
        out << ',' << buf;
      }
      out << '\n';
    }
  };
  out << "table,row,values\n";
  emit("state", t.state, kStateDim);
  emit("goal", t.goal, kGoalDim);
  emit("obs", t.obs, kObsDim);
  emit("mask", t.mask, kMaskDim);
  emit("action", t.action, kActionDim);
}

}  // namespace decmarl
