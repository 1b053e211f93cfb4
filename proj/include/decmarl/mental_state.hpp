#pragma once

#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "decmarl/grid.hpp"
#include "decmarl/types.hpp"

namespace decmarl {

// Novelty of a cell that was last refreshed d time units ago. Grows while
// knowledge goes stale, resets to 1 on re-observation.
inline double time_novelty(double d) {
  if (d < 0) throw std::domain_error("time_novelty: negative duration");
  return std::exp(0.5 * d);
}

// Count-based baseline: novelty decays with visit frequency.
inline double count_novelty(int visit_count) {
  if (visit_count < 1) throw std::domain_error("count_novelty: needs visit_count >= 1");
  return 1.0 / visit_count;
}

enum class NoveltyMode { Time, Count };

struct CellBelief {
  MaskLabel mask = MaskLabel::Unknown;
  double duration = 0.0;
  int visits = 0;
};

// One record as exchanged between agents during a session.
struct CellRecord {
  Cell cell;
  MaskLabel mask;
  double duration;
};

// Per-agent belief map over every cell of the bounded environment. Unknown
// cells carry duration 0 and zero visits.
class MentalState {
 public:
  MentalState() = default;

  MentalState(int width, int height, Cell goal, double time_increment = 0.01)
      : w_(width), h_(height), goal_(goal), inc_(time_increment) {
    if (width <= 0 || height <= 0)
      throw ConfigError("mental state needs positive dimensions");
    cells_.assign(static_cast<std::size_t>(width) * height, CellBelief{});
  }

  int width() const { return w_; }
  int height() const { return h_; }
  int total_cells() const { return w_ * h_; }
  Cell goal() const { return goal_; }
  void set_goal(Cell g) { goal_ = g; }
  double time_increment() const { return inc_; }

  std::size_t index(const Cell& c) const {
    return static_cast<std::size_t>(c.y) * w_ + c.x;
  }
  bool in_bounds(const Cell& c) const {
    return c.x >= 0 && c.x < w_ && c.y >= 0 && c.y < h_;
  }
  const CellBelief& at(const Cell& c) const { return cells_[index(c)]; }
  const CellBelief& at(std::size_t i) const { return cells_[i]; }
  bool knows(const Cell& c) const { return at(c).mask != MaskLabel::Unknown; }

  int known_count() const {
    int n = 0;
    for (const auto& b : cells_)
      if (b.mask != MaskLabel::Unknown) ++n;
    return n;
  }

  // Observed cells take the observed label with duration 0 and one more
  // visit; everything else is untouched.
  void absorb(const Observation& obs) {
    for (const auto& [cell, label] : obs.records) {
      if (!in_bounds(cell)) throw ConfigError("observation cell out of bounds");
      CellBelief& b = cells_[index(cell)];
      b.mask = label;
      b.duration = 0.0;
      b.visits += 1;
    }
  }

  // Ages every known cell by the time increment; Unknown cells stay at 0.
  void tick() {
    for (auto& b : cells_)
      if (b.mask != MaskLabel::Unknown) b.duration += inc_;
  }

  // Mean novelty over the whole map: known cells contribute their novelty,
  // Unknown cells contribute 0, the denominator is the total cell count.
  double mean_novelty(NoveltyMode mode = NoveltyMode::Time) const {
    double sum = 0.0;
    for (const auto& b : cells_) {
      if (mode == NoveltyMode::Time) {
        if (b.mask != MaskLabel::Unknown) sum += time_novelty(b.duration);
      } else {
        if (b.visits >= 1) sum += count_novelty(b.visits);
      }
    }
    return sum / total_cells();
  }

  std::vector<CellRecord> known_records() const {
    std::vector<CellRecord> out;
    out.reserve(cells_.size());
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) {
        const CellBelief& b = cells_[index({x, y})];
        if (b.mask != MaskLabel::Unknown)
          out.push_back({{x, y}, b.mask, b.duration});
      }
    return out;
  }

  // Freshness-wins fusion: an incoming known record replaces the local one
  // when it is strictly more recent, or when the cell is locally Unknown.
  // Ties keep the local record. Returns the number of cells adopted.
  int merge_records(std::span<const CellRecord> records) {
    int adopted = 0;
    for (const CellRecord& r : records) {
      if (!in_bounds(r.cell)) throw ConfigError("merge record out of bounds");
      if (r.mask == MaskLabel::Unknown) continue;
      CellBelief& own = cells_[index(r.cell)];
      const bool adopt =
          own.mask == MaskLabel::Unknown || r.duration < own.duration;
      if (!adopt) continue;
      own.mask = r.mask;
      own.duration = r.duration;
      ++adopted;
    }
    return adopted;
  }

  void reset() { cells_.assign(cells_.size(), CellBelief{}); }

  // Snapshot format: one line per known cell, "x,y,mask,duration".
  std::string snapshot() const {
    std::string out;
    char line[96];
    for (const CellRecord& r : known_records()) {
      std::snprintf(line, sizeof(line), "%d,%d,%s,%.6f\n", r.cell.x, r.cell.y,
                    to_string(r.mask), r.duration);
      out += line;
    }
    return out;
  }

 private:
  int w_ = 0;
  int h_ = 0;
  Cell goal_{0, 0};
  double inc_ = 0.01;
  std::vector<CellBelief> cells_;
};

// Overlap of the known (cell, mask) pair sets, computed on pre-merge state.
// 0 when neither side knows anything.
inline double jaccard(const MentalState& own, std::span<const CellRecord> other) {
  int other_known = 0;
  int both = 0;
  std::vector<std::uint8_t> seen(own.total_cells(), 0);
  for (const CellRecord& r : other) {
    if (r.mask == MaskLabel::Unknown) continue;
    const std::size_t i = own.index(r.cell);
    if (seen[i]) continue;
    seen[i] = 1;
    ++other_known;
    if (own.at(i).mask == r.mask) ++both;
  }
  const int own_known = own.known_count();
  const int either = own_known + other_known - both;
  if (either == 0) return 0.0;
  return static_cast<double>(both) / either;
}

}  // namespace decmarl
