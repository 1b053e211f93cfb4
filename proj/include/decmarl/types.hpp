#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace decmarl {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell& a, const Cell& b) = default;
  friend auto operator<=>(const Cell& a, const Cell& b) = default;
};

inline int chebyshev(const Cell& a, const Cell& b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

enum class MaskLabel : std::uint8_t { Empty = 0, Obstacle, Object, Agent, Unknown };
inline constexpr int kNumMaskLabels = 5;

enum class Action : std::uint8_t { Left = 0, Right, Up, Down, Stay };
inline constexpr int kNumActions = 5;

// (dx, dy) displacement of an action; y grows downward.
inline Cell action_delta(Action a) {
  switch (a) {
    case Action::Left: return {-1, 0};
    case Action::Right: return {1, 0};
    case Action::Up: return {0, -1};
    case Action::Down: return {0, 1};
    case Action::Stay: return {0, 0};
  }
  return {0, 0};
}

inline const char* to_string(MaskLabel m) {
  switch (m) {
    case MaskLabel::Empty: return "empty";
    case MaskLabel::Obstacle: return "obstacle";
    case MaskLabel::Object: return "object";
    case MaskLabel::Agent: return "agent";
    case MaskLabel::Unknown: return "unknown";
  }
  return "?";
}

inline const char* to_string(Action a) {
  switch (a) {
    case Action::Left: return "left";
    case Action::Right: return "right";
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Stay: return "stay";
  }
  return "?";
}

enum class MoveKind : std::uint8_t { Moved, DeliberateStay, Blocked };

struct MoveOutcome {
  MoveKind kind;
  Cell position;  // position after the action
};

}  // namespace decmarl
