#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "decmarl/types.hpp"

namespace decmarl {

// Parsed map description. Cell lists are in row-major scan order; objects
// are numbered G1, G2, ... by that order. Agent starts are indexed by the
// digit used in the grid (digit 1 -> agent 0).
struct Layout {
  int width = 0;
  int height = 0;
  std::vector<Cell> static_obstacles;
  std::vector<Cell> dynamic_sites;
  std::vector<Cell> objects;
  std::vector<Cell> agent_starts;
};

// Grid alphabet: '.' empty, '#' static obstacle, '~' dynamic obstacle site,
// 'O' object, digits 1..9 agent starts. First nonempty line: "width height".
inline Layout parse_layout(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Layout lay;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) break;
    line.clear();
  }
  {
    std::istringstream header(line);
    if (!(header >> lay.width >> lay.height))
      throw ConfigError("layout: missing 'width height' header");
  }
  if (lay.width <= 0 || lay.height <= 0)
    throw ConfigError("layout: non-positive dimensions");

  std::vector<Cell> starts_by_digit(9, Cell{-1, -1});
  int max_digit = 0;
  for (int y = 0; y < lay.height; ++y) {
    if (!std::getline(in, line))
      throw ConfigError("layout: expected " + std::to_string(lay.height) +
                        " rows, got " + std::to_string(y));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != lay.width)
      throw ConfigError("layout: row " + std::to_string(y) + " has " +
                        std::to_string(line.size()) + " cells, expected " +
                        std::to_string(lay.width));
    for (int x = 0; x < lay.width; ++x) {
      const char c = line[x];
      const Cell cell{x, y};
      if (c == '.') continue;
      if (c == '#') {
        lay.static_obstacles.push_back(cell);
      } else if (c == '~') {
        lay.dynamic_sites.push_back(cell);
      } else if (c == 'O') {
        lay.objects.push_back(cell);
      } else if (c >= '1' && c <= '9') {
        const int idx = c - '1';
        if (starts_by_digit[idx] != Cell{-1, -1})
          throw ConfigError(std::string("layout: duplicate agent digit '") + c + "'");
        starts_by_digit[idx] = cell;
        max_digit = std::max(max_digit, idx + 1);
      } else {
        throw ConfigError(std::string("layout: invalid character '") + c + "'");
      }
    }
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") != std::string::npos)
      throw ConfigError("layout: trailing content after " +
                        std::to_string(lay.height) + " rows");
  }
  for (int i = 0; i < max_digit; ++i) {
    if (starts_by_digit[i] == Cell{-1, -1})
      throw ConfigError("layout: agent digits must be contiguous from 1; missing " +
                        std::to_string(i + 1));
    lay.agent_starts.push_back(starts_by_digit[i]);
  }
  return lay;
}

// Consistency checks shared by parsed and programmatically built layouts.
// An agent start on an object cell is legal (the degenerate spawn-on-goal
// case); anything overlapping an obstacle is not.
inline void validate_layout(const Layout& lay) {
  auto in_bounds = [&](const Cell& c) {
    return c.x >= 0 && c.x < lay.width && c.y >= 0 && c.y < lay.height;
  };
  auto contains = [](const std::vector<Cell>& v, const Cell& c) {
    return std::find(v.begin(), v.end(), c) != v.end();
  };
  for (const auto& group : {&lay.static_obstacles, &lay.dynamic_sites,
                            &lay.objects, &lay.agent_starts}) {
    for (const Cell& c : *group)
      if (!in_bounds(c)) throw ConfigError("layout: cell out of bounds");
  }
  for (const Cell& c : lay.dynamic_sites) {
    if (contains(lay.static_obstacles, c))
      throw ConfigError("layout: dynamic site on static obstacle");
    if (contains(lay.objects, c))
      throw ConfigError("layout: dynamic site on object");
  }
  for (const Cell& c : lay.objects)
    if (contains(lay.static_obstacles, c))
      throw ConfigError("layout: object on static obstacle");
  for (const Cell& c : lay.agent_starts)
    if (contains(lay.static_obstacles, c))
      throw ConfigError("layout: agent start on static obstacle");
}

inline Layout load_layout_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("layout file not found: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  Layout lay = parse_layout(buf.str());
  validate_layout(lay);
  return lay;
}

// 10x10 map: three walled-in goal sites with one opening each, agents in
// three corners, five dynamic obstacle sites on open ground.
// Two walled goal pockets up top, the third goal at the end of a single-file
// tunnel along the south-east edge; the south-west corner is a pocket that
// drains only north, so every start is a long detour from the tunnel mouth.
inline const char* builtin_base_layout() {
  return "10 10\n"
         "1........2\n"
         "....~.....\n"
         ".###..#.#.\n"
         ".#O#..#O#.\n"
         ".#.#..###~\n"
         "~#...~....\n"
         "....######\n"
         "..#.#O....\n"
         ".~#.#####.\n"
         "3.#.......\n";
}

// 20x20 map, same structure at double scale with extra free-standing walls.
inline const char* builtin_large_layout() {
  return "20 20\n"
         "1..................2\n"
         "......~......~......\n"
         "........####........\n"
         "....................\n"
         "...###........###...\n"
         "...#O..........O#...\n"
         "...###....~...###...\n"
         ".~................~.\n"
         "....................\n"
         ".......~....~.......\n"
         "..####........####..\n"
         "....................\n"
         "....................\n"
         ".........###........\n"
         ".........#O.........\n"
         "....~....###...~....\n"
         "....................\n"
         "........####........\n"
         ".........~..........\n"
         "3...................\n";
}

inline Layout builtin_layout(const std::string& name) {
  if (name == "base") {
    Layout lay = parse_layout(builtin_base_layout());
    validate_layout(lay);
    return lay;
  }
  if (name == "large") {
    Layout lay = parse_layout(builtin_large_layout());
    validate_layout(lay);
    return lay;
  }
  throw ConfigError("unknown environment '" + name + "' (expected base or large)");
}

}  // namespace decmarl
