#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "decmarl/grid.hpp"
#include "decmarl/learner.hpp"
#include "decmarl/mental_state.hpp"

namespace decmarl {

enum class PacketRole { Peer, Advisor };

// Params are spans into snapshot storage owned by the caller for the duration
// of the tick; advisor packets never carry them.
struct KnowledgePacket {
  // Counts every fresh packet; lets tests assert that the non-communicating
  // pipelines never build one. Copies and moves do not re-count.
  inline static std::uint64_t constructed_count = 0;

  KnowledgePacket() { ++constructed_count; }

  int sender = -1;
  Cell sender_goal;
  PacketRole role = PacketRole::Advisor;
  std::vector<CellRecord> records;
  bool has_params = false;
  std::span<const double> actor_params;
  std::span<const double> critic_params;
};

// Immutable view of one agent taken at the start of the tick, before any
// agent observes, merges, or updates.
struct ContactSnapshot {
  int id = -1;
  Cell goal;
  const MentalState* mind = nullptr;
  std::span<const double> actor_params;
  std::span<const double> critic_params;
};

struct Classification {
  std::vector<int> peers;     // indices into the contact list
  std::vector<int> advisors;
};

// Peer: same goal. Advisor: different goal but its mental state knows the
// requester's goal cell. Anything else is dropped.
inline Classification classify_contacts(const Cell& self_goal,
                                        std::span<const ContactSnapshot> contacts) {
  Classification out;
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const ContactSnapshot& c = contacts[i];
    if (c.goal == self_goal) {
      out.peers.push_back(static_cast<int>(i));
    } else if (c.mind != nullptr && c.mind->in_bounds(self_goal) &&
               c.mind->knows(self_goal)) {
      out.advisors.push_back(static_cast<int>(i));
    }
  }
  return out;
}

// BFS over cells the advisor believes traversable (empty, agent, or object;
// unknown counts as blocked), from the requester's position to its goal.
// Returns the advisor's records along the path, or nothing when no such path.
inline std::vector<CellRecord> advisor_plan(const MentalState& advisor,
                                            const Cell& from, const Cell& goal) {
  auto traversable = [&advisor](const Cell& c) {
    const MaskLabel l = advisor.at(c).mask;
    return l == MaskLabel::Empty || l == MaskLabel::Agent || l == MaskLabel::Object;
  };
  if (!advisor.in_bounds(from) || !advisor.in_bounds(goal)) return {};
  if (!traversable(from) || !traversable(goal)) return {};
  const int w = advisor.width();
  const int h = advisor.height();
  std::vector<int> parent(static_cast<std::size_t>(w) * h, -2);
  std::vector<int> queue;
  const auto idx = [w](const Cell& c) { return c.y * w + c.x; };
  parent[idx(from)] = -1;
  queue.push_back(idx(from));
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int cur = queue[head];
    if (cur == idx(goal)) break;
    const Cell c{cur % w, cur / w};
    const Cell steps[4] = {{c.x - 1, c.y}, {c.x + 1, c.y}, {c.x, c.y - 1}, {c.x, c.y + 1}};
    for (const Cell& n : steps) {
      if (n.x < 0 || n.x >= w || n.y < 0 || n.y >= h) continue;
      if (parent[idx(n)] != -2 || !traversable(n)) continue;
      parent[idx(n)] = cur;
      queue.push_back(idx(n));
    }
  }
  if (parent[idx(goal)] == -2) return {};
  std::vector<int> path;
  for (int cur = idx(goal); cur != -1; cur = parent[cur]) path.push_back(cur);
  std::vector<CellRecord> records;
  records.reserve(path.size());
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    const Cell c{*it % w, *it / w};
    const CellBelief& b = advisor.at(c);
    records.push_back({c, b.mask, b.duration});
  }
  return records;
}

// Share phase. Goal-aware: peers contribute full known records plus parameter
// snapshots, advisors contribute planned-path records (no packet for an empty
// plan). Without goal awareness every listed contact acts as an advisor
// sharing its full known records, never parameters. Packets with nothing to
// share are suppressed.
inline std::vector<KnowledgePacket> share(std::span<const ContactSnapshot> contacts,
                                          const Classification& cls,
                                          const Cell& requester_pos,
                                          const Cell& requester_goal,
                                          bool goal_aware) {
  std::vector<KnowledgePacket> packets;
  if (goal_aware) {
    for (int i : cls.peers) {
      const ContactSnapshot& c = contacts[i];
      KnowledgePacket p;
      p.sender = c.id;
      p.sender_goal = c.goal;
      p.role = PacketRole::Peer;
      p.records = c.mind->known_records();
      p.has_params = !c.actor_params.empty();
      p.actor_params = c.actor_params;
      p.critic_params = c.critic_params;
      packets.push_back(std::move(p));
    }
    for (int i : cls.advisors) {
      const ContactSnapshot& c = contacts[i];
      auto plan = advisor_plan(*c.mind, requester_pos, requester_goal);
      if (plan.empty()) continue;
      KnowledgePacket p;
      p.sender = c.id;
      p.sender_goal = c.goal;
      p.role = PacketRole::Advisor;
      p.records = std::move(plan);
      packets.push_back(std::move(p));
    }
  } else {
    for (int i : cls.advisors) {
      const ContactSnapshot& c = contacts[i];
      auto records = c.mind->known_records();
      if (records.empty()) continue;
      KnowledgePacket p;
      p.sender = c.id;
      p.sender_goal = c.goal;
      p.role = PacketRole::Advisor;
      p.records = std::move(records);
      packets.push_back(std::move(p));
    }
  }
  return packets;
}

struct ReasonResult {
  std::vector<int> selected;     // indices into the packet list (peer packets)
  std::vector<double> j_values;  // one per peer packet, in packet order
  int merged_cells = 0;
};

// Jaccard gating happens strictly before any merge: all J values are
// computed against the pre-merge mental state, then every packet's records
// are merged with freshest-wins resolution.
inline ReasonResult reason(MentalState& self, std::span<const KnowledgePacket> packets,
                           double j_threshold) {
  ReasonResult out;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    if (packets[i].role != PacketRole::Peer) continue;
    const double j = jaccard(self, packets[i].records);
    out.j_values.push_back(j);
    if (j <= j_threshold) out.selected.push_back(static_cast<int>(i));
  }
  for (const KnowledgePacket& p : packets)
    out.merged_cells += self.merge_records(p.records);
  return out;
}

// Dampened averaging of the selected peers' parameters into the brain.
// Returns whether any aggregation happened.
inline bool aggregate(AgentBrain& brain, std::span<const KnowledgePacket> packets,
                      std::span<const int> selected, double beta) {
  if (selected.empty()) return false;
  std::vector<std::span<const double>> actors;
  std::vector<std::span<const double>> critics;
  for (int i : selected) {
    const KnowledgePacket& p = packets[i];
    if (p.role != PacketRole::Peer || !p.has_params)
      throw ProtocolError("selected packet carries no parameters");
    actors.push_back(p.actor_params);
    critics.push_back(p.critic_params);
  }
  brain.apply_aggregation(actors, critics, beta);
  return true;
}

struct SessionOutcome {
  int contacts = 0;
  int peers = 0;
  int advisors = 0;
  int packets = 0;
  int merged_cells = 0;
  std::vector<int> selected_peers;  // agent ids
  std::vector<double> j_values;
  bool aggregation_applied = false;
};

// One Share-Reason-Aggregate session for `agent`. `snapshots` is indexed by
// agent id and holds tick-start state for everyone; contacts come from live
// world positions. `brain` may be null (then no aggregation is attempted).
inline SessionOutcome run_session(const GridWorld& world, int agent,
                                  MentalState& self_mind, AgentBrain* brain,
                                  std::span<const ContactSnapshot> snapshots,
                                  bool goal_aware, double beta, double j_threshold,
                                  int r_obs) {
  SessionOutcome out;
  const std::vector<int> ids = world.contacts_in_range(agent, r_obs);
  out.contacts = static_cast<int>(ids.size());
  if (ids.empty()) return out;
  std::vector<ContactSnapshot> contacts;
  contacts.reserve(ids.size());
  for (int id : ids) contacts.push_back(snapshots[id]);

  Classification cls;
  if (goal_aware) {
    cls = classify_contacts(self_mind.goal(), contacts);
  } else {
    cls.advisors.resize(contacts.size());
    for (std::size_t i = 0; i < contacts.size(); ++i)
      cls.advisors[i] = static_cast<int>(i);
  }
  out.peers = static_cast<int>(cls.peers.size());
  out.advisors = static_cast<int>(cls.advisors.size());

  const auto packets = share(contacts, cls, world.agent_position(agent),
                             self_mind.goal(), goal_aware);
  out.packets = static_cast<int>(packets.size());
  ReasonResult reasoned = reason(self_mind, packets, j_threshold);
  out.merged_cells = reasoned.merged_cells;
  out.j_values = std::move(reasoned.j_values);
  for (int i : reasoned.selected) out.selected_peers.push_back(packets[i].sender);
  if (goal_aware && brain != nullptr)
    out.aggregation_applied = aggregate(*brain, packets, reasoned.selected, beta);
  return out;
}

}  // namespace decmarl
