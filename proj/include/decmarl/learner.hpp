#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "decmarl/encoding.hpp"
#include "decmarl/grid.hpp"
#include "decmarl/neural.hpp"

namespace decmarl {

struct RewardParams {
  double alpha = 0.1;
  double lambda_stay = 0.5;
  int delta_max = 20;  // width + height of the active map
};

// 1 - delta/delta_max on the true map; unreachable counts as delta_max.
inline double extrinsic_reward(const GridWorld& world, int agent,
                               const RewardParams& p) {
  const auto d = world.shortest_path_len(world.agent_position(agent),
                                         world.agent_goal(agent));
  const int delta = d ? *d : p.delta_max;
  return 1.0 - static_cast<double>(delta) / p.delta_max;
}

// r_agg = (1-alpha)*r_ext + alpha*nu, clamped to the reward range.
inline double combine_rewards(double r_ext, double nu, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0,1]");
  return std::clamp((1.0 - alpha) * r_ext + alpha * nu, -1.0, 1.0);
}

inline double combined_move_reward(double r_ext, const MentalState& ms, double alpha,
                                   NoveltyMode mode = NoveltyMode::Time) {
  return combine_rewards(r_ext, ms.mean_novelty(mode), alpha);
}

inline double step_reward(MoveKind kind, bool at_goal, double r_agg,
                          double lambda_stay) {
  if (at_goal) return 1.0;
  if (kind == MoveKind::DeliberateStay) return -lambda_stay;
  if (kind == MoveKind::Blocked) return -1.0;
  return r_agg;
}

// Linear anneal from start to end over the first `anneal_steps` global ticks.
struct EpsilonSchedule {
  double start = 0.9;
  double end = 0.05;
  long anneal_steps = 1;

  double at(long global_step) const {
    if (anneal_steps <= 0 || global_step >= anneal_steps) return end;
    return start + (end - start) * (static_cast<double>(global_step) / anneal_steps);
  }
};

struct BrainConfig {
  double gamma = 0.99;
  double tau = 1e-3;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::size_t batch = 64;
  std::size_t replay_capacity = 100000;
};

struct UpdateResult {
  bool applied = false;
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

inline int argmax_action(const double* logits) {
  int best = 0;
  for (int k = 1; k < kNumActions; ++k)
    if (logits[k] > logits[best]) best = k;
  return best;
}

// Discrete adaptation of DDPG: deterministic target action via target-actor
// argmax, actor gradient through a softmax-weighted action embedding fed to
// the critic.
class AgentBrain {
 public:
  AgentBrain(const EmbeddingTables* tables, const BrainConfig& cfg, std::uint64_t seed)
      : tables_(tables),
        cfg_(cfg),
        actor_({kActorInputDim, 128, 128, kNumActions}),
        critic_({kCriticInputDim, 128, 128, 1}),
        target_actor_({kActorInputDim, 128, 128, kNumActions}),
        target_critic_({kCriticInputDim, 128, 128, 1}),
        actor_opt_(cfg.actor_lr, actor_.num_params()),
        critic_opt_(cfg.critic_lr, critic_.num_params()),
        buffer_(cfg.replay_capacity, derive_seed(seed, 2)) {
    Rng rng(derive_seed(seed, 1));
    actor_.init(rng);
    critic_.init(rng);
    target_actor_.set_params(actor_.params());
    target_critic_.set_params(critic_.params());
  }

  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& target_actor() const { return target_actor_; }
  const Mlp& target_critic() const { return target_critic_; }
  Mlp& actor_mut() { return actor_; }
  Mlp& critic_mut() { return critic_; }
  const BrainConfig& config() const { return cfg_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  Action select_action(std::span<const double> actor_input, double eps, Rng& rng) const {
    if (eps < 0.0 || eps > 1.0) throw ConfigError("epsilon must lie in [0,1]");
    if (next_unit(rng) < eps)
      return static_cast<Action>(next_below(rng, kNumActions));
    const std::vector<double> logits = actor_.forward(actor_input);
    return static_cast<Action>(argmax_action(logits.data()));
  }

  void push_transition(Transition t) { buffer_.push(std::move(t)); }

  UpdateResult update() {
    const std::size_t B = cfg_.batch;
    if (!buffer_.sample(B, idx_)) return {};

    x_.resize(B * kActorInputDim);
    xn_.resize(B * kActorInputDim);
    cx_.resize(B * kCriticInputDim);
    cxn_.resize(B * kCriticInputDim);
    y_.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
      const Transition& t = buffer_.at(idx_[b]);
      std::copy(t.x.begin(), t.x.end(), x_.begin() + b * kActorInputDim);
      std::copy(t.x_next.begin(), t.x_next.end(), xn_.begin() + b * kActorInputDim);
    }

    // TD target from the target networks: a' = argmax target-actor(x').
    target_actor_.forward(xn_.data(), static_cast<int>(B), ws_tactor_);
    const std::vector<double>& ln = ws_tactor_.acts.back();
    for (std::size_t b = 0; b < B; ++b) {
      const int a = argmax_action(ln.data() + b * kNumActions);
      double* row = cxn_.data() + b * kCriticInputDim;
      std::copy_n(xn_.data() + b * kActorInputDim, kActorInputDim, row);
      std::copy_n(tables_->action_row(static_cast<Action>(a)), kActionDim,
                  row + kActorInputDim);
    }
    target_critic_.forward(cxn_.data(), static_cast<int>(B), ws_tcritic_);
    const std::vector<double>& qn = ws_tcritic_.acts.back();
    for (std::size_t b = 0; b < B; ++b) {
      const Transition& t = buffer_.at(idx_[b]);
      y_[b] = t.reward + cfg_.gamma * (t.done ? 0.0 : 1.0) * qn[b];
    }

    // Critic regression toward y on the stored actions.
    for (std::size_t b = 0; b < B; ++b) {
      const Transition& t = buffer_.at(idx_[b]);
      double* row = cx_.data() + b * kCriticInputDim;
      std::copy_n(x_.data() + b * kActorInputDim, kActorInputDim, row);
      std::copy_n(tables_->action_row(static_cast<Action>(t.action)), kActionDim,
                  row + kActorInputDim);
    }
    critic_.forward(cx_.data(), static_cast<int>(B), ws_critic_);
    const std::vector<double>& q = ws_critic_.acts.back();
    double loss = 0.0;
    dq_.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
      const double e = q[b] - y_[b];
      loss += e * e / B;
      dq_[b] = 2.0 * e / B;
    }
    grad_critic_.resize(critic_.num_params());
    critic_.backward(cx_.data(), static_cast<int>(B), ws_critic_, dq_.data(),
                     grad_critic_.data());
    critic_opt_.step(critic_.params_mut(), grad_critic_);

    // Actor ascends Q(x, softmax(logits) . action_table); gradients flow
    // through the softmax weights.
    actor_.forward(x_.data(), static_cast<int>(B), ws_actor_);
    const std::vector<double>& logits = ws_actor_.acts.back();
    p_.resize(B * kNumActions);
    for (std::size_t b = 0; b < B; ++b) {
      const double* lr = logits.data() + b * kNumActions;
      double* pr = p_.data() + b * kNumActions;
      double mx = lr[0];
      for (int k = 1; k < kNumActions; ++k) mx = std::max(mx, lr[k]);
      double sum = 0.0;
      for (int k = 0; k < kNumActions; ++k) {
        pr[k] = std::exp(lr[k] - mx);
        sum += pr[k];
      }
      for (int k = 0; k < kNumActions; ++k) pr[k] /= sum;
    }
    for (std::size_t b = 0; b < B; ++b) {
      const double* pr = p_.data() + b * kNumActions;
      double* row = cx_.data() + b * kCriticInputDim;  // reuse state block
      double* ea = row + kActorInputDim;
      for (int k = 0; k < kActionDim; ++k) ea[k] = 0.0;
      for (int a = 0; a < kNumActions; ++a) {
        const double w = pr[a];
        const double* e = tables_->action_row(static_cast<Action>(a));
        for (int k = 0; k < kActionDim; ++k) ea[k] += w * e[k];
      }
    }
    critic_.forward(cx_.data(), static_cast<int>(B), ws_critic_);
    const std::vector<double>& qa = ws_critic_.acts.back();
    double objective = 0.0;
    for (std::size_t b = 0; b < B; ++b) objective += qa[b] / B;
    dq_.assign(B, -1.0 / B);  // d(actor loss)/dQ for loss = -mean(Q)
    grad_scratch_.resize(critic_.num_params());
    dcx_.resize(B * kCriticInputDim);
    critic_.backward(cx_.data(), static_cast<int>(B), ws_critic_, dq_.data(),
                     grad_scratch_.data(), dcx_.data());
    dlogits_.resize(B * kNumActions);
    for (std::size_t b = 0; b < B; ++b) {
      const double* de = dcx_.data() + b * kCriticInputDim + kActorInputDim;
      const double* pr = p_.data() + b * kNumActions;
      double dp[kNumActions];
      for (int a = 0; a < kNumActions; ++a) {
        const double* e = tables_->action_row(static_cast<Action>(a));
        double s = 0.0;
        for (int k = 0; k < kActionDim; ++k) s += de[k] * e[k];
        dp[a] = s;
      }
      double dot = 0.0;
      for (int a = 0; a < kNumActions; ++a) dot += pr[a] * dp[a];
      double* dl = dlogits_.data() + b * kNumActions;
      for (int a = 0; a < kNumActions; ++a) dl[a] = pr[a] * (dp[a] - dot);
    }
    grad_actor_.resize(actor_.num_params());
    actor_.backward(x_.data(), static_cast<int>(B), ws_actor_, dlogits_.data(),
                    grad_actor_.data());
    actor_opt_.step(actor_.params_mut(), grad_actor_);

    soft_update(target_actor_.params_mut(), actor_.params(), cfg_.tau);
    soft_update(target_critic_.params_mut(), critic_.params(), cfg_.tau);

    if (!std::isfinite(loss) || !all_finite(actor_.params()) ||
        !all_finite(critic_.params()))
      throw std::runtime_error("non-finite values during learning update");
    return {true, loss, objective};
  }

  // Dampened averaging toward the mean of the selected snapshots; targets are
  // re-synced and optimizer moments restart so stale statistics don't linger.
  void apply_aggregation(const std::vector<std::span<const double>>& actor_snaps,
                         const std::vector<std::span<const double>>& critic_snaps,
                         double beta) {
    if (beta < 0.0 || beta > 1.0) throw ConfigError("beta must lie in [0,1]");
    if (actor_snaps.empty()) return;
    if (actor_snaps.size() != critic_snaps.size())
      throw ProtocolError("actor/critic snapshot counts differ");
    blend(actor_.params_mut(), actor_snaps, beta);
    blend(critic_.params_mut(), critic_snaps, beta);
    target_actor_.set_params(actor_.params());
    target_critic_.set_params(critic_.params());
    actor_opt_.reset();
    critic_opt_.reset();
  }

 private:
  static void blend(std::span<double> own,
                    const std::vector<std::span<const double>>& snaps, double beta) {
    for (const auto& s : snaps)
      if (s.size() != own.size())
        throw ProtocolError("parameter snapshot shape mismatch");
    const double w = beta / snaps.size();
    for (std::size_t i = 0; i < own.size(); ++i) {
      double mean_term = 0.0;
      for (const auto& s : snaps) mean_term += s[i];
      own[i] = (1.0 - beta) * own[i] + w * mean_term;
    }
  }

  const EmbeddingTables* tables_;
  BrainConfig cfg_;
  Mlp actor_;
  Mlp critic_;
  Mlp target_actor_;
  Mlp target_critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  ReplayBuffer buffer_;

  // Scratch reused across updates to avoid reallocation.
  std::vector<std::size_t> idx_;
  std::vector<double> x_, xn_, cx_, cxn_, y_, dq_, p_, dcx_, dlogits_;
  std::vector<double> grad_critic_, grad_actor_, grad_scratch_;
  Mlp::Workspace ws_actor_, ws_critic_, ws_tactor_, ws_tcritic_;
};

// FNV-1a over the raw bytes of both online parameter vectors; used by the
// harness to assert that advisor-only sessions leave parameters untouched.
inline std::uint64_t param_fingerprint(const AgentBrain& brain) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::span<const double> v) {
    for (double d : v) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &d, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
      }
    }
  };
  mix(brain.actor().params());
  mix(brain.critic().params());
  return h;
}

}  // namespace decmarl
