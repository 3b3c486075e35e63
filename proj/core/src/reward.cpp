#include "tandem/reward.hpp"

#include <algorithm>
#include <cmath>

#include "tandem/render.hpp"

namespace tandem {

const char* reward_mode_name(RewardMode m) {
  switch (m) {
    case RewardMode::kCoord: return "coord";
    case RewardMode::kAblated: return "ablated";
    case RewardMode::kExpert: return "expert";
    case RewardMode::kCoordProprio: return "coord+proprio";
  }
  throw Error("reward_mode_name: bad mode");
}

RewardMode reward_mode_from_name(const std::string& name) {
  if (name == "coord") return RewardMode::kCoord;
  if (name == "ablated") return RewardMode::kAblated;
  if (name == "expert") return RewardMode::kExpert;
  if (name == "coord+proprio") return RewardMode::kCoordProprio;
  throw Error("unknown reward mode: " + name);
}

double tilted_reward(double s, double beta, double alpha) {
  if (beta <= 0.0) throw Error("tilted_reward: beta must be positive");
  const double tilt = s > beta ? 1.0 + alpha : 1.0;
  return std::exp(tilt * (s - beta) / beta) - 1.0;
}

namespace {

// sharp attraction well: strong gradient once d is within ~scale
double well(double d, double scale = 0.05) { return std::exp(-d / scale); }

// shaping toward the grasp sites (site i assigned to proxy i), plus a hold
// bonus per attachment
double approach_term(const WorldState& w) {
  double v = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto& pr = w.proxies[i];
    if (pr.attached) {
      v += 1.0;
      continue;
    }
    const auto& obj = w.objects[0];
    const int site = std::min<int>(i, static_cast<int>(obj.grasp_sites.size()) - 1);
    const double d = (pr.position - obj.site_world(site)).norm();
    v += -0.5 * d + 0.5 * well(d);
  }
  return v;
}

}  // namespace

double expert_potential(const TaskSpec& task, const WorldState& w) {
  switch (task.id) {
    case TaskId::kReach: {
      const double d0 = (w.proxies[0].position - w.target_a).norm();
      const double d1 = (w.proxies[1].position - w.target_b).norm();
      return -task.w_pos * (d0 + d1) + 2.0 * (well(d0, 0.03) + well(d1, 0.03));
    }
    case TaskId::kPushBox: {
      const double d = (w.objects[0].position - w.target_a).norm();
      return -task.w_pos * d + well(d) + approach_term(w);
    }
    case TaskId::kCloseDoor: {
      const double a = std::fabs(w.objects[0].hinge_angle - w.target_angle);
      double v = -task.w_angle * a + well(a, 0.15);
      const auto& pr = w.proxies[1];
      if (pr.attached) {
        v += 1.0;
      } else {
        const double d = (pr.position - w.objects[0].site_world(0)).norm();
        v += -0.5 * d + 0.5 * well(d);
      }
      return v;
    }
    case TaskId::kLiftTray: {
      const double dh = std::fabs(w.objects[0].position.y - w.target_height);
      return -task.w_pos * dh + well(dh) -
             task.w_angle * std::fabs(w.objects[0].orientation) +
             approach_term(w);
    }
    case TaskId::kPressButtons: {
      // each proxy is steered toward its nearest still-unlatched button
      double v = 0.0;
      for (const auto& proxy : w.proxies) {
        double best = 0.0;
        bool any = false;
        for (const auto& b : w.objects) {
          if (b.pressed_latch) continue;
          const double dist = (proxy.position - b.position).norm();
          if (!any || dist < best) best = dist, any = true;
        }
        if (any) v += -task.w_pos * best + well(best);
      }
      return v;
    }
    case TaskId::kStraightenRope: {
      const auto& rope = w.objects[0];
      double line = 0.0;
      for (const auto& p : rope.particles)
        line += std::fabs(p.y - w.target_a.y);
      line /= static_cast<double>(rope.particles.size());
      const Vec2 e0 = rope.particles.front(), e1 = rope.particles.back();
      const double ends =
          std::min((e0 - w.target_a).norm() + (e1 - w.target_b).norm(),
                   (e0 - w.target_b).norm() + (e1 - w.target_a).norm());
      return -task.w_pos * (line + ends) + well(line + ends) +
             approach_term(w);
    }
  }
  throw Error("expert_potential: bad task");
}

namespace {

class ExpertReward final : public RewardFn {
 public:
  double begin_episode(const WorldState&, const TaskSpec&) override {
    return 0.0;
  }
  RewardStep step(const WorldState& w, const TaskSpec& task) override {
    // dense negative distance plus a success bonus
    return {0.0, expert_potential(task, w) + (success(task, w) ? 5.0 : 0.0)};
  }
  double beta() const override { return 0.0; }
};

class GoalSimilarityReward final : public RewardFn {
 public:
  GoalSimilarityReward(const RewardParams& rp, const ParamStore& params,
                       const EncoderConfig& cfg, const GoalSpec& goal)
      : rp_(rp),
        params_(params),
        goal_(goal),
        view_(ViewSpec::by_id(goal.view_id)),
        encoder_(cfg) {
    if (rp.mode == RewardMode::kAblated && !cfg.ablate_hands)
      throw Error("make_reward: ablated mode needs a hand-ablated encoder");
    if (rp.mode != RewardMode::kAblated && cfg.ablate_hands)
      throw Error("make_reward: encoder was trained without hand tokens");
    z_goal_ = encoder_.encode(goal.frame, goal.hands, params_);
  }

  double begin_episode(const WorldState& first, const TaskSpec&) override {
    const double raw = goal_similarity(first);
    if (raw > kBetaDegenerate)
      throw Error("begin_episode: degenerate goal (initial state already "
                  "matches it; resample the episode)");
    beta_ = std::max(raw, kBetaFloor);
    return beta_;
  }

  RewardStep step(const WorldState& w, const TaskSpec&) override {
    if (beta_ <= 0.0) throw Error("RewardFn::step before begin_episode");
    Observation obs = render(w, view_, RenderMode::kAgentAgnostic);
    const double s =
        similarity(encoder_.encode(obs.frame, obs.hands, params_), z_goal_,
                   encoder_.config().temperature);
    double r = std::min(tilted_reward(s, beta_, rp_.alpha), kRewardCap);
    if (rp_.mode == RewardMode::kCoordProprio)
      r += rp_.lambda_proprio * proprio_bonus(obs.hands);
    return {s, r};
  }

  double beta() const override { return beta_; }

 private:
  double goal_similarity(const WorldState& w) {
    Observation obs = render(w, view_, RenderMode::kAgentAgnostic);
    return similarity(encoder_.encode(obs.frame, obs.hands, params_), z_goal_,
                      encoder_.config().temperature);
  }

  double proprio_bonus(const HandCoords& hands) const {
    double b = 0.0;
    if (hands.left_present && goal_.hands.left_present)
      b += std::exp(-(hands.left - goal_.hands.left).norm());
    if (hands.right_present && goal_.hands.right_present)
      b += std::exp(-(hands.right - goal_.hands.right).norm());
    return b;
  }

  RewardParams rp_;
  ParamStore params_;
  GoalSpec goal_;
  ViewSpec view_;
  Encoder encoder_;
  Embedding z_goal_;
  double beta_ = 0.0;
};

}  // namespace

std::unique_ptr<RewardFn> make_reward(const RewardParams& rp,
                                      const ParamStore* encoder_params,
                                      const EncoderConfig* encoder_cfg,
                                      const GoalSpec* goal) {
  if (rp.mode == RewardMode::kExpert) return std::make_unique<ExpertReward>();
  if (!encoder_params || !encoder_cfg || !goal)
    throw Error("make_reward: encoder checkpoint and goal required for mode " +
                std::string(reward_mode_name(rp.mode)));
  return std::make_unique<GoalSimilarityReward>(rp, *encoder_params,
                                                *encoder_cfg, *goal);
}

}  // namespace tandem
