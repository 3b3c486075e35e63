#include "tandem/expert.hpp"

#include <cmath>

namespace tandem {
namespace {

Action hold_action(const WorldState& w, const Action& keep_force) {
  Action a;
  a.target[0] = w.proxies[0].position;
  a.target[1] = w.proxies[1].position;
  a.force = keep_force.force;
  return a;
}

}  // namespace

Action scripted_expert(const TaskSpec& task, const WorldState& w, bool mirror) {
  Action a;
  // proxy i works site/button assign[i]
  const int assign[2] = {mirror ? 1 : 0, mirror ? 0 : 1};

  switch (task.id) {
    case TaskId::kReach: {
      a.target[0] = w.target_a;
      a.target[1] = w.target_b;
      if (success(task, w)) return hold_action(w, a);
      break;
    }
    case TaskId::kPushBox: {
      const ObjectState& box = w.objects[0];
      const Vec2 dir = (w.target_a - box.position).normalized();
      const double dist = (w.target_a - box.position).norm();
      const bool both = w.proxies[0].attached && w.proxies[1].attached;
      // taper forces near the target so friction stops the box inside tolerance
      const double gain = clamp(dist / 0.12, 0.0, 1.0);
      for (int i = 0; i < 2; ++i) {
        const Vec2 site = box.site_world(assign[i]);
        if (!w.proxies[i].attached) {
          a.target[i] = site;
          a.force[i] = dir * 2.0;
        } else if (both) {
          a.target[i] = site + dir * (task.expert_lead * gain);
          a.force[i] = dir * (task.expert_force * gain) + dir * 1.0;
        } else {
          a.target[i] = site;
          a.force[i] = dir * 1.0;  // keep the grasp while waiting
        }
      }
      if (success(task, w)) return hold_action(w, a);
      break;
    }
    case TaskId::kCloseDoor: {
      const ObjectState& door = w.objects[0];
      // right proxy closes the door, left stays parked
      a.target[0] = w.proxies[0].position;
      const Vec2 site = door.site_world(0);
      if (!w.proxies[1].attached) {
        a.target[1] = site;
        a.force[1] = {1.0, 0.0};
      } else {
        const double remaining = w.target_angle - door.hinge_angle;
        const double theta_next =
            door.hinge_angle + clamp(remaining, -0.35, 0.35);
        const Vec2 dir{std::cos(theta_next), std::sin(theta_next)};
        a.target[1] = door.hinge_pivot + dir * door.grasp_sites[0].x;
        // tangential pull toward the closed angle, tapered near it
        Vec2 radial = (site - door.hinge_pivot).normalized();
        Vec2 tangent{-radial.y, radial.x};
        const double s = remaining >= 0.0 ? 1.0 : -1.0;
        const double gain = clamp(std::fabs(remaining) / 0.25, 0.1, 1.0);
        a.force[1] = tangent * (s * task.expert_force * 0.4 * gain);
      }
      if (success(task, w)) return hold_action(w, a);
      break;
    }
    case TaskId::kLiftTray: {
      const ObjectState& tray = w.objects[0];
      const bool both = w.proxies[0].attached && w.proxies[1].attached;
      for (int i = 0; i < 2; ++i) {
        const Vec2 site = tray.site_world(assign[i]);
        if (!w.proxies[i].attached) {
          a.target[i] = site;
          a.force[i] = {0.0, 1.0};
        } else if (both) {
          const double y_next = std::min(site.y + 0.08, w.target_height + 0.02);
          a.target[i] = {tray.position.x + tray.grasp_sites[assign[i]].x, y_next};
          a.force[i] = {0.0, 0.55 * kGravity * tray.mass};
        } else {
          a.target[i] = site;
          a.force[i] = {0.0, 1.0};
        }
      }
      if (success(task, w)) return hold_action(w, a);
      break;
    }
    case TaskId::kPressButtons: {
      for (int i = 0; i < 2; ++i)
        a.target[i] = w.objects[assign[i]].position;
      if (success(task, w)) return hold_action(w, a);
      break;
    }
    case TaskId::kStraightenRope: {
      const ObjectState& rope = w.objects[0];
      const Vec2 targets[2] = {w.target_a, w.target_b};
      const bool both = w.proxies[0].attached && w.proxies[1].attached;
      const Vec2 center = (w.target_a + w.target_b) * 0.5;
      for (int i = 0; i < 2; ++i) {
        const Vec2 site = rope.site_world(assign[i]);
        const Vec2 tgt = targets[assign[i]];
        if (!w.proxies[i].attached) {
          a.target[i] = site;
          a.force[i] = {0.5, 0.0};
        } else {
          Vec2 out = (tgt - center).normalized();
          // taper toward a floor that still maintains the grasp
          const double dist = (tgt - site).norm();
          const double tension = 2.0 * clamp(dist / 0.12, 0.3, 1.0);
          if (both) {
            // setpoint settles just inside the goal so the taut rope never
            // overstretches; the inset cancels the commanded tension, making
            // the equilibrium stationary. Rate-limiting the reference keeps
            // the approach overshoot-free.
            Vec2 goal = tgt - out * (0.001 + tension / kPdKp);
            Vec2 d = goal - site;
            const double dn = d.norm();
            const double step_cap = clamp(0.35 * dn, 0.002, 0.015);
            if (dn > step_cap) d = d * (step_cap / dn);
            a.target[i] = site + d;
          } else {
            a.target[i] = site;
          }
          a.force[i] = out * tension;
        }
      }
      break;
    }
  }
  return a;
}

ExpertEpisode run_expert_episode(const TaskSpec& task, uint64_t seed,
                                 bool mirror, int hold_steps, int min_steps) {
  ExpertEpisode ep;
  WorldState w = reset(task, seed);
  ep.states.push_back(w);
  int since_success = -1;
  for (int t = 0; t < task.horizon; ++t) {
    Action a = scripted_expert(task, w, mirror);
    auto [next, ev] = step(w, a, task);
    ep.actions.push_back(a);
    ep.states.push_back(next);
    w = next;
    if (ev.success && ep.success_step < 0) {
      ep.success = true;
      ep.success_step = t + 1;
    }
    if (ep.success_step >= 0) {
      since_success = t + 1 - ep.success_step;
      // end only on a successful frame so the final state keeps the goal
      if (since_success >= hold_steps && t + 1 >= min_steps && ev.success)
        break;
    }
  }
  // success means the final state still satisfies the predicate
  ep.success = success(task, ep.states.back());
  return ep;
}

}  // namespace tandem
