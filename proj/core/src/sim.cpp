#include "tandem/sim.hpp"

#include <algorithm>
#include <cmath>

#include "tandem/rng.hpp"

namespace tandem {
namespace {

constexpr double kArenaMin = 0.0;
constexpr double kArenaMax = 1.0;
constexpr double kPressDistance = 0.05;
constexpr double kGroundY = 0.15;
constexpr double kRopeParticleMass = 0.05;
constexpr double kRopeDamping = 0.98;

Vec2 clamp_arena(const Vec2& p) {
  return {clamp(p.x, kArenaMin, kArenaMax), clamp(p.y, kArenaMin, kArenaMax)};
}

Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

}  // namespace

Vec2 ObjectState::site_world(int site) const {
  switch (kind) {
    case ObjectKind::kRopeChain:
      return particles[site == 0 ? 0 : particles.size() - 1];
    case ObjectKind::kHingedDoor: {
      const Vec2& s = grasp_sites[site];
      Vec2 dir{std::cos(hinge_angle), std::sin(hinge_angle)};
      return hinge_pivot + dir * s.x + perp(dir) * s.y;
    }
    default:
      return position + grasp_sites[site].rotated(orientation);
  }
}

Vec2 ObjectState::site_velocity(int site) const {
  switch (kind) {
    case ObjectKind::kRopeChain:
      return particle_vels[site == 0 ? 0 : particle_vels.size() - 1];
    case ObjectKind::kHingedDoor: {
      Vec2 r = site_world(site) - hinge_pivot;
      return perp(r) * hinge_vel;
    }
    default: {
      Vec2 r = site_world(site) - position;
      return velocity + perp(r) * ang_velocity;
    }
  }
}

std::array<double, 8> Action::flat() const {
  return {target[0].x, target[0].y, target[1].x, target[1].y,
          force[0].x,  force[0].y,  force[1].x,  force[1].y};
}

Action Action::from_flat(const std::array<double, 8>& v) {
  Action a;
  a.target[0] = {v[0], v[1]};
  a.target[1] = {v[2], v[3]};
  a.force[0] = {v[4], v[5]};
  a.force[1] = {v[6], v[7]};
  return a;
}

WorldState reset(const TaskSpec& task, uint64_t seed) {
  Rng rng(derive_seed(seed, std::string("reset:") + task_name(task.id)));
  WorldState w;
  w.task = task.id;
  w.seed = seed;
  switch (task.id) {
    case TaskId::kReach: {
      w.proxies[0].position = {0.35, 0.2};
      w.proxies[1].position = {0.65, 0.2};
      w.target_a = {rng.uniform(0.15, 0.45), rng.uniform(0.5, 0.8)};
      w.target_b = {rng.uniform(0.55, 0.85), rng.uniform(0.5, 0.8)};
      break;
    }
    case TaskId::kPushBox: {
      w.proxies[0].position = {0.22, 0.58};
      w.proxies[1].position = {0.22, 0.42};
      ObjectState box;
      box.kind = ObjectKind::kBox;
      box.position = {rng.uniform(0.40, 0.48), rng.uniform(0.45, 0.55)};
      box.half_w = 0.06;
      box.half_h = 0.06;
      box.mass = 2.0;
      // above one proxy's force budget, below two
      box.static_friction = 24.0;
      box.kinetic_friction = 10.0;
      box.grasp_sites = {{-0.06, 0.03}, {-0.06, -0.03}};
      w.target_a = box.position + Vec2{0.25, 0.0};
      w.objects.push_back(box);
      break;
    }
    case TaskId::kCloseDoor: {
      w.proxies[0].position = {0.40, 0.35};
      w.proxies[1].position = {0.62, 0.42};
      ObjectState door;
      door.kind = ObjectKind::kHingedDoor;
      door.hinge_pivot = {0.5, 0.7};
      door.door_length = 0.25;
      door.door_closed_angle = 0.0;
      door.door_min_angle = -1.6;
      door.door_max_angle = 0.05;
      door.hinge_angle = rng.uniform(-1.4, -1.0);
      door.mass = 0.8;
      door.inertia = 0.15;
      door.grasp_sites = {{0.23, 0.0}};
      w.target_angle = door.door_closed_angle;
      w.objects.push_back(door);
      break;
    }
    case TaskId::kLiftTray: {
      w.proxies[0].position = {0.30, 0.30};
      w.proxies[1].position = {0.70, 0.30};
      ObjectState tray;
      tray.kind = ObjectKind::kTwoHandleTray;
      tray.half_w = 0.12;
      tray.half_h = 0.02;
      tray.mass = 1.0;
      tray.inertia = 0.05;
      tray.position = {rng.uniform(0.45, 0.55), kGroundY + tray.half_h};
      tray.grasp_sites = {{-0.12, 0.0}, {0.12, 0.0}};
      w.target_height = 0.45;
      w.objects.push_back(tray);
      break;
    }
    case TaskId::kPressButtons: {
      w.proxies[0].position = {0.45, 0.20};
      w.proxies[1].position = {0.55, 0.20};
      for (int i = 0; i < 2; ++i) {
        ObjectState b;
        b.kind = ObjectKind::kButton;
        b.button_radius = 0.035;
        const double lo = i == 0 ? 0.15 : 0.70;
        b.position = {rng.uniform(lo, lo + 0.15), rng.uniform(0.55, 0.75)};
        w.objects.push_back(b);
      }
      break;
    }
    case TaskId::kStraightenRope: {
      w.proxies[0].position = {0.35, 0.30};
      w.proxies[1].position = {0.65, 0.30};
      ObjectState rope;
      rope.kind = ObjectKind::kRopeChain;
      rope.rope_rest_len = 0.04;
      rope.mass = kRopeParticleMass * kRopeParticles;
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double turn = sign * rng.uniform(1.2, 2.2);
      Vec2 p{0.0, 0.0};
      rope.particles.push_back(p);
      for (int i = 0; i < kRopeParticles - 1; ++i) {
        const double h = turn * (static_cast<double>(i) - 5.0) / 10.0;
        p += Vec2{std::cos(h), std::sin(h)} * rope.rope_rest_len;
        rope.particles.push_back(p);
      }
      Vec2 centroid{0.0, 0.0};
      for (const auto& q : rope.particles) centroid += q;
      centroid = centroid / static_cast<double>(rope.particles.size());
      for (auto& q : rope.particles) q = q - centroid + Vec2{0.5, 0.5};
      rope.particle_vels.assign(rope.particles.size(), Vec2{});
      rope.grasp_sites = {{0.0, 0.0}, {0.0, 0.0}};  // endpoints by convention
      w.target_a = {0.28, 0.5};
      w.target_b = {0.72, 0.5};
      w.objects.push_back(rope);
      break;
    }
  }
  return w;
}

Vec2 pd_force(const Vec2& target, const Vec2& pos, const Vec2& vel, double kp,
              double kd) {
  if (kp < 0.0 || kd < 0.0) throw Error("pd_force: negative gains");
  return clamp_norm((target - pos) * kp - vel * kd, kMaxForce);
}

std::optional<Attachment> try_attach(const ProxyState& proxy,
                                     const std::vector<ObjectState>& objects) {
  if (proxy.attached) throw Error("try_attach: proxy already attached");
  std::optional<Attachment> best;
  double best_d = kInteractiveRadius;
  for (size_t oi = 0; oi < objects.size(); ++oi) {
    const ObjectState& obj = objects[oi];
    for (size_t si = 0; si < obj.grasp_sites.size(); ++si) {
      const double d = (obj.site_world(static_cast<int>(si)) - proxy.position).norm();
      if (d < best_d) {
        best_d = d;
        best = Attachment{static_cast<int>(oi), static_cast<int>(si)};
      }
    }
  }
  return best;
}

bool success(const TaskSpec& task, const WorldState& w) {
  switch (task.id) {
    case TaskId::kReach:
      return (w.proxies[0].position - w.target_a).norm() <= task.pos_tol &&
             (w.proxies[1].position - w.target_b).norm() <= task.pos_tol;
    case TaskId::kPushBox:
      return (w.objects[0].position - w.target_a).norm() <= task.pos_tol;
    case TaskId::kCloseDoor:
      return std::fabs(w.objects[0].hinge_angle - w.target_angle) <= task.angle_tol;
    case TaskId::kLiftTray:
      return w.objects[0].position.y >= w.target_height - task.tray_height_tol &&
             std::fabs(w.objects[0].orientation) <= task.angle_tol;
    case TaskId::kPressButtons:
      return w.buttons_latched;
    case TaskId::kStraightenRope: {
      const auto& ps = w.objects[0].particles;
      // target line is horizontal through the endpoints
      const double line_y = w.target_a.y;
      for (const auto& p : ps)
        if (std::fabs(p.y - line_y) > task.rope_line_tol) return false;
      const Vec2 first = ps.front(), last = ps.back();
      const bool direct = (first - w.target_a).norm() <= task.rope_end_tol &&
                          (last - w.target_b).norm() <= task.rope_end_tol;
      const bool swapped = (first - w.target_b).norm() <= task.rope_end_tol &&
                           (last - w.target_a).norm() <= task.rope_end_tol;
      return direct || swapped;
    }
  }
  return false;
}

std::pair<WorldState, StepEvents> step(const WorldState& state,
                                       const Action& action,
                                       const TaskSpec& task) {
  if (!action.finite()) throw Error("step: non-finite action");
  WorldState w = state;
  StepEvents ev;

  Action act = action;
  for (int i = 0; i < 2; ++i) {
    act.target[i] = clamp_arena(act.target[i]);
    act.force[i] = clamp_norm(act.force[i], kMaxForce);
  }

  // attach, then release on sustained low commanded force
  for (int i = 0; i < 2; ++i) {
    ProxyState& pr = w.proxies[i];
    if (!pr.attached) {
      if (auto at = try_attach(pr, w.objects)) {
        pr.attached = true;
        pr.attached_object = at->object;
        pr.attached_site = at->site;
        pr.low_force_steps = 0;
        ev.attached[i] = true;
      }
    } else {
      if (act.force[i].norm() < kReleaseForce)
        pr.low_force_steps += 1;
      else
        pr.low_force_steps = 0;
      if (pr.low_force_steps >= kReleaseSteps) {
        pr.attached = false;
        pr.attached_object = -1;
        pr.attached_site = -1;
        pr.low_force_steps = 0;
        ev.released[i] = true;
      }
    }
  }

  // per-proxy applied force (actuator budget kMaxForce on the total)
  std::array<Vec2, 2> applied;
  for (int i = 0; i < 2; ++i) {
    const ProxyState& pr = w.proxies[i];
    Vec2 pd = pd_force(act.target[i], pr.position, pr.velocity, kPdKp, kPdKd);
    bool interacting = pr.attached;
    if (!interacting) {
      for (const auto& obj : w.objects)
        for (size_t si = 0; si < obj.grasp_sites.size() && !interacting; ++si)
          if ((obj.site_world(static_cast<int>(si)) - pr.position).norm() <
              kInteractiveRadius)
            interacting = true;
    }
    applied[i] = clamp_norm(pd + (interacting ? act.force[i] : Vec2{}), kMaxForce);
  }

  // accumulate proxy forces on rigid objects
  struct Wrench {
    Vec2 force;
    double torque = 0.0;
  };
  std::vector<Wrench> wrench(w.objects.size());
  for (int i = 0; i < 2; ++i) {
    const ProxyState& pr = w.proxies[i];
    if (!pr.attached) continue;
    ObjectState& obj = w.objects[pr.attached_object];
    if (obj.kind == ObjectKind::kRopeChain) continue;  // proxy is master there
    Vec2 r = obj.site_world(pr.attached_site) -
             (obj.kind == ObjectKind::kHingedDoor ? obj.hinge_pivot : obj.position);
    wrench[pr.attached_object].force += applied[i];
    wrench[pr.attached_object].torque += r.cross(applied[i]);
  }

  // object dynamics
  for (size_t oi = 0; oi < w.objects.size(); ++oi) {
    ObjectState& obj = w.objects[oi];
    switch (obj.kind) {
      case ObjectKind::kBox: {
        Vec2 F = wrench[oi].force;
        const bool moving = obj.velocity.norm() > 1e-6;
        if (!moving && F.norm() <= obj.static_friction) break;
        Vec2 dir = moving ? obj.velocity.normalized() : F.normalized();
        Vec2 Feff = F - dir * obj.kinetic_friction;
        obj.velocity += Feff * (kDt / obj.mass);
        // stiction: stop instead of oscillating around zero
        if (obj.velocity.norm() < obj.kinetic_friction / obj.mass * kDt &&
            F.norm() <= obj.static_friction)
          obj.velocity = {0.0, 0.0};
        obj.position += obj.velocity * kDt;
        break;
      }
      case ObjectKind::kHingedDoor: {
        const double damping = 0.3;
        const double tau = wrench[oi].torque - damping * obj.hinge_vel;
        obj.hinge_vel += tau / obj.inertia * kDt;
        obj.hinge_angle += obj.hinge_vel * kDt;
        if (obj.hinge_angle < obj.door_min_angle) {
          obj.hinge_angle = obj.door_min_angle;
          obj.hinge_vel = 0.0;
        } else if (obj.hinge_angle > obj.door_max_angle) {
          obj.hinge_angle = obj.door_max_angle;
          obj.hinge_vel = 0.0;
        }
        break;
      }
      case ObjectKind::kTwoHandleTray: {
        const double ang_damping = 0.2;
        Vec2 F = wrench[oi].force + Vec2{0.0, -kGravity * obj.mass};
        obj.velocity += F * (kDt / obj.mass);
        const double tau = wrench[oi].torque - ang_damping * obj.ang_velocity;
        obj.ang_velocity += tau / obj.inertia * kDt;
        obj.position += obj.velocity * kDt;
        obj.orientation += obj.ang_velocity * kDt;
        const double floor = kGroundY + obj.half_h;
        if (obj.position.y < floor) {
          obj.position.y = floor;
          if (obj.velocity.y < 0.0) obj.velocity.y = 0.0;
          obj.velocity.x *= 0.9;
          obj.ang_velocity *= 0.5;
          obj.orientation *= 0.98;
        }
        break;
      }
      case ObjectKind::kButton: {
        for (int i = 0; i < 2; ++i)
          if ((w.proxies[i].position - obj.position).norm() < kPressDistance) {
            obj.last_press_step = w.t + 1;
            obj.pressed_latch = true;
          }
        break;
      }
      case ObjectKind::kRopeChain:
        break;  // handled after proxy integration
    }
  }

  if (w.task == TaskId::kPressButtons && !w.buttons_latched) {
    const auto& b0 = w.objects[0];
    const auto& b1 = w.objects[1];
    if (b0.pressed_latch && b1.pressed_latch &&
        std::abs(b0.last_press_step - b1.last_press_step) <= task.button_window)
      w.buttons_latched = true;
  }

  // proxy integration: free proxies move under applied force, proxies on a
  // rigid object ride its grasp site
  for (int i = 0; i < 2; ++i) {
    ProxyState& pr = w.proxies[i];
    const bool rides_rigid =
        pr.attached &&
        w.objects[pr.attached_object].kind != ObjectKind::kRopeChain;
    if (rides_rigid) {
      const ObjectState& obj = w.objects[pr.attached_object];
      pr.position = obj.site_world(pr.attached_site);
      pr.velocity = obj.site_velocity(pr.attached_site);
    } else {
      pr.velocity += applied[i] * (kDt / kProxyMass);
      pr.position += pr.velocity * kDt;
      pr.position = clamp_arena(pr.position);
    }
  }

  // rope: integrate, pin grasped endpoints to their proxies, then project
  // segment-length constraints (position based, fixed iteration count)
  for (size_t oi = 0; oi < w.objects.size(); ++oi) {
    ObjectState& obj = w.objects[oi];
    if (obj.kind != ObjectKind::kRopeChain) continue;
    std::vector<Vec2> prev = obj.particles;
    const int n = static_cast<int>(obj.particles.size());
    std::vector<signed char> pinned(n, -1);  // -1 free, else pinning proxy
    for (int i = 0; i < 2; ++i) {
      const ProxyState& pr = w.proxies[i];
      if (pr.attached && pr.attached_object == static_cast<int>(oi)) {
        const int pi = pr.attached_site == 0 ? 0 : n - 1;
        obj.particles[pi] = pr.position;
        pinned[pi] = static_cast<signed char>(i);
      }
    }
    for (int p = 0; p < n; ++p) {
      if (pinned[p] >= 0) continue;
      obj.particle_vels[p] = obj.particle_vels[p] * kRopeDamping;
      obj.particles[p] += obj.particle_vels[p] * kDt;
    }
    // gripped at both ends and pulled past its total length, the grip gives
    // a little: cap the pinned-end separation so the segment-length
    // constraints below stay satisfiable instead of stretching the rope
    if (pinned[0] >= 0 && pinned[n - 1] >= 0) {
      Vec2 d = obj.particles[n - 1] - obj.particles[0];
      const double span = d.norm();
      const double max_span =
          0.999 * obj.rope_rest_len * static_cast<double>(n - 1);
      if (span > max_span) {
        Vec2 mid = (obj.particles[0] + obj.particles[n - 1]) * 0.5;
        Vec2 half = d * (0.5 * max_span / span);
        obj.particles[0] = mid - half;
        obj.particles[n - 1] = mid + half;
      }
    }
    // iterate at least the nominal count, then keep going until the worst
    // segment error is safely inside the 1% preservation budget; sweeps
    // alternate direction so corrections propagate between two pinned ends
    for (int it = 0; it < 64 * kRopeIterations; ++it) {
      if (it >= kRopeIterations) {
        double worst = 0.0;
        for (int s = 0; s < n - 1; ++s)
          worst = std::max(worst,
                           std::fabs((obj.particles[s + 1] - obj.particles[s])
                                         .norm() -
                                     obj.rope_rest_len));
        if (worst <= 0.005 * obj.rope_rest_len) break;
      }
      for (int k = 0; k < n - 1; ++k) {
        const int s = it % 2 == 0 ? k : n - 2 - k;
        Vec2 d = obj.particles[s + 1] - obj.particles[s];
        const double len = d.norm();
        if (len < 1e-12) continue;
        const double err = len - obj.rope_rest_len;
        Vec2 corr = d * (err / len);
        const double w0 = pinned[s] >= 0 ? 0.0 : 1.0;
        const double w1 = pinned[s + 1] >= 0 ? 0.0 : 1.0;
        const double wsum = w0 + w1;
        if (wsum == 0.0) continue;
        obj.particles[s] += corr * (w0 / wsum);
        obj.particles[s + 1] -= corr * (w1 / wsum);
      }
    }
    for (int p = 0; p < n; ++p)
      obj.particle_vels[p] = pinned[p] >= 0
                                 ? w.proxies[pinned[p]].velocity
                                 : (obj.particles[p] - prev[p]) / kDt;
  }

  w.t += 1;
  ev.success = success(task, w);
  return {w, ev};
}

double object_kinetic_energy(const WorldState& w) {
  double e = 0.0;
  for (const auto& obj : w.objects) {
    switch (obj.kind) {
      case ObjectKind::kRopeChain:
        for (const auto& v : obj.particle_vels)
          e += 0.5 * kRopeParticleMass * v.norm2();
        break;
      case ObjectKind::kHingedDoor:
        e += 0.5 * obj.inertia * obj.hinge_vel * obj.hinge_vel;
        break;
      default:
        e += 0.5 * obj.mass * obj.velocity.norm2() +
             0.5 * obj.inertia * obj.ang_velocity * obj.ang_velocity;
        break;
    }
  }
  return e;
}

}  // namespace tandem
