#ifndef TANDEM_SIM_HPP_
#define TANDEM_SIM_HPP_

#include <array>
#include <optional>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/tasks.hpp"

namespace tandem {

// Global simulator constants (1 world unit = 1 m analog).
inline constexpr double kDt = 0.02;
inline constexpr double kCollisionRadius = 0.02;
inline constexpr double kInteractiveRadius = 0.05;
inline constexpr double kMaxForce = 20.0;
inline constexpr double kPdKp = 40.0;
inline constexpr double kPdKd = 8.0;
inline constexpr double kProxyMass = 1.0;
inline constexpr double kGravity = 9.8;
// commanded force below this for kReleaseSteps consecutive steps releases a grasp
inline constexpr double kReleaseForce = 0.5;
inline constexpr int kReleaseSteps = 5;
inline constexpr int kRopeParticles = 12;
inline constexpr int kRopeIterations = 8;

enum class ObjectKind { kBox, kHingedDoor, kTwoHandleTray, kRopeChain, kButton };

struct ObjectState {
  ObjectKind kind = ObjectKind::kBox;
  Vec2 position;            // center (rigid kinds) or button center
  double orientation = 0.0; // radians
  Vec2 velocity;
  double ang_velocity = 0.0;
  double mass = 1.0;
  double inertia = 1.0;

  std::vector<Vec2> grasp_sites;  // body-frame anchors

  // box
  double half_w = 0.0, half_h = 0.0;
  double static_friction = 0.0, kinetic_friction = 0.0;

  // hinged door
  Vec2 hinge_pivot;
  double hinge_angle = 0.0, hinge_vel = 0.0;
  double door_length = 0.0;
  double door_min_angle = 0.0, door_max_angle = 0.0;
  double door_closed_angle = 0.0;

  // rope chain
  std::vector<Vec2> particles;
  std::vector<Vec2> particle_vels;
  double rope_rest_len = 0.0;

  // button
  double button_radius = 0.0;
  bool pressed_latch = false;
  int last_press_step = -1 << 20;

  // world-frame grasp site position
  Vec2 site_world(int site) const;
  Vec2 site_velocity(int site) const;
};

struct ProxyState {
  Vec2 position;
  Vec2 velocity;
  bool attached = false;
  int attached_object = -1;
  int attached_site = -1;
  int low_force_steps = 0;  // consecutive steps with |a_f| < release threshold
};

struct Action {
  std::array<Vec2, 2> target;  // a_p: absolute target positions, clamped to arena
  std::array<Vec2, 2> force;   // a_f: interaction forces, clamped to kMaxForce

  bool finite() const {
    return target[0].finite() && target[1].finite() && force[0].finite() &&
           force[1].finite();
  }
  std::array<double, 8> flat() const;
  static Action from_flat(const std::array<double, 8>& v);
};

struct WorldState {
  int t = 0;
  TaskId task = TaskId::kReach;
  uint64_t seed = 0;
  std::array<ProxyState, 2> proxies;
  std::vector<ObjectState> objects;

  // task targets captured at reset so success() is pure in the state
  Vec2 target_a, target_b;
  double target_angle = 0.0;
  double target_height = 0.0;
  bool buttons_latched = false;
};

struct Attachment {
  int object = -1;
  int site = -1;
};

struct StepEvents {
  std::array<bool, 2> attached{false, false};
  std::array<bool, 2> released{false, false};
  bool success = false;
};

// Deterministic per (task, seed): fixed proxy start positions, seeded
// object poses.
WorldState reset(const TaskSpec& task, uint64_t seed);

// force = kp (target - pos) - kd vel, clamped to kMaxForce
Vec2 pd_force(const Vec2& target, const Vec2& pos, const Vec2& vel, double kp,
              double kd);

// Nearest grasp site with world distance < kInteractiveRadius; ties broken
// by lowest (object, site).
std::optional<Attachment> try_attach(const ProxyState& proxy,
                                     const std::vector<ObjectState>& objects);

std::pair<WorldState, StepEvents> step(const WorldState& state,
                                       const Action& action,
                                       const TaskSpec& task);

bool success(const TaskSpec& task, const WorldState& state);

// Sum of object kinetic energies (test hook for the damping property).
double object_kinetic_energy(const WorldState& state);

}  // namespace tandem

#endif  // TANDEM_SIM_HPP_
