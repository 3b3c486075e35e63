#include "tandem/render.hpp"

#include <cmath>

namespace tandem {
namespace {

struct Color {
  float r, g, b;
};

constexpr Color kBackground{0.15f, 0.15f, 0.15f};
constexpr Color kBoxColor{0.85f, 0.30f, 0.25f};
constexpr Color kDoorColor{0.30f, 0.75f, 0.35f};
constexpr Color kTrayColor{0.30f, 0.45f, 0.85f};
constexpr Color kRopeColor{0.90f, 0.80f, 0.30f};
constexpr Color kButtonIdle{0.60f, 0.30f, 0.70f};
constexpr Color kButtonPressed{0.95f, 0.95f, 0.95f};
constexpr Color kGroundColor{0.35f, 0.33f, 0.30f};
constexpr Color kProxyColor[2] = {{0.20f, 0.90f, 0.90f}, {0.95f, 0.50f, 0.90f}};

constexpr double kDoorThickness = 0.015;
constexpr double kRopeThickness = 0.013;

double dist_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  const double len2 = ab.norm2();
  if (len2 < 1e-18) return (p - a).norm();
  const double t = clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

}  // namespace

ViewSpec ViewSpec::by_id(int id) {
  switch (id) {
    case 0: return {0, 0.0};
    case 1: return {1, 0.1};
    case 2: return {2, -0.1};
    default: throw Error("render: unknown view id " + std::to_string(id));
  }
}

std::vector<ViewSpec> ViewSpec::all() {
  return {ViewSpec::by_id(0), ViewSpec::by_id(1), ViewSpec::by_id(2)};
}

Vec2 world_to_norm(const Vec2& p, const ViewSpec& view) {
  return {p.x, 1.0 - p.y + view.offset_y};
}

Observation render(const WorldState& state, const ViewSpec& view,
                   RenderMode mode) {
  Observation obs;
  Frame& f = obs.frame;
  const int H = f.h, W = f.w;
  const bool side_view = state.task == TaskId::kLiftTray;

  for (int r = 0; r < H; ++r) {
    const double wy = 1.0 - (r + 0.5) / H + view.offset_y;
    for (int c = 0; c < W; ++c) {
      const double wx = (c + 0.5) / W;
      const Vec2 p{wx, wy};
      Color col = kBackground;
      if (side_view && wy < 0.15) col = kGroundColor;
      for (const auto& obj : state.objects) {
        switch (obj.kind) {
          case ObjectKind::kBox:
          case ObjectKind::kTwoHandleTray: {
            Vec2 local = (p - obj.position).rotated(-obj.orientation);
            double hw = obj.half_w, hh = obj.half_h;
            if (obj.kind == ObjectKind::kTwoHandleTray) hh += 0.01;  // lip
            if (std::fabs(local.x) <= hw && std::fabs(local.y) <= hh)
              col = obj.kind == ObjectKind::kBox ? kBoxColor : kTrayColor;
            break;
          }
          case ObjectKind::kHingedDoor: {
            Vec2 dir{std::cos(obj.hinge_angle), std::sin(obj.hinge_angle)};
            Vec2 end = obj.hinge_pivot + dir * obj.door_length;
            if (dist_to_segment(p, obj.hinge_pivot, end) <= kDoorThickness)
              col = kDoorColor;
            break;
          }
          case ObjectKind::kRopeChain: {
            for (size_t s = 0; s + 1 < obj.particles.size(); ++s)
              if (dist_to_segment(p, obj.particles[s], obj.particles[s + 1]) <=
                  kRopeThickness) {
                col = kRopeColor;
                break;
              }
            break;
          }
          case ObjectKind::kButton: {
            if ((p - obj.position).norm() <= obj.button_radius)
              col = obj.pressed_latch ? kButtonPressed : kButtonIdle;
            break;
          }
        }
      }
      if (mode == RenderMode::kAgentVisible) {
        for (int i = 0; i < 2; ++i)
          if ((p - state.proxies[i].position).norm() <= kCollisionRadius)
            col = kProxyColor[i];
      }
      float* px = f.px(r, c);
      px[0] = col.r;
      px[1] = col.g;
      px[2] = col.b;
    }
  }

  for (int i = 0; i < 2; ++i) {
    Vec2 n = world_to_norm(state.proxies[i].position, view);
    const bool present = n.x >= 0.0 && n.x <= 1.0 && n.y >= 0.0 && n.y <= 1.0;
    if (i == 0) {
      obs.hands.left = n;
      obs.hands.left_present = present;
    } else {
      obs.hands.right = n;
      obs.hands.right_present = present;
    }
  }
  return obs;
}

}  // namespace tandem
