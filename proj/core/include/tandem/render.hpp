#ifndef TANDEM_RENDER_HPP_
#define TANDEM_RENDER_HPP_

#include <vector>

#include "tandem/sim.hpp"

namespace tandem {

inline constexpr int kFrameSize = 64;  // H = W

// Scale+offset viewport: center plus vertical shifts of +-10% frame height.
struct ViewSpec {
  int id = 0;            // 0 center, 1 up, 2 down
  double offset_y = 0.0; // world-space vertical shift

  static ViewSpec by_id(int id);
  static std::vector<ViewSpec> all();
};

// H x W x 3 float frame, row-major, channels last, values in [0, 1].
struct Frame {
  int h = kFrameSize;
  int w = kFrameSize;
  std::vector<float> data;  // h*w*3

  Frame() : data(static_cast<size_t>(kFrameSize) * kFrameSize * 3, 0.f) {}
  float* px(int r, int c) { return &data[(static_cast<size_t>(r) * w + c) * 3]; }
  const float* px(int r, int c) const {
    return &data[(static_cast<size_t>(r) * w + c) * 3];
  }
};

// Normalized [0,1]^2 pixel coordinates of both proxies; presence false when
// the proxy center is outside the viewport.
struct HandCoords {
  Vec2 left, right;
  bool left_present = false;
  bool right_present = false;

  std::array<double, 4> flat() const { return {left.x, left.y, right.x, right.y}; }
};

enum class RenderMode { kAgentAgnostic, kAgentVisible };

struct Observation {
  Frame frame;
  HandCoords hands;
};

Observation render(const WorldState& state, const ViewSpec& view,
                   RenderMode mode);

// World -> normalized pixel coordinates for a given view.
Vec2 world_to_norm(const Vec2& p, const ViewSpec& view);

}  // namespace tandem

#endif  // TANDEM_RENDER_HPP_
