#ifndef TANDEM_TRAJLOG_HPP_
#define TANDEM_TRAJLOG_HPP_

#include <array>
#include <string>
#include <vector>

#include "tandem/sim.hpp"

namespace tandem {

inline constexpr int kTrajFormatVersion = 1;

// One record per simulator step: the pre-step observation-relevant proxy
// state, the action taken, and the post-step reward/similarity/success.
struct TrajStep {
  int t = 0;
  std::array<Vec2, 2> proxy_pos;
  std::array<Vec2, 2> proxy_vel;
  std::array<bool, 2> attached{false, false};
  std::vector<double> obs;               // rl observation layout
  std::array<double, 8> action_raw{};    // network-space action
  std::array<double, 8> action{};        // simulator-space (a_p || a_f)
  double reward = 0.0;
  double similarity = 0.0;
  bool success = false;                  // post-step predicate
};

struct Trajectory {
  TaskId task = TaskId::kReach;
  uint64_t seed = 0;
  int view_id = 0;
  std::string reward_mode;
  double beta = 0.0;
  std::vector<TrajStep> steps;
  std::array<Vec2, 2> final_pos;  // proxy positions after the last step
  bool success = false;           // final-state predicate

  // Flattened x,y proxy position series including the final state, as the
  // smoothness metric expects.
  std::vector<double> proxy_xy(int proxy) const;
};

// Line-delimited JSON: a header record, one record per step, and a footer
// with the final state.
void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path);

}  // namespace tandem

#endif  // TANDEM_TRAJLOG_HPP_
