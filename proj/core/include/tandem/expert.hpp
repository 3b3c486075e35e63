#ifndef TANDEM_EXPERT_HPP_
#define TANDEM_EXPERT_HPP_

#include <vector>

#include "tandem/sim.hpp"

namespace tandem {

// Deterministic waypoint controller: approach the assigned grasp sites,
// attach, then follow task-specific waypoints. Pure in the world state.
// `mirror` swaps the proxy-to-site assignment (used for the constructed
// mirrored-hands clip pair on press-buttons).
Action scripted_expert(const TaskSpec& task, const WorldState& state,
                       bool mirror = false);

struct ExpertEpisode {
  std::vector<WorldState> states;  // length steps+1, includes initial state
  std::vector<Action> actions;
  bool success = false;
  int success_step = -1;  // first step index where success held
};

// Rolls the expert from reset(task, seed). After success the controller
// holds position for `hold_steps` more steps; episodes are padded to at
// least `min_steps` so clips retain a visible approach phase.
ExpertEpisode run_expert_episode(const TaskSpec& task, uint64_t seed,
                                 bool mirror = false, int hold_steps = 12,
                                 int min_steps = 60);

}  // namespace tandem

#endif  // TANDEM_EXPERT_HPP_
