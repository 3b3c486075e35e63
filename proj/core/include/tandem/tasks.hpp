#ifndef TANDEM_TASKS_HPP_
#define TANDEM_TASKS_HPP_

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "tandem/common.hpp"

namespace tandem {

enum class TaskId {
  kReach,          // warmup: move both proxies onto sampled targets
  kPushBox,        // box with friction above single-proxy force budget
  kCloseDoor,      // hinged segment with joint limits
  kLiftTray,       // two-handled tray under gravity, tilt-limited
  kPressButtons,   // two buttons, presses must overlap a short window
  kStraightenRope, // 12-particle chain pulled straight
};

const char* task_name(TaskId id);
TaskId task_from_name(const std::string& name);

// Per-task physical constants, success tolerances, sampler ranges and
// expert-reward weights. Serialized as the task catalog file.
struct TaskSpec {
  TaskId id = TaskId::kReach;
  int horizon = 150;

  // success tolerances
  double pos_tol = 0.03;
  double angle_tol = 0.1;
  double rope_line_tol = 0.02;
  double rope_end_tol = 0.03;
  double tray_height_tol = 0.02;
  int button_window = 10;

  // weights of the manually designed task-space distance reward
  double w_pos = 1.0;
  double w_angle = 0.5;

  // scripted-expert parameters
  double expert_lead = 0.06;     // waypoint lead distance past the grasp site
  double expert_force = 15.0;    // per-proxy interaction force magnitude

  nlohmann::json to_json() const;
  static TaskSpec from_json(const nlohmann::json& j);
};

struct TaskCatalog {
  std::vector<TaskSpec> tasks;

  const TaskSpec& get(TaskId id) const;
  const TaskSpec& get(const std::string& name) const { return get(task_from_name(name)); }

  static TaskCatalog builtin();
  static TaskCatalog load(const std::string& path);
  void save(const std::string& path) const;
  nlohmann::json to_json() const;
};

// The five bimanual task analogs (excludes the reach warmup).
std::vector<TaskId> primary_tasks();

}  // namespace tandem

#endif  // TANDEM_TASKS_HPP_
