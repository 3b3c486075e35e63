#include "tandem/tasks.hpp"

#include <fstream>

namespace tandem {

using nlohmann::json;

namespace {
const struct { TaskId id; const char* name; } kNames[] = {
    {TaskId::kReach, "reach"},
    {TaskId::kPushBox, "push-box"},
    {TaskId::kCloseDoor, "close-door"},
    {TaskId::kLiftTray, "lift-tray"},
    {TaskId::kPressButtons, "press-buttons"},
    {TaskId::kStraightenRope, "straighten-rope"},
};
}  // namespace

const char* task_name(TaskId id) {
  for (const auto& e : kNames)
    if (e.id == id) return e.name;
  throw Error("unknown task id");
}

TaskId task_from_name(const std::string& name) {
  for (const auto& e : kNames)
    if (name == e.name) return e.id;
  throw Error("unknown task '" + name + "'");
}

json TaskSpec::to_json() const {
  return json{{"task", task_name(id)},
              {"horizon", horizon},
              {"pos_tol", pos_tol},
              {"angle_tol", angle_tol},
              {"rope_line_tol", rope_line_tol},
              {"rope_end_tol", rope_end_tol},
              {"tray_height_tol", tray_height_tol},
              {"button_window", button_window},
              {"w_pos", w_pos},
              {"w_angle", w_angle},
              {"expert_lead", expert_lead},
              {"expert_force", expert_force}};
}

TaskSpec TaskSpec::from_json(const json& j) {
  TaskSpec s;
  s.id = task_from_name(j.at("task").get<std::string>());
  s.horizon = j.at("horizon").get<int>();
  s.pos_tol = j.at("pos_tol").get<double>();
  s.angle_tol = j.at("angle_tol").get<double>();
  s.rope_line_tol = j.at("rope_line_tol").get<double>();
  s.rope_end_tol = j.at("rope_end_tol").get<double>();
  s.tray_height_tol = j.at("tray_height_tol").get<double>();
  s.button_window = j.at("button_window").get<int>();
  s.w_pos = j.at("w_pos").get<double>();
  s.w_angle = j.at("w_angle").get<double>();
  s.expert_lead = j.at("expert_lead").get<double>();
  s.expert_force = j.at("expert_force").get<double>();
  return s;
}

const TaskSpec& TaskCatalog::get(TaskId id) const {
  for (const auto& t : tasks)
    if (t.id == id) return t;
  throw Error(std::string("task catalog: missing task '") + task_name(id) + "'");
}

TaskCatalog TaskCatalog::builtin() {
  TaskCatalog cat;
  for (const auto& e : kNames) {
    TaskSpec s;
    s.id = e.id;
    cat.tasks.push_back(s);
  }
  return cat;
}

TaskCatalog TaskCatalog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("task catalog: cannot read " + path);
  json j = json::parse(in);
  TaskCatalog cat;
  for (const auto& e : j.at("tasks")) cat.tasks.push_back(TaskSpec::from_json(e));
  return cat;
}

json TaskCatalog::to_json() const {
  json arr = json::array();
  for (const auto& t : tasks) arr.push_back(t.to_json());
  return json{{"format_version", 1}, {"tasks", arr}};
}

void TaskCatalog::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("task catalog: cannot write " + path);
  out << to_json().dump(2) << "\n";
}

std::vector<TaskId> primary_tasks() {
  return {TaskId::kPushBox, TaskId::kCloseDoor, TaskId::kLiftTray,
          TaskId::kPressButtons, TaskId::kStraightenRope};
}

}  // namespace tandem
