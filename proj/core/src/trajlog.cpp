#include "tandem/trajlog.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace tandem {

using nlohmann::json;

std::vector<double> Trajectory::proxy_xy(int proxy) const {
  std::vector<double> out;
  out.reserve(2 * (steps.size() + 1));
  for (const auto& s : steps) {
    out.push_back(s.proxy_pos[proxy].x);
    out.push_back(s.proxy_pos[proxy].y);
  }
  out.push_back(final_pos[proxy].x);
  out.push_back(final_pos[proxy].y);
  return out;
}

namespace {

json vec2_json(const Vec2& v) { return json::array({v.x, v.y}); }
Vec2 vec2_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

void save_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("save_trajectory: cannot write " + path);
  json header{{"type", "header"},
              {"format_version", kTrajFormatVersion},
              {"task", task_name(traj.task)},
              {"seed", traj.seed},
              {"view", traj.view_id},
              {"reward_mode", traj.reward_mode},
              {"beta", traj.beta}};
  out << header.dump() << "\n";
  for (const auto& s : traj.steps) {
    json rec{{"type", "step"},
             {"t", s.t},
             {"p0", vec2_json(s.proxy_pos[0])},
             {"p1", vec2_json(s.proxy_pos[1])},
             {"v0", vec2_json(s.proxy_vel[0])},
             {"v1", vec2_json(s.proxy_vel[1])},
             {"attached", {s.attached[0], s.attached[1]}},
             {"obs", s.obs},
             {"action_raw", s.action_raw},
             {"action", s.action},
             {"reward", s.reward},
             {"similarity", s.similarity},
             {"success", s.success}};
    out << rec.dump() << "\n";
  }
  json footer{{"type", "final"},
              {"p0", vec2_json(traj.final_pos[0])},
              {"p1", vec2_json(traj.final_pos[1])},
              {"success", traj.success}};
  out << footer.dump() << "\n";
  if (!out) throw Error("save_trajectory: write failed for " + path);
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_trajectory: cannot read " + path);
  Trajectory traj;
  std::string line;
  bool have_header = false, have_footer = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    const std::string type = rec.at("type").get<std::string>();
    if (type == "header") {
      if (rec.at("format_version").get<int>() != kTrajFormatVersion)
        throw Error("load_trajectory: unsupported format in " + path);
      traj.task = task_from_name(rec.at("task").get<std::string>());
      traj.seed = rec.at("seed").get<uint64_t>();
      traj.view_id = rec.at("view").get<int>();
      traj.reward_mode = rec.at("reward_mode").get<std::string>();
      traj.beta = rec.at("beta").get<double>();
      have_header = true;
    } else if (type == "step") {
      TrajStep s;
      s.t = rec.at("t").get<int>();
      s.proxy_pos[0] = vec2_from(rec.at("p0"));
      s.proxy_pos[1] = vec2_from(rec.at("p1"));
      s.proxy_vel[0] = vec2_from(rec.at("v0"));
      s.proxy_vel[1] = vec2_from(rec.at("v1"));
      s.attached[0] = rec.at("attached").at(0).get<bool>();
      s.attached[1] = rec.at("attached").at(1).get<bool>();
      s.obs = rec.at("obs").get<std::vector<double>>();
      const auto raw = rec.at("action_raw").get<std::vector<double>>();
      const auto act = rec.at("action").get<std::vector<double>>();
      if (raw.size() != 8 || act.size() != 8)
        throw Error("load_trajectory: malformed action in " + path);
      std::copy(raw.begin(), raw.end(), s.action_raw.begin());
      std::copy(act.begin(), act.end(), s.action.begin());
      s.reward = rec.at("reward").get<double>();
      s.similarity = rec.at("similarity").get<double>();
      s.success = rec.at("success").get<bool>();
      traj.steps.push_back(std::move(s));
    } else if (type == "final") {
      traj.final_pos[0] = vec2_from(rec.at("p0"));
      traj.final_pos[1] = vec2_from(rec.at("p1"));
      traj.success = rec.at("success").get<bool>();
      have_footer = true;
    } else {
      throw Error("load_trajectory: unknown record type in " + path);
    }
  }
  if (!have_header || !have_footer)
    throw Error("load_trajectory: truncated log " + path);
  return traj;
}

}  // namespace tandem
