#include "tandem/clips.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "tandem/expert.hpp"
#include "tandem/rng.hpp"

namespace tandem {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_frames_f32(const std::string& path, const std::vector<Frame>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("clips: cannot write " + path);
  for (const auto& f : frames)
    out.write(reinterpret_cast<const char*>(f.data.data()),
              static_cast<std::streamsize>(f.data.size() * 4));
}

std::vector<Frame> read_frames_f32(const std::string& path, int n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("clips: cannot read " + path);
  std::vector<Frame> frames(n);
  for (auto& f : frames) {
    in.read(reinterpret_cast<char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * 4));
    if (!in) throw Error("clips: truncated frames file " + path);
  }
  return frames;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_hands_csv(const std::string& path,
                     const std::vector<HandCoords>& hands) {
  std::ofstream out(path);
  if (!out) throw Error("clips: cannot write " + path);
  out << "frame_idx,lx,ly,l_present,rx,ry,r_present\n";
  for (size_t i = 0; i < hands.size(); ++i) {
    const auto& h = hands[i];
    out << i << "," << fmt_double(h.left.x) << "," << fmt_double(h.left.y)
        << "," << (h.left_present ? 1 : 0) << "," << fmt_double(h.right.x)
        << "," << fmt_double(h.right.y) << "," << (h.right_present ? 1 : 0)
        << "\n";
  }
}

std::vector<HandCoords> read_hands_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("clips: cannot read " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<HandCoords> hands;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    HandCoords h;
    int idx, lp, rp;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%d,%lf,%lf,%d", &idx, &h.left.x,
                    &h.left.y, &lp, &h.right.x, &h.right.y, &rp) != 7)
      throw Error("clips: malformed hands.csv line in " + path);
    h.left_present = lp != 0;
    h.right_present = rp != 0;
    hands.push_back(h);
  }
  return hands;
}

}  // namespace

bool is_heldout_seed(uint64_t seed) {
  return derive_seed(seed, "train-heldout-split") % 10 == 0;
}

Clip episode_to_clip(const TaskSpec& task, uint64_t seed, const ViewSpec& view,
                     int stride, bool mirror) {
  ExpertEpisode ep = run_expert_episode(task, seed, mirror);
  if (!ep.success)
    throw Error(std::string("episode_to_clip: expert failed on ") +
                task_name(task.id) + " seed " + std::to_string(seed));
  Clip clip;
  clip.task = task.id;
  clip.seed = seed;
  clip.view_id = view.id;
  clip.stride = stride;
  for (size_t t = 0; t < ep.states.size(); t += stride) {
    Observation obs = render(ep.states[t], view, RenderMode::kAgentAgnostic);
    clip.frames.push_back(std::move(obs.frame));
    clip.hands.push_back(obs.hands);
  }
  return clip;
}

void save_clip(const Clip& clip, const std::string& clip_dir) {
  fs::create_directories(clip_dir);
  json meta{{"format_version", kClipFormatVersion},
            {"task", task_name(clip.task)},
            {"seed", clip.seed},
            {"view", clip.view_id},
            {"stride", clip.stride},
            {"n", clip.length()},
            {"h", kFrameSize},
            {"w", kFrameSize}};
  std::ofstream mf(clip_dir + "/meta.json");
  mf << meta.dump(2) << "\n";
  write_frames_f32(clip_dir + "/frames.f32", clip.frames);
  write_hands_csv(clip_dir + "/hands.csv", clip.hands);
}

Clip load_clip(const std::string& clip_dir) {
  std::ifstream mf(clip_dir + "/meta.json");
  if (!mf) throw Error("clips: cannot read " + clip_dir + "/meta.json");
  json meta = json::parse(mf);
  if (meta.at("format_version").get<int>() != kClipFormatVersion)
    throw Error("clips: unsupported clip format in " + clip_dir);
  Clip clip;
  clip.task = task_from_name(meta.at("task").get<std::string>());
  clip.seed = meta.at("seed").get<uint64_t>();
  clip.view_id = meta.at("view").get<int>();
  clip.stride = meta.at("stride").get<int>();
  const int n = meta.at("n").get<int>();
  clip.frames = read_frames_f32(clip_dir + "/frames.f32", n);
  clip.hands = read_hands_csv(clip_dir + "/hands.csv");
  if (clip.length() != n || static_cast<int>(clip.hands.size()) != n)
    throw Error("clips: inconsistent clip " + clip_dir);
  return clip;
}

void generate_clips(const TaskSpec& task, int n, uint64_t seed,
                    const std::vector<int>& views, int stride,
                    const std::string& out_dir) {
  if (n < 1) throw Error("generate_clips: n must be >= 1");
  if (views.empty()) throw Error("generate_clips: empty view set");
  fs::create_directories(out_dir);
  int written = 0;
  uint64_t attempt_seed = seed;
  int attempts = 0;
  while (written < n) {
    if (attempts >= 10 * n)
      throw Error(std::string("generate_clips: expert could not reach ") +
                  std::to_string(n) + " successes on " + task_name(task.id) +
                  " within " + std::to_string(attempts) + " attempts");
    ++attempts;
    const ViewSpec view = ViewSpec::by_id(views[written % views.size()]);
    ExpertEpisode ep = run_expert_episode(task, attempt_seed);
    if (!ep.success) {
      ++attempt_seed;
      continue;
    }
    Clip clip = episode_to_clip(task, attempt_seed, view, stride);
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%05d", written);
    save_clip(clip, out_dir + "/" + name);
    ++attempt_seed;
    ++written;
  }
}

ClipDataset ClipDataset::load(const std::string& dir) {
  ClipDataset ds;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) names.push_back(e.path().string());
  std::sort(names.begin(), names.end());
  for (const auto& name : names) ds.clips.push_back(load_clip(name));
  if (ds.clips.empty()) throw Error("ClipDataset: no clips under " + dir);
  return ds;
}

ClipDataset ClipDataset::load_split(const std::string& dir, bool heldout) {
  ClipDataset all = load(dir);
  ClipDataset out;
  for (auto& c : all.clips)
    if (is_heldout_seed(c.seed) == heldout) out.clips.push_back(std::move(c));
  return out;
}

GoalSpec make_goal(const TaskSpec& task, uint64_t seed, const ViewSpec& view) {
  ExpertEpisode ep = run_expert_episode(task, seed);
  if (!ep.success)
    throw Error(std::string("make_goal: expert failed on ") +
                task_name(task.id) + " seed " + std::to_string(seed));
  Observation obs =
      render(ep.states.back(), view, RenderMode::kAgentAgnostic);
  GoalSpec g;
  g.task = task.id;
  g.seed = seed;
  g.view_id = view.id;
  g.frame = std::move(obs.frame);
  g.hands = obs.hands;
  return g;
}

void save_goal(const GoalSpec& goal, const std::string& dir) {
  fs::create_directories(dir);
  json meta{{"format_version", kClipFormatVersion},
            {"task", task_name(goal.task)},
            {"seed", goal.seed},
            {"view", goal.view_id},
            {"h", kFrameSize},
            {"w", kFrameSize},
            {"hands",
             {{"lx", goal.hands.left.x},
              {"ly", goal.hands.left.y},
              {"l_present", goal.hands.left_present},
              {"rx", goal.hands.right.x},
              {"ry", goal.hands.right.y},
              {"r_present", goal.hands.right_present}}}};
  std::ofstream mf(dir + "/meta.json");
  mf << meta.dump(2) << "\n";
  write_frames_f32(dir + "/frame.f32", {goal.frame});
}

GoalSpec load_goal(const std::string& dir) {
  std::ifstream mf(dir + "/meta.json");
  if (!mf) throw Error("goal: cannot read " + dir + "/meta.json");
  json meta = json::parse(mf);
  GoalSpec g;
  g.task = task_from_name(meta.at("task").get<std::string>());
  g.seed = meta.at("seed").get<uint64_t>();
  g.view_id = meta.at("view").get<int>();
  const auto& h = meta.at("hands");
  g.hands.left = {h.at("lx").get<double>(), h.at("ly").get<double>()};
  g.hands.right = {h.at("rx").get<double>(), h.at("ry").get<double>()};
  g.hands.left_present = h.at("l_present").get<bool>();
  g.hands.right_present = h.at("r_present").get<bool>();
  g.frame = read_frames_f32(dir + "/frame.f32", 1)[0];
  return g;
}

}  // namespace tandem
