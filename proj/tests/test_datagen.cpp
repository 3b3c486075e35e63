#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tandem/clips.hpp"
#include "tandem/expert.hpp"
#include "tandem/rng.hpp"
#include "tandem/tasks.hpp"

using namespace tandem;
namespace fs = std::filesystem;

namespace {

const TaskCatalog& catalog() {
  static TaskCatalog c = TaskCatalog::builtin();
  return c;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "tandem_test_datagen" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool dirs_byte_identical(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel_a;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  for (const auto& rel : rel_a) {
    if (!fs::exists(b / rel)) return false;
    if (slurp(a / rel) != slurp(b / rel)) return false;
  }
  size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) ++count_b;
  return count_b == rel_a.size();
}

}  // namespace

TEST_CASE("scripted expert succeeds on at least 95 of 100 seeds per task") {
  for (const TaskSpec& task : catalog().tasks) {
    int successes = 0;
    for (uint64_t s = 0; s < 100; ++s)
      if (run_expert_episode(task, s).success) ++successes;
    INFO("task ", task_name(task.id));
    CHECK(successes >= 95);
  }
}

TEST_CASE("expert holds position once successful") {
  const TaskSpec& task = catalog().get(TaskId::kReach);
  ExpertEpisode ep = run_expert_episode(task, 0);
  REQUIRE(ep.success);
  REQUIRE(ep.success_step >= 0);
  const WorldState& w = ep.states[ep.success_step + 1];
  Action a = scripted_expert(task, w);
  CHECK((a.target[0] - w.proxies[0].position).norm() <= 1e-9);
  CHECK((a.target[1] - w.proxies[1].position).norm() <= 1e-9);
}

TEST_CASE("generate_clips is byte-identical across runs") {
  const TaskSpec& task = catalog().get(TaskId::kPushBox);
  fs::path a = fresh_dir("clips_a"), b = fresh_dir("clips_b");
  generate_clips(task, 2, 0, {0, 1}, kDefaultStride, a.string());
  generate_clips(task, 2, 0, {0, 1}, kDefaultStride, b.string());
  CHECK(dirs_byte_identical(a, b));
}

TEST_CASE("clip save/load round trip") {
  const TaskSpec& task = catalog().get(TaskId::kReach);
  Clip clip = episode_to_clip(task, 1, ViewSpec::by_id(2), 3);
  fs::path dir = fresh_dir("clip_rt");
  save_clip(clip, dir.string());
  Clip loaded = load_clip(dir.string());
  CHECK(loaded.task == clip.task);
  CHECK(loaded.seed == clip.seed);
  CHECK(loaded.view_id == clip.view_id);
  REQUIRE(loaded.length() == clip.length());
  for (int i = 0; i < clip.length(); ++i) {
    CHECK(loaded.frames[i].data == clip.frames[i].data);
    CHECK(loaded.hands[i].left_present == clip.hands[i].left_present);
    CHECK(loaded.hands[i].left.x ==
          doctest::Approx(clip.hands[i].left.x).epsilon(1e-6));
  }
}

TEST_CASE("clip length follows stride arithmetic and stays temporally dense") {
  const TaskSpec& task = catalog().get(TaskId::kReach);
  ExpertEpisode ep = run_expert_episode(task, 3);
  Clip clip = episode_to_clip(task, 3, ViewSpec::by_id(0), 3);
  const int frames = static_cast<int>(ep.states.size());
  CHECK(clip.length() == (frames + 2) / 3);
  CHECK(clip.length() >= 8);
}

TEST_CASE("clip hand tracks match re-rendering the episode states") {
  const TaskSpec& task = catalog().get(TaskId::kCloseDoor);
  const int stride = 3;
  ExpertEpisode ep = run_expert_episode(task, 2);
  Clip clip = episode_to_clip(task, 2, ViewSpec::by_id(1), stride);
  for (int i = 0; i < clip.length(); ++i) {
    Observation obs = render(ep.states[i * stride], ViewSpec::by_id(1),
                             RenderMode::kAgentAgnostic);
    CHECK(obs.frame.data == clip.frames[i].data);
    CHECK(obs.hands.left_present == clip.hands[i].left_present);
    if (obs.hands.left_present) {
      CHECK(obs.hands.left.x == clip.hands[i].left.x);
      CHECK(obs.hands.left.y == clip.hands[i].left.y);
    }
  }
}

TEST_CASE("goals satisfy the success predicate and are deterministic") {
  for (TaskId id : {TaskId::kLiftTray, TaskId::kStraightenRope}) {
    const TaskSpec& task = catalog().get(id);
    GoalSpec goal = make_goal(task, 0, ViewSpec::by_id(0));
    GoalSpec again = make_goal(task, 0, ViewSpec::by_id(0));
    CHECK(goal.frame.data == again.frame.data);
    CHECK(goal.hands.left.x == again.hands.left.x);
  }
}

TEST_CASE("lift-tray goal hand coordinates project onto the handles") {
  const TaskSpec& task = catalog().get(TaskId::kLiftTray);
  const ViewSpec view = ViewSpec::by_id(0);
  GoalSpec goal = make_goal(task, 1, view);
  REQUIRE(goal.hands.left_present);
  REQUIRE(goal.hands.right_present);

  ExpertEpisode ep = run_expert_episode(task, 1);
  REQUIRE(ep.success);
  const WorldState& final_state = ep.states.back();
  const double px = 1.0 / kFrameSize;
  Vec2 h0 = world_to_norm(final_state.objects[0].site_world(0), view);
  Vec2 h1 = world_to_norm(final_state.objects[0].site_world(1), view);
  CHECK((goal.hands.left - h0).norm() <= 2.0 * px);
  CHECK((goal.hands.right - h1).norm() <= 2.0 * px);
}

TEST_CASE("goal save/load round trip") {
  const TaskSpec& task = catalog().get(TaskId::kPushBox);
  GoalSpec goal = make_goal(task, 2, ViewSpec::by_id(1));
  fs::path dir = fresh_dir("goal_rt");
  save_goal(goal, dir.string());
  GoalSpec loaded = load_goal(dir.string());
  CHECK(loaded.task == goal.task);
  CHECK(loaded.view_id == goal.view_id);
  CHECK(loaded.frame.data == goal.frame.data);
}

TEST_CASE("heldout split is stable and roughly one in ten") {
  int heldout = 0;
  for (uint64_t s = 0; s < 1000; ++s) {
    if (is_heldout_seed(s)) ++heldout;
    CHECK(is_heldout_seed(s) == is_heldout_seed(s));
  }
  CHECK(heldout > 40);
  CHECK(heldout < 200);
}
