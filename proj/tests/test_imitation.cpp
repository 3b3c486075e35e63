#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "tandem/bc.hpp"
#include "tandem/tasks.hpp"

using namespace tandem;
namespace fs = std::filesystem;

namespace {

const TaskCatalog& catalog() {
  static TaskCatalog c = TaskCatalog::builtin();
  return c;
}

}  // namespace

TEST_CASE("scripted demo collection keeps only successes and is deterministic") {
  const TaskSpec& task = catalog().get(TaskId::kReach);
  DemoSet a = collect_demos(task, nullptr, 4, 0);
  DemoSet b = collect_demos(task, nullptr, 4, 0);
  REQUIRE(a.trajectories.size() == 4);
  for (const auto& t : a.trajectories) {
    CHECK(t.success);
    CHECK(t.task == task.id);
    REQUIRE_FALSE(t.steps.empty());
  }
  REQUIRE(b.trajectories.size() == 4);
  for (size_t i = 0; i < a.trajectories.size(); ++i) {
    CHECK(a.trajectories[i].seed == b.trajectories[i].seed);
    CHECK(a.trajectories[i].steps.size() == b.trajectories[i].steps.size());
    CHECK(a.trajectories[i].steps.back().obs ==
          b.trajectories[i].steps.back().obs);
  }
}

TEST_CASE("demo set save/load round trip") {
  const TaskSpec& task = catalog().get(TaskId::kPushBox);
  DemoSet demos = collect_demos(task, nullptr, 2, 1);
  fs::path dir = fs::temp_directory_path() / "tandem_test_demos";
  fs::remove_all(dir);
  demos.save(dir.string());
  DemoSet loaded = DemoSet::load(dir.string());
  CHECK(loaded.task == demos.task);
  REQUIRE(loaded.trajectories.size() == demos.trajectories.size());
  CHECK(loaded.seeds() == demos.seeds());
  CHECK(loaded.trajectories[0].steps.size() ==
        demos.trajectories[0].steps.size());
}

TEST_CASE("bc overfits a single demonstration") {
  const TaskSpec& task = catalog().get(TaskId::kReach);
  DemoSet demos = collect_demos(task, nullptr, 1, 2);
  BcTrainConfig cfg;
  cfg.steps = 2000;
  cfg.seed = 1;
  BcTrainResult r = train_bc(demos, cfg);
  CHECK(r.final_train_mse < 1e-3);
}

TEST_CASE("bc beats the zero-action predictor and is deterministic") {
  const TaskSpec& task = catalog().get(TaskId::kReach);
  DemoSet demos = collect_demos(task, nullptr, 6, 3);
  BcTrainConfig cfg;
  cfg.steps = 800;
  cfg.seed = 2;
  BcTrainResult a = train_bc(demos, cfg);
  BcTrainResult b = train_bc(demos, cfg);
  CHECK(a.final_train_mse < a.zero_predictor_mse);
  CHECK(a.has_val);
  CHECK(a.final_train_mse == b.final_train_mse);
  for (const auto& [name, t] : a.params) CHECK(t.data == b.params.at(name).data);
}

TEST_CASE("unseen seeds are disjoint and cover both rope bend directions") {
  const TaskSpec& task = catalog().get(TaskId::kStraightenRope);
  DemoSet demos = collect_demos(task, nullptr, 3, 4);
  const std::vector<uint64_t> demo_seeds = demos.seeds();
  std::vector<uint64_t> unseen = unseen_eval_seeds(task, 9, 5, demo_seeds);
  REQUIRE(unseen.size() == 9);
  for (uint64_t s : unseen)
    CHECK(std::find(demo_seeds.begin(), demo_seeds.end(), s) ==
          demo_seeds.end());
  int pos = 0, neg = 0;
  for (uint64_t s : unseen)
    (rope_bend_sign(task, s) > 0 ? pos : neg)++;
  CHECK(pos >= 3);
  CHECK(neg >= 3);
}

TEST_CASE("eval enforces demo/eval disjointness") {
  const TaskSpec& task = catalog().get(TaskId::kReach);
  Policy pol(obs_dim(task.id));
  ParamStore p = pol.init_params(0);
  CHECK_THROWS_AS(eval_bc(task, p, {1, 2, 3}, {3, 4}), Error);
}

TEST_CASE("an untrained clone has near-zero success") {
  const TaskSpec& task = catalog().get(TaskId::kStraightenRope);
  Policy pol(obs_dim(task.id));
  ParamStore p = pol.init_params(9);
  for (auto& v : p["pi.mu.w"].data) v = 0.0;
  for (auto& v : p["pi.mu.b"].data) v = 0.0;
  BcEvalResult r = eval_bc(task, p, {100, 101, 102}, {});
  CHECK(r.attempts == 3);
  CHECK(r.successes == 0);
}

TEST_CASE("bc on scripted reach demos succeeds on unseen seeds") {
  const TaskSpec& task = catalog().get(TaskId::kReach);
  DemoSet demos = collect_demos(task, nullptr, 10, 6);
  BcTrainConfig cfg;
  cfg.steps = 3000;
  cfg.seed = 3;
  BcTrainResult r = train_bc(demos, cfg);
  std::vector<uint64_t> unseen = unseen_eval_seeds(task, 6, 7, demos.seeds());
  BcEvalResult e = eval_bc(task, r.params, unseen, demos.seeds());
  CHECK(e.attempts == 6);
  CHECK(e.successes >= 2);
}
