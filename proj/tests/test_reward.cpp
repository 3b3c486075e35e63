#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tandem/clips.hpp"
#include "tandem/encoder.hpp"
#include "tandem/reward.hpp"
#include "tandem/tasks.hpp"

using namespace tandem;

namespace {
const TaskCatalog& task_catalog() {
  static TaskCatalog c = TaskCatalog::builtin();
  return c;
}
}  // namespace

TEST_CASE("tilted reward is exactly zero at the baseline") {
  for (double alpha : {0.5, 3.0, 10.0})
    for (double beta : {0.1, 0.5, 0.99})
      CHECK(tilted_reward(beta, beta, alpha) == 0.0);
}

TEST_CASE("tilted reward fixtures") {
  CHECK(tilted_reward(1.0, 0.5, 3.0) ==
        doctest::Approx(std::exp(4.0) - 1.0).epsilon(1e-12));
  CHECK(std::fabs((std::exp(4.0) - 1.0) - 53.598150033144236) <= 1e-9);
  CHECK(tilted_reward(0.25, 0.5, 3.0) ==
        doctest::Approx(std::exp(-0.5) - 1.0).epsilon(1e-12));
}

TEST_CASE("tilted reward is strictly increasing over a 1000-point grid") {
  for (double alpha : {0.5, 3.0, 10.0}) {
    for (double beta : {0.2, 0.5, 0.8}) {
      double prev = -1e300;
      for (int i = 1; i <= 1000; ++i) {
        double s = static_cast<double>(i) / 1000.0;
        double r = tilted_reward(s, beta, alpha);
        REQUIRE(r > prev);
        prev = r;
      }
    }
  }
}

TEST_CASE("kink ratio at the baseline equals one plus alpha") {
  const double h = 1e-7;
  for (double alpha : {0.5, 3.0, 10.0}) {
    for (double beta : {0.3, 0.5, 0.7}) {
      double right =
          (tilted_reward(beta + h, beta, alpha) - 0.0) / h;
      double left =
          (0.0 - tilted_reward(beta - h, beta, alpha)) / h;
      CHECK(right / left == doctest::Approx(1.0 + alpha).epsilon(0.01));
    }
  }
}

TEST_CASE("reward is positive exactly when similarity exceeds the baseline") {
  for (double alpha : {0.5, 3.0, 10.0}) {
    const double beta = 0.6;
    for (int i = 1; i <= 1000; ++i) {
      double s = static_cast<double>(i) / 1000.0;
      double r = tilted_reward(s, beta, alpha);
      REQUIRE((r > 0.0) == (s > beta));
      if (s == beta) REQUIRE(r == 0.0);
    }
  }
}

TEST_CASE("reward stays inside its analytic bounds") {
  for (double alpha : {0.5, 3.0, 10.0}) {
    for (double beta : {0.2, 0.5, 0.9}) {
      const double lo = std::exp(-1.0) - 1.0;
      const double hi = std::exp((1.0 + alpha) * (1.0 - beta) / beta) - 1.0;
      for (int i = 1; i <= 1000; ++i) {
        double s = static_cast<double>(i) / 1000.0;
        double r = tilted_reward(s, beta, alpha);
        REQUIRE(r > lo);
        REQUIRE(r <= hi);
      }
    }
  }
}

TEST_CASE("non-positive baseline is rejected") {
  CHECK_THROWS_AS(tilted_reward(0.5, 0.0, 3.0), Error);
  CHECK_THROWS_AS(tilted_reward(0.5, -0.1, 3.0), Error);
}

TEST_CASE("reward mode names round trip") {
  for (RewardMode m : {RewardMode::kCoord, RewardMode::kAblated,
                       RewardMode::kExpert, RewardMode::kCoordProprio})
    CHECK(reward_mode_from_name(reward_mode_name(m)) == m);
  CHECK_THROWS_AS(reward_mode_from_name("bogus"), Error);
}

TEST_CASE("expert potential peaks at the goal configuration") {
  const TaskCatalog catalog = TaskCatalog::builtin();
  {
    const TaskSpec& task = catalog.get(TaskId::kPushBox);
    WorldState w = reset(task, 0);
    double before = expert_potential(task, w);
    WorldState at_goal = w;
    at_goal.objects[0].position = w.target_a;
    CHECK(expert_potential(task, at_goal) > before);
  }
  {
    const TaskSpec& task = catalog.get(TaskId::kCloseDoor);
    WorldState w = reset(task, 1);
    WorldState at_goal = w;
    at_goal.objects[0].hinge_angle = w.target_angle;
    CHECK(expert_potential(task, at_goal) > expert_potential(task, w));
  }
}

TEST_CASE("expert reward mode adds a bonus on success") {
  const TaskSpec& task = task_catalog().get(TaskId::kLiftTray);
  RewardParams rp;
  rp.mode = RewardMode::kExpert;
  auto fn = make_reward(rp, nullptr, nullptr, nullptr);
  WorldState w = reset(task, 0);
  fn->begin_episode(w, task);
  double base = fn->step(w, task).reward;
  WorldState lifted = w;
  lifted.objects[0].position.y = w.target_height;
  lifted.objects[0].orientation = 0.0;
  REQUIRE(success(task, lifted));
  CHECK(fn->step(lifted, task).reward > base + 5.0);
}

TEST_CASE("embedding reward modes require an encoder and goal") {
  RewardParams rp;
  rp.mode = RewardMode::kCoord;
  CHECK_THROWS_AS(make_reward(rp, nullptr, nullptr, nullptr), Error);
}

TEST_CASE("similarity reward is zero at the initial state") {
  const TaskSpec& task = task_catalog().get(TaskId::kPushBox);
  EncoderConfig cfg;
  Encoder enc(cfg);
  ParamStore p = enc.init_params(7);
  GoalSpec goal = make_goal(task, 0, ViewSpec::by_id(0));

  RewardParams rp;
  rp.mode = RewardMode::kCoord;
  auto fn = make_reward(rp, &p, &cfg, &goal);
  WorldState w = reset(task, 0);
  double beta = fn->begin_episode(w, task);
  CHECK(beta > 0.0);
  CHECK(beta <= 1.0);
  RewardStep rs = fn->step(w, task);
  CHECK(rs.similarity == doctest::Approx(beta).epsilon(1e-12));
  CHECK(std::fabs(rs.reward) <= 1e-9);
}

TEST_CASE("ablated mode rejects a hand-aware encoder and vice versa") {
  const TaskSpec& task = task_catalog().get(TaskId::kReach);
  EncoderConfig full;
  Encoder fe(full);
  ParamStore fp = fe.init_params(1);
  GoalSpec goal = make_goal(task, 0, ViewSpec::by_id(0));

  RewardParams rp;
  rp.mode = RewardMode::kAblated;
  CHECK_THROWS_AS(make_reward(rp, &fp, &full, &goal), Error);

  EncoderConfig abl;
  abl.ablate_hands = true;
  Encoder ae(abl);
  ParamStore ap = ae.init_params(1);
  rp.mode = RewardMode::kCoord;
  CHECK_THROWS_AS(make_reward(rp, &ap, &abl, &goal), Error);
}

TEST_CASE("ablated reward ignores the goal hand coordinates") {
  const TaskSpec& task = task_catalog().get(TaskId::kPushBox);
  EncoderConfig cfg;
  cfg.ablate_hands = true;
  Encoder enc(cfg);
  ParamStore p = enc.init_params(2);
  GoalSpec goal = make_goal(task, 1, ViewSpec::by_id(0));
  GoalSpec goal2 = goal;
  goal2.hands.left = {0.123, 0.987};
  goal2.hands.right_present = false;

  RewardParams rp;
  rp.mode = RewardMode::kAblated;
  auto f1 = make_reward(rp, &p, &cfg, &goal);
  auto f2 = make_reward(rp, &p, &cfg, &goal2);
  WorldState w = reset(task, 1);
  CHECK(f1->begin_episode(w, task) == f2->begin_episode(w, task));
  CHECK(f1->step(w, task).reward == f2->step(w, task).reward);
}

TEST_CASE("degenerate goal is rejected at episode start") {
  const TaskSpec& task = task_catalog().get(TaskId::kReach);
  EncoderConfig cfg;
  Encoder enc(cfg);
  // all-zero parameters collapse every embedding to the same vector
  ParamStore p = enc.init_params(1);
  for (auto& [name, t] : p)
    for (auto& v : t.data) v = 0.0;
  GoalSpec goal = make_goal(task, 0, ViewSpec::by_id(0));
  RewardParams rp;
  rp.mode = RewardMode::kCoord;
  auto fn = make_reward(rp, &p, &cfg, &goal);
  WorldState w = reset(task, 0);
  CHECK_THROWS_AS(fn->begin_episode(w, task), Error);
}

TEST_CASE("proprioceptive bonus rewards matching goal hand positions") {
  const TaskSpec& task = task_catalog().get(TaskId::kLiftTray);
  EncoderConfig cfg;
  Encoder enc(cfg);
  ParamStore p = enc.init_params(3);
  GoalSpec goal = make_goal(task, 0, ViewSpec::by_id(0));

  RewardParams coord;
  coord.mode = RewardMode::kCoord;
  RewardParams proprio;
  proprio.mode = RewardMode::kCoordProprio;
  auto f_coord = make_reward(coord, &p, &cfg, &goal);
  auto f_prop = make_reward(proprio, &p, &cfg, &goal);
  WorldState w = reset(task, 0);
  f_coord->begin_episode(w, task);
  f_prop->begin_episode(w, task);
  // proprio mode adds a strictly positive alignment term when hands are visible
  CHECK(f_prop->step(w, task).reward > f_coord->step(w, task).reward);
}
