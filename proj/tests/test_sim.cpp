#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tandem/rng.hpp"
#include "tandem/sim.hpp"
#include "tandem/tasks.hpp"

using namespace tandem;

namespace {

const TaskCatalog& catalog() {
  static TaskCatalog c = TaskCatalog::builtin();
  return c;
}

Action random_action(Rng& rng) {
  Action a;
  for (auto& t : a.target) t = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
  for (auto& f : a.force)
    f = {rng.uniform(-kMaxForce, kMaxForce), rng.uniform(-kMaxForce, kMaxForce)};
  return a;
}

bool states_equal(const WorldState& a, const WorldState& b) {
  if (a.t != b.t) return false;
  for (int i = 0; i < 2; ++i) {
    if (a.proxies[i].position.x != b.proxies[i].position.x) return false;
    if (a.proxies[i].position.y != b.proxies[i].position.y) return false;
    if (a.proxies[i].velocity.x != b.proxies[i].velocity.x) return false;
    if (a.proxies[i].velocity.y != b.proxies[i].velocity.y) return false;
    if (a.proxies[i].attached != b.proxies[i].attached) return false;
  }
  if (a.objects.size() != b.objects.size()) return false;
  for (size_t i = 0; i < a.objects.size(); ++i) {
    const auto& oa = a.objects[i];
    const auto& ob = b.objects[i];
    if (oa.position.x != ob.position.x || oa.position.y != ob.position.y)
      return false;
    if (oa.orientation != ob.orientation) return false;
    if (oa.hinge_angle != ob.hinge_angle) return false;
    if (oa.particles.size() != ob.particles.size()) return false;
    for (size_t k = 0; k < oa.particles.size(); ++k)
      if (oa.particles[k].x != ob.particles[k].x ||
          oa.particles[k].y != ob.particles[k].y)
        return false;
  }
  return true;
}

}  // namespace

TEST_CASE("reset is deterministic per task and seed") {
  for (TaskId id : {TaskId::kPushBox, TaskId::kStraightenRope}) {
    const TaskSpec& task = catalog().get(id);
    CHECK(states_equal(reset(task, 0), reset(task, 0)));
    CHECK_FALSE(states_equal(reset(task, 0), reset(task, 1)));
  }
}

TEST_CASE("lift-tray reset leaves both proxies detached") {
  const TaskSpec& task = catalog().get(TaskId::kLiftTray);
  for (uint64_t s : {0, 3, 9}) {
    WorldState w = reset(task, s);
    CHECK_FALSE(w.proxies[0].attached);
    CHECK_FALSE(w.proxies[1].attached);
  }
}

TEST_CASE("rope reset places particles at exact rest spacing") {
  const TaskSpec& task = catalog().get(TaskId::kStraightenRope);
  WorldState w = reset(task, 1);
  const auto& rope = w.objects[0];
  REQUIRE(static_cast<int>(rope.particles.size()) == kRopeParticles);
  for (size_t i = 0; i + 1 < rope.particles.size(); ++i) {
    double len = (rope.particles[i + 1] - rope.particles[i]).norm();
    CHECK(std::fabs(len - rope.rope_rest_len) <= 1e-9);
  }
}

TEST_CASE("pd force fixtures") {
  Vec2 f = pd_force({1, 0}, {1, 0}, {0, 0}, 10, 2);
  CHECK(f.x == 0.0);
  CHECK(f.y == 0.0);
  f = pd_force({1, 0}, {0, 0}, {0, 0}, 10, 2);
  CHECK(f.x == doctest::Approx(10.0));
  CHECK(f.y == 0.0);
  f = pd_force({0, 0}, {0, 0}, {5, 0}, 10, 2);
  CHECK(f.x == doctest::Approx(-10.0));
  CHECK(f.y == 0.0);
}

TEST_CASE("try_attach distance rules") {
  ObjectState obj;
  obj.position = {0.5, 0.5};
  obj.grasp_sites = {{0.0, 0.0}, {0.04, 0.0}};
  ProxyState proxy;

  proxy.position = {0.5, 0.5};  // distance 0 to site 0
  auto a = try_attach(proxy, {obj});
  REQUIRE(a.has_value());
  CHECK(a->site == 0);

  proxy.position = {0.5 - 0.051, 0.5};  // 0.051 from site 0, 0.091 from site 1
  CHECK_FALSE(try_attach(proxy, {obj}).has_value());

  // two sites in range: nearest wins
  proxy.position = {0.53, 0.5};  // 0.03 from site 0, 0.01 from site 1
  a = try_attach(proxy, {obj});
  REQUIRE(a.has_value());
  CHECK(a->site == 1);
}

TEST_CASE("step is deterministic") {
  const TaskSpec& task = catalog().get(TaskId::kPushBox);
  WorldState w = reset(task, 2);
  Rng rng(7);
  Action a = random_action(rng);
  auto [w1, e1] = step(w, a, task);
  auto [w2, e2] = step(w, a, task);
  CHECK(states_equal(w1, w2));
}

TEST_CASE("step rejects non-finite actions") {
  const TaskSpec& task = catalog().get(TaskId::kReach);
  WorldState w = reset(task, 0);
  Action a;
  a.target[0] = {std::nan(""), 0.5};
  CHECK_THROWS_AS(step(w, a, task), Error);
}

TEST_CASE("rope segment lengths stay within one percent over 1000 random steps") {
  const TaskSpec& task = catalog().get(TaskId::kStraightenRope);
  WorldState w = reset(task, 5);
  const double rest = w.objects[0].rope_rest_len;
  Rng rng(42);
  for (int t = 0; t < 1000; ++t) {
    w = step(w, random_action(rng), task).first;
    for (size_t i = 0; i + 1 < w.objects[0].particles.size(); ++i) {
      double len =
          (w.objects[0].particles[i + 1] - w.objects[0].particles[i]).norm();
      REQUIRE(std::fabs(len - rest) <= 0.01 * rest);
    }
  }
}

TEST_CASE("attached proxies stay on their grasp site") {
  const TaskSpec& task = catalog().get(TaskId::kLiftTray);
  WorldState w = reset(task, 0);
  // drive both proxies to the handles with holding force
  for (int t = 0; t < 300; ++t) {
    Action a;
    a.target[0] = w.objects[0].site_world(0);
    a.target[1] = w.objects[0].site_world(1);
    a.force[0] = {0.0, 10.0};
    a.force[1] = {0.0, 10.0};
    w = step(w, a, task).first;
    for (int i = 0; i < 2; ++i) {
      if (!w.proxies[i].attached) continue;
      double d = (w.proxies[i].position -
                  w.objects[w.proxies[i].attached_object].site_world(
                      w.proxies[i].attached_site))
                     .norm();
      REQUIRE(d <= 1e-6);
    }
  }
  CHECK(w.proxies[0].attached);
  CHECK(w.proxies[1].attached);
}

TEST_CASE("object kinetic energy is non-increasing without contact") {
  const TaskSpec& task = catalog().get(TaskId::kPushBox);
  WorldState w = reset(task, 3);
  // give the box an initial shove via a synthetic velocity
  w.objects[0].velocity = {0.4, 0.1};
  Action a;
  a.target[0] = {0.05, 0.05};  // keep proxies parked far from the box
  a.target[1] = {0.95, 0.05};
  w.proxies[0].position = {0.05, 0.05};
  w.proxies[1].position = {0.95, 0.05};
  double prev = object_kinetic_energy(w);
  for (int t = 0; t < 500; ++t) {
    w = step(w, a, task).first;
    double e = object_kinetic_energy(w);
    REQUIRE(e <= prev + 1e-12);
    prev = e;
  }
}

TEST_CASE("door angle respects joint limits under random actions") {
  const TaskSpec& task = catalog().get(TaskId::kCloseDoor);
  WorldState w = reset(task, 1);
  Rng rng(9);
  for (int t = 0; t < 500; ++t) {
    w = step(w, random_action(rng), task).first;
    const auto& door = w.objects[0];
    REQUIRE(door.hinge_angle >= door.door_min_angle - 1e-9);
    REQUIRE(door.hinge_angle <= door.door_max_angle + 1e-9);
  }
}

TEST_CASE("replaying a logged action sequence reproduces states bit for bit") {
  const TaskSpec& task = catalog().get(TaskId::kLiftTray);
  Rng rng(11);
  std::vector<Action> actions;
  std::vector<WorldState> states;
  WorldState w = reset(task, 4);
  states.push_back(w);
  for (int t = 0; t < 200; ++t) {
    actions.push_back(random_action(rng));
    w = step(w, actions.back(), task).first;
    states.push_back(w);
  }
  WorldState r = reset(task, 4);
  CHECK(states_equal(r, states[0]));
  for (int t = 0; t < 200; ++t) {
    r = step(r, actions[t], task).first;
    REQUIRE(states_equal(r, states[t + 1]));
  }
}

TEST_CASE("success predicate on a hand-constructed straight rope") {
  const TaskSpec& task = catalog().get(TaskId::kStraightenRope);
  WorldState w = reset(task, 0);
  auto& rope = w.objects[0];
  const int n = static_cast<int>(rope.particles.size());
  for (int i = 0; i < n; ++i) {
    double u = static_cast<double>(i) / (n - 1);
    rope.particles[i] = w.target_a + (w.target_b - w.target_a) * u;
  }
  CHECK(success(task, w));
  rope.particles[n / 2].y += 2.0 * task.rope_line_tol + 0.01;
  CHECK_FALSE(success(task, w));
}

TEST_CASE("success predicate on a constructed lifted tray") {
  const TaskSpec& task = catalog().get(TaskId::kLiftTray);
  WorldState w = reset(task, 0);
  w.objects[0].position.y = w.target_height;
  w.objects[0].orientation = 0.05;
  CHECK(success(task, w));
  w.objects[0].orientation = 0.2;
  CHECK_FALSE(success(task, w));
}

TEST_CASE("freshly reset states are never successful") {
  for (const TaskSpec& task : catalog().tasks)
    for (uint64_t s : {0, 1, 2, 7})
      CHECK_FALSE(success(task, reset(task, s)));
}
