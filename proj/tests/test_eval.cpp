#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tandem/evaluate.hpp"
#include "tandem/metrics.hpp"
#include "tandem/rng.hpp"
#include "tandem/tasks.hpp"

using namespace tandem;

namespace {
const TaskCatalog& task_catalog() {
  static TaskCatalog c = TaskCatalog::builtin();
  return c;
}
}  // namespace

namespace {

// independent oracle: explicit average-rank assignment then textbook Pearson
std::vector<double> rank_oracle(const std::vector<double>& xs) {
  const size_t n = xs.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

double spearman_oracle(const std::vector<double>& xs,
                       const std::vector<double>& ys) {
  return pearson(rank_oracle(xs), rank_oracle(ys));
}

}  // namespace

TEST_CASE("spearman fixtures") {
  std::vector<double> xs{1, 2, 3, 4, 5};
  std::vector<double> inc{10, 20, 30, 40, 50};
  std::vector<double> dec{5, 4, 3, 2, 1};
  CHECK(spearman(xs, inc) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman(xs, dec) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(spearman({1, 2, 3, 4}, {1, 1, 2, 3}) ==
        doctest::Approx(0.9486832980505138).epsilon(1e-9));
}

TEST_CASE("spearman rejects degenerate input") {
  CHECK_THROWS_AS(spearman({1, 2, 3}, {5, 5, 5}), Error);
  CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(spearman({1}, {2}), Error);
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), Error);
}

TEST_CASE("spearman matches the brute-force oracle on 1000 tied vectors") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(20));
    std::vector<double> xs(n), ys(n);
    // coarse quantization produces frequent ties
    for (auto& v : xs) v = std::floor(rng.uniform(0.0, 6.0));
    for (auto& v : ys) v = std::floor(rng.uniform(0.0, 6.0));
    auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(),
                         [&](double x) { return x == v.front(); });
    };
    if (constant(xs) || constant(ys)) continue;
    REQUIRE(std::fabs(spearman(xs, ys) - spearman_oracle(xs, ys)) <= 1e-12);
  }
}

TEST_CASE("smoothness fixtures") {
  // constant velocity: zero acceleration everywhere
  // exactly representable increments keep the second differences exact
  std::vector<double> left, right;
  for (int t = 0; t < 10; ++t) {
    left.insert(left.end(), {0.25 * t, 0.25});
    right.insert(right.end(), {0.875 - 0.125 * t, 0.5});
  }
  CHECK(smoothness(left, right, 1.0) == 0.0);

  // unit kink: positions (0, 0, 1), one proxy static, dt = 1
  std::vector<double> kink{0, 0, 0, 0, 1, 0};
  std::vector<double> still{0, 0, 0, 0, 0, 0};
  CHECK(smoothness(kink, still, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("smoothness scales linearly with space and is shift invariant") {
  Rng rng(5);
  std::vector<double> l, r;
  for (int t = 0; t < 40; ++t) {
    l.push_back(rng.uniform());
    r.push_back(rng.uniform());
  }
  double base = smoothness(l, r, 0.02);
  std::vector<double> l2 = l, r2 = r;
  for (auto& v : l2) v *= 3.0;
  for (auto& v : r2) v *= 3.0;
  CHECK(smoothness(l2, r2, 0.02) == doctest::Approx(3.0 * base).epsilon(1e-9));

  // uniform spatial shift leaves the second differences untouched
  for (size_t i = 0; i < l2.size(); ++i) l2[i] = l[i] + (i % 2 == 0 ? 5.0 : -2.0);
  for (size_t i = 0; i < r2.size(); ++i) r2[i] = r[i] + (i % 2 == 0 ? 5.0 : -2.0);
  CHECK(smoothness(l2, r2, 0.02) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("smoothness rejects too-short trajectories") {
  std::vector<double> two{0, 0, 1, 1};
  CHECK_THROWS_AS(smoothness(two, two, 1.0), Error);
}

TEST_CASE("progress consistency on clean ramps") {
  std::vector<double> up, down;
  for (int i = 0; i < 30; ++i) {
    up.push_back(0.2 + 0.02 * i);
    down.push_back(0.9 - 0.02 * i);
  }
  CHECK(progress_consistency(up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(progress_consistency(down) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(progress_consistency(std::vector<double>(30, 0.5)), Error);
}

TEST_CASE("late-jump trajectory scores low consistency despite success") {
  // button-style similarity trace: flat noise, then a single jump to goal
  Rng rng(3);
  std::vector<double> sims;
  for (int t = 0; t < 140; ++t) sims.push_back(0.4 + 0.01 * rng.normal());
  for (int t = 0; t < 10; ++t) sims.push_back(0.95);
  double rho = progress_consistency(sims);
  CHECK(rho < 0.2);
}

TEST_CASE("evaluate produces one run per seed-view pair") {
  const TaskSpec& task = task_catalog().get(TaskId::kReach);
  Policy pol(obs_dim(task.id));
  ParamStore p = pol.init_params(0);
  EvalReport rep = evaluate(task, p, {1, 2, 3}, {0, 1, 2}, nullptr, nullptr,
                            nullptr, "expert");
  CHECK(rep.runs == 9);
  CHECK(static_cast<int>(rep.results.size()) == 9);
  CHECK(rep.successes >= 0);
  CHECK(rep.successes <= 9);
}

TEST_CASE("an untrained policy fails every task") {
  for (const TaskSpec& task : task_catalog().tasks) {
    Policy pol(obs_dim(task.id));
    ParamStore p = pol.init_params(7);
    for (auto& v : p["pi.mu.w"].data) v = 0.0;
    for (auto& v : p["pi.mu.b"].data) v = 0.0;  // parks targets at the corner
    EvalReport rep =
        evaluate(task, p, {1, 2}, {0}, nullptr, nullptr, nullptr, "expert");
    CHECK(rep.successes == 0);
  }
}

TEST_CASE("report aggregates match per-run values and survive a round trip") {
  const TaskSpec& task = task_catalog().get(TaskId::kReach);
  Policy pol(obs_dim(task.id));
  ParamStore p = pol.init_params(0);
  EvalReport rep = evaluate(task, p, {1, 2, 3}, {0, 1, 2}, nullptr, nullptr,
                            nullptr, "expert");
  double total = 0.0;
  int count = 0;
  for (const auto& r : rep.results)
    if (r.success) {
      total += r.smoothness;
      ++count;
    }
  CHECK(count == rep.smooth_count);
  if (count > 0)
    CHECK(rep.mean_smoothness ==
          doctest::Approx(total / count).epsilon(1e-12));

  EvalReport rep2 = evaluate(task, p, {1, 2, 3}, {0, 1, 2}, nullptr, nullptr,
                             nullptr, "expert");
  CHECK(rep.to_json() == rep2.to_json());
}

TEST_CASE("fractional ranks average over tie runs") {
  std::vector<double> xs{3.0, 1.0, 3.0, 2.0};
  std::vector<double> r = fractional_ranks(xs);
  CHECK(r == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}
