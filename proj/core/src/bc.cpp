#include "tandem/bc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tandem/expert.hpp"

namespace tandem {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<uint64_t> DemoSet::seeds() const {
  std::vector<uint64_t> out;
  for (const auto& t : trajectories) out.push_back(t.seed);
  return out;
}

void DemoSet::save(const std::string& dir) const {
  fs::create_directories(dir);
  json manifest{{"format_version", kTrajFormatVersion},
                {"task", task_name(task)},
                {"n", trajectories.size()}};
  json files = json::array();
  for (size_t i = 0; i < trajectories.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "demo_%04zu.jsonl", i);
    save_trajectory(trajectories[i], dir + "/" + name);
    files.push_back({{"file", name}, {"seed", trajectories[i].seed}});
  }
  manifest["files"] = files;
  std::ofstream out(dir + "/manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw Error("DemoSet::save: write failed for " + dir);
}

DemoSet DemoSet::load(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw Error("DemoSet::load: cannot read " + dir + "/manifest.json");
  json manifest = json::parse(in);
  DemoSet ds;
  ds.task = task_from_name(manifest.at("task").get<std::string>());
  for (const auto& f : manifest.at("files")) {
    Trajectory t = load_trajectory(dir + "/" + f.at("file").get<std::string>());
    if (!t.success)
      throw Error("DemoSet::load: unsuccessful trajectory in " + dir);
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

namespace {

// Re-records a scripted-expert episode in the trajectory-log layout.
Trajectory scripted_trajectory(const TaskSpec& task, uint64_t seed) {
  Trajectory traj;
  traj.task = task.id;
  traj.seed = seed;
  traj.reward_mode = "none";
  WorldState w = reset(task, seed);
  for (int t = 0; t < task.horizon; ++t) {
    TrajStep s;
    s.t = t;
    for (int i = 0; i < 2; ++i) {
      s.proxy_pos[i] = w.proxies[i].position;
      s.proxy_vel[i] = w.proxies[i].velocity;
      s.attached[i] = w.proxies[i].attached;
    }
    s.obs = obs_vector(task, w);
    const Action a = scripted_expert(task, w);
    s.action = a.flat();
    s.action_raw = raw_from_action(a);
    auto [next, ev] = step(w, a, task);
    w = next;
    s.success = success(task, w);
    traj.steps.push_back(std::move(s));
  }
  traj.final_pos = {w.proxies[0].position, w.proxies[1].position};
  traj.success = success(task, w);
  return traj;
}

}  // namespace

DemoSet collect_demos(const TaskSpec& task, const ParamStore* policy_params,
                      int n, uint64_t seed) {
  if (n < 1) throw Error("collect_demos: n must be >= 1");
  DemoSet ds;
  ds.task = task.id;
  uint64_t episode_seed = derive_seed(seed, "demos");
  int attempts = 0;
  while (static_cast<int>(ds.trajectories.size()) < n) {
    if (attempts >= 20 * n)
      throw Error("collect_demos: fewer than " + std::to_string(n) +
                  " successes in " + std::to_string(attempts) + " attempts on " +
                  task_name(task.id));
    ++attempts;
    Trajectory traj =
        policy_params
            ? rollout_policy(task, *policy_params, episode_seed, 0)
            : scripted_trajectory(task, episode_seed);
    ++episode_seed;
    if (traj.success) ds.trajectories.push_back(std::move(traj));
  }
  return ds;
}

BcTrainResult train_bc(const DemoSet& demos, const BcTrainConfig& cfg) {
  if (demos.trajectories.empty()) throw Error("train_bc: empty demo set");
  const int D = obs_dim(demos.task);

  // 90/10 trajectory-level split (at least one validation trajectory when
  // there are two or more demos)
  const int n_traj = static_cast<int>(demos.trajectories.size());
  const int n_val = n_traj >= 2 ? std::max(1, n_traj / 10) : 0;
  std::vector<int> order(n_traj);
  for (int i = 0; i < n_traj; ++i) order[i] = i;
  Rng split_rng(derive_seed(cfg.seed, "bc-split"));
  for (int i = n_traj - 1; i > 0; --i)
    std::swap(order[i], order[split_rng.below(static_cast<uint64_t>(i) + 1)]);

  std::vector<std::pair<const std::vector<double>*, const std::array<double, 8>*>>
      train_pairs, val_pairs;
  for (int k = 0; k < n_traj; ++k) {
    auto& dst = k < n_val ? val_pairs : train_pairs;
    for (const auto& s : demos.trajectories[order[k]].steps)
      dst.emplace_back(&s.obs, &s.action_raw);
  }
  if (train_pairs.empty()) throw Error("train_bc: no training pairs");

  Graph g;
  const int B = cfg.batch_size;
  const int obs = g.input("obs", B, D);
  const int act = g.input("act", B, kActDim);
  const int mu = build_actor(g, obs, D);
  const int d = g.sub(mu, act);
  const int loss = g.mean_all(g.mul(d, d));
  Executor exec(g);

  BcTrainResult out;
  Rng init_rng(derive_seed(cfg.seed, "bc-init"));
  out.params = g.init_params(init_rng);
  OptimState opt;
  opt.cfg.lr = cfg.lr;

  for (const auto& [o, a] : train_pairs)
    for (double v : *a) out.zero_predictor_mse += v * v;
  out.zero_predictor_mse /= static_cast<double>(train_pairs.size()) * kActDim;

  Tensor obs_t({B, D}), act_t({B, kActDim});
  auto fill_batch = [&](const auto& pairs, const std::vector<size_t>& idx,
                        size_t start) {
    for (int b = 0; b < B; ++b) {
      const auto& [o, a] = pairs[idx[(start + b) % idx.size()]];
      std::copy(o->begin(), o->end(), &obs_t.data[static_cast<size_t>(b) * D]);
      std::copy(a->begin(), a->end(),
                &act_t.data[static_cast<size_t>(b) * kActDim]);
    }
  };

  auto eval_mse = [&](const auto& pairs) {
    // full pass in graph-sized chunks, last chunk wraps (close enough for
    // an early-stopping signal)
    std::vector<size_t> idx(pairs.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    double sum = 0.0;
    int chunks = 0;
    for (size_t start = 0; start < pairs.size(); start += B) {
      fill_batch(pairs, idx, start);
      ParamStore inputs;
      inputs["obs"] = obs_t;
      inputs["act"] = act_t;
      exec.forward(out.params, inputs);
      sum += exec.value(loss).data[0];
      ++chunks;
    }
    return sum / chunks;
  };

  Rng batch_rng(derive_seed(cfg.seed, "bc-batches"));
  std::vector<size_t> idx(train_pairs.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  out.has_val = !val_pairs.empty();
  out.best_val_mse = 1e300;
  ParamStore best = out.params;
  int bad_evals = 0;
  double train_mse = 0.0;
  for (int step = 0; step < cfg.steps; ++step) {
    for (int b = 0; b < B; ++b)
      std::swap(idx[b], idx[b + batch_rng.below(idx.size() - b)]);
    fill_batch(train_pairs, idx, 0);
    ParamStore inputs;
    inputs["obs"] = obs_t;
    inputs["act"] = act_t;
    try {
      exec.forward(out.params, inputs);
      exec.backward(loss);
    } catch (const Error& e) {
      throw Error("train_bc: diverged at step " + std::to_string(step) + ": " +
                  e.what());
    }
    train_mse = exec.value(loss).data[0];
    if (!std::isfinite(train_mse))
      throw Error("train_bc: diverged at step " + std::to_string(step));
    ParamStore grads;
    exec.param_grads(grads);
    adam_step(out.params, grads, opt, nullptr);

    if (out.has_val &&
        ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.steps)) {
      const double val = eval_mse(val_pairs);
      if (val < out.best_val_mse) {
        out.best_val_mse = val;
        best = out.params;
        bad_evals = 0;
      } else if (++bad_evals >= cfg.patience) {
        break;
      }
    }
  }
  out.final_train_mse = eval_mse(train_pairs);
  if (out.has_val) out.params = best;
  // fill in the non-actor policy parameters (log-std, value head) so the
  // result loads anywhere a full policy checkpoint is expected
  Policy policy(D);
  ParamStore full = policy.init_params(cfg.seed);
  for (auto& [name, t] : full)
    if (!out.params.count(name)) out.params[name] = t;
  return out;
}

int rope_bend_sign(const TaskSpec& task, uint64_t seed) {
  if (task.id != TaskId::kStraightenRope)
    throw Error("rope_bend_sign: not a rope task");
  const WorldState w = reset(task, seed);
  const auto& p = w.objects[0].particles;
  const Vec2 chord = p.back() - p.front();
  const Vec2 mid = p[p.size() / 2] - p.front();
  return chord.cross(mid) >= 0.0 ? 1 : -1;
}

std::vector<uint64_t> unseen_eval_seeds(const TaskSpec& task, int count,
                                        uint64_t seed,
                                        const std::vector<uint64_t>& exclude) {
  std::vector<uint64_t> out;
  uint64_t s = derive_seed(seed, "bc-eval");
  const bool rope = task.id == TaskId::kStraightenRope;
  int pos = 0, neg = 0;
  const int per_sign_min = rope ? (count + 2) / 3 : 0;
  while (static_cast<int>(out.size()) < count) {
    ++s;
    if (std::find(exclude.begin(), exclude.end(), s) != exclude.end()) continue;
    if (rope) {
      const int sign = rope_bend_sign(task, s);
      const int remaining = count - static_cast<int>(out.size());
      const int need_pos = std::max(0, per_sign_min - pos);
      const int need_neg = std::max(0, per_sign_min - neg);
      // keep room so both bend directions reach their quota
      if (sign > 0 && remaining - 1 < need_neg) continue;
      if (sign < 0 && remaining - 1 < need_pos) continue;
      (sign > 0 ? pos : neg)++;
    }
    out.push_back(s);
  }
  return out;
}

BcEvalResult eval_bc(const TaskSpec& task, const ParamStore& params,
                     const std::vector<uint64_t>& unseen_seeds,
                     const std::vector<uint64_t>& demo_seeds) {
  for (uint64_t s : unseen_seeds)
    if (std::find(demo_seeds.begin(), demo_seeds.end(), s) != demo_seeds.end())
      throw Error("eval_bc: evaluation seed " + std::to_string(s) +
                  " appears in the demo set");
  BcEvalResult out;
  Policy policy(obs_dim(task.id));
  for (uint64_t seed : unseen_seeds) {
    WorldState w = reset(task, seed);
    for (int t = 0; t < task.horizon; ++t) {
      const auto obs = obs_vector(task, w);
      const Action a = action_from_raw(policy.mean_action(obs, params));
      w = step(w, a, task).first;
    }
    out.successes += success(task, w) ? 1 : 0;
    ++out.attempts;
  }
  return out;
}

}  // namespace tandem
