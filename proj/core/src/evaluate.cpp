#include "tandem/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace tandem {

using nlohmann::json;

Trajectory rollout_policy(const TaskSpec& task, const ParamStore& params,
                          uint64_t seed, int view_id, RewardFn* reward,
                          Rng* rng) {
  Policy policy(obs_dim(task.id));
  Trajectory traj;
  traj.task = task.id;
  traj.seed = seed;
  traj.view_id = view_id;

  WorldState w = reset(task, seed);
  bool log_reward = reward != nullptr;
  if (log_reward) {
    try {
      traj.beta = reward->begin_episode(w, task);
    } catch (const Error&) {
      log_reward = false;  // degenerate goal; roll without reward logging
    }
  }
  for (int t = 0; t < task.horizon; ++t) {
    TrajStep s;
    s.t = t;
    for (int i = 0; i < 2; ++i) {
      s.proxy_pos[i] = w.proxies[i].position;
      s.proxy_vel[i] = w.proxies[i].velocity;
      s.attached[i] = w.proxies[i].attached;
    }
    s.obs = obs_vector(task, w);
    ActResult a = policy.act(s.obs, params, rng);
    s.action_raw = a.raw;
    s.action = a.action.flat();
    auto [next, ev] = step(w, a.action, task);
    w = next;
    if (log_reward) {
      RewardStep rs = reward->step(w, task);
      s.reward = rs.reward;
      s.similarity = rs.similarity;
    }
    s.success = success(task, w);
    traj.steps.push_back(std::move(s));
  }
  traj.final_pos = {w.proxies[0].position, w.proxies[1].position};
  traj.success = success(task, w);
  return traj;
}

double progress_consistency(const std::vector<double>& similarities) {
  std::vector<double> idx(similarities.size());
  std::iota(idx.begin(), idx.end(), 0.0);
  return spearman(idx, similarities);
}

json EvalReport::to_json() const {
  json runs_j = json::array();
  for (const auto& r : results)
    runs_j.push_back({{"seed", r.seed},
                      {"view", r.view},
                      {"success", r.success},
                      {"smoothness", r.success ? json(r.smoothness) : json()},
                      {"rho", r.rho_valid ? json(r.rho) : json()}});
  return json{{"task", task_name(task)},
              {"method", method},
              {"successes", successes},
              {"runs", runs},
              {"mean_smoothness", smooth_count > 0 ? json(mean_smoothness) : json()},
              {"mean_rho", rho_count > 0 ? json(mean_rho) : json()},
              {"results", runs_j}};
}

void save_eval_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("save_eval_report: cannot write " + path);
  out << report.to_json().dump(2) << "\n";
}

EvalReport evaluate(const TaskSpec& task, const ParamStore& policy_params,
                    const std::vector<uint64_t>& seeds,
                    const std::vector<int>& views,
                    const ParamStore* enc_params, const EncoderConfig* enc_cfg,
                    const GoalSpec* goal, const std::string& method) {
  EvalReport report;
  report.task = task.id;
  report.method = method;
  const bool with_rho = enc_params && enc_cfg && goal;

  double smooth_sum = 0.0, rho_sum = 0.0;
  for (uint64_t seed : seeds) {
    for (int view : views) {
      std::unique_ptr<RewardFn> reward;
      GoalSpec view_goal;
      if (with_rho) {
        view_goal = make_goal(task, goal->seed, ViewSpec::by_id(view));
        RewardParams rp;
        rp.mode = enc_cfg->ablate_hands ? RewardMode::kAblated
                                        : RewardMode::kCoord;
        reward = make_reward(rp, enc_params, enc_cfg, &view_goal);
      }
      Trajectory traj = rollout_policy(task, policy_params, seed, view,
                                       reward.get(), nullptr);
      RunResult run;
      run.seed = seed;
      run.view = view;
      run.success = traj.success;
      if (run.success) {
        run.smoothness =
            smoothness(traj.proxy_xy(0), traj.proxy_xy(1), kDt);
        smooth_sum += run.smoothness;
        ++report.smooth_count;
      }
      if (with_rho && traj.beta > 0.0) {
        std::vector<double> sims;
        sims.reserve(traj.steps.size());
        for (const auto& s : traj.steps) sims.push_back(s.similarity);
        try {
          run.rho = progress_consistency(sims);
          run.rho_valid = true;
          rho_sum += run.rho;
          ++report.rho_count;
        } catch (const Error&) {
          // constant similarity: rho undefined for this run
        }
      }
      report.successes += run.success ? 1 : 0;
      ++report.runs;
      report.results.push_back(run);
    }
  }
  if (report.smooth_count > 0)
    report.mean_smoothness = smooth_sum / report.smooth_count;
  if (report.rho_count > 0) report.mean_rho = rho_sum / report.rho_count;
  return report;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("write_csv: cannot write " + path);
  auto emit = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i)
      out << cells[i] << (i + 1 < cells.size() ? "," : "");
    out << "\n";
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  if (!out) throw Error("write_csv: write failed for " + path);
}

}  // namespace tandem
