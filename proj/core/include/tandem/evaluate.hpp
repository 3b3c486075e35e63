#ifndef TANDEM_EVALUATE_HPP_
#define TANDEM_EVALUATE_HPP_

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "tandem/metrics.hpp"
#include "tandem/ppo.hpp"
#include "tandem/trajlog.hpp"

namespace tandem {

// Deterministic-mode rollout of a policy checkpoint over one episode.
// `reward` is optional and only used to log (similarity, reward) per step;
// `rng` non-null switches to stochastic acting.
Trajectory rollout_policy(const TaskSpec& task, const ParamStore& params,
                          uint64_t seed, int view_id,
                          RewardFn* reward = nullptr, Rng* rng = nullptr);

// spearman(frame index, goal similarity); throws on constant similarity.
double progress_consistency(const std::vector<double>& similarities);

struct RunResult {
  uint64_t seed = 0;
  int view = 0;
  bool success = false;
  double smoothness = 0.0;  // valid only for successful runs
  double rho = 0.0;
  bool rho_valid = false;
};

struct EvalReport {
  TaskId task = TaskId::kReach;
  std::string method;
  int successes = 0;
  int runs = 0;
  std::vector<RunResult> results;
  double mean_smoothness = 0.0;  // over successful runs
  int smooth_count = 0;
  double mean_rho = 0.0;         // over runs with a defined rho
  int rho_count = 0;

  nlohmann::json to_json() const;
};

void save_eval_report(const EvalReport& report, const std::string& path);

// Rolls the policy once per (seed, view). When encoder params/config and a
// goal seed are given, each run's progress consistency is measured against
// the goal re-rendered in that run's view. Smoothness is aggregated over
// successful runs only; rho over all runs where it is defined.
EvalReport evaluate(const TaskSpec& task, const ParamStore& policy_params,
                    const std::vector<uint64_t>& seeds,
                    const std::vector<int>& views,
                    const ParamStore* enc_params, const EncoderConfig* enc_cfg,
                    const GoalSpec* goal, const std::string& method);

// Minimal CSV emission for the comparison tables.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace tandem

#endif  // TANDEM_EVALUATE_HPP_
