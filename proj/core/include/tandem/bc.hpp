#ifndef TANDEM_BC_HPP_
#define TANDEM_BC_HPP_

#include <string>
#include <vector>

#include "tandem/evaluate.hpp"

namespace tandem {

// Successful demonstration trajectories for one task.
struct DemoSet {
  TaskId task = TaskId::kReach;
  std::vector<Trajectory> trajectories;

  std::vector<uint64_t> seeds() const;
  void save(const std::string& dir) const;  // trajectory logs + manifest
  static DemoSet load(const std::string& dir);
};

// Rolls deterministic episodes over fresh seeds derived from `seed` and
// keeps the first n successes. policy_params == nullptr uses the scripted
// waypoint controller as the demonstrator. Throws if n successes are not
// reached within 20n attempts.
DemoSet collect_demos(const TaskSpec& task, const ParamStore* policy_params,
                      int n, uint64_t seed);

struct BcTrainConfig {
  int steps = 5000;
  int batch_size = 64;
  double lr = 1e-3;
  int eval_every = 200;
  int patience = 6;  // early stop after this many evals without improvement
  uint64_t seed = 0;
};

struct BcTrainResult {
  ParamStore params;
  double final_train_mse = 0.0;
  double best_val_mse = 0.0;
  bool has_val = false;
  double zero_predictor_mse = 0.0;  // baseline on the same training pairs
};

// Mean-squared-error regression from state observations to demonstrated
// raw actions with the actor architecture; 90/10 trajectory-level split
// with early stopping on validation loss.
BcTrainResult train_bc(const DemoSet& demos, const BcTrainConfig& cfg);

// Sign of the rope's initial bend for a given seed (+1 / -1); used to
// build unseen evaluation sets that include the mirrored configuration.
int rope_bend_sign(const TaskSpec& task, uint64_t seed);

// Fresh seeds disjoint from `exclude`; for straighten-rope the set contains
// both bend directions.
std::vector<uint64_t> unseen_eval_seeds(const TaskSpec& task, int count,
                                        uint64_t seed,
                                        const std::vector<uint64_t>& exclude);

struct BcEvalResult {
  int successes = 0;
  int attempts = 0;
};

// Deterministic rollouts of the mean action; throws if any evaluation seed
// collides with a demo seed.
BcEvalResult eval_bc(const TaskSpec& task, const ParamStore& params,
                     const std::vector<uint64_t>& unseen_seeds,
                     const std::vector<uint64_t>& demo_seeds);

}  // namespace tandem

#endif  // TANDEM_BC_HPP_
