#ifndef TANDEM_PPO_HPP_
#define TANDEM_PPO_HPP_

#include <memory>
#include <string>
#include <vector>

#include "tandem/adam.hpp"
#include "tandem/policy.hpp"
#include "tandem/reward.hpp"

namespace tandem {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation. values has T+1 entries (bootstrap
// last); terminal[t] = 1 cuts both the TD target and the trace.
GaeResult gae(const std::vector<double>& rewards,
              const std::vector<double>& values,
              const std::vector<uint8_t>& terminal, double gamma,
              double lambda);

struct RolloutBatch {
  int n = 0;
  int obs_dim = 0;
  std::vector<double> obs;        // n * obs_dim
  std::vector<double> actions;    // n * kActDim (raw network outputs)
  std::vector<double> logprobs;   // n
  std::vector<double> rewards;    // n
  std::vector<double> values;     // n
  std::vector<uint8_t> terminal;  // n
  std::vector<double> advantages; // n, filled by the trainer
  std::vector<double> returns;    // n
};

struct PpoHyper {
  double clip = 0.2;
  double vf_coef = 0.5;
  double ent_coef = 0.01;
  int epochs = 4;
  int minibatch = 256;
  double lr = 3e-4;
};

struct PpoStats {
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  double value_loss = 0.0;
  double policy_loss = 0.0;
  bool rejected = false;  // non-finite loss; params restored
};

// Clipped-surrogate PPO update over fixed-size minibatches (the remainder
// after the last full minibatch of an epoch is dropped).
class PpoUpdater {
 public:
  PpoUpdater(int obs_dim, PpoHyper hyper);

  // Normalizes batch advantages in place, runs epochs x minibatches of
  // Adam steps, and aggregates stats over all minibatches.
  PpoStats update(RolloutBatch& batch, ParamStore& params, OptimState& opt,
                  Rng& rng);

 private:
  int obs_dim_;
  PpoHyper hyper_;
  Graph graph_;
  int loss_ = -1, ratio_ = -1, vloss_ = -1, piloss_ = -1;
  std::unique_ptr<Executor> exec_;
};

struct TrainPolicyConfig {
  int n_envs = 8;
  int iterations = 150;
  double gamma = 0.99;
  double lambda = 0.95;
  PpoHyper hyper;
  // similarity recomputed every reward_stride steps (held in between);
  // 1 = every step
  int reward_stride = 1;
  uint64_t seed = 0;
  std::string checkpoint_dir;  // empty = no checkpoints written
  std::string log_csv;         // empty = no CSV written
};

struct IterationLog {
  int iteration = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  double value_loss = 0.0;
};

struct TrainPolicyResult {
  ParamStore params;       // final
  ParamStore best_params;  // highest (success rate, mean return)
  std::vector<IterationLog> log;
};

// Alternates full-horizon rollouts over n_envs environments with PPO
// updates. Encoder-backed reward modes need encoder params/config and a
// goal; expert mode ignores them. Degenerate goals (initial similarity
// already at the baseline ceiling) are re-sampled per episode.
TrainPolicyResult train_policy(const TaskSpec& task, const RewardParams& rp,
                               const ParamStore* enc_params,
                               const EncoderConfig* enc_cfg,
                               const GoalSpec* goal,
                               const TrainPolicyConfig& cfg);

}  // namespace tandem

#endif  // TANDEM_PPO_HPP_
