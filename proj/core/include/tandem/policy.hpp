#ifndef TANDEM_POLICY_HPP_
#define TANDEM_POLICY_HPP_

#include <array>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "tandem/graph.hpp"
#include "tandem/sim.hpp"

namespace tandem {

inline constexpr int kActDim = 8;  // a_p (4) then a_f (4)
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kLogStdInit = -1.5;
// raw force outputs are unit-scale; this maps them onto the actuator range
inline constexpr double kForceGain = 5.0;

// Low-dimensional policy observation: proxy positions/velocities (8),
// attachment flags (2), task-specific object features, normalized time (1).
int obs_dim(TaskId task);
std::vector<double> obs_vector(const TaskSpec& task, const WorldState& w);

// raw network output -> simulator action (and its inverse, used when
// converting scripted-expert actions into imitation targets)
Action action_from_raw(const std::array<double, kActDim>& raw);
std::array<double, kActDim> raw_from_action(const Action& a);

struct ActResult {
  std::array<double, kActDim> raw{};
  Action action;
  double logprob = 0.0;
  double value = 0.0;
};

// Diagonal-Gaussian actor + critic, both 2 hidden layers of width 128 with
// tanh activations; per-dimension log-std clamped to [kLogStdMin, kLogStdMax].
class Policy {
 public:
  explicit Policy(int obs_dim);

  ParamStore init_params(uint64_t seed) const;

  // rng == nullptr returns the mean action (deterministic evaluation mode).
  ActResult act(const std::vector<double>& obs, const ParamStore& params,
                Rng* rng);

  // Mean action only (behavior-cloning inference).
  std::array<double, kActDim> mean_action(const std::vector<double>& obs,
                                          const ParamStore& params);

  // Exact diagonal-Gaussian log density of `raw` under the clamped log-stds.
  static double log_density(const std::array<double, kActDim>& raw,
                            const std::array<double, kActDim>& mean,
                            const std::array<double, kActDim>& logstd);

  int obs_dim() const { return obs_dim_; }

 private:
  int obs_dim_;
  Graph graph_;
  int mu_node_ = -1, logstd_node_ = -1, value_node_ = -1;
  std::unique_ptr<Executor> exec_;
};

// Shared network builders (also used by the PPO loss graph and BC).
// Actor returns the mean node [n, kActDim]; params pi.l1/pi.l2/pi.mu.
int build_actor(Graph& g, int obs_node, int obs_dim);
// Clamped log-std node [1, kActDim]; param pi.logstd.
int build_logstd(Graph& g);
// Critic value node [n, 1]; params vf.l1/vf.l2/vf.out.
int build_critic(Graph& g, int obs_node, int obs_dim);

void save_policy_checkpoint(const std::string& path, const ParamStore& params,
                            TaskId task, int obs_dim,
                            const nlohmann::json& extra_meta = {});
struct PolicyCheckpoint {
  ParamStore params;
  TaskId task;
  int obs_dim = 0;
  nlohmann::json meta;
};
PolicyCheckpoint load_policy_checkpoint(const std::string& path);

}  // namespace tandem

#endif  // TANDEM_POLICY_HPP_
