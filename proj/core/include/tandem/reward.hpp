#ifndef TANDEM_REWARD_HPP_
#define TANDEM_REWARD_HPP_

#include <memory>
#include <string>

#include "tandem/clips.hpp"
#include "tandem/encoder.hpp"

namespace tandem {

// Initial similarities above this are rejected as "already at the goal".
inline constexpr double kBetaDegenerate = 1.0 - 1e-6;

// Guards for the episode-level similarity reward: a freshly trained encoder
// can put the start and goal far apart (similarity ~1e-3), which makes the
// exponent (1+alpha)(s-beta)/beta overflow as s rises. The baseline is
// floored and the per-step reward capped; tilted_reward itself is untouched.
inline constexpr double kBetaFloor = 0.05;
inline constexpr double kRewardCap = 100.0;

enum class RewardMode {
  kCoord,         // goal similarity with hand-position tokens
  kAblated,       // goal similarity from pixels alone
  kExpert,        // hand-designed task-space shaping, no encoder
  kCoordProprio,  // kCoord plus a proximity bonus toward the goal hands
};

const char* reward_mode_name(RewardMode m);
RewardMode reward_mode_from_name(const std::string& name);

struct RewardParams {
  RewardMode mode = RewardMode::kCoord;
  double alpha = 3.0;           // tilt strength above the baseline
  double lambda_proprio = 0.1;  // weight of the hand-proximity bonus
};

// Goal-anchored tilted reward:
//   R = exp((1 + alpha * 1[s > beta]) * (s - beta) / beta) - 1
// with beta the episode's initial goal similarity. Monotone in s, zero at
// s = beta, and steeper above the baseline than below it.
double tilted_reward(double s, double beta, double alpha);

struct RewardStep {
  double similarity = 0.0;  // 0 in expert mode
  double reward = 0.0;
};

// Per-episode reward function; begin_episode() must run on the initial
// state before step().
class RewardFn {
 public:
  virtual ~RewardFn() = default;
  // Returns beta (0 for expert mode); throws on a degenerate goal whose
  // initial similarity already exceeds kBetaDegenerate.
  virtual double begin_episode(const WorldState& first,
                               const TaskSpec& task) = 0;
  virtual RewardStep step(const WorldState& state, const TaskSpec& task) = 0;
  virtual double beta() const = 0;
};

// Encoder-backed modes render the state agent-agnostically in the goal's
// view and feed proxy pixel coordinates as the hand tokens.
std::unique_ptr<RewardFn> make_reward(const RewardParams& rp,
                                      const ParamStore* encoder_params,
                                      const EncoderConfig* encoder_cfg,
                                      const GoalSpec* goal);

// Negative task-space distance used by the expert baseline (also handy in
// tests as an independent progress signal).
double expert_potential(const TaskSpec& task, const WorldState& w);

}  // namespace tandem

#endif  // TANDEM_REWARD_HPP_
