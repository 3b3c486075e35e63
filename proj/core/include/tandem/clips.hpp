#ifndef TANDEM_CLIPS_HPP_
#define TANDEM_CLIPS_HPP_

#include <string>
#include <vector>

#include "tandem/render.hpp"
#include "tandem/tasks.hpp"

namespace tandem {

inline constexpr int kClipFormatVersion = 1;
inline constexpr int kDefaultStride = 3;

// Temporally ordered agent-agnostic frames with preserved hand coordinates.
struct Clip {
  TaskId task = TaskId::kReach;
  uint64_t seed = 0;
  int view_id = 0;
  int stride = kDefaultStride;
  std::vector<Frame> frames;
  std::vector<HandCoords> hands;

  int length() const { return static_cast<int>(frames.size()); }
};

struct ClipDataset {
  std::vector<Clip> clips;

  static ClipDataset load(const std::string& dir);
  // load only clips on one side of the train/held-out split
  static ClipDataset load_split(const std::string& dir, bool heldout);
};

// Seeds are hashed into a 90/10 train/held-out split.
bool is_heldout_seed(uint64_t seed);

// Renders one expert episode agent-agnostically, subsampled by stride.
Clip episode_to_clip(const TaskSpec& task, uint64_t seed, const ViewSpec& view,
                     int stride, bool mirror = false);

// Writes n successful expert episodes as clip directories under out_dir
// (clip_00000, clip_00001, ...), cycling through the given views. Failed
// episodes are discarded and re-sampled with an incremented seed. Throws if
// n successes are not reached within 10n attempts.
void generate_clips(const TaskSpec& task, int n, uint64_t seed,
                    const std::vector<int>& views, int stride,
                    const std::string& out_dir);

void save_clip(const Clip& clip, const std::string& clip_dir);
Clip load_clip(const std::string& clip_dir);

// Goal specification: agent-agnostic image of a success state plus the
// final proxy pixel coordinates.
struct GoalSpec {
  TaskId task = TaskId::kReach;
  uint64_t seed = 0;
  int view_id = 0;
  Frame frame;
  HandCoords hands;
};

GoalSpec make_goal(const TaskSpec& task, uint64_t seed, const ViewSpec& view);
void save_goal(const GoalSpec& goal, const std::string& dir);
GoalSpec load_goal(const std::string& dir);

}  // namespace tandem

#endif  // TANDEM_CLIPS_HPP_
