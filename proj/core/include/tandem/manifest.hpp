#ifndef TANDEM_MANIFEST_HPP_
#define TANDEM_MANIFEST_HPP_

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "tandem/common.hpp"

namespace tandem {

inline constexpr int kRunConfigVersion = 1;

// Flat run configuration shared by every CLI subcommand. Parsing is strict:
// unknown keys are rejected with the offending key named.
struct RunConfig {
  int format_version = kRunConfigVersion;
  std::string command;
  std::string task;
  uint64_t seed = 0;                 // root seed, expanded into named streams
  std::vector<uint64_t> seeds;       // evaluation seeds
  std::vector<int> views{0, 1, 2};
  std::string reward_mode = "coord";
  std::string encoder_checkpoint;
  std::string ablated_checkpoint;    // hand-ablated encoder (compare)
  std::string policy_checkpoint;
  std::string init_checkpoint;       // encoder stage-2 starting point
  std::string clips_dir;
  std::string goal_dir;
  std::string demos_dir;
  std::string out_dir;
  int n_envs = 8;
  int iterations = 150;
  int steps = 0;        // gradient steps; 0 = module default
  int batch_size = 0;   // 0 = module default
  double lr = 0.0;      // 0 = module default
  int n = 0;            // clip/demo count
  int stride = 3;
  int stage = 1;
  int reward_stride = 1;
  bool ablate_hands = false;

  nlohmann::json to_json() const;
  // Throws Error naming the first unknown key.
  static RunConfig from_json(const nlohmann::json& j);
  // Accepts either a bare run config or a manifest (uses its "config").
  static RunConfig load(const std::string& path);
};

// 64-bit FNV-1a over the file bytes, as 16 hex digits.
std::string file_hash_hex(const std::string& path);

// manifest.json under out_dir: resolved config, input file hashes, and the
// artifact format version — sufficient for a byte-exact rerun.
void write_manifest(const std::string& out_dir, const RunConfig& config,
                    const std::vector<std::string>& input_files);

}  // namespace tandem

#endif  // TANDEM_MANIFEST_HPP_
