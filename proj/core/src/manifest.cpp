#include "tandem/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace tandem {

using nlohmann::json;

json RunConfig::to_json() const {
  return json{{"format_version", format_version},
              {"command", command},
              {"task", task},
              {"seed", seed},
              {"seeds", seeds},
              {"views", views},
              {"reward_mode", reward_mode},
              {"encoder_checkpoint", encoder_checkpoint},
              {"ablated_checkpoint", ablated_checkpoint},
              {"policy_checkpoint", policy_checkpoint},
              {"init_checkpoint", init_checkpoint},
              {"clips_dir", clips_dir},
              {"goal_dir", goal_dir},
              {"demos_dir", demos_dir},
              {"out_dir", out_dir},
              {"n_envs", n_envs},
              {"iterations", iterations},
              {"steps", steps},
              {"batch_size", batch_size},
              {"lr", lr},
              {"n", n},
              {"stride", stride},
              {"stage", stage},
              {"reward_stride", reward_stride},
              {"ablate_hands", ablate_hands}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error("run config: expected a JSON object");
  RunConfig c;
  const json defaults = c.to_json();
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!defaults.contains(key))
      throw Error("run config: unknown key \"" + key + "\"");
  }
  c.format_version = j.value("format_version", c.format_version);
  if (c.format_version != kRunConfigVersion)
    throw Error("run config: unsupported format_version");
  c.command = j.value("command", c.command);
  c.task = j.value("task", c.task);
  c.seed = j.value("seed", c.seed);
  c.seeds = j.value("seeds", c.seeds);
  c.views = j.value("views", c.views);
  c.reward_mode = j.value("reward_mode", c.reward_mode);
  c.encoder_checkpoint = j.value("encoder_checkpoint", c.encoder_checkpoint);
  c.ablated_checkpoint = j.value("ablated_checkpoint", c.ablated_checkpoint);
  c.policy_checkpoint = j.value("policy_checkpoint", c.policy_checkpoint);
  c.init_checkpoint = j.value("init_checkpoint", c.init_checkpoint);
  c.clips_dir = j.value("clips_dir", c.clips_dir);
  c.goal_dir = j.value("goal_dir", c.goal_dir);
  c.demos_dir = j.value("demos_dir", c.demos_dir);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.n_envs = j.value("n_envs", c.n_envs);
  c.iterations = j.value("iterations", c.iterations);
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.n = j.value("n", c.n);
  c.stride = j.value("stride", c.stride);
  c.stage = j.value("stage", c.stage);
  c.reward_stride = j.value("reward_stride", c.reward_stride);
  c.ablate_hands = j.value("ablate_hands", c.ablate_hands);
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("run config: cannot read " + path);
  json j = json::parse(in, nullptr, true, /*ignore_comments=*/false);
  if (j.is_object() && j.contains("config") && j.contains("inputs"))
    return from_json(j.at("config"));  // a manifest
  return from_json(j);
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("file_hash_hex: cannot read " + path);
  uint64_t h = 1469598103934665603ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

void write_manifest(const std::string& out_dir, const RunConfig& config,
                    const std::vector<std::string>& input_files) {
  std::filesystem::create_directories(out_dir);
  json inputs = json::array();
  for (const auto& f : input_files)
    inputs.push_back({{"path", f}, {"fnv1a64", file_hash_hex(f)}});
  json manifest{{"format_version", kRunConfigVersion},
                {"config", config.to_json()},
                {"inputs", inputs}};
  std::ofstream out(out_dir + "/manifest.json");
  if (!out) throw Error("write_manifest: cannot write " + out_dir);
  out << manifest.dump(2) << "\n";
  if (!out) throw Error("write_manifest: write failed for " + out_dir);
}

}  // namespace tandem
