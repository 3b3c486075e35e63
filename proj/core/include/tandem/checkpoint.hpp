#ifndef TANDEM_CHECKPOINT_HPP_
#define TANDEM_CHECKPOINT_HPP_

#include <nlohmann/json.hpp>
#include <string>

#include "tandem/graph.hpp"

namespace tandem {

inline constexpr int kCheckpointFormatVersion = 1;

// Checkpoint file: one JSON header line (name/shape/byte offset per tensor,
// format version, free-form meta) followed by raw little-endian float32
// payloads concatenated in header order.
void save_checkpoint(const std::string& path, const ParamStore& params,
                     const nlohmann::json& meta = nlohmann::json::object());

struct Checkpoint {
  ParamStore params;
  nlohmann::json meta;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace tandem

#endif  // TANDEM_CHECKPOINT_HPP_
