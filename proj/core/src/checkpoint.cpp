#include "tandem/checkpoint.hpp"

#include <cstdint>
#include <fstream>

namespace tandem {

using nlohmann::json;

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const json& meta) {
  json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["meta"] = meta;
  json tensors = json::array();
  int64_t offset = 0;
  for (const auto& [name, t] : params) {
    tensors.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
    offset += t.size() * 4;
  }
  header["tensors"] = tensors;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot write " + path);
  out << header.dump() << "\n";
  for (const auto& [name, t] : params) {
    std::vector<float> buf(t.data.begin(), t.data.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * 4));
  }
  if (!out) throw Error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot read " + path);
  std::string line;
  std::getline(in, line);
  json header = json::parse(line);
  if (header.at("format_version").get<int>() != kCheckpointFormatVersion)
    throw Error("checkpoint: unsupported format version in " + path);
  const std::streampos base = in.tellg();
  Checkpoint ck;
  ck.meta = header.value("meta", json::object());
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    Tensor t(entry.at("shape").get<std::vector<int>>());
    in.seekg(base + std::streampos(entry.at("offset").get<int64_t>()));
    std::vector<float> buf(t.data.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * 4));
    if (!in) throw Error("checkpoint: truncated payload in " + path);
    for (size_t i = 0; i < buf.size(); ++i) t.data[i] = buf[i];
    ck.params.emplace(name, std::move(t));
  }
  return ck;
}

}  // namespace tandem
