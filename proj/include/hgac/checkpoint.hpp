#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hgac/param_store.hpp"
#include "hgac/sha1.hpp"

namespace hgac {

inline constexpr char kCheckpointMagic[8] = {'H', 'G', 'C', 'K', 'P', 'T', '0', '1'};

namespace detail {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("checkpoint: truncated stream");
  return v;
}

}  // namespace detail

/// Serializes a store to a flat binary blob: magic, count, then per tensor
/// name length, name bytes, rows, cols and the raw 64-bit values. Values are
/// written verbatim so a load round-trips bit-exactly.
inline std::string serialize_params(const ParamStore& store) {
  std::ostringstream os(std::ios::binary);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod<uint64_t>(os, store.count());
  for (const auto& [name, e] : store.entries()) {
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(e.value.rows));
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(e.value.cols));
    os.write(reinterpret_cast<const char*>(e.value.v.data()),
             static_cast<std::streamsize>(e.value.size() * sizeof(double)));
  }
  return os.str();
}

inline ParamStore deserialize_params(const std::string& blob) {
  std::istringstream is(blob, std::ios::binary);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw ConfigError("checkpoint: bad magic");
  uint64_t count = detail::read_pod<uint64_t>(is);
  ParamStore store;
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len = detail::read_pod<uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    uint32_t rows = detail::read_pod<uint32_t>(is);
    uint32_t cols = detail::read_pod<uint32_t>(is);
    Tensor& t = store.add(name, static_cast<int>(rows), static_cast<int>(cols));
    is.read(reinterpret_cast<char*>(t.v.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!is) throw ConfigError("checkpoint: truncated tensor data for '" + name + "'");
  }
  return store;
}

/// Writes the binary checkpoint plus a JSON manifest describing its layout.
inline void save_checkpoint(const ParamStore& store, const std::string& bin_path,
                            const std::string& manifest_path) {
  std::string blob = serialize_params(store);
  {
    std::ofstream f(bin_path, std::ios::binary);
    if (!f) throw ConfigError("checkpoint: cannot open '" + bin_path + "' for writing");
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  nlohmann::json manifest;
  manifest["format"] = "hgac-checkpoint-v1";
  manifest["tensor_count"] = store.count();
  manifest["content_sha1"] = git_blob_sha1(blob);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, e] : store.entries())
    tensors.push_back({{"name", name}, {"rows", e.value.rows}, {"cols", e.value.cols}});
  manifest["tensors"] = tensors;
  std::ofstream mf(manifest_path);
  if (!mf) throw ConfigError("checkpoint: cannot open '" + manifest_path + "' for writing");
  mf << manifest.dump(2) << "\n";
}

inline ParamStore load_checkpoint(const std::string& bin_path) {
  std::ifstream f(bin_path, std::ios::binary);
  if (!f) throw ConfigError("checkpoint: cannot open '" + bin_path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return deserialize_params(os.str());
}

}  // namespace hgac
