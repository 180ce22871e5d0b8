#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "kge/error.hpp"
#include "kge/model.hpp"
#include "kge/text.hpp"

// Checkpoint layout, all integers little-endian:
//
//   magic "KGEMODEL" | u32 version | u32 family | u32 k | u64 n | u64 m | u64 seed
//   u32 norm | u32 len + config JSON
//   n x (u32 len + entity label) | m x (u32 len + relation label)
//   n*width f32 entity table | m*width f32 relation table   (row-major)
//   u64 FNV-1a of all preceding bytes

namespace kge {

inline constexpr std::array<char, 8> kCheckpointMagic = {'K', 'G', 'E', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void bytes(std::string_view b) { out_.append(b); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  std::string& buffer() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n) {
    if (n > in_.size() - pos_) throw IoError("checkpoint truncated");
    auto v = in_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const auto n = u32();
    return std::string(bytes(n));
  }
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  std::uint64_t get(int n) {
    const auto b = bytes(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[static_cast<std::size_t>(i)])) << (8 * i);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const EmbeddingModel& m) {
  detail::ByteWriter w;
  w.bytes({kCheckpointMagic.data(), kCheckpointMagic.size()});
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(m.family()));
  w.u32(static_cast<std::uint32_t>(m.config().k));
  w.u64(m.entity_count());
  w.u64(m.relation_count());
  w.u64(m.config().seed);
  w.u32(static_cast<std::uint32_t>(m.config().norm));
  w.str(to_json(m.config()).dump());
  for (const auto& l : m.entities().labels()) w.str(l);
  for (const auto& l : m.relations().labels()) w.str(l);
  for (float v : m.entity_table().data) w.f32(v);
  for (float v : m.relation_table().data) w.f32(v);
  const auto digest = fnv1a64(w.buffer());
  w.u64(digest);
  return std::move(w.buffer());
}

inline EmbeddingModel deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 8) throw IoError("checkpoint truncated");
  const auto body = bytes.substr(0, bytes.size() - 8);
  detail::ByteReader tail(bytes.substr(bytes.size() - 8));
  if (tail.u64() != fnv1a64(body)) throw IoError("checkpoint checksum mismatch");

  detail::ByteReader r(body);
  if (std::memcmp(r.bytes(8).data(), kCheckpointMagic.data(), 8) != 0)
    throw IoError("not a checkpoint (bad magic)");
  if (const auto v = r.u32(); v != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(v));

  const auto family = r.u32();
  const auto k = r.u32();
  const auto n = r.u64();
  const auto m = r.u64();
  const auto seed = r.u64();
  const auto norm = r.u32();
  ModelConfig config;
  try {
    config = model_config_from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint config: ") + e.what());
  }
  if (static_cast<std::uint32_t>(config.family) != family || static_cast<std::uint32_t>(config.k) != k ||
      config.seed != seed || static_cast<std::uint32_t>(config.norm) != norm)
    throw IoError("checkpoint header disagrees with its config block");

  Vocabulary entities, relations;
  for (std::uint64_t i = 0; i < n; ++i) entities.intern(r.str());
  for (std::uint64_t i = 0; i < m; ++i) relations.intern(r.str());
  if (entities.size() != n || relations.size() != m)
    throw IoError("checkpoint vocabulary has duplicate labels");

  EmbeddingModel model(config, std::move(entities), std::move(relations));
  if (r.remaining() != 4 * (model.entity_table().data.size() + model.relation_table().data.size()))
    throw IoError("checkpoint table size mismatch");
  for (auto& v : model.entity_table().data) v = r.f32();
  for (auto& v : model.relation_table().data) v = r.f32();
  return model;
}

inline std::string model_checksum(const EmbeddingModel& m) {
  return to_hex(fnv1a64(serialize_checkpoint(m)));
}

inline void save_checkpoint(const EmbeddingModel& m, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(m));
}

inline EmbeddingModel load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize_checkpoint(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace kge
