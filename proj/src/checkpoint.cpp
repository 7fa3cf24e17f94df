// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/checkpoint.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "protofuse/binary_io.hpp"
#include "protofuse/error.hpp"

namespace protofuse {

namespace {

constexpr std::string_view kMagic = "FSLC";
constexpr std::uint16_t kVersion = 1;

std::filesystem::path meta_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta");
}

}  // namespace

std::vector<std::uint8_t> encode_params(const ParamStore& store) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u16(kVersion);
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, entry] : store.entries()) {
    require(name.size() <= std::numeric_limits<std::uint16_t>::max(), ErrorCategory::format,
            "entry name too long: " + name.substr(0, 64));
    const Shape& shape = entry.tensor.shape();
    require(shape.size() <= 255, ErrorCategory::format, "entry rank too large: " + name);
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u8(entry.frozen ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (std::size_t d : shape) {
      require(d <= std::numeric_limits<std::uint32_t>::max(), ErrorCategory::format, "dimension overflow: " + name);
      w.u32(static_cast<std::uint32_t>(d));
    }
    for (double v : entry.tensor.values()) w.f32(static_cast<float>(v));
  }
  w.seal_crc32();
  return w.take();
}

ParamStore decode_params(std::span<const std::uint8_t> bytes) {
  const std::string what = "checkpoint";
  {
    ByteReader head(bytes, what);
    require(head.bytes(4) == kMagic, ErrorCategory::format, "checkpoint: bad magic, expected FSLC");
    const std::uint16_t version = head.u16();
    require(version == kVersion, ErrorCategory::format,
            "checkpoint: unsupported version " + std::to_string(version));
  }
  ByteReader r(verify_crc32(bytes, what), what);
  r.bytes(4);
  r.u16();
  const std::uint32_t count = r.u32();
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.u16());
    const std::uint8_t frozen = r.u8();
    require(frozen <= 1, ErrorCategory::format, "checkpoint: bad frozen flag on " + name);
    const std::uint8_t rank = r.u8();
    require(rank <= 2, ErrorCategory::format, "checkpoint: unsupported rank on " + name);
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = shape_numel(shape);
    require(r.remaining() / 4 >= n, ErrorCategory::format, "checkpoint: truncated values for " + name);
    std::vector<double> values(n);
    for (double& v : values) v = r.f32();
    require(!store.contains(name), ErrorCategory::format, "checkpoint: duplicate entry " + name);
    store.add(name, shape, std::move(values), frozen == 1);
  }
  require(r.remaining() == 0, ErrorCategory::format, "checkpoint: trailing bytes after last entry");
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_bytes(path, encode_params(ckpt.params));
  std::ostringstream meta;
  meta << "stage = " << ckpt.stage << "\n";
  meta << "step = " << ckpt.step << "\n";
  meta << "[config]\n" << ckpt.config_echo;
  write_text_file(meta_path(path), meta.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint ckpt;
  ckpt.params = decode_params(read_file_bytes(path));
  const auto meta = meta_path(path);
  if (!std::filesystem::exists(meta)) return ckpt;
  std::istringstream in(read_text_file(meta));
  std::string line;
  while (std::getline(in, line)) {
    if (line == "[config]") {
      std::ostringstream rest;
      rest << in.rdbuf();
      ckpt.config_echo = rest.str();
      break;
    }
    if (line.rfind("stage = ", 0) == 0) {
      ckpt.stage = line.substr(8);
    } else if (line.rfind("step = ", 0) == 0) {
      try {
        ckpt.step = std::stoull(line.substr(7));
      } catch (const std::exception&) {
        fail(ErrorCategory::format, "checkpoint meta: bad step line '" + line + "'");
      }
    }
  }
  return ckpt;
}

std::size_t load_matching(ParamStore& target, const ParamStore& source) {
  for (const auto& [name, entry] : source.entries()) {
    if (!target.contains(name)) continue;
    const Shape& want = target.get(name).shape();
    const Shape& have = entry.tensor.shape();
    require(want == have, ErrorCategory::invalid_argument,
            "shape mismatch for entry '" + name + "': checkpoint has " + shape_to_string(have) +
                ", model expects " + shape_to_string(want));
  }
  std::size_t copied = 0;
  for (const auto& [name, entry] : source.entries()) {
    if (!target.contains(name)) continue;
    auto dst = target.get(name).mutable_values();
    const auto src = entry.tensor.values();
    std::copy(src.begin(), src.end(), dst.begin());
    ++copied;
  }
  return copied;
}

}  // namespace protofuse
