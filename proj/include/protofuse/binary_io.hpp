// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protofuse {

/// Little-endian byte sink for the on-disk formats.
class ByteWriter {
 public:
  void bytes(std::string_view raw);
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  /// Appends the CRC32 of everything written so far.
  void seal_crc32();
  const std::vector<std::uint8_t>& data() const noexcept { return buf_; }
  std::vector<std::uint8_t> take() noexcept { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader. Every short read throws a format
/// error mentioning `what`.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string what);
  std::string bytes(std::size_t n);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n);
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> data) noexcept;

/// Verifies the trailing CRC32 and returns the bytes it covers.
std::span<const std::uint8_t> verify_crc32(std::span<const std::uint8_t> file, std::string_view what);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> data);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace protofuse
