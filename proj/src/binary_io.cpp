// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/binary_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "protofuse/error.hpp"

namespace protofuse {

void ByteWriter::bytes(std::string_view raw) { buf_.insert(buf_.end(), raw.begin(), raw.end()); }

void ByteWriter::u8(std::uint8_t v) { buf_.push_back(v); }

void ByteWriter::u16(std::uint16_t v) {
  buf_.push_back(static_cast<std::uint8_t>(v & 0xffu));
  buf_.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) buf_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xffu));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::seal_crc32() { u32(crc32_of(buf_)); }

ByteReader::ByteReader(std::span<const std::uint8_t> data, std::string what)
    : data_(data), what_(std::move(what)) {}

void ByteReader::need(std::size_t n) {
  if (data_.size() - pos_ < n) {
    fail(ErrorCategory::format, what_ + ": truncated at byte " + std::to_string(pos_));
  }
}

std::string ByteReader::bytes(std::size_t n) {
  need(n);
  std::string out(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
  need(2);
  const auto v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
  pos_ += 4;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::uint32_t crc32_of(std::span<const std::uint8_t> data) noexcept {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded chunks.
  const std::size_t chunk = 1u << 30;
  for (std::size_t off = 0; off < data.size(); off += chunk) {
    const std::size_t n = std::min(chunk, data.size() - off);
    crc = crc32(crc, data.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

std::span<const std::uint8_t> verify_crc32(std::span<const std::uint8_t> file, std::string_view what) {
  require(file.size() >= 4, ErrorCategory::format, std::string(what) + ": file too short");
  const auto payload = file.first(file.size() - 4);
  ByteReader tail(file.last(4), std::string(what));
  const std::uint32_t stored = tail.u32();
  const std::uint32_t actual = crc32_of(payload);
  if (stored != actual) {
    std::ostringstream msg;
    msg << what << ": checksum mismatch (stored " << std::hex << stored << ", computed " << actual << ")";
    fail(ErrorCategory::format, msg.str());
  }
  return payload;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::io, "cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorCategory::io, "read failed: " + path.string());
  return data;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCategory::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  require(static_cast<bool>(out), ErrorCategory::io, "write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto data = read_file_bytes(path);
  return std::string(data.begin(), data.end());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace protofuse
