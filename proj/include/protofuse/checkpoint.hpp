// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "protofuse/param_store.hpp"

namespace protofuse {

/// Parameters plus the run metadata stored next to them.
///
/// The FSLC file holds only the entries. Stage, step and the resolved
/// configuration go to a text sidecar `<path>.meta`.
struct Checkpoint {
  ParamStore params;
  std::string stage;
  std::uint64_t step = 0;
  std::string config_echo;
};

/// FSLC layout: "FSLC", u16 version, u32 count, then per entry u16 name
/// length, name, u8 frozen, u8 rank, rank x u32 dims, f32 values; CRC32 last.
/// All integers and floats little-endian.
std::vector<std::uint8_t> encode_params(const ParamStore& store);
ParamStore decode_params(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Reads the FSLC file and, when present, its sidecar.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Overwrites entries of `target` with same-named entries of `source`.
/// Throws invalid_argument naming the first entry whose shape differs.
/// Entries missing on either side are left alone; returns the copy count.
std::size_t load_matching(ParamStore& target, const ParamStore& source);

}  // namespace protofuse
