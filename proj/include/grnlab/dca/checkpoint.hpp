// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grnlab/autodiff/tape.hpp"

namespace grnlab::dca {

/// GRNCKPT1 container:
///   "GRNCKPT1" | version u8 (= 1) | records until end of file
/// record:
///   name_len u32 | name bytes | dtype u8 (0 = f64, 1 = f32) | rank u32 |
///   rank x u64 extents | raw values
/// All integers and values are little-endian.
inline constexpr char kCheckpointMagic[8] = {'G', 'R', 'N', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { F64 = 0, F32 = 1 };

struct CheckpointEntry {
    std::string name;
    Tensor value;
    DType dtype = DType::F64;
};

/// Thrown for malformed or mismatched checkpoint content.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string encode_checkpoint(std::span<const CheckpointEntry> entries);
std::vector<CheckpointEntry> decode_checkpoint(const std::string& bytes);

/// Parameters in the given order, stored as f64.
std::vector<CheckpointEntry> snapshot(std::span<const ad::Parameter* const> params);

/// Writes to a sibling temporary file and renames it over `path`, so an
/// interrupted save never destroys the previous checkpoint.
void save_checkpoint(const std::filesystem::path& path, std::span<const CheckpointEntry> entries);
void save_checkpoint(const std::filesystem::path& path, std::span<const ad::Parameter* const> params);
std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path);

/// Copies every parameter's value from `entries` by name. Missing names, extra
/// names and shape differences are all errors.
void load_into(std::span<const CheckpointEntry> entries, std::span<ad::Parameter* const> params);

}  // namespace grnlab::dca
