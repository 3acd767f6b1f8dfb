#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "liftguard/lstm.hpp"

namespace liftguard {

inline constexpr std::string_view kModelMagic = "LIFTLSTM";
inline constexpr int kModelFormatVersion = 1;

// File layout, three lines:
//   LIFTLSTM 1
//   <canonical JSON document>
//   crc32 <8 lowercase hex digits of the CRC32 of the JSON line bytes>

std::uint32_t crc32(std::string_view bytes);

std::string serialize_model(const ModelParams& m);
/// Throws FormatError on bad magic, unsupported version, checksum mismatch or
/// shape inconsistency.
ModelParams deserialize_model(std::string_view text);

void save_model(const ModelParams& m, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace liftguard
