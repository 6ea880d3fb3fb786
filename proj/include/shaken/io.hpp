#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace shaken {

/// Writes to path.tmp, flushes, then renames over path so readers never see
/// a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace shaken
