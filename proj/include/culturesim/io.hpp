#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace culturesim {

/// Throws CorruptResults when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Write-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Strips ASCII whitespace at both ends.
std::string trim(std::string_view text);

std::string strip_trailing_newlines(std::string text);

/// Shortest representation that round-trips to the same double.
std::string format_double(double value);

/// One splitmix64 step; advances `state`. Portable replacement for library distributions
/// wherever byte-identical output across platforms matters.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a; stable across platforms.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace culturesim
