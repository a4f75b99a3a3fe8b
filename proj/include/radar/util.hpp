#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radar {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory, then renames into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> content);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool ends_with(std::string_view s, std::string_view suffix);
bool starts_with(std::string_view s, std::string_view prefix);

/// Keeps only [A-Za-z0-9], preserving case.
std::string strip_non_alnum(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

/// Stable directory name for a repository URL inside a local cache:
/// scheme stripped, trailing ".git" and "/" removed, separators folded to "__".
std::string repo_cache_key(std::string_view url);

/// Formats a double so that parsing the result recovers the exact value.
std::string format_double(double value);
double parse_double(std::string_view s);

} // namespace radar
