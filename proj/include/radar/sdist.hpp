#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace radar {

struct FileEntry {
    std::string path;       // '/'-separated, relative to root_prefix
    std::string blob_sha1;  // 40-hex Git blob object id
    std::uint64_t size = 0;
    bool is_python = false; // path ends in ".py"
};

struct SdistInventory {
    std::string package;
    std::string version;
    std::string root_prefix; // stripped top-level directory, "" if none
    std::vector<FileEntry> entries; // sorted ascending by path, unique paths
};

/// Enumerates the regular files of a source-distribution archive
/// (.tar.gz/.tgz/.zip) and computes each member's Git blob SHA-1.
/// A single shared top-level directory is stripped into root_prefix.
/// Member paths containing ".." or an absolute prefix abort the read.
SdistInventory open_sdist(const std::filesystem::path& path);

/// "<40-hex> <size> <path>" lines, one per entry.
std::string dump_inventory(const SdistInventory& inventory);

} // namespace radar
