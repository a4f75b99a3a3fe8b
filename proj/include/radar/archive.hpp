#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace radar {

struct ArchiveMember {
    std::string path;
    std::vector<std::uint8_t> content;
};

/// Regular-file members of a gzip-compressed tar archive (ustar, GNU long
/// names, and pax extended headers). Directories, symlinks, and hard links
/// are skipped.
std::vector<ArchiveMember> read_tar_gz(const std::filesystem::path& path);

/// Regular-file members of a zip archive (stored and deflate entries).
std::vector<ArchiveMember> read_zip(const std::filesystem::path& path);

/// Inflates a raw zlib stream (gzip wrapper auto-detected).
std::vector<std::uint8_t> zlib_inflate(std::span<const std::uint8_t> data,
                                       bool raw_deflate = false);

} // namespace radar
