#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace radar {

std::string sha1_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::span<const std::uint8_t> data);

/// SHA-1 of the Git blob object framing: "blob <size>\0" + content.
/// Matches the object id `git hash-object` assigns to the same bytes.
std::string git_blob_sha1(std::span<const std::uint8_t> content);
std::string git_blob_sha1(std::string_view content);

} // namespace radar
