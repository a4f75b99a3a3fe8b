#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace radar::git {

struct ObjectId {
    std::array<std::uint8_t, 20> bytes{};

    static ObjectId from_hex(std::string_view hex);
    static ObjectId from_raw(std::span<const std::uint8_t> raw);
    std::string hex() const;

    auto operator<=>(const ObjectId&) const = default;
};

enum class ObjectType { blob, tree, commit, tag };

std::string_view to_string(ObjectType type);
ObjectType object_type_from_string(std::string_view name);

struct GitObject {
    ObjectType type;
    std::vector<std::uint8_t> data;
};

enum class TreeEntryKind { blob, tree, gitlink };

struct TreeEntry {
    std::uint32_t mode = 0;
    std::string name;
    ObjectId id;

    TreeEntryKind kind() const {
        if (mode == 0160000) return TreeEntryKind::gitlink;
        if ((mode & 0170000) == 0040000) return TreeEntryKind::tree;
        return TreeEntryKind::blob;
    }
};

std::vector<TreeEntry> parse_tree(std::span<const std::uint8_t> data);

struct CommitInfo {
    ObjectId tree;
    std::vector<ObjectId> parents;
    std::int64_t commit_time = 0; // committer timestamp, epoch seconds
};

CommitInfo parse_commit(std::span<const std::uint8_t> data);

} // namespace radar::git

template <>
struct std::hash<radar::git::ObjectId> {
    std::size_t operator()(const radar::git::ObjectId& id) const noexcept {
        std::size_t value = 0;
        std::memcpy(&value, id.bytes.data(), sizeof(value));
        return value;
    }
};
