#pragma once

#include "radar/git/objects.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace radar::git {

/// Read-only access to a repository's object database: loose objects plus
/// version-2 pack files, with alternates followed one level deep. Opens a
/// worktree, a `.git` gitfile indirection, or a bare repository.
class ObjectStore {
public:
    explicit ObjectStore(const std::filesystem::path& repo_path);
    ~ObjectStore();
    ObjectStore(ObjectStore&&) noexcept;
    ObjectStore& operator=(ObjectStore&&) noexcept;

    static bool looks_like_repository(const std::filesystem::path& repo_path);

    const std::filesystem::path& git_dir() const;
    const std::filesystem::path& repo_path() const;

    /// Every object in the database (packed and loose, reachable or not),
    /// deduplicated, sorted by id.
    std::vector<std::pair<ObjectId, ObjectType>> enumerate_objects() const;

    GitObject read(const ObjectId& id) const;           // throws MissingObject
    std::optional<GitObject> try_read(const ObjectId& id) const;
    bool contains(const ObjectId& id) const;

    /// Tag names (refs/tags/<name>), loose and packed refs, sorted unique.
    std::vector<std::string> tag_names() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace radar::git
