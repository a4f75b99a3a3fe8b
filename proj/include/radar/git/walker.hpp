#pragma once

#include "radar/git/object_store.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace radar::git {

struct SubmoduleMap {
    std::map<std::string, std::string> entries; // repo-root-relative path -> url
    std::vector<std::string> warnings;
};

/// Parses the `[submodule "…"]` sections of a .gitmodules file. Sections
/// missing `path` or `url` are skipped and noted in warnings; anything
/// unparseable degrades to warnings rather than an error.
SubmoduleMap parse_gitmodules(std::string_view content);

/// Git resolves submodule URLs starting with ./ or ../ against the
/// superproject's own URL; absolute URLs pass through untouched.
std::string resolve_submodule_url(const std::string& superproject, const std::string& url);

/// Where submodule repositories come from: maps a URL to a local clone, or
/// nullopt when one cannot be produced.
class RepoFetcher {
public:
    virtual ~RepoFetcher() = default;
    virtual std::optional<std::filesystem::path> fetch(const std::string& url) = 0;
};

/// Offline fetcher. Local paths that already are repositories resolve to
/// themselves; anything else is looked up as <root>/<repo_cache_key(url)>.
/// An empty root resolves local paths only.
class CacheDirFetcher : public RepoFetcher {
public:
    explicit CacheDirFetcher(std::filesystem::path root = {});
    std::optional<std::filesystem::path> fetch(const std::string& url) override;

private:
    std::filesystem::path root_;
};

struct WalkLimits {
    int max_submodule_depth = 10;
};

/// Union of every (file name, blob id) pair reachable from any commit in a
/// repository's history, submodules included.
struct RepoFileSet {
    std::string repo;
    std::set<std::string> hashes;                         // 40-hex blob ids
    std::set<std::pair<std::string, std::string>> named;  // (basename, blob id)
    std::size_t commit_count = 0;
    std::vector<std::string> submodule_repos; // resolved URLs, sorted unique
    std::vector<std::string> warnings;        // skipped branches, sorted unique
};

/// Every commit object in the store — reachable or dangling — sorted by id.
std::vector<ObjectId> list_all_commits(const ObjectStore& store);

/// Walks each commit's root tree, resolving gitlink entries through that
/// commit's own .gitmodules (historical versions included), and unions the
/// file/blob pairs found anywhere in history. Unresolvable submodules are
/// skipped with a warning; `hashes` is always the digest projection of
/// `named`.
RepoFileSet traverse(const std::string& repo, RepoFetcher* fetcher = nullptr,
                     const WalkLimits& limits = {});

} // namespace radar::git
