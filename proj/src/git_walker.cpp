#include "radar/git/walker.hpp"

#include "radar/errors.hpp"
#include "radar/util.hpp"

#include <algorithm>
#include <tuple>

namespace fs = std::filesystem;

namespace radar::git {

namespace {

// Normalizes a .gitmodules path value: forward slashes, no leading ./ or
// trailing /.
std::string normalize_module_path(std::string path) {
    std::replace(path.begin(), path.end(), '\\', '/');
    while (path.starts_with("./")) path.erase(0, 2);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return path;
}

std::string strip_quotes(std::string value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        return value.substr(1, value.size() - 2);
    return value;
}

} // namespace

SubmoduleMap parse_gitmodules(std::string_view content) {
    SubmoduleMap out;
    bool in_submodule = false;
    std::string section, path, url;

    auto flush = [&] {
        if (!in_submodule) return;
        if (!path.empty() && !url.empty()) {
            out.entries[normalize_module_path(path)] = url;
        } else {
            out.warnings.push_back("submodule section '" + section + "' missing path or url");
        }
        path.clear();
        url.clear();
    };

    for (const std::string& raw : split(std::string(content), '\n')) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;

        if (line.front() == '[') {
            flush();
            in_submodule = false;
            if (line.back() != ']') {
                out.warnings.push_back("malformed section header: " + line);
                continue;
            }
            std::string header = trim(line.substr(1, line.size() - 2));
            bool is_submodule = to_lower(header.substr(0, 9)) == "submodule" &&
                                (header.size() == 9 || header[9] == ' ' || header[9] == '\t' ||
                                 header[9] == '"');
            if (is_submodule) {
                in_submodule = true;
                section = strip_quotes(trim(header.substr(9)));
            }
            continue;
        }

        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            out.warnings.push_back("malformed line: " + line);
            continue;
        }
        if (!in_submodule) continue;
        std::string key = to_lower(trim(line.substr(0, eq)));
        std::string value = strip_quotes(trim(line.substr(eq + 1)));
        if (key == "path") path = value;
        if (key == "url") url = value;
    }
    flush();
    return out;
}

std::string resolve_submodule_url(const std::string& superproject, const std::string& url) {
    if (!url.starts_with("./") && !url.starts_with("../")) return url;
    std::string base = superproject;
    while (!base.empty() && base.back() == '/') base.pop_back();
    std::string rest = url;
    while (true) {
        if (rest.starts_with("./")) {
            rest.erase(0, 2);
        } else if (rest.starts_with("../")) {
            std::size_t slash = base.rfind('/');
            base = slash == std::string::npos ? std::string() : base.substr(0, slash);
            rest.erase(0, 3);
        } else {
            break;
        }
    }
    if (base.empty()) return rest;
    return base + "/" + rest;
}

CacheDirFetcher::CacheDirFetcher(fs::path root) : root_(std::move(root)) {}

std::optional<fs::path> CacheDirFetcher::fetch(const std::string& url) {
    fs::path direct(url);
    if (fs::exists(direct) && ObjectStore::looks_like_repository(direct)) return direct;
    if (root_.empty()) return std::nullopt;
    fs::path cached = root_ / repo_cache_key(url);
    if (fs::exists(cached) && ObjectStore::looks_like_repository(cached)) return cached;
    return std::nullopt;
}

std::vector<ObjectId> list_all_commits(const ObjectStore& store) {
    std::vector<ObjectId> commits;
    for (const auto& [id, type] : store.enumerate_objects())
        if (type == ObjectType::commit) commits.push_back(id);
    return commits;
}

namespace {

// One traverse() call. Holds the memo sets and the accumulating output so
// identical subtrees are walked once no matter how many commits share them.
class Walker {
public:
    Walker(RepoFetcher* fetcher, const WalkLimits& limits) : fetcher_(fetcher), limits_(limits) {}

    RepoFileSet run(const std::string& repo) {
        RepoFileSet out;
        out.repo = repo;

        const Store& root = open_repo(locate(repo, /*top_level=*/true), repo);
        auto commits = list_all_commits(root.store);
        out.commit_count = commits.size();
        for (const ObjectId& id : commits) walk_commit(root, id, 0);

        out.named = std::move(named_);
        for (const auto& [name, digest] : out.named) out.hashes.insert(digest);
        out.submodule_repos.assign(submodules_.begin(), submodules_.end());
        out.warnings.assign(warnings_.begin(), warnings_.end());
        return out;
    }

private:
    struct Store {
        fs::path key;     // canonical local path, identifies the store in memos
        std::string url;  // how this repository was referred to
        ObjectStore store;
    };

    using PathMap = std::map<std::string, std::string>;

    fs::path locate(const std::string& repo, bool top_level) {
        if (fs::exists(repo) && ObjectStore::looks_like_repository(repo)) return repo;
        if (fetcher_)
            if (auto fetched = fetcher_->fetch(repo)) return *fetched;
        if (top_level) throw Error(ErrorKind::not_a_repository, repo);
        return {};
    }

    const Store& open_repo(const fs::path& local, const std::string& url) {
        fs::path key = fs::weakly_canonical(local);
        auto it = stores_.find(key.string());
        if (it == stores_.end()) {
            it = stores_
                     .emplace(key.string(), Store{key, url, ObjectStore(local)})
                     .first;
        }
        return it->second;
    }

    void walk_commit(const Store& repo, const ObjectId& id, int depth) {
        try {
            CommitInfo info = parse_commit(repo.store.read(id).data);
            walk_tree(repo, info.tree, "", {}, "", depth);
        } catch (const Error& e) {
            warn("commit " + id.hex() + " unreadable: " + e.what());
        }
    }

    void walk_tree(const Store& repo, const ObjectId& tree_id, const std::string& prefix,
                   PathMap modules, std::string module_fingerprint, int depth) {
        // The fingerprint names the .gitmodules blobs merged so far, so two
        // visits with the same key are guaranteed to resolve gitlinks
        // identically and the second can be skipped.
        if (!visited_.insert({repo.key.string(), tree_id, prefix, module_fingerprint}).second)
            return;

        std::vector<TreeEntry> entries;
        try {
            entries = parse_tree(repo.store.read(tree_id).data);
        } catch (const Error& e) {
            warn("tree " + tree_id.hex() + " unreadable: " + e.what());
            return;
        }

        // Pass 1: merge this tree's .gitmodules before touching any gitlink,
        // so entry order within the tree cannot matter.
        for (const TreeEntry& entry : entries) {
            if (entry.kind() != TreeEntryKind::blob || entry.name != ".gitmodules") continue;
            try {
                auto blob = repo.store.read(entry.id).data;
                SubmoduleMap parsed =
                    parse_gitmodules(std::string_view(reinterpret_cast<const char*>(blob.data()),
                                                      blob.size()));
                for (const auto& [path, url] : parsed.entries)
                    modules[join(prefix, path)] = url;
                for (const std::string& w : parsed.warnings)
                    warn(join(prefix, ".gitmodules") + ": " + w);
                module_fingerprint += prefix + ":" + entry.id.hex() + ";";
            } catch (const Error& e) {
                warn(join(prefix, ".gitmodules") + " unreadable: " + e.what());
            }
        }

        // Pass 2: record blobs, recurse into subtrees, expand gitlinks.
        for (const TreeEntry& entry : entries) {
            std::string full = join(prefix, entry.name);
            switch (entry.kind()) {
            case TreeEntryKind::blob:
                named_.insert({entry.name, entry.id.hex()});
                break;
            case TreeEntryKind::tree:
                walk_tree(repo, entry.id, full, modules, module_fingerprint, depth);
                break;
            case TreeEntryKind::gitlink:
                expand_gitlink(repo, full, entry.id, modules, depth);
                break;
            }
        }
    }

    void expand_gitlink(const Store& repo, const std::string& path, const ObjectId& commit_id,
                        const PathMap& modules, int depth) {
        auto it = modules.find(path);
        if (it == modules.end()) {
            warn("gitlink at '" + path + "' has no .gitmodules entry; skipped");
            return;
        }
        std::string url = resolve_submodule_url(repo.url, it->second);
        submodules_.insert(url);

        if (depth + 1 > limits_.max_submodule_depth) {
            warn("submodule depth cap (" + std::to_string(limits_.max_submodule_depth) +
                 ") exceeded at '" + path + "'; skipped");
            return;
        }
        fs::path local = locate(url, /*top_level=*/false);
        if (local.empty()) {
            warn("submodule '" + url + "' unavailable; skipped");
            return;
        }
        const Store* sub = nullptr;
        try {
            sub = &open_repo(local, url);
        } catch (const Error& e) {
            warn("submodule '" + url + "' unreadable: " + e.what());
            return;
        }
        // Each pinned (repository, commit) contributes once.
        if (!expanded_.insert({sub->key.string(), commit_id}).second) return;
        if (!sub->store.contains(commit_id)) {
            warn("submodule commit " + commit_id.hex() + " not found in '" + url + "'; skipped");
            return;
        }
        walk_commit(*sub, commit_id, depth + 1);
    }

    static std::string join(const std::string& prefix, const std::string& name) {
        return prefix.empty() ? name : prefix + "/" + name;
    }

    void warn(std::string message) { warnings_.insert(std::move(message)); }

    RepoFetcher* fetcher_;
    WalkLimits limits_;
    std::map<std::string, Store> stores_;
    std::set<std::tuple<std::string, ObjectId, std::string, std::string>> visited_;
    std::set<std::pair<std::string, ObjectId>> expanded_;
    std::set<std::pair<std::string, std::string>> named_;
    std::set<std::string> submodules_;
    std::set<std::string> warnings_;
};

} // namespace

RepoFileSet traverse(const std::string& repo, RepoFetcher* fetcher, const WalkLimits& limits) {
    return Walker(fetcher, limits).run(repo);
}

} // namespace radar::git
