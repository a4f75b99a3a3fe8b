#include "radar/provenance.hpp"

#include "radar/errors.hpp"
#include "radar/git/object_store.hpp"
#include "radar/hashing.hpp"
#include "radar/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <utility>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace radar {

namespace {

constexpr int format_version = 1;
constexpr const char* format_magic = "radar-provenance";

bool is_hex40(std::string_view s) {
    if (s.size() != 40) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

void check_repo_id(const std::string& id) {
    if (id.empty())
        throw Error(ErrorKind::malformed_document, "manifest entry with empty repo_id");
    if (id.find_first_of("\t\n,") != std::string::npos)
        throw Error(ErrorKind::malformed_document,
                    "repo_id contains a separator character: " + id);
}

/// Everything the index needs from one repository: all commit objects with
/// their committer timestamps, and for every blob the earliest commit in this
/// repository whose root tree carries it.
struct RepoScan {
    std::vector<std::pair<git::ObjectId, std::int64_t>> commits;
    std::unordered_map<git::ObjectId, std::pair<std::int64_t, git::ObjectId>> blob_first;
};

/// Flattens a tree to the blob ids beneath it, memoized per store since
/// commits share most of their trees. Gitlinks are not followed: a
/// submodule's files belong to its own corpus entry, if there is one.
class TreeFlattener {
public:
    explicit TreeFlattener(const git::ObjectStore& store) : store_(store) {}

    const std::vector<git::ObjectId>& flatten(const git::ObjectId& tree) {
        if (auto it = memo_.find(tree); it != memo_.end()) return it->second;
        std::vector<git::ObjectId> blobs;
        for (const git::TreeEntry& entry : git::parse_tree(store_.read(tree).data)) {
            switch (entry.kind()) {
            case git::TreeEntryKind::blob:
                blobs.push_back(entry.id);
                break;
            case git::TreeEntryKind::tree: {
                const auto& child = flatten(entry.id);
                blobs.insert(blobs.end(), child.begin(), child.end());
                break;
            }
            case git::TreeEntryKind::gitlink:
                break;
            }
        }
        return memo_.emplace(tree, std::move(blobs)).first->second;
    }

private:
    const git::ObjectStore& store_;
    std::unordered_map<git::ObjectId, std::vector<git::ObjectId>> memo_;
};

RepoScan scan_repo(const fs::path& path) {
    git::ObjectStore store(path);

    struct CommitRecord {
        git::ObjectId id;
        std::int64_t time;
        git::ObjectId tree;
    };
    std::vector<CommitRecord> commits;
    for (const auto& [id, type] : store.enumerate_objects()) {
        if (type != git::ObjectType::commit) continue;
        git::CommitInfo info = git::parse_commit(store.read(id).data);
        commits.push_back({id, info.commit_time, info.tree});
    }

    // Earliest (time, id) first, so the first writer into blob_first is the
    // introducing commit for this repository.
    std::sort(commits.begin(), commits.end(), [](const CommitRecord& a, const CommitRecord& b) {
        return a.time != b.time ? a.time < b.time : a.id < b.id;
    });

    RepoScan scan;
    TreeFlattener trees(store);
    for (const CommitRecord& commit : commits) {
        scan.commits.emplace_back(commit.id, commit.time);
        for (const git::ObjectId& blob : trees.flatten(commit.tree))
            scan.blob_first.try_emplace(blob, commit.time, commit.id);
    }
    return scan;
}

/// Collapses fork_of chains to their roots, so the stored map is already a
/// fixpoint. Chains are short; cycles are a manifest bug.
std::map<std::string, std::string> resolve_fork_roots(const CorpusManifest& manifest) {
    std::map<std::string, std::optional<std::string>> parent;
    for (const ManifestEntry& entry : manifest.repos) parent[entry.repo_id] = entry.fork_of;

    std::map<std::string, std::string> roots;
    for (const ManifestEntry& entry : manifest.repos) {
        std::set<std::string> seen;
        std::string at = entry.repo_id;
        while (true) {
            if (!seen.insert(at).second)
                throw Error(ErrorKind::malformed_document,
                            "fork_of cycle involving " + entry.repo_id);
            const auto& up = parent.at(at);
            if (!up) break;
            at = *up;
        }
        roots[entry.repo_id] = at;
    }
    return roots;
}

std::vector<std::string> nonempty_lines(const std::string& text) {
    std::vector<std::string> lines = split(text, '\n');
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    for (const std::string& line : lines)
        if (line.empty())
            throw Error(ErrorKind::malformed_document, "blank line inside index file");
    return lines;
}

std::pair<std::string, std::string> tsv_record(const std::string& line) {
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
        throw Error(ErrorKind::malformed_document, "index line is not a two-column record");
    return {line.substr(0, tab), line.substr(tab + 1)};
}

std::size_t meta_count(const std::string& value, const char* what) {
    try {
        std::size_t pos = 0;
        unsigned long long n = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(what);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw Error(ErrorKind::malformed_document, std::string("bad META count for ") + what);
    }
}

} // namespace

CorpusManifest manifest_from_json(std::string_view text) {
    ordered_json doc = ordered_json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("repos") ||
        !doc["repos"].is_array())
        throw Error(ErrorKind::malformed_document, "manifest is not {\"repos\": [...]}");

    CorpusManifest manifest;
    std::set<std::string> ids;
    for (const auto& node : doc["repos"]) {
        if (!node.is_object() || !node.contains("repo_id") || !node["repo_id"].is_string() ||
            !node.contains("path") || !node["path"].is_string())
            throw Error(ErrorKind::malformed_document,
                        "manifest entry needs string repo_id and path");
        ManifestEntry entry;
        entry.repo_id = node["repo_id"].get<std::string>();
        entry.path = node["path"].get<std::string>();
        if (auto it = node.find("fork_of"); it != node.end() && !it->is_null()) {
            if (!it->is_string())
                throw Error(ErrorKind::malformed_document, "fork_of must be a repo_id string");
            entry.fork_of = it->get<std::string>();
        }
        check_repo_id(entry.repo_id);
        if (!ids.insert(entry.repo_id).second)
            throw Error(ErrorKind::malformed_document, "duplicate repo_id: " + entry.repo_id);
        manifest.repos.push_back(std::move(entry));
    }
    for (const ManifestEntry& entry : manifest.repos)
        if (entry.fork_of && !ids.contains(*entry.fork_of))
            throw Error(ErrorKind::malformed_document,
                        entry.repo_id + " is a fork of unknown repo " + *entry.fork_of);
    return manifest;
}

std::string manifest_to_json(const CorpusManifest& manifest) {
    ordered_json repos = ordered_json::array();
    for (const ManifestEntry& entry : manifest.repos) {
        ordered_json node;
        node["repo_id"] = entry.repo_id;
        node["path"] = entry.path;
        if (entry.fork_of) node["fork_of"] = *entry.fork_of;
        repos.push_back(std::move(node));
    }
    ordered_json doc;
    doc["repos"] = std::move(repos);
    return doc.dump(2) + "\n";
}

CorpusManifest load_manifest(const fs::path& file) {
    return manifest_from_json(read_file_text(file));
}

IndexStats build_index(const CorpusManifest& manifest, const fs::path& out_dir) {
    if (manifest.repos.empty())
        throw Error(ErrorKind::empty_corpus, "manifest lists no repositories");
    for (const ManifestEntry& entry : manifest.repos) check_repo_id(entry.repo_id);
    std::map<std::string, std::string> fork_roots = resolve_fork_roots(manifest);

    const std::size_t n = manifest.repos.size();
    std::vector<std::optional<RepoScan>> scans(n);
    std::vector<std::exception_ptr> failures(n);
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= n) return;
            try {
                scans[i] = scan_repo(manifest.repos[i].path);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::not_a_repository) failures[i] = std::current_exception();
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t threads = std::min<std::size_t>(n, hw ? hw : 2);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t + 1 < threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& failure : failures)
        if (failure) std::rethrow_exception(failure);

    // Deterministic merge: ordered maps, cross-repo first-commit reduction by
    // (committer time, commit id).
    IndexStats stats;
    std::map<git::ObjectId, std::set<std::string>> commit_repos;
    std::map<git::ObjectId, std::pair<std::int64_t, git::ObjectId>> first;
    for (std::size_t i = 0; i < n; ++i) {
        if (!scans[i]) {
            stats.skipped.push_back(manifest.repos[i].repo_id);
            continue;
        }
        ++stats.repos_indexed;
        for (const auto& [commit, time] : scans[i]->commits)
            commit_repos[commit].insert(manifest.repos[i].repo_id);
        for (const auto& [blob, candidate] : scans[i]->blob_first) {
            auto [it, inserted] = first.try_emplace(blob, candidate);
            if (!inserted && candidate < it->second) it->second = candidate;
        }
    }
    if (stats.repos_indexed == 0)
        throw Error(ErrorKind::empty_corpus, "no manifest entry could be opened as a repository");
    stats.commits = commit_repos.size();
    stats.blobs = first.size();

    std::ostringstream blob_file;
    for (const auto& [blob, candidate] : first)
        blob_file << blob.hex() << '\t' << candidate.second.hex() << '\n';
    std::ostringstream commit_file;
    for (const auto& [commit, repos] : commit_repos) {
        commit_file << commit.hex() << '\t';
        bool leading = true;
        for (const std::string& repo : repos) {
            if (!leading) commit_file << ',';
            commit_file << repo;
            leading = false;
        }
        commit_file << '\n';
    }
    std::ostringstream forks_file;
    for (const auto& [repo, root] : fork_roots) forks_file << repo << '\t' << root << '\n';

    std::string payload = blob_file.str() + commit_file.str() + forks_file.str();
    std::ostringstream meta;
    meta << format_magic << ' ' << format_version << '\n'
         << "corpus "
         << sha1_hex({reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()})
         << '\n'
         << "repos " << stats.repos_indexed << '\n'
         << "commits " << stats.commits << '\n'
         << "blobs " << stats.blobs << '\n';

    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "blob2commit.tsv", blob_file.str());
    write_file_atomic(out_dir / "commit2repos.tsv", commit_file.str());
    write_file_atomic(out_dir / "forks.tsv", forks_file.str());
    write_file_atomic(out_dir / "META", meta.str());
    return stats;
}

ProvenanceIndex ProvenanceIndex::load(const fs::path& dir) {
    std::string blob_text = read_file_text(dir / "blob2commit.tsv");
    std::string commit_text = read_file_text(dir / "commit2repos.tsv");
    std::string forks_text = read_file_text(dir / "forks.tsv");
    std::string meta_text = read_file_text(dir / "META");

    std::map<std::string, std::string> meta;
    for (const std::string& line : nonempty_lines(meta_text)) {
        std::size_t space = line.find(' ');
        if (space == std::string::npos)
            throw Error(ErrorKind::malformed_document, "bad META line: " + line);
        meta[line.substr(0, space)] = line.substr(space + 1);
    }
    if (!meta.contains(format_magic))
        throw Error(ErrorKind::malformed_document, "not a provenance index");
    if (meta.at(format_magic) != std::to_string(format_version))
        throw Error(ErrorKind::unsupported_format,
                    "provenance index version " + meta.at(format_magic));
    std::string payload = blob_text + commit_text + forks_text;
    std::string digest =
        sha1_hex({reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()});
    if (!meta.contains("corpus") || meta.at("corpus") != digest)
        throw Error(ErrorKind::malformed_document, "index files do not match the recorded digest");

    ProvenanceIndex index;
    std::string previous;
    for (const std::string& line : nonempty_lines(blob_text)) {
        auto [blob, commit] = tsv_record(line);
        if (!is_hex40(blob) || !is_hex40(commit))
            throw Error(ErrorKind::malformed_document, "bad blob2commit record: " + line);
        if (!previous.empty() && !(previous < blob))
            throw Error(ErrorKind::malformed_document, "blob2commit keys out of order");
        previous = blob;
        index.blob2commit_.emplace(blob, commit);
    }
    previous.clear();
    for (const std::string& line : nonempty_lines(commit_text)) {
        auto [commit, joined] = tsv_record(line);
        if (!is_hex40(commit))
            throw Error(ErrorKind::malformed_document, "bad commit2repos record: " + line);
        if (!previous.empty() && !(previous < commit))
            throw Error(ErrorKind::malformed_document, "commit2repos keys out of order");
        previous = commit;
        std::vector<std::string> repos = split(joined, ',');
        for (const std::string& repo : repos)
            if (repo.empty())
                throw Error(ErrorKind::malformed_document, "empty repo_id in: " + line);
        if (!std::is_sorted(repos.begin(), repos.end()))
            throw Error(ErrorKind::malformed_document, "repo list out of order in: " + line);
        index.commit2repos_.emplace(commit, std::move(repos));
    }
    previous.clear();
    for (const std::string& line : nonempty_lines(forks_text)) {
        auto [repo, root] = tsv_record(line);
        if (repo.empty() || root.empty())
            throw Error(ErrorKind::malformed_document, "bad forks record: " + line);
        if (!previous.empty() && !(previous < repo))
            throw Error(ErrorKind::malformed_document, "forks keys out of order");
        previous = repo;
        index.fork_root_.emplace(repo, root);
    }

    if (meta_count(meta.count("commits") ? meta.at("commits") : "", "commits") !=
        index.commit2repos_.size())
        throw Error(ErrorKind::malformed_document, "META commit count mismatch");
    if (meta_count(meta.count("blobs") ? meta.at("blobs") : "", "blobs") !=
        index.blob2commit_.size())
        throw Error(ErrorKind::malformed_document, "META blob count mismatch");
    for (const auto& [blob, commit] : index.blob2commit_)
        if (!index.commit2repos_.contains(commit))
            throw Error(ErrorKind::malformed_document,
                        "blob " + blob + " points at unattributed commit " + commit);
    return index;
}

std::optional<std::string> ProvenanceIndex::blob_to_first_commit(const std::string& blob_sha1) const {
    auto it = blob2commit_.find(blob_sha1);
    if (it == blob2commit_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> ProvenanceIndex::commit_to_repos(const std::string& commit_id) const {
    auto it = commit2repos_.find(commit_id);
    if (it == commit2repos_.end()) return {};
    return it->second;
}

std::string ProvenanceIndex::defork(const std::string& repo_id) const {
    auto it = fork_root_.find(repo_id);
    return it == fork_root_.end() ? repo_id : it->second;
}

} // namespace radar
