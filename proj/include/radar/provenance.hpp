#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radar {

/// One corpus member: where the repository lives and what it is called.
/// `repo_id` is the canonical identity used throughout the index (for GitHub
/// projects, "github.com/<owner>/<name>"); `path` is the local checkout or
/// bare repository whose objects get scanned.
struct ManifestEntry {
    std::string repo_id;
    std::string path;
    std::optional<std::string> fork_of; // repo_id of the upstream project
};

struct CorpusManifest {
    std::vector<ManifestEntry> repos;
};

CorpusManifest manifest_from_json(std::string_view text);
std::string manifest_to_json(const CorpusManifest& manifest);
CorpusManifest load_manifest(const std::filesystem::path& file);

struct IndexStats {
    std::size_t repos_indexed = 0;
    std::size_t commits = 0; // distinct commit ids across the corpus
    std::size_t blobs = 0;   // distinct blob ids across the corpus
    std::vector<std::string> skipped; // manifest entries that were not repositories
};

/// Scans every corpus repository and writes the index files (blob2commit.tsv,
/// commit2repos.tsv, forks.tsv, META) into `out_dir`. The same corpus always
/// produces byte-identical files, wherever the checkouts happen to live.
IndexStats build_index(const CorpusManifest& manifest, const std::filesystem::path& out_dir);

/// The loaded, immutable provenance database: which commit first introduced a
/// blob, which repositories carry a commit, and where forks point.
class ProvenanceIndex {
public:
    static ProvenanceIndex load(const std::filesystem::path& dir);

    /// The commit that first introduced the blob — earliest committer
    /// timestamp, ties broken by smallest commit id — or absent if no corpus
    /// repository ever shipped those bytes.
    std::optional<std::string> blob_to_first_commit(const std::string& blob_sha1) const;

    /// Every corpus repository whose object database contains the commit,
    /// sorted; empty for unknown commits.
    std::vector<std::string> commit_to_repos(const std::string& commit_id) const;

    /// Transitive fork root; a repository the corpus never heard of is its
    /// own root.
    std::string defork(const std::string& repo_id) const;

    std::size_t blob_count() const { return blob2commit_.size(); }
    std::size_t commit_count() const { return commit2repos_.size(); }

private:
    std::map<std::string, std::string> blob2commit_;
    std::map<std::string, std::vector<std::string>> commit2repos_;
    std::map<std::string, std::string> fork_root_;
};

} // namespace radar
