#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace testsupport {

/// Unique directory under the system temp root, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct CommandResult {
    int status = -1;
    std::string output; // stdout and stderr interleaved
};

/// Runs `command` through the shell with `cwd` as working directory.
CommandResult run(const std::string& command, const std::filesystem::path& cwd = {});

/// Like run(), but throws on a nonzero exit status. Returns the output.
std::string run_ok(const std::string& command, const std::filesystem::path& cwd = {});

/// Deterministic git repository driver for fixtures: a fixed author identity
/// and a monotonically ticking commit clock make every object id stable
/// across runs, so tests can freeze ids without re-deriving them.
class GitRepo {
public:
    explicit GitRepo(std::filesystem::path root);

    const std::filesystem::path& path() const { return root_; }

    void write(const std::string& rel, const std::string& content);
    void remove(const std::string& rel);

    /// Stages everything and commits; returns the new commit id.
    std::string commit_all(const std::string& message);
    /// Commits whatever is already staged (used after update-index).
    std::string commit_staged(const std::string& message);

    void tag(const std::string& name);
    /// Records a submodule pin (gitlink index entry) without cloning anything.
    void add_gitlink(const std::string& rel, const std::string& commit_id);
    /// Packs all reachable objects and drops loose copies.
    void repack();

    std::string rev_parse(const std::string& ref);
    /// Escape hatch for anything else; returns the command output.
    std::string git(const std::string& args);

private:
    std::string commit_env() const;

    std::filesystem::path root_;
    int tick_ = 0;
};

struct ArchiveSpec {
    std::string path;
    std::string content;
    bool is_dir = false;
    bool stored = false; // zip only: disable compression for this member
};

enum class TarFormat { ustar, gnu, pax };

/// Writes a .tar.gz via python's tarfile module (kept independent of the
/// archive reader under test).
void write_tar_gz(const std::filesystem::path& out, const std::vector<ArchiveSpec>& members,
                  TarFormat format = TarFormat::ustar);

/// Writes a .zip via python's zipfile module.
void write_zip(const std::filesystem::path& out, const std::vector<ArchiveSpec>& members);

} // namespace testsupport
