#include "support/support.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace fs = std::filesystem;

namespace testsupport {

namespace {

std::string shell_quote(const std::string& s) {
    std::string quoted = "'";
    for (char c : s) {
        if (c == '\'')
            quoted += "'\\''";
        else
            quoted += c;
    }
    quoted += "'";
    return quoted;
}

std::string base64(const std::string& data) {
    static const char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= data.size()) {
        std::uint32_t n = (static_cast<std::uint8_t>(data[i]) << 16) |
                          (static_cast<std::uint8_t>(data[i + 1]) << 8) |
                          static_cast<std::uint8_t>(data[i + 2]);
        out += alphabet[(n >> 18) & 63];
        out += alphabet[(n >> 12) & 63];
        out += alphabet[(n >> 6) & 63];
        out += alphabet[n & 63];
        i += 3;
    }
    if (i + 1 == data.size()) {
        std::uint32_t n = static_cast<std::uint8_t>(data[i]) << 16;
        out += alphabet[(n >> 18) & 63];
        out += alphabet[(n >> 12) & 63];
        out += "==";
    } else if (i + 2 == data.size()) {
        std::uint32_t n = (static_cast<std::uint8_t>(data[i]) << 16) |
                          (static_cast<std::uint8_t>(data[i + 1]) << 8);
        out += alphabet[(n >> 18) & 63];
        out += alphabet[(n >> 12) & 63];
        out += alphabet[(n >> 6) & 63];
        out += '=';
    }
    return out;
}

// Builds archives from a JSON manifest so member names, order, and formats
// are exactly what the test asked for.
constexpr const char* archive_script = R"PY(
import sys, json, base64, tarfile, zipfile, io
spec = json.load(open(sys.argv[1]))
members = spec["members"]
if spec["kind"] == "tar.gz":
    fmt = {"ustar": tarfile.USTAR_FORMAT, "gnu": tarfile.GNU_FORMAT,
           "pax": tarfile.PAX_FORMAT}[spec["format"]]
    with tarfile.open(spec["out"], "w:gz", format=fmt) as tf:
        for m in members:
            data = base64.b64decode(m["data"])
            info = tarfile.TarInfo(m["path"])
            info.mtime = 1577836800
            if m["dir"]:
                info.type = tarfile.DIRTYPE
                tf.addfile(info)
            else:
                info.size = len(data)
                tf.addfile(info, io.BytesIO(data))
else:
    with zipfile.ZipFile(spec["out"], "w") as zf:
        for m in members:
            data = base64.b64decode(m["data"])
            name = m["path"] + "/" if m["dir"] and not m["path"].endswith("/") else m["path"]
            info = zipfile.ZipInfo(name, date_time=(2020, 1, 1, 0, 0, 0))
            method = zipfile.ZIP_STORED if m["stored"] or m["dir"] else zipfile.ZIP_DEFLATED
            zf.writestr(info, b"" if m["dir"] else data, compress_type=method)
)PY";

void run_archive_script(const nlohmann::json& spec) {
    static std::atomic<unsigned> counter{0};
    fs::path dir = fs::temp_directory_path();
    unsigned n = counter.fetch_add(1);
    fs::path spec_path = dir / ("archive_spec_" + std::to_string(::getpid()) + "_" + std::to_string(n) + ".json");
    fs::path script_path = dir / ("archive_make_" + std::to_string(::getpid()) + "_" + std::to_string(n) + ".py");
    std::ofstream(spec_path) << spec.dump();
    std::ofstream(script_path) << archive_script;
    run_ok("python3 " + shell_quote(script_path.string()) + " " + shell_quote(spec_path.string()));
    fs::remove(spec_path);
    fs::remove(script_path);
}

nlohmann::json members_json(const std::vector<ArchiveSpec>& members) {
    nlohmann::json out = nlohmann::json::array();
    for (const ArchiveSpec& m : members) {
        out.push_back({{"path", m.path},
                       {"data", base64(m.content)},
                       {"dir", m.is_dir},
                       {"stored", m.stored}});
    }
    return out;
}

} // namespace

TempDir::TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("radar_test_" + std::to_string(::getpid()) + "_" + std::to_string(rd()) + "_" +
             std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

CommandResult run(const std::string& command, const fs::path& cwd) {
    std::string full = command + " 2>&1";
    if (!cwd.empty()) full = "cd " + shell_quote(cwd.string()) + " && " + full;
    FILE* pipe = ::popen(full.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed: " + full);
    CommandResult result;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
        result.output.append(buf.data(), n);
    int rc = ::pclose(pipe);
    result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return result;
}

std::string run_ok(const std::string& command, const fs::path& cwd) {
    CommandResult result = run(command, cwd);
    if (result.status != 0)
        throw std::runtime_error("command failed (" + std::to_string(result.status) +
                                 "): " + command + "\n" + result.output);
    return result.output;
}

GitRepo::GitRepo(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
    run_ok("git init -q -b main", root_);
    run_ok("git config user.email fixture@example.com", root_);
    run_ok("git config user.name Fixture", root_);
    run_ok("git config commit.gpgsign false", root_);
    run_ok("git config tag.gpgsign false", root_);
}

void GitRepo::write(const std::string& rel, const std::string& content) {
    fs::path target = root_ / rel;
    fs::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary);
    out << content;
}

void GitRepo::remove(const std::string& rel) { fs::remove_all(root_ / rel); }

std::string GitRepo::commit_env() const {
    // Base clock 2020-01-01T00:00:00Z, advancing one minute per commit.
    std::string date = std::to_string(1577836800 + 60 * tick_) + " +0000";
    return "GIT_AUTHOR_DATE='" + date + "' GIT_COMMITTER_DATE='" + date + "'";
}

std::string GitRepo::commit_all(const std::string& message) {
    run_ok("git add -A", root_);
    return commit_staged(message);
}

std::string GitRepo::commit_staged(const std::string& message) {
    ++tick_;
    run_ok(commit_env() + " git commit -q --allow-empty -m " + shell_quote(message), root_);
    return rev_parse("HEAD");
}

void GitRepo::tag(const std::string& name) { run_ok("git tag " + shell_quote(name), root_); }

void GitRepo::add_gitlink(const std::string& rel, const std::string& commit_id) {
    // An empty directory keeps later `git add -A` runs from staging the
    // gitlink's removal.
    fs::create_directories(root_ / rel);
    run_ok("git update-index --add --cacheinfo 160000," + commit_id + "," + shell_quote(rel),
           root_);
}

void GitRepo::repack() { run_ok("git repack -adq", root_); }

std::string GitRepo::rev_parse(const std::string& ref) {
    std::string out = run_ok("git rev-parse " + shell_quote(ref), root_);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
}

std::string GitRepo::git(const std::string& args) {
    return run_ok(commit_env() + " git " + args, root_);
}

void write_tar_gz(const fs::path& out, const std::vector<ArchiveSpec>& members, TarFormat format) {
    const char* name = format == TarFormat::ustar ? "ustar" : format == TarFormat::gnu ? "gnu" : "pax";
    run_archive_script({{"kind", "tar.gz"},
                        {"out", out.string()},
                        {"format", name},
                        {"members", members_json(members)}});
}

void write_zip(const fs::path& out, const std::vector<ArchiveSpec>& members) {
    run_archive_script(
        {{"kind", "zip"}, {"out", out.string()}, {"members", members_json(members)}});
}

} // namespace testsupport
