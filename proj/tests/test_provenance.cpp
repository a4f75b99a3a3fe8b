#include "doctest.h"

#include "radar/errors.hpp"
#include "radar/hashing.hpp"
#include "radar/provenance.hpp"
#include "radar/util.hpp"

#include "support/support.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

using namespace radar;
using testsupport::GitRepo;
using testsupport::TempDir;
using testsupport::run_ok;

namespace fs = std::filesystem;

namespace {

ManifestEntry entry(const std::string& repo_id, const fs::path& path,
                    std::optional<std::string> fork_of = std::nullopt) {
    return {repo_id, path.string(), std::move(fork_of)};
}

std::string file_bytes(const fs::path& p) { return read_file_text(p); }

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::io;
}

} // namespace

TEST_SUITE("provenance") {

TEST_CASE("one repo, one commit, one file") {
    TempDir tmp;
    GitRepo repo(tmp.path() / "solo");
    repo.write("tool.py", "print('hi')\n");
    std::string commit = repo.commit_all("initial");
    std::string blob = git_blob_sha1("print('hi')\n");

    CorpusManifest manifest{{entry("github.com/acme/solo", repo.path())}};
    fs::path out = tmp.path() / "index";
    IndexStats stats = build_index(manifest, out);
    CHECK(stats.repos_indexed == 1);
    CHECK(stats.commits == 1);
    CHECK(stats.skipped.empty());

    ProvenanceIndex index = ProvenanceIndex::load(out);
    CHECK(index.blob_to_first_commit(blob) == commit);
    CHECK(index.commit_to_repos(commit) == std::vector<std::string>{"github.com/acme/solo"});
    CHECK(!index.blob_to_first_commit(std::string(40, '0')).has_value());
    CHECK(index.commit_to_repos(std::string(40, '0')).empty());

    // The oracle: git assigns the same id to the working file.
    std::string oracle = run_ok("git hash-object tool.py", repo.path());
    CHECK(oracle.substr(0, 40) == blob);
}

TEST_CASE("the introducing commit is the earliest, not the latest") {
    TempDir tmp;
    GitRepo repo(tmp.path() / "grow");
    repo.write("core.py", "def core():\n    return 1\n");
    std::string first = repo.commit_all("add core");
    repo.write("extra.py", "def extra():\n    return 2\n");
    std::string second = repo.commit_all("add extra");

    fs::path out = tmp.path() / "index";
    build_index({{entry("github.com/acme/grow", repo.path())}}, out);
    ProvenanceIndex index = ProvenanceIndex::load(out);

    // core.py is in both commits' trees; attribution goes to the first.
    CHECK(index.blob_to_first_commit(git_blob_sha1("def core():\n    return 1\n")) == first);
    CHECK(index.blob_to_first_commit(git_blob_sha1("def extra():\n    return 2\n")) == second);
    CHECK(index.commit_count() == 2);
}

TEST_CASE("the same blob in two repositories belongs to the older commit") {
    TempDir tmp;
    const std::string shared = "SHARED = True\n";

    GitRepo early(tmp.path() / "early");
    early.write("shared.py", shared);
    std::string early_commit = early.commit_all("ship shared"); // clock tick 1

    GitRepo late(tmp.path() / "late");
    late.write("README.md", "unrelated\n");
    late.commit_all("start"); // tick 1, no shared.py yet
    late.write("shared.py", shared);
    late.commit_all("copy shared over"); // tick 2, strictly later

    fs::path out = tmp.path() / "index";
    build_index(CorpusManifest{{entry("github.com/a/early", early.path()),
                                entry("github.com/b/late", late.path())}},
                out);
    ProvenanceIndex index = ProvenanceIndex::load(out);
    CHECK(index.blob_to_first_commit(git_blob_sha1(shared)) == early_commit);

    SUBCASE("equal timestamps fall back to the smaller commit id") {
        GitRepo left(tmp.path() / "left");
        left.write("tie.py", "TIE = 1\n");
        left.write("only-left.txt", "l\n");
        std::string a = left.commit_all("x"); // tick 1

        GitRepo right(tmp.path() / "right");
        right.write("tie.py", "TIE = 1\n");
        right.write("only-right.txt", "r\n");
        std::string b = right.commit_all("x"); // tick 1, same clock

        fs::path out2 = tmp.path() / "index2";
        build_index(CorpusManifest{{entry("github.com/a/left", left.path()),
                                    entry("github.com/b/right", right.path())}},
                    out2);
        ProvenanceIndex tied = ProvenanceIndex::load(out2);
        REQUIRE(a != b);
        CHECK(tied.blob_to_first_commit(git_blob_sha1("TIE = 1\n")) == std::min(a, b));
    }
}

TEST_CASE("forks share history and collapse to their root") {
    TempDir tmp;
    GitRepo upstream(tmp.path() / "alpha");
    upstream.write("alpha.py", "VERSION = '1'\n");
    std::string shared_commit = upstream.commit_all("v1");

    run_ok("cp -r alpha fork", tmp.path());
    fs::path fork_path = tmp.path() / "fork";
    run_ok("echo 'patched = True' > patch.py && git add -A && "
           "GIT_AUTHOR_DATE='1577900000 +0000' GIT_COMMITTER_DATE='1577900000 +0000' "
           "git commit -q -m fork-work",
           fork_path);
    std::string fork_commit = run_ok("git rev-parse HEAD", fork_path).substr(0, 40);

    CorpusManifest manifest{{
        entry("github.com/root/alpha", upstream.path()),
        entry("github.com/fan/alpha", fork_path, "github.com/root/alpha"),
    }};
    fs::path out = tmp.path() / "index";
    build_index(manifest, out);
    ProvenanceIndex index = ProvenanceIndex::load(out);

    CHECK(index.commit_to_repos(shared_commit) ==
          std::vector<std::string>{"github.com/fan/alpha", "github.com/root/alpha"});
    CHECK(index.commit_to_repos(fork_commit) ==
          std::vector<std::string>{"github.com/fan/alpha"});
    CHECK(index.blob_to_first_commit(git_blob_sha1("patched = True\n")) == fork_commit);

    CHECK(index.defork("github.com/fan/alpha") == "github.com/root/alpha");
    CHECK(index.defork("github.com/root/alpha") == "github.com/root/alpha");
    CHECK(index.defork("github.com/nobody/ghost") == "github.com/nobody/ghost");
    // defork is a fixpoint after one application
    CHECK(index.defork(index.defork("github.com/fan/alpha")) ==
          index.defork("github.com/fan/alpha"));

    SUBCASE("fork chains resolve transitively") {
        CorpusManifest chain{{
            entry("github.com/root/alpha", upstream.path()),
            entry("github.com/fan/alpha", fork_path, "github.com/root/alpha"),
            entry("github.com/fan2/alpha", fork_path, "github.com/fan/alpha"),
        }};
        fs::path out2 = tmp.path() / "index2";
        build_index(chain, out2);
        ProvenanceIndex deep = ProvenanceIndex::load(out2);
        CHECK(deep.defork("github.com/fan2/alpha") == "github.com/root/alpha");
    }
}

TEST_CASE("every blob attribution is confirmed by git itself") {
    TempDir tmp;
    GitRepo a(tmp.path() / "a");
    a.write("pkg/__init__.py", "");
    a.write("pkg/one.py", "x = 1\n");
    a.commit_all("one");
    a.write("pkg/two.py", "y = 2\n");
    a.write("pkg/one.py", "x = 10\n");
    a.commit_all("two");
    GitRepo b(tmp.path() / "b");
    b.write("other.py", "z = 3\n");
    b.write("pkg/one.py", "x = 1\n"); // same bytes as a's first revision
    b.commit_all("parallel");

    CorpusManifest manifest{{entry("github.com/x/a", a.path()), entry("github.com/x/b", b.path())}};
    fs::path out = tmp.path() / "index";
    IndexStats stats = build_index(manifest, out);
    ProvenanceIndex index = ProvenanceIndex::load(out);

    std::map<std::string, fs::path> locations = {{"github.com/x/a", a.path()},
                                                 {"github.com/x/b", b.path()}};
    std::size_t checked = 0;
    for (const std::string& line : split(file_bytes(out / "blob2commit.tsv"), '\n')) {
        if (line.empty()) continue;
        std::string blob = line.substr(0, 40);
        std::string commit = line.substr(41);
        std::vector<std::string> repos = index.commit_to_repos(commit);
        REQUIRE(!repos.empty());
        std::string listing = run_ok("git ls-tree -r " + commit, locations.at(repos[0]));
        CAPTURE(blob);
        CHECK(listing.find(blob) != std::string::npos);
        ++checked;
    }
    CHECK(checked == stats.blobs);
    CHECK(checked >= 5);
}

TEST_CASE("identical corpora index to identical bytes, wherever they live") {
    TempDir tmp;
    GitRepo a(tmp.path() / "a");
    a.write("main.py", "print(1)\n");
    a.commit_all("first");
    a.write("util.py", "print(2)\n");
    a.commit_all("second");
    GitRepo b(tmp.path() / "b");
    b.write("main.py", "print(3)\n");
    b.commit_all("other");

    CorpusManifest manifest{{entry("github.com/r/a", a.path()),
                             entry("github.com/r/b", b.path(), "github.com/r/a")}};
    build_index(manifest, tmp.path() / "i1");
    build_index(manifest, tmp.path() / "i2");
    for (const char* name : {"blob2commit.tsv", "commit2repos.tsv", "forks.tsv", "META"}) {
        CAPTURE(name);
        CHECK(file_bytes(tmp.path() / "i1" / name) == file_bytes(tmp.path() / "i2" / name));
    }

    // Move the checkouts somewhere else entirely; the index must not notice.
    TempDir moved;
    run_ok("cp -r '" + (tmp.path() / "a").string() + "' '" + (tmp.path() / "b").string() +
           "' .", moved.path());
    CorpusManifest relocated{{entry("github.com/r/a", moved.path() / "a"),
                              entry("github.com/r/b", moved.path() / "b", "github.com/r/a")}};
    build_index(relocated, tmp.path() / "i3");
    for (const char* name : {"blob2commit.tsv", "commit2repos.tsv", "forks.tsv", "META"}) {
        CAPTURE(name);
        CHECK(file_bytes(tmp.path() / "i1" / name) == file_bytes(tmp.path() / "i3" / name));
    }
}

TEST_CASE("submodule pins are not this repository's files") {
    TempDir tmp;
    GitRepo inner(tmp.path() / "inner");
    inner.write("inner.py", "INNER = 1\n");
    std::string inner_commit = inner.commit_all("inner");

    GitRepo outer(tmp.path() / "outer");
    outer.write("app.py", "APP = 1\n");
    outer.add_gitlink("vendor/inner", inner_commit);
    std::string outer_commit = outer.commit_all("app with pin");

    fs::path solo = tmp.path() / "solo-index";
    build_index({{entry("github.com/o/outer", outer.path())}}, solo);
    ProvenanceIndex without = ProvenanceIndex::load(solo);
    CHECK(without.blob_to_first_commit(git_blob_sha1("APP = 1\n")) == outer_commit);
    CHECK(!without.blob_to_first_commit(git_blob_sha1("INNER = 1\n")).has_value());
    CHECK(without.commit_to_repos(inner_commit).empty());

    fs::path both = tmp.path() / "both-index";
    build_index(CorpusManifest{{entry("github.com/o/outer", outer.path()),
                                entry("github.com/i/inner", inner.path())}},
                both);
    ProvenanceIndex with = ProvenanceIndex::load(both);
    CHECK(with.blob_to_first_commit(git_blob_sha1("INNER = 1\n")) == inner_commit);
    CHECK(with.commit_to_repos(inner_commit) == std::vector<std::string>{"github.com/i/inner"});
}

TEST_CASE("commits keep their attribution even after becoming unreachable") {
    TempDir tmp;
    GitRepo repo(tmp.path() / "undo");
    repo.write("keep.py", "KEEP = 1\n");
    repo.commit_all("keep");
    repo.write("oops.py", "OOPS = 1\n");
    std::string abandoned = repo.commit_all("oops");
    repo.git("reset -q --hard HEAD~1");

    fs::path out = tmp.path() / "index";
    build_index({{entry("github.com/u/undo", repo.path())}}, out);
    ProvenanceIndex index = ProvenanceIndex::load(out);
    CHECK(index.commit_to_repos(abandoned) == std::vector<std::string>{"github.com/u/undo"});
    CHECK(index.blob_to_first_commit(git_blob_sha1("OOPS = 1\n")) == abandoned);
}

TEST_CASE("entries that are not repositories are skipped and recorded") {
    TempDir tmp;
    GitRepo real(tmp.path() / "real");
    real.write("a.py", "A = 1\n");
    real.commit_all("a");
    fs::create_directories(tmp.path() / "hollow");

    CorpusManifest manifest{{
        entry("github.com/x/real", real.path()),
        entry("github.com/x/hollow", tmp.path() / "hollow"),
        entry("github.com/x/missing", tmp.path() / "never-created"),
    }};
    fs::path out = tmp.path() / "index";
    IndexStats stats = build_index(manifest, out);
    CHECK(stats.repos_indexed == 1);
    CHECK(stats.skipped ==
          std::vector<std::string>{"github.com/x/hollow", "github.com/x/missing"});
    ProvenanceIndex index = ProvenanceIndex::load(out);
    CHECK(index.blob_to_first_commit(git_blob_sha1("A = 1\n")).has_value());

    SUBCASE("an unusable corpus is an error, not an empty index") {
        CorpusManifest hollow{{entry("github.com/x/hollow", tmp.path() / "hollow")}};
        CHECK(kind_of([&] { build_index(hollow, tmp.path() / "nope"); }) ==
              ErrorKind::empty_corpus);
        CHECK(kind_of([&] { build_index(CorpusManifest{}, tmp.path() / "nope"); }) ==
              ErrorKind::empty_corpus);
    }
}

TEST_CASE("manifest parsing") {
    CorpusManifest manifest{{
        entry("github.com/a/a", "/somewhere/a"),
        entry("github.com/b/b", "/somewhere/b", "github.com/a/a"),
    }};
    CorpusManifest back = manifest_from_json(manifest_to_json(manifest));
    REQUIRE(back.repos.size() == 2);
    CHECK(back.repos[0].repo_id == "github.com/a/a");
    CHECK(back.repos[0].path == "/somewhere/a");
    CHECK(!back.repos[0].fork_of.has_value());
    CHECK(back.repos[1].fork_of == "github.com/a/a");

    auto malformed = [](std::string_view text) {
        return kind_of([&] { manifest_from_json(text); }) == ErrorKind::malformed_document;
    };
    CHECK(malformed("not json"));
    CHECK(malformed("{}"));
    CHECK(malformed(R"({"repos": [{"path": "/x"}]})"));
    CHECK(malformed(R"({"repos": [{"repo_id": "a", "path": "/x"},
                                  {"repo_id": "a", "path": "/y"}]})"));
    CHECK(malformed(R"({"repos": [{"repo_id": "a", "path": "/x", "fork_of": "ghost"}]})"));
    CHECK(malformed(R"({"repos": [{"repo_id": "has,comma", "path": "/x"}]})"));

    SUBCASE("fork cycles surface at build time") {
        CorpusManifest cycle{{
            entry("github.com/a/a", "/x", "github.com/b/b"),
            entry("github.com/b/b", "/y", "github.com/a/a"),
        }};
        TempDir tmp;
        CHECK(kind_of([&] { build_index(cycle, tmp.path() / "out"); }) ==
              ErrorKind::malformed_document);
    }
}

TEST_CASE("a loaded index refuses files it could not have written") {
    TempDir tmp;
    GitRepo repo(tmp.path() / "r");
    repo.write("f.py", "F = 1\n");
    repo.commit_all("f");
    fs::path out = tmp.path() / "index";
    build_index({{entry("github.com/r/r", repo.path())}}, out);

    auto restore = [&](const char* name, const std::string& bytes) {
        write_file_atomic(out / name, bytes);
    };
    std::string blob_orig = file_bytes(out / "blob2commit.tsv");
    std::string meta_orig = file_bytes(out / "META");

    SUBCASE("a flipped byte breaks the recorded digest") {
        std::string tampered = blob_orig;
        tampered[0] = tampered[0] == 'a' ? 'b' : 'a';
        restore("blob2commit.tsv", tampered);
        CHECK(kind_of([&] { ProvenanceIndex::load(out); }) == ErrorKind::malformed_document);
    }

    SUBCASE("a future format version is refused outright") {
        std::string meta = meta_orig;
        meta.replace(meta.find(" 1\n"), 3, " 2\n");
        restore("META", meta);
        CHECK(kind_of([&] { ProvenanceIndex::load(out); }) == ErrorKind::unsupported_format);
    }

    SUBCASE("keys must stay strictly ascending") {
        GitRepo more(tmp.path() / "more");
        more.write("g.py", "G = 1\n");
        more.write("h.py", "H = 1\n");
        more.commit_all("gh");
        fs::path out2 = tmp.path() / "index2";
        build_index({{entry("github.com/r/more", more.path())}}, out2);

        std::vector<std::string> lines = split(file_bytes(out2 / "blob2commit.tsv"), '\n');
        REQUIRE(lines.size() >= 3); // two records and the trailing empty split
        std::swap(lines[0], lines[1]);
        std::string shuffled;
        for (const std::string& line : lines)
            if (!line.empty()) shuffled += line + '\n';
        write_file_atomic(out2 / "blob2commit.tsv", shuffled);

        // Re-stamp the digest so ordering is what trips the check.
        std::string payload = shuffled + file_bytes(out2 / "commit2repos.tsv") +
                              file_bytes(out2 / "forks.tsv");
        std::string digest = sha1_hex(
            {reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()});
        std::string meta = file_bytes(out2 / "META");
        std::size_t at = meta.find("corpus ") + 7;
        meta.replace(at, 40, digest);
        write_file_atomic(out2 / "META", meta);
        try {
            ProvenanceIndex::load(out2);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::malformed_document);
            CHECK(std::string(e.what()).find("order") != std::string::npos);
        }
    }

    SUBCASE("every first commit must itself be attributed") {
        fs::path dir = tmp.path() / "handmade";
        fs::create_directories(dir);
        std::string blob_line = std::string(40, '1') + '\t' + std::string(40, '2') + '\n';
        std::string commit_line = std::string(40, '3') + "\tgithub.com/x/x\n";
        std::string forks_line = "github.com/x/x\tgithub.com/x/x\n";
        std::string payload = blob_line + commit_line + forks_line;
        std::string digest = sha1_hex(
            {reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()});
        write_file_atomic(dir / "blob2commit.tsv", blob_line);
        write_file_atomic(dir / "commit2repos.tsv", commit_line);
        write_file_atomic(dir / "forks.tsv", forks_line);
        write_file_atomic(dir / "META", "radar-provenance 1\ncorpus " + digest +
                                            "\nrepos 1\ncommits 1\nblobs 1\n");
        CHECK(kind_of([&] { ProvenanceIndex::load(dir); }) == ErrorKind::malformed_document);
    }
}

} // TEST_SUITE
