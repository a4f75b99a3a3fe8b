#include "doctest.h"

#include "radar/errors.hpp"
#include "radar/features.hpp"
#include "radar/hashing.hpp"
#include "radar/provenance.hpp"
#include "radar/retriever.hpp"
#include "radar/util.hpp"
#include "support/corpus.hpp"
#include "support/support.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

using namespace radar;
using testsupport::GitRepo;
using testsupport::TempDir;
using testsupport::run_ok;

namespace fs = std::filesystem;

namespace {

SdistInventory inventory_of(const std::string& package, const std::string& version,
                            std::vector<std::pair<std::string, std::string>> entries) {
    SdistInventory inv;
    inv.package = package;
    inv.version = version;
    inv.root_prefix = package + "-" + version;
    std::sort(entries.begin(), entries.end());
    for (const auto& [path, content] : entries) {
        FileEntry e;
        e.path = path;
        e.blob_sha1 = git_blob_sha1(content);
        e.size = content.size();
        e.is_python = path.ends_with(".py");
        inv.entries.push_back(std::move(e));
    }
    return inv;
}

ManifestEntry entry(const std::string& repo_id, const fs::path& path,
                    std::optional<std::string> fork_of = std::nullopt) {
    return {repo_id, path.string(), std::move(fork_of)};
}

fs::path copy_repo(const fs::path& from, const fs::path& to) {
    run_ok("cp -r '" + from.string() + "' '" + to.string() + "'");
    return to;
}

ProvenanceIndex index_over(const TempDir& tmp, const CorpusManifest& manifest,
                           const char* name = "index") {
    build_index(manifest, tmp.path() / name);
    return ProvenanceIndex::load(tmp.path() / name);
}

} // namespace

TEST_SUITE("retriever") {

TEST_CASE("candidates get one credit per distinct python digest") {
    TempDir tmp;
    GitRepo r(tmp.path() / "r");
    r.write("a.py", "A = 1\n");
    r.write("b.py", "B = 2\n");
    r.write("c.py", "C = 3\n");
    r.commit_all("three files");
    GitRepo s(tmp.path() / "s");
    s.write("shared.py", "SHARED = True\n");
    s.commit_all("shared"); // same clock tick as r's commit, but r ships it later
    r.write("shared.py", "SHARED = True\n");
    r.commit_all("adopt shared");

    ProvenanceIndex index = index_over(
        tmp, CorpusManifest{{entry("github.com/one/rlib", tmp.path() / "r"),
                             entry("github.com/two/slib", tmp.path() / "s")}});

    SdistInventory inv = inventory_of("rlib", "1.0",
                                      {{"pkg/a.py", "A = 1\n"},
                                       {"pkg/b.py", "B = 2\n"},
                                       {"pkg/c.py", "C = 3\n"},
                                       {"pkg/a_again.py", "A = 1\n"}, // same digest as a.py
                                       {"pkg/shared.py", "SHARED = True\n"},
                                       {"README.md", "not python\n"}});
    CandidateList candidates = get_candidates(inv, index, 500);
    REQUIRE(candidates.ranked.size() == 2);
    CHECK(candidates.ranked[0].repo_id == "github.com/one/rlib");
    CHECK(candidates.ranked[0].matched == 3); // a (once), b, c — shared was s's first
    CHECK(candidates.ranked[1].repo_id == "github.com/two/slib");
    CHECK(candidates.ranked[1].matched == 1);
}

TEST_CASE("blobs carried by too many repositories say nothing") {
    TempDir tmp;
    GitRepo a(tmp.path() / "a");
    a.write("x.py", "X = 1\n");
    a.commit_all("x");
    copy_repo(tmp.path() / "a", tmp.path() / "b"); // two bare-copy forks
    copy_repo(tmp.path() / "a", tmp.path() / "c");
    GitRepo d(tmp.path() / "d");
    d.write("y.py", "Y = 1\n");
    d.commit_all("y");

    ProvenanceIndex index = index_over(
        tmp, CorpusManifest{{entry("github.com/p/alpha", tmp.path() / "a"),
                             entry("github.com/q/alpha", tmp.path() / "b", "github.com/p/alpha"),
                             entry("github.com/r/alpha", tmp.path() / "c", "github.com/p/alpha"),
                             entry("github.com/s/delta", tmp.path() / "d")}});

    SdistInventory inv = inventory_of("alpha", "1.0",
                                      {{"x.py", "X = 1\n"}, {"y.py", "Y = 1\n"}});

    // x.py's first commit is carried by three repositories.
    CandidateList tight = get_candidates(inv, index, 2);
    REQUIRE(tight.ranked.size() == 1);
    CHECK(tight.ranked[0].repo_id == "github.com/s/delta");

    CandidateList boundary = get_candidates(inv, index, 3); // "exceeds", not "reaches"
    REQUIRE(boundary.ranked.size() == 4);
    for (const Candidate& c : boundary.ranked) CHECK(c.matched == 1);
    CHECK(boundary.ranked[0].repo_id == "github.com/p/alpha"); // equal counts: id order

    SUBCASE("discarding everything leaves no candidates") {
        SdistInventory common_only = inventory_of("alpha", "1.0", {{"x.py", "X = 1\n"}});
        try {
            get_candidates(common_only, index, 1);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::empty_candidates);
        }
    }
}

TEST_CASE("inventories the index cannot help with") {
    TempDir tmp;
    GitRepo r(tmp.path() / "r");
    r.write("known.py", "K = 1\n");
    r.commit_all("known");
    ProvenanceIndex index =
        index_over(tmp, CorpusManifest{{entry("github.com/o/known", tmp.path() / "r")}});

    SdistInventory no_python =
        inventory_of("doc-pack", "1.0", {{"README.md", "words\n"}, {"data.json", "{}\n"}});
    try {
        get_candidates(no_python, index, 500);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::no_python_files);
    }
    RetrievalResult r1 = get_most_probable(no_python, index, {}, "doc-pack");
    CHECK(r1.reason == RetrievalReason::no_python_files);
    CHECK(!r1.repo_id.has_value());

    SdistInventory stranger =
        inventory_of("stranger", "1.0", {{"pkg/elsewhere.py", "E = 404\n"}});
    try {
        get_candidates(stranger, index, 500);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::empty_candidates);
    }
    RetrievalResult r2 = get_most_probable(stranger, index, {}, "stranger");
    CHECK(r2.reason == RetrievalReason::no_candidates);
    CHECK(!r2.repo_id.has_value());
}

TEST_CASE("a fork and its root collapse to the root") {
    TempDir tmp;
    GitRepo a(tmp.path() / "a");
    a.write("one.py", "ONE = 1\n");
    a.commit_all("one");
    a.write("two.py", "TWO = 2\n");
    a.commit_all("two");
    fs::path b = copy_repo(tmp.path() / "a", tmp.path() / "b");
    run_ok("echo 'PATCH = 3' > patch.py && git add -A && "
           "GIT_AUTHOR_DATE='1578200000 +0000' GIT_COMMITTER_DATE='1578200000 +0000' "
           "git commit -q -m patch",
           b);

    ProvenanceIndex index = index_over(
        tmp, CorpusManifest{{entry("github.com/root/mytool", tmp.path() / "a"),
                             entry("github.com/fan/mytool", b, "github.com/root/mytool")}});

    // Packaged from the fork: fork outranks root, yet the answer is the root.
    SdistInventory inv = inventory_of("mytool", "2.0",
                                      {{"one.py", "ONE = 1\n"},
                                       {"two.py", "TWO = 2\n"},
                                       {"patch.py", "PATCH = 3\n"}});
    CandidateList candidates = get_candidates(inv, index, 500);
    REQUIRE(candidates.ranked.size() == 2);
    CHECK(candidates.ranked[0].repo_id == "github.com/fan/mytool");
    CHECK(candidates.ranked[0].matched == 3);
    CHECK(candidates.ranked[1].matched == 2);

    RetrievalResult result = get_most_probable(inv, index, {}, "mytool");
    CHECK(result.reason == RetrievalReason::found);
    CHECK(result.repo_id == "github.com/root/mytool");
    CHECK(result.name_score == doctest::Approx(1.0));
}

TEST_CASE("the most common root beats the single best matcher") {
    TempDir tmp;
    GitRepo z(tmp.path() / "z");
    z.write("f1.py", "F1 = 1\n");
    z.write("f2.py", "F2 = 2\n");
    z.write("f3.py", "F3 = 3\n");
    z.commit_all("zeta");
    copy_repo(tmp.path() / "z", tmp.path() / "z1");
    copy_repo(tmp.path() / "z", tmp.path() / "z2");
    GitRepo w(tmp.path() / "w");
    for (int i = 1; i <= 4; ++i)
        w.write("w" + std::to_string(i) + ".py", "W = " + std::to_string(i) + "\n");
    w.commit_all("wombat");

    ProvenanceIndex index = index_over(
        tmp,
        CorpusManifest{{entry("github.com/zorg/zeta-pack", tmp.path() / "z"),
                        entry("github.com/aa/zeta-pack", tmp.path() / "z1", "github.com/zorg/zeta-pack"),
                        entry("github.com/bb/zeta-pack", tmp.path() / "z2", "github.com/zorg/zeta-pack"),
                        entry("github.com/ww/wombat", tmp.path() / "w")}});

    SdistInventory inv = inventory_of("zeta-pack", "1.0",
                                      {{"f1.py", "F1 = 1\n"},
                                       {"f2.py", "F2 = 2\n"},
                                       {"f3.py", "F3 = 3\n"},
                                       {"w1.py", "W = 1\n"},
                                       {"w2.py", "W = 2\n"},
                                       {"w3.py", "W = 3\n"},
                                       {"w4.py", "W = 4\n"}});
    CandidateList candidates = get_candidates(inv, index, 500);
    REQUIRE(candidates.ranked.size() == 4);
    CHECK(candidates.ranked[0].repo_id == "github.com/ww/wombat"); // 4 matches
    CHECK(candidates.ranked[0].matched == 4);

    // Three of the top five defork to the same project; one vote each
    // outweighs wombat's higher match count.
    RetrievalResult result = get_most_probable(inv, index, {}, "zeta-pack");
    CHECK(result.reason == RetrievalReason::found);
    CHECK(result.repo_id == "github.com/zorg/zeta-pack");

    SUBCASE("topn narrows the vote") {
        RetrieverParams narrow;
        narrow.topn = 1;
        RetrievalResult only_best = get_most_probable(inv, index, narrow, "zeta-pack");
        CHECK(only_best.reason == RetrievalReason::name_mismatch);
        CHECK(!only_best.repo_id.has_value());
        CHECK(only_best.name_score < 0.5); // wombat vs zeta-pack
        narrow.name_similarity = 0.0;
        RetrievalResult gate_open = get_most_probable(inv, index, narrow, "zeta-pack");
        CHECK(gate_open.repo_id == "github.com/ww/wombat");
    }
}

TEST_CASE("the name gate") {
    CHECK(repo_name_similarity("flask", "github.com/pallets/flask") == doctest::Approx(1.0));
    CHECK(repo_name_similarity("my-tool", "github.com/acme/my_tool") == doctest::Approx(1.0));
    CHECK(repo_name_similarity("My.Tool", "github.com/acme/mytool") == doctest::Approx(1.0));
    CHECK(repo_name_similarity("mytool", "github.com/acme/python-mytool") ==
          doctest::Approx(0.5));
    CHECK(repo_name_similarity("totally-different", "github.com/x/xyzlib") < 0.3);
    CHECK(repo_name_similarity("bare", "no-slashes-at-all") ==
          doctest::Approx(normalized_levenshtein("bare", "noslashesatall")));
}

TEST_CASE("parameters are validated") {
    TempDir tmp;
    GitRepo r(tmp.path() / "r");
    r.write("a.py", "A = 1\n");
    r.commit_all("a");
    ProvenanceIndex index =
        index_over(tmp, CorpusManifest{{entry("github.com/o/r", tmp.path() / "r")}});
    SdistInventory inv = inventory_of("r", "1.0", {{"a.py", "A = 1\n"}});

    CHECK_THROWS_AS(get_candidates(inv, index, 0), Error);
    RetrieverParams bad_topn;
    bad_topn.topn = 0;
    CHECK_THROWS_AS(get_most_probable(inv, index, bad_topn, "r"), Error);
    RetrieverParams bad_gate;
    bad_gate.name_similarity = 1.5;
    CHECK_THROWS_AS(get_most_probable(inv, index, bad_gate, "r"), Error);
}

TEST_CASE("a generated corpus retrieves itself") {
    TempDir tmp;
    testsupport::RetrievalOptions options{12, 2, 3};
    testsupport::RetrievalCorpus corpus =
        testsupport::build_retrieval_corpus(tmp.path() / "corpus", options);
    REQUIRE(corpus.manifest.repos.size() == 14);
    REQUIRE(corpus.cases.size() == 14);
    build_index(corpus.manifest, tmp.path() / "index");
    ProvenanceIndex index = ProvenanceIndex::load(tmp.path() / "index");

    RetrieverParams params;
    for (const ReleaseCase& item : corpus.cases) {
        CAPTURE(item.package);
        RetrievalResult result = get_most_probable(item.inventory, index, params, item.package);
        REQUIRE(result.reason == RetrievalReason::found);
        CHECK(*result.repo_id == item.repo_id);
    }

    SUBCASE("raising the gate only shrinks the answered set") {
        std::vector<SweepRow> rows =
            similarity_sweep(corpus.cases, index, params, {0.0, 0.25, 0.5, 0.75, 1.0});
        REQUIRE(rows.size() == 5);
        CHECK(rows[0].coverage == doctest::Approx(1.0));
        CHECK(rows[0].accuracy == doctest::Approx(1.0));
        CHECK(rows[2].coverage >= 0.9);
        CHECK(rows[2].accuracy == doctest::Approx(1.0));
        for (std::size_t i = 1; i < rows.size(); ++i)
            CHECK(rows[i].answered <= rows[i - 1].answered);

        // Containment through the public interface, not the sweep's own
        // bookkeeping: anything answered strictly is answered leniently,
        // with the same repository.
        RetrieverParams strict = params;
        strict.name_similarity = 0.75;
        RetrieverParams lax = params;
        lax.name_similarity = 0.25;
        for (const ReleaseCase& item : corpus.cases) {
            RetrievalResult hard = get_most_probable(item.inventory, index, strict, item.package);
            if (hard.reason != RetrievalReason::found) continue;
            RetrievalResult easy = get_most_probable(item.inventory, index, lax, item.package);
            REQUIRE(easy.reason == RetrievalReason::found);
            CHECK(*easy.repo_id == *hard.repo_id);
        }

        std::string csv = sweep_to_csv(rows);
        CHECK(csv.starts_with("threshold,coverage,accuracy\n"));
        CHECK(csv.find("\n0.25,") != std::string::npos);
        CHECK(split(csv, '\n').size() == 7); // header, five rows, trailing empty
    }
}

} // TEST_SUITE
