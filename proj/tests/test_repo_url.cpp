#include "doctest.h"

#include "radar/repo_url.hpp"
#include "radar/util.hpp"

#include <set>
#include <string>
#include <vector>

using namespace radar;

namespace {

// Independent extraction oracle: split on whitespace and common delimiters,
// then pattern-match each token by hand (no regex). Deliberately dumb — it
// only understands scheme-or-bare "host/owner/name" tokens, which is what
// the corpus below contains.
std::vector<std::string> tokenizer_oracle(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text + " ") {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '>' || c == '(' ||
            c == ')' || c == '"') {
            if (!current.empty()) tokens.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }

    std::vector<std::string> found;
    std::set<std::string> seen;
    for (std::string token : tokens) {
        for (const std::string scheme :
             {"git+https://", "git+http://", "https://", "http://", "git://"})
            if (token.rfind(scheme, 0) == 0) token = token.substr(scheme.size());
        if (token.rfind("www.", 0) == 0) token = token.substr(4);
        std::string host;
        for (const std::string h : {"github.com/", "gitlab.com/", "bitbucket.org/"})
            if (to_lower(token).rfind(h, 0) == 0) host = h;
        if (host.empty()) continue;
        std::string rest = token.substr(host.size());
        std::size_t slash = rest.find('/');
        if (slash == std::string::npos || slash == 0) continue;
        std::string owner = rest.substr(0, slash);
        std::string name = rest.substr(slash + 1);
        for (char stop : {'/', '#', '?'})
            if (std::size_t p = name.find(stop); p != std::string::npos) name = name.substr(0, p);
        while (!name.empty() && std::string(".,;:!").find(name.back()) != std::string::npos)
            name.pop_back();
        if (name.size() > 4 && name.substr(name.size() - 4) == ".git")
            name = name.substr(0, name.size() - 4);
        if (name.empty()) continue;
        std::string canonical = to_lower(host.substr(0, host.size() - 1) + "/" + owner + "/" + name);
        if (seen.insert(canonical).second)
            found.push_back("https://" + host + owner + "/" + name);
    }
    return found;
}

std::vector<std::string> canonicals(const std::vector<RepoUrl>& urls) {
    std::vector<std::string> out;
    for (const RepoUrl& u : urls) out.push_back(u.canonical);
    return out;
}

} // namespace

TEST_SUITE("repo_url") {

TEST_CASE("plain urls are extracted with owner and name") {
    auto urls = extract_repo_urls("see https://github.com/numpy/numpy for code");
    REQUIRE(urls.size() == 1);
    CHECK(urls[0].platform == Platform::github);
    CHECK(urls[0].owner == "numpy");
    CHECK(urls[0].name == "numpy");
    CHECK(urls[0].canonical == "https://github.com/numpy/numpy");
}

TEST_CASE("pip-style vcs urls lose scheme, suffix, and fragment") {
    auto urls = extract_repo_urls("git+https://gitlab.com/Owner/Proj.git#egg=proj");
    REQUIRE(urls.size() == 1);
    CHECK(urls[0].platform == Platform::gitlab);
    CHECK(urls[0].owner == "Owner");
    CHECK(urls[0].name == "Proj"); // case preserved, .git gone
    CHECK(urls[0].canonical == "https://gitlab.com/Owner/Proj");
}

TEST_CASE("host must be a real host, not part of another name") {
    CHECK(extract_repo_urls("https://example.com/github.com-mirror").empty());
    CHECK(extract_repo_urls("visit mygithub.com/a/b today").empty());
    CHECK(extract_repo_urls("docs.github.com/a/b").empty());
    // But www. is the host.
    CHECK(extract_repo_urls("www.github.com/a/b").size() == 1);
}

TEST_CASE("deep paths, queries, and punctuation are cut at owner/name") {
    auto urls = extract_repo_urls("https://github.com/acme/tool/tree/main/src, "
                                  "https://bitbucket.org/acme/other?tab=code; "
                                  "end (https://gitlab.com/acme/third).");
    REQUIRE(urls.size() == 3);
    CHECK(urls[0].canonical == "https://github.com/acme/tool");
    CHECK(urls[1].canonical == "https://bitbucket.org/acme/other");
    CHECK(urls[2].canonical == "https://gitlab.com/acme/third");
}

TEST_CASE("scp-style remotes are understood") {
    auto urls = extract_repo_urls("origin git@github.com:torvalds/linux.git (fetch)");
    REQUIRE(urls.size() == 1);
    CHECK(urls[0].canonical == "https://github.com/torvalds/linux");
}

TEST_CASE("order is textual and duplicates collapse case-insensitively") {
    auto urls = extract_repo_urls("https://github.com/b/second is a mirror of "
                                  "https://github.com/a/first — also at "
                                  "https://GitHub.com/B/Second and github.com/a/first");
    REQUIRE(urls.size() == 2);
    CHECK(urls[0].canonical == "https://github.com/b/second");
    CHECK(urls[1].canonical == "https://github.com/a/first");
}

TEST_CASE("extraction agrees with a hand-built tokenizer oracle on a corpus") {
    std::vector<std::string> corpus = {
        "Install from https://github.com/psf/requests today",
        "git+https://github.com/pallets/flask.git#egg=flask and more text",
        "mirrors: https://gitlab.com/acme/widget https://bitbucket.org/acme/widget",
        "docs at https://example.com plus code github.com/a/b-c.d",
        "no urls at all here",
        "http://www.github.com/Old/Style.git plus https://github.com/Old/Style",
        "(https://github.com/wrapped/parens) <https://gitlab.com/angle/brackets>",
        "stop characters https://github.com/q/r#readme https://github.com/s/t?x=1",
    };
    for (const std::string& text : corpus) {
        CAPTURE(text);
        auto mine = canonicals(extract_repo_urls(text));
        auto oracle = tokenizer_oracle(text);
        REQUIRE(mine.size() == oracle.size());
        for (std::size_t i = 0; i < mine.size(); ++i) CHECK(to_lower(mine[i]) == to_lower(oracle[i]));
    }
}

TEST_CASE("appending non-url text never changes the result") {
    std::string base = "code: https://github.com/acme/tool and https://gitlab.com/acme/lib";
    auto before = canonicals(extract_repo_urls(base));
    auto after = canonicals(
        extract_repo_urls(base + "\nSee the README for details. Contact us at dev@acme.example."));
    CHECK(before == after);
}

TEST_CASE("single-url parse accepts a url and rejects prose") {
    auto one = parse_repo_url("  https://github.com/acme/tool.git ");
    REQUIRE(one.has_value());
    CHECK(one->canonical == "https://github.com/acme/tool");
    CHECK_FALSE(parse_repo_url("see https://github.com/acme/tool").has_value());
    CHECK_FALSE(parse_repo_url("not a url").has_value());
}

TEST_CASE("shield badges carry the repository coordinate") {
    auto urls = extract_badge_repo_urls(
        "[![Stars](https://img.shields.io/github/stars/acme/tool)](https://pypi.org/p/tool)",
        DescriptionFormat::markdown);
    REQUIRE(urls.size() == 1);
    CHECK(urls[0].canonical == "https://github.com/acme/tool");
}

TEST_CASE("markdown badge link targets are recovered") {
    auto urls = extract_badge_repo_urls(
        "[![CI](https://img.shields.io/badge/build-ok-green)](https://github.com/acme/tool)",
        DescriptionFormat::markdown);
    REQUIRE(urls.size() == 1);
    CHECK(urls[0].canonical == "https://github.com/acme/tool");
}

TEST_CASE("rst badge targets are recovered") {
    std::string rst = ".. image:: https://img.shields.io/badge/docs-latest-blue\n"
                      "   :alt: docs\n"
                      "   :target: https://github.com/acme/tool\n"
                      "\n"
                      "Some paragraph.\n";
    auto urls = extract_badge_repo_urls(rst, DescriptionFormat::rst);
    REQUIRE(urls.size() == 1);
    CHECK(urls[0].canonical == "https://github.com/acme/tool");
}

TEST_CASE("plain format tries both badge syntaxes") {
    std::string text = "[![x](https://img.shields.io/badge/a-b-c)](https://github.com/m/md)\n"
                       ".. image:: https://img.shields.io/badge/d-e-f\n"
                       "   :target: https://gitlab.com/r/rst\n";
    auto urls = extract_badge_repo_urls(text, DescriptionFormat::plain);
    REQUIRE(urls.size() == 2);
    CHECK(urls[0].canonical == "https://github.com/m/md");
    CHECK(urls[1].canonical == "https://gitlab.com/r/rst");
}

TEST_CASE("text without badges yields nothing") {
    CHECK(extract_badge_repo_urls("plain text, no badges", DescriptionFormat::plain).empty());
}

TEST_CASE("name matching strips separators and case") {
    CHECK(name_match("my-pkg", "my_pkg"));
    CHECK(name_match("requests", "requests"));
    CHECK_FALSE(name_match("requests", "request"));
    CHECK(name_match("Zope.Interface", "zope_interface"));
    CHECK(name_match("a.b-c", "abc"));
    // Symmetry under the normalization.
    CHECK(name_match("My_Pkg", "my-pkg") == name_match("my-pkg", "My_Pkg"));
}

} // TEST_SUITE
