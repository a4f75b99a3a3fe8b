#pragma once

#include "radar/registry.hpp"
#include "radar/repo_url.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace radar {

/// Three-way answer for "where does this repository live now?".
struct RedirectAnswer {
    enum class Kind { unchanged, moved_to, gone };
    Kind kind = Kind::unchanged;
    std::string moved_to; // canonical URL, set iff kind == moved_to
};

class RedirectResolver {
public:
    virtual ~RedirectResolver() = default;
    virtual RedirectAnswer resolve(const std::string& canonical_url) = 0;
};

/// Offline mode: every URL is reported unchanged.
class OfflineRedirectResolver : public RedirectResolver {
public:
    RedirectAnswer resolve(const std::string& canonical_url) override;
};

/// Scripted answers for tests and fixtures: moves map old → new canonical
/// URLs, gone marks repositories that no longer exist.
class FixtureRedirectResolver : public RedirectResolver {
public:
    void add_move(const std::string& from, const std::string& to);
    void add_gone(const std::string& url);
    RedirectAnswer resolve(const std::string& canonical_url) override;

private:
    std::map<std::string, std::string> moves_;
    std::set<std::string> gone_;
};

/// Follows the resolver until the coordinate stops moving (bounded). Returns
/// the final coordinate plus whether anything moved; throws Gone when the
/// resolver reports the repository deleted.
struct ResolvedUrl {
    RepoUrl url;
    bool redirected = false;
};
ResolvedUrl resolve_redirect(const RepoUrl& url, RedirectResolver& resolver);

/// Fetches page text for the homepage/documentation scraping stage.
class PageFetcher {
public:
    virtual ~PageFetcher() = default;
    /// Page body, or nullopt when the page cannot be fetched.
    virtual std::optional<std::string> fetch(const std::string& url) = 0;
};

/// Offline default: no page is reachable.
class NullPageFetcher : public PageFetcher {
public:
    std::optional<std::string> fetch(const std::string& url) override;
};

/// Serves page bodies from memory and/or a directory of files named by
/// repo_cache_key(url).
class FixturePageFetcher : public PageFetcher {
public:
    FixturePageFetcher() = default;
    explicit FixturePageFetcher(std::filesystem::path root);
    void set(const std::string& url, std::string body);
    std::optional<std::string> fetch(const std::string& url) override;

private:
    std::filesystem::path root_;
    std::map<std::string, std::string> pages_;
};

enum class SourceField { url, download_url, project_urls, description, badge, homepage, docpage, none };
std::string_view to_string(SourceField field);

/// Result of the staged metadata search.
struct RetrievalOutcome {
    std::optional<RepoUrl> url;
    SourceField source_field = SourceField::none;
    bool redirected = false;
    std::vector<RepoUrl> candidates; // every distinct coordinate seen, in order
    std::vector<std::string> notes;  // skipped candidates, scrape failures
};

/// Ordered search for the release's source repository:
///   1. home_page, download_url, then every project_urls value in source
///      order — author-declared fields, no name gate;
///   2. repository URLs then badge URLs in the description — gated on
///      name_match after redirect resolution;
///   3. homepage-/documentation-labeled project_urls pages, scraped for
///      repository URLs — same gate.
/// Candidates the resolver reports gone are skipped. The first surviving
/// match wins; stages below the winner are never consulted.
RetrievalOutcome retrieve_from_metadata(const MetadataDoc& doc, RedirectResolver& resolver,
                                        PageFetcher& pages);

} // namespace radar
