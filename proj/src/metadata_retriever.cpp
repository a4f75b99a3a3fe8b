#include "radar/metadata_retriever.hpp"

#include "radar/errors.hpp"
#include "radar/util.hpp"

#include <algorithm>

namespace fs = std::filesystem;

namespace radar {

RedirectAnswer OfflineRedirectResolver::resolve(const std::string&) { return {}; }

void FixtureRedirectResolver::add_move(const std::string& from, const std::string& to) {
    moves_[to_lower(from)] = to;
}

void FixtureRedirectResolver::add_gone(const std::string& url) { gone_.insert(to_lower(url)); }

RedirectAnswer FixtureRedirectResolver::resolve(const std::string& canonical_url) {
    std::string key = to_lower(canonical_url);
    if (gone_.contains(key)) return {RedirectAnswer::Kind::gone, {}};
    if (auto it = moves_.find(key); it != moves_.end())
        return {RedirectAnswer::Kind::moved_to, it->second};
    return {};
}

ResolvedUrl resolve_redirect(const RepoUrl& url, RedirectResolver& resolver) {
    ResolvedUrl current{url, false};
    for (int hops = 0; hops < 5; ++hops) {
        RedirectAnswer answer = resolver.resolve(current.url.canonical);
        switch (answer.kind) {
        case RedirectAnswer::Kind::unchanged:
            return current;
        case RedirectAnswer::Kind::gone:
            throw Error(ErrorKind::gone, current.url.canonical + " no longer exists");
        case RedirectAnswer::Kind::moved_to: {
            auto moved = parse_repo_url(answer.moved_to);
            if (!moved) return current; // unusable answer; keep what we have
            current = {*moved, true};
            break;
        }
        }
    }
    return current;
}

std::optional<std::string> NullPageFetcher::fetch(const std::string&) { return std::nullopt; }

FixturePageFetcher::FixturePageFetcher(fs::path root) : root_(std::move(root)) {}

void FixturePageFetcher::set(const std::string& url, std::string body) {
    pages_[url] = std::move(body);
}

std::optional<std::string> FixturePageFetcher::fetch(const std::string& url) {
    if (auto it = pages_.find(url); it != pages_.end()) return it->second;
    if (!root_.empty()) {
        fs::path file = root_ / repo_cache_key(url);
        if (fs::exists(file)) return read_file_text(file);
    }
    return std::nullopt;
}

std::string_view to_string(SourceField field) {
    switch (field) {
    case SourceField::url: return "url";
    case SourceField::download_url: return "download_url";
    case SourceField::project_urls: return "project_urls";
    case SourceField::description: return "description";
    case SourceField::badge: return "badge";
    case SourceField::homepage: return "homepage";
    case SourceField::docpage: return "docpage";
    case SourceField::none: return "none";
    }
    return "none";
}

namespace {

// Shared helper: resolve the redirect, apply the optional name gate, and
// either fill the outcome (true) or record why the candidate lost (false).
class StagedSearch {
public:
    StagedSearch(const MetadataDoc& doc, RedirectResolver& resolver, PageFetcher& pages)
        : doc_(doc), resolver_(resolver), pages_(pages) {}

    RetrievalOutcome run() {
        RetrievalOutcome outcome;
        if (stage_fields(outcome) || stage_description(outcome) || stage_pages(outcome))
            return outcome;
        outcome.source_field = SourceField::none;
        return outcome;
    }

private:
    bool consider(RetrievalOutcome& outcome, const RepoUrl& candidate, SourceField field,
                  bool gate_on_name) {
        remember(outcome, candidate);
        ResolvedUrl resolved;
        try {
            resolved = resolve_redirect(candidate, resolver_);
        } catch (const Error& e) {
            outcome.notes.push_back(candidate.canonical + ": " + e.what());
            return false;
        }
        if (resolved.redirected) remember(outcome, resolved.url);
        if (gate_on_name && !name_match(doc_.name, resolved.url.name)) {
            outcome.notes.push_back(resolved.url.canonical + ": repository name does not match '" +
                                    doc_.name + "'");
            return false;
        }
        outcome.url = resolved.url;
        outcome.source_field = field;
        outcome.redirected = resolved.redirected;
        return true;
    }

    void remember(RetrievalOutcome& outcome, const RepoUrl& candidate) {
        bool known = std::any_of(outcome.candidates.begin(), outcome.candidates.end(),
                                 [&](const RepoUrl& seen) { return seen.same_repo(candidate); });
        if (!known) outcome.candidates.push_back(candidate);
    }

    bool try_urls(RetrievalOutcome& outcome, const std::vector<RepoUrl>& urls, SourceField field,
                  bool gate_on_name) {
        for (const RepoUrl& url : urls)
            if (consider(outcome, url, field, gate_on_name)) return true;
        return false;
    }

    // Stage 1: author-declared URL fields, in declaration order, ungated.
    // Every stage-1 coordinate is recorded even after a winner is found —
    // the validator wants to see conflicting declarations.
    bool stage_fields(RetrievalOutcome& outcome) {
        std::vector<std::pair<RepoUrl, SourceField>> declared;
        for (const RepoUrl& url : extract_repo_urls(doc_.home_page))
            declared.emplace_back(url, SourceField::url);
        for (const RepoUrl& url : extract_repo_urls(doc_.download_url))
            declared.emplace_back(url, SourceField::download_url);
        for (const auto& [label, value] : doc_.project_urls)
            for (const RepoUrl& url : extract_repo_urls(value))
                declared.emplace_back(url, SourceField::project_urls);
        for (const auto& [url, field] : declared) remember(outcome, url);

        for (const auto& [url, field] : declared)
            if (consider(outcome, url, field, false)) return true;
        return false;
    }

    // Stage 2: the description — plain repository URLs first, then badges.
    // Name-gated: descriptions routinely cite unrelated repositories.
    bool stage_description(RetrievalOutcome& outcome) {
        if (try_urls(outcome, extract_repo_urls(doc_.description), SourceField::description, true))
            return true;
        return try_urls(outcome,
                        extract_badge_repo_urls(doc_.description, doc_.description_format),
                        SourceField::badge, true);
    }

    // Stage 3: fetch homepage-/documentation-labeled pages and scan their
    // text. Unfetchable pages are noted and skipped.
    bool stage_pages(RetrievalOutcome& outcome) {
        std::vector<std::pair<std::string, SourceField>> pages;
        for (const auto& [label, value] : doc_.project_urls) {
            std::string lowered = to_lower(label);
            if (lowered.find("home") != std::string::npos)
                pages.emplace_back(value, SourceField::homepage);
        }
        for (const auto& [label, value] : doc_.project_urls) {
            std::string lowered = to_lower(label);
            if (lowered.find("doc") != std::string::npos)
                pages.emplace_back(value, SourceField::docpage);
        }
        for (const auto& [page_url, field] : pages) {
            // A page that *is* a repository URL was already stage-1 material.
            if (!extract_repo_urls(page_url).empty()) continue;
            std::optional<std::string> body = pages_.fetch(page_url);
            if (!body) {
                outcome.notes.push_back(page_url + ": page not fetched");
                continue;
            }
            if (try_urls(outcome, extract_repo_urls(*body), field, true)) return true;
        }
        return false;
    }

    const MetadataDoc& doc_;
    RedirectResolver& resolver_;
    PageFetcher& pages_;
};

} // namespace

RetrievalOutcome retrieve_from_metadata(const MetadataDoc& doc, RedirectResolver& resolver,
                                        PageFetcher& pages) {
    return StagedSearch(doc, resolver, pages).run();
}

} // namespace radar
