#include "radar/repo_url.hpp"

#include "radar/util.hpp"

#include <algorithm>
#include <regex>
#include <set>

namespace radar {

namespace {

std::optional<Platform> platform_from_host(std::string host) {
    host = to_lower(host);
    if (host == "github.com") return Platform::github;
    if (host == "gitlab.com") return Platform::gitlab;
    if (host == "bitbucket.org") return Platform::bitbucket;
    return std::nullopt;
}

// Sentence punctuation that regularly rides along when URLs end a clause.
std::string trim_trailing_punctuation(std::string s) {
    while (!s.empty() && std::string(".,;:!?)]}'\"").find(s.back()) != std::string::npos)
        s.pop_back();
    return s;
}

std::string strip_git_suffix(std::string name) {
    name = trim_trailing_punctuation(name);
    if (ends_with(name, ".git")) name.resize(name.size() - 4);
    return trim_trailing_punctuation(name);
}

// URL-ish occurrence: optional scheme / www. / scp-style git@ prefix, then a
// supported host, then /owner/name. The byte before the match must not look
// like part of a larger hostname ("example-github.com" must not hit).
const std::regex& url_pattern() {
    static const std::regex pattern(
        R"((?:(?:git\+)?(?:https?|git|ssh)://(?:[\w.-]+@)?(?:www\.)?|(?:www\.)?|git@)?)"
        R"((github\.com|gitlab\.com|bitbucket\.org)[:/]([\w.-]+)/([\w.~-]+))",
        std::regex::icase);
    return pattern;
}

bool boundary_ok(const std::string& text, std::size_t match_pos) {
    if (match_pos == 0) return true;
    unsigned char prev = text[match_pos - 1];
    return !(std::isalnum(prev) || prev == '.' || prev == '-' || prev == '@');
}

struct PositionedUrl {
    std::size_t pos;
    RepoUrl url;
};

void dedupe_in_order(std::vector<PositionedUrl>& found, std::vector<RepoUrl>& out) {
    std::stable_sort(found.begin(), found.end(),
                     [](const PositionedUrl& a, const PositionedUrl& b) { return a.pos < b.pos; });
    std::set<std::string> seen;
    for (PositionedUrl& hit : found)
        if (seen.insert(to_lower(hit.url.canonical)).second) out.push_back(std::move(hit.url));
}

void collect_repo_urls(const std::string& text, std::size_t base_pos,
                       std::vector<PositionedUrl>& found) {
    auto begin = std::sregex_iterator(text.begin(), text.end(), url_pattern());
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        if (!boundary_ok(text, static_cast<std::size_t>(m.position(0)))) continue;
        // ':' as the host/path separator is only the scp form (git@host:o/n).
        std::size_t host_end = static_cast<std::size_t>(m.position(1)) + m.length(1);
        if (text[host_end] == ':' && m.str(0).find('@') == std::string::npos) continue;
        auto platform = platform_from_host(m.str(1));
        if (!platform) continue;
        std::string owner = trim_trailing_punctuation(m.str(2));
        std::string name = strip_git_suffix(m.str(3));
        if (owner.empty() || name.empty()) continue;
        found.push_back({base_pos + static_cast<std::size_t>(m.position(0)),
                         make_repo_url(*platform, owner, name, m.str(0))});
    }
}

} // namespace

std::string_view platform_host(Platform platform) {
    switch (platform) {
    case Platform::github: return "github.com";
    case Platform::gitlab: return "gitlab.com";
    case Platform::bitbucket: return "bitbucket.org";
    }
    return "github.com";
}

bool RepoUrl::same_repo(const RepoUrl& other) const {
    return platform == other.platform && to_lower(owner) == to_lower(other.owner) &&
           to_lower(name) == to_lower(other.name);
}

RepoUrl make_repo_url(Platform platform, std::string owner, std::string name, std::string raw) {
    RepoUrl url;
    url.platform = platform;
    url.owner = std::move(owner);
    url.name = std::move(name);
    url.canonical =
        "https://" + std::string(platform_host(platform)) + "/" + url.owner + "/" + url.name;
    url.raw = raw.empty() ? url.canonical : std::move(raw);
    return url;
}

std::vector<RepoUrl> extract_repo_urls(const std::string& text) {
    std::vector<PositionedUrl> found;
    collect_repo_urls(text, 0, found);
    std::vector<RepoUrl> out;
    dedupe_in_order(found, out);
    return out;
}

std::optional<RepoUrl> parse_repo_url(const std::string& text) {
    std::string trimmed = trim(text);
    auto urls = extract_repo_urls(trimmed);
    if (urls.size() != 1) return std::nullopt;
    // The single match must cover the whole string, not a fragment of it.
    if (trimmed.find_first_of(" \t\n") != std::string::npos) return std::nullopt;
    return urls.front();
}

namespace {

// img.shields.io/<platform>/<metric>/<owner>/<name>, e.g. the stars/forks/
// license badges that embed the repository coordinate directly.
const std::regex& shield_pattern() {
    static const std::regex pattern(
        R"(img\.shields\.io/(github|gitlab|bitbucket)/[\w.-]+/([\w.-]+)/([\w.-]+))",
        std::regex::icase);
    return pattern;
}

// [![alt](image)](target)
const std::regex& markdown_badge_pattern() {
    static const std::regex pattern(R"(\[!\[[^\]]*\]\(([^()\s]+)[^()]*\)\]\(([^()\s]+)[^()]*\))");
    return pattern;
}

void collect_shields(const std::string& text, std::vector<PositionedUrl>& found) {
    auto begin = std::sregex_iterator(text.begin(), text.end(), shield_pattern());
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        auto platform = platform_from_host(to_lower(m.str(1)) == "bitbucket"
                                               ? std::string("bitbucket.org")
                                               : to_lower(m.str(1)) + ".com");
        if (!platform) continue;
        std::string owner = trim_trailing_punctuation(m.str(2));
        std::string name = strip_git_suffix(m.str(3));
        if (owner.empty() || name.empty()) continue;
        found.push_back({static_cast<std::size_t>(m.position(0)),
                         make_repo_url(*platform, owner, name, m.str(0))});
    }
}

void collect_markdown_targets(const std::string& text, std::vector<PositionedUrl>& found) {
    auto begin = std::sregex_iterator(text.begin(), text.end(), markdown_badge_pattern());
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        std::string target = m.str(2);
        collect_repo_urls(target, static_cast<std::size_t>(m.position(2)), found);
    }
}

// .. image:: <badge>
//    :target: <url>
void collect_rst_targets(const std::string& text, std::vector<PositionedUrl>& found) {
    std::size_t offset = 0;
    bool in_image_block = false;
    for (const std::string& line : split(text, '\n')) {
        std::string stripped = trim(line);
        if (stripped.find("image::") != std::string::npos ||
            stripped.find("figure::") != std::string::npos) {
            in_image_block = true;
        } else if (in_image_block) {
            std::size_t target = stripped.find(":target:");
            if (target != std::string::npos) {
                std::string value = trim(stripped.substr(target + 8));
                collect_repo_urls(value, offset + line.find(":target:"), found);
            } else if (stripped.empty() || stripped[0] != ':') {
                in_image_block = false;
            }
        }
        offset += line.size() + 1;
    }
}

} // namespace

std::vector<RepoUrl> extract_badge_repo_urls(const std::string& description,
                                             DescriptionFormat format) {
    std::vector<PositionedUrl> found;
    collect_shields(description, found);
    switch (format) {
    case DescriptionFormat::markdown: collect_markdown_targets(description, found); break;
    case DescriptionFormat::rst: collect_rst_targets(description, found); break;
    case DescriptionFormat::plain:
        // Mislabeled content types are routine; try both syntaxes.
        collect_markdown_targets(description, found);
        collect_rst_targets(description, found);
        break;
    }
    std::vector<RepoUrl> out;
    dedupe_in_order(found, out);
    return out;
}

bool name_match(const std::string& package, const std::string& repo_name) {
    return strip_non_alnum(to_lower(package)) == strip_non_alnum(to_lower(repo_name));
}

} // namespace radar
