#pragma once

#include "radar/registry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace radar {

enum class Platform { github, gitlab, bitbucket };

std::string_view platform_host(Platform platform);

/// One repository coordinate on a supported hosting platform.
struct RepoUrl {
    Platform platform;
    std::string owner;
    std::string name;      // never carries a .git suffix
    std::string raw;       // the text the match came from
    std::string canonical; // https://<host>/<owner>/<name>

    bool same_repo(const RepoUrl& other) const;
};

RepoUrl make_repo_url(Platform platform, std::string owner, std::string name,
                      std::string raw = {});

/// Every repository URL in `text`, in textual order, deduplicated by
/// case-folded coordinate. Recognized hosts: github.com, gitlab.com,
/// bitbucket.org (case-insensitive, scheme optional, scp-style git@ too).
/// Trailing `.git`, deeper path segments, queries, and fragments are cut.
std::vector<RepoUrl> extract_repo_urls(const std::string& text);

/// Single-URL variant: the string must contain exactly one repository URL
/// and no whitespace. Used for resolver answers and CLI arguments.
std::optional<RepoUrl> parse_repo_url(const std::string& text);

/// Repository URLs hidden in badges: shield-style image URLs of shape
/// img.shields.io/<platform>/<metric>/<owner>/<name>, and the link targets
/// wrapping badge images in markdown/rst descriptions. Textual order,
/// deduplicated against nothing else — callers merge with extract_repo_urls.
std::vector<RepoUrl> extract_badge_repo_urls(const std::string& description,
                                             DescriptionFormat format);

/// Package/repository name comparison: lowercase both sides, drop every
/// non-alphanumeric character, compare for equality.
bool name_match(const std::string& package, const std::string& repo_name);

} // namespace radar
