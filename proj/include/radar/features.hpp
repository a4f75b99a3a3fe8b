#pragma once

#include "radar/git/walker.hpp"
#include "radar/registry.hpp"
#include "radar/sdist.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radar {

/// The six signals the link validator scores. Maintainer counts stay
/// optional until model imputation fills them in — an offline run simply
/// does not know them.
struct FeatureVector {
    int phantom_pyfiles = 0;
    int pkg_spec_change = 0;      // {0,1}: root setup.py/pyproject.toml phantom
    int tag_alignment = 0;        // {0,1}: some tag ends with the version
    double name_similarity = 0.0; // [0,1]
    std::optional<int> maintainers;
    std::optional<int> maintainer_pkgs;
};

inline constexpr std::size_t feature_count = 6;

/// Column order used wherever features become a plain row: dataset CSV,
/// model files, importance reports.
const std::array<std::string, feature_count>& feature_names();

/// 1 − editdistance(a,b)/max(|a|,|b|), byte-wise; two empty strings count
/// as identical.
double normalized_levenshtein(std::string_view a, std::string_view b);

/// 1 iff some tag ends with the version string, byte for byte — "v1.2.1"
/// aligns with "1.2.1", "v1.2.10" does not.
int tag_alignment(const std::string& version, const std::vector<std::string>& tags);

/// Scores one (release, repository) pair. Name similarity is computed on
/// lowercased names since registry names are case-insensitive. Throws
/// EmptyInventory for a fileless sdist, like the phantom report it builds on.
FeatureVector extract_features(const SdistInventory& inventory,
                               const git::RepoFileSet& repo_files,
                               const std::vector<std::string>& tags,
                               const std::string& package_name,
                               const std::string& repo_name,
                               const MaintainerInfo& maintainers);

} // namespace radar
