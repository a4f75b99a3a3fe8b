#include "radar/features.hpp"

#include "radar/phantom.hpp"
#include "radar/util.hpp"

#include <algorithm>
#include <numeric>

namespace radar {

const std::array<std::string, feature_count>& feature_names() {
    static const std::array<std::string, feature_count> names = {
        "phantom_pyfiles", "pkg_spec_change", "tag_alignment",
        "name_similarity", "maintainers",     "maintainer_pkgs",
    };
    return names;
}

double normalized_levenshtein(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t replace = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, replace});
        }
        std::swap(prev, cur);
    }
    double distance = static_cast<double>(prev[b.size()]);
    return 1.0 - distance / static_cast<double>(std::max(a.size(), b.size()));
}

int tag_alignment(const std::string& version, const std::vector<std::string>& tags) {
    for (const std::string& tag : tags)
        if (tag.ends_with(version)) return 1;
    return 0;
}

FeatureVector extract_features(const SdistInventory& inventory,
                               const git::RepoFileSet& repo_files,
                               const std::vector<std::string>& tags,
                               const std::string& package_name,
                               const std::string& repo_name,
                               const MaintainerInfo& maintainers) {
    PhantomReport report = phantom_report(inventory, repo_files);
    FeatureVector fv;
    fv.phantom_pyfiles = static_cast<int>(report.phantom_python_files);
    fv.pkg_spec_change = report.pkg_spec_phantom ? 1 : 0;
    fv.tag_alignment = tag_alignment(inventory.version, tags);
    fv.name_similarity =
        normalized_levenshtein(to_lower(package_name), to_lower(repo_name));
    fv.maintainers = maintainers.maintainer_count;
    fv.maintainer_pkgs = maintainers.maintained_package_count;
    return fv;
}

} // namespace radar
