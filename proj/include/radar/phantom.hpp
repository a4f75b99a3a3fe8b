#pragma once

#include "radar/git/walker.hpp"
#include "radar/sdist.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace radar {

/// Files that ship in a release's sdist but whose content never appears
/// anywhere in the claimed repository's history.
struct PhantomReport {
    std::size_t total_files = 0;
    std::size_t phantom_files = 0;
    std::size_t phantom_python_files = 0;
    bool pkg_spec_phantom = false;          // root-level setup.py / pyproject.toml
    std::vector<std::string> phantom_paths; // sorted, root_prefix-relative
    double matched_ratio = 0.0;             // 1 - phantom_files/total_files
};

/// Marks every inventory entry whose blob id is absent from
/// repo_files.hashes. Containment is the sole criterion: paths and names
/// play no part, so renaming a file without touching its bytes changes
/// nothing. setup.cfg is deliberately ignored for pkg_spec_phantom — build
/// backends regenerate it so routinely that it is phantom almost everywhere.
/// Throws EmptyInventory when the inventory holds no files.
PhantomReport phantom_report(const SdistInventory& inventory,
                             const git::RepoFileSet& repo_files);

/// One validated link reduced to the basenames it ships and the basenames
/// that turned out to be phantom, plus its ground-truth label
/// (0 = correct link, 1 = incorrect link).
struct LabeledReport {
    std::set<std::string> files;   // basenames present in the sdist
    std::set<std::string> phantom; // basenames phantom at any path
    int label = 0;
};

LabeledReport observe(const SdistInventory& inventory, const PhantomReport& report,
                      int label);

/// Per-class occurrence statistics for one basename.
struct RateRow {
    double inclusion_correct = 0.0;   // |correct links shipping it| / |correct links|
    double phantom_correct = 0.0;     // |correct links where phantom| / |correct links shipping it|
    double inclusion_incorrect = 0.0;
    double phantom_incorrect = 0.0;
};

/// Aggregates labeled reports into a basename-keyed rate table. Basenames
/// appearing in no link have no row; an absent label class contributes
/// zeros rather than dividing by zero.
std::map<std::string, RateRow> inclusion_and_phantom_rates(
    const std::vector<LabeledReport>& reports);

/// "filename,inclusion_correct,phantom_correct,inclusion_incorrect,phantom_incorrect"
/// with one fixed-precision row per basename.
std::string rates_to_csv(const std::map<std::string, RateRow>& table);

} // namespace radar
