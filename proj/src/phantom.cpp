#include "radar/phantom.hpp"

#include "radar/errors.hpp"

#include <iomanip>
#include <sstream>

namespace radar {

namespace {

std::string basename_of(const std::string& path) {
    auto slash = path.rfind('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

bool is_pkg_spec(const std::string& path) {
    // Root-level only: a vendored dependency's setup.py says nothing about
    // this package's own specification.
    return path == "setup.py" || path == "pyproject.toml";
}

} // namespace

PhantomReport phantom_report(const SdistInventory& inventory,
                             const git::RepoFileSet& repo_files) {
    if (inventory.entries.empty())
        throw Error(ErrorKind::empty_inventory,
                    "no files to compare for " + inventory.package);

    PhantomReport report;
    report.total_files = inventory.entries.size();
    for (const FileEntry& entry : inventory.entries) {
        if (repo_files.hashes.contains(entry.blob_sha1)) continue;
        ++report.phantom_files;
        if (entry.is_python) ++report.phantom_python_files;
        if (is_pkg_spec(entry.path)) report.pkg_spec_phantom = true;
        report.phantom_paths.push_back(entry.path);
    }
    report.matched_ratio =
        1.0 - static_cast<double>(report.phantom_files) /
                  static_cast<double>(report.total_files);
    return report;
}

LabeledReport observe(const SdistInventory& inventory, const PhantomReport& report,
                      int label) {
    LabeledReport out;
    out.label = label;
    for (const FileEntry& entry : inventory.entries)
        out.files.insert(basename_of(entry.path));
    for (const std::string& path : report.phantom_paths)
        out.phantom.insert(basename_of(path));
    return out;
}

std::map<std::string, RateRow> inclusion_and_phantom_rates(
    const std::vector<LabeledReport>& reports) {
    struct Tally {
        std::size_t shipped[2] = {0, 0}; // links containing the basename
        std::size_t ghosted[2] = {0, 0}; // links where it is phantom
    };
    std::size_t links[2] = {0, 0};
    std::map<std::string, Tally> tallies;

    for (const LabeledReport& report : reports) {
        int cls = report.label == 0 ? 0 : 1;
        ++links[cls];
        for (const std::string& name : report.files)
            ++tallies[name].shipped[cls];
        for (const std::string& name : report.phantom)
            ++tallies[name].ghosted[cls];
    }

    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };

    std::map<std::string, RateRow> table;
    for (const auto& [name, tally] : tallies) {
        RateRow row;
        row.inclusion_correct = ratio(tally.shipped[0], links[0]);
        row.phantom_correct = ratio(tally.ghosted[0], tally.shipped[0]);
        row.inclusion_incorrect = ratio(tally.shipped[1], links[1]);
        row.phantom_incorrect = ratio(tally.ghosted[1], tally.shipped[1]);
        table.emplace(name, row);
    }
    return table;
}

std::string rates_to_csv(const std::map<std::string, RateRow>& table) {
    std::ostringstream out;
    out << "filename,inclusion_correct,phantom_correct,inclusion_incorrect,"
           "phantom_incorrect\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& [name, row] : table)
        out << name << ',' << row.inclusion_correct << ',' << row.phantom_correct
            << ',' << row.inclusion_incorrect << ',' << row.phantom_incorrect << '\n';
    return out.str();
}

} // namespace radar
