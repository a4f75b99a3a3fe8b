#include "radar/sdist.hpp"

#include "radar/archive.hpp"
#include "radar/errors.hpp"
#include "radar/hashing.hpp"
#include "radar/util.hpp"

#include <algorithm>
#include <map>

namespace fs = std::filesystem;

namespace radar {

namespace {

void check_member_path(const std::string& path) {
    if (path.empty()) throw Error(ErrorKind::path_traversal, "empty member path");
    if (path.front() == '/' || path.front() == '\\' ||
        (path.size() >= 2 && path[1] == ':'))
        throw Error(ErrorKind::path_traversal, "absolute member path: " + path);
    for (const std::string& part : split(path, '/')) {
        if (part == "..") throw Error(ErrorKind::path_traversal, "member path escapes: " + path);
    }
}

std::string normalize_path(std::string path) {
    std::replace(path.begin(), path.end(), '\\', '/');
    while (starts_with(path, "./")) path = path.substr(2);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return path;
}

// Parses "<name>-<version>" out of the stripped top-level directory.
void split_name_version(const std::string& prefix, std::string* name, std::string* version) {
    std::size_t dash = prefix.rfind('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 >= prefix.size()) {
        *name = prefix;
        return;
    }
    *name = prefix.substr(0, dash);
    *version = prefix.substr(dash + 1);
}

} // namespace

SdistInventory open_sdist(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::not_found, "no such archive: " + path.string());

    std::string name = to_lower(path.filename().string());
    std::vector<ArchiveMember> members;
    if (ends_with(name, ".tar.gz") || ends_with(name, ".tgz")) {
        members = read_tar_gz(path);
    } else if (ends_with(name, ".zip")) {
        members = read_zip(path);
    } else {
        throw Error(ErrorKind::unsupported_format, "unrecognized archive: " + path.string());
    }

    // Later duplicates win, matching extraction order semantics.
    std::map<std::string, const ArchiveMember*> by_path;
    for (auto& member : members) {
        member.path = normalize_path(member.path);
        if (member.path.empty()) continue;
        check_member_path(member.path);
        by_path[member.path] = &member;
    }

    // Strip the shared top-level directory when there is exactly one and
    // every member lives inside it.
    std::string root_prefix;
    bool single_root = !by_path.empty();
    for (const auto& [p, _] : by_path) {
        std::size_t slash = p.find('/');
        if (slash == std::string::npos) {
            single_root = false;
            break;
        }
        std::string first = p.substr(0, slash);
        if (root_prefix.empty()) {
            root_prefix = first;
        } else if (root_prefix != first) {
            single_root = false;
            break;
        }
    }
    if (!single_root) root_prefix.clear();

    SdistInventory inventory;
    inventory.root_prefix = root_prefix;
    if (!root_prefix.empty())
        split_name_version(root_prefix, &inventory.package, &inventory.version);

    for (const auto& [p, member] : by_path) {
        FileEntry entry;
        entry.path = root_prefix.empty() ? p : p.substr(root_prefix.size() + 1);
        if (entry.path.empty()) continue;
        entry.size = member->content.size();
        entry.blob_sha1 = git_blob_sha1(std::span<const std::uint8_t>(member->content));
        entry.is_python = ends_with(entry.path, ".py");
        inventory.entries.push_back(std::move(entry));
    }
    std::sort(inventory.entries.begin(), inventory.entries.end(),
              [](const FileEntry& a, const FileEntry& b) { return a.path < b.path; });
    if (inventory.entries.empty())
        throw Error(ErrorKind::empty_inventory, "no files in archive: " + path.string());
    return inventory;
}

std::string dump_inventory(const SdistInventory& inventory) {
    std::string out;
    for (const FileEntry& entry : inventory.entries) {
        out += entry.blob_sha1;
        out += ' ';
        out += std::to_string(entry.size);
        out += ' ';
        out += entry.path;
        out += '\n';
    }
    return out;
}

} // namespace radar
