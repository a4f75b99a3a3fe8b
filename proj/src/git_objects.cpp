#include "radar/git/objects.hpp"

#include "radar/errors.hpp"

#include <charconv>
#include <cstring>

namespace radar::git {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

ObjectId ObjectId::from_hex(std::string_view hex) {
    if (hex.size() != 40)
        throw Error(ErrorKind::invalid_argument, "object id must be 40 hex chars: " + std::string(hex));
    ObjectId id;
    for (std::size_t i = 0; i < 20; ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw Error(ErrorKind::invalid_argument, "bad hex in object id: " + std::string(hex));
        id.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return id;
}

ObjectId ObjectId::from_raw(std::span<const std::uint8_t> raw) {
    if (raw.size() != 20) throw Error(ErrorKind::invalid_argument, "raw object id must be 20 bytes");
    ObjectId id;
    std::memcpy(id.bytes.data(), raw.data(), 20);
    return id;
}

std::string ObjectId::hex() const {
    static const char* alphabet = "0123456789abcdef";
    std::string out;
    out.reserve(40);
    for (std::uint8_t byte : bytes) {
        out.push_back(alphabet[byte >> 4]);
        out.push_back(alphabet[byte & 0x0f]);
    }
    return out;
}

std::string_view to_string(ObjectType type) {
    switch (type) {
    case ObjectType::blob: return "blob";
    case ObjectType::tree: return "tree";
    case ObjectType::commit: return "commit";
    case ObjectType::tag: return "tag";
    }
    return "?";
}

ObjectType object_type_from_string(std::string_view name) {
    if (name == "blob") return ObjectType::blob;
    if (name == "tree") return ObjectType::tree;
    if (name == "commit") return ObjectType::commit;
    if (name == "tag") return ObjectType::tag;
    throw Error(ErrorKind::corrupt_archive, "unknown object type: " + std::string(name));
}

std::vector<TreeEntry> parse_tree(std::span<const std::uint8_t> data) {
    std::vector<TreeEntry> entries;
    std::size_t pos = 0;
    while (pos < data.size()) {
        // "<octal mode> <name>\0<20 raw bytes>"
        std::size_t space = pos;
        std::uint32_t mode = 0;
        while (space < data.size() && data[space] != ' ') {
            if (data[space] < '0' || data[space] > '7')
                throw Error(ErrorKind::missing_object, "corrupt tree entry mode");
            mode = mode * 8 + (data[space] - '0');
            ++space;
        }
        std::size_t zero = space + 1;
        while (zero < data.size() && data[zero] != '\0') ++zero;
        if (zero + 21 > data.size())
            throw Error(ErrorKind::missing_object, "truncated tree entry");
        TreeEntry entry;
        entry.mode = mode;
        entry.name.assign(reinterpret_cast<const char*>(data.data()) + space + 1,
                          zero - space - 1);
        entry.id = ObjectId::from_raw(data.subspan(zero + 1, 20));
        entries.push_back(std::move(entry));
        pos = zero + 21;
    }
    return entries;
}

CommitInfo parse_commit(std::span<const std::uint8_t> data) {
    CommitInfo info;
    std::string_view text(reinterpret_cast<const char*>(data.data()), data.size());
    std::size_t pos = 0;
    bool have_tree = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) break; // header/message separator
        if (line.starts_with("tree ")) {
            info.tree = ObjectId::from_hex(line.substr(5, 40));
            have_tree = true;
        } else if (line.starts_with("parent ")) {
            info.parents.push_back(ObjectId::from_hex(line.substr(7, 40)));
        } else if (line.starts_with("committer ")) {
            // "committer Name <mail> <epoch> <tz>"
            std::size_t gt = line.rfind('>');
            if (gt != std::string_view::npos) {
                std::string_view rest = line.substr(gt + 1);
                while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
                std::size_t sp = rest.find(' ');
                std::string_view epoch = sp == std::string_view::npos ? rest : rest.substr(0, sp);
                std::int64_t value = 0;
                auto [p, ec] = std::from_chars(epoch.data(), epoch.data() + epoch.size(), value);
                if (ec == std::errc()) info.commit_time = value;
            }
        }
    }
    if (!have_tree) throw Error(ErrorKind::missing_object, "commit without tree header");
    return info;
}

} // namespace radar::git
