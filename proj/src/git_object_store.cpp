#include "radar/git/object_store.hpp"

#include "radar/archive.hpp"
#include "radar/errors.hpp"
#include "radar/util.hpp"

#include <zlib.h>

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

namespace fs = std::filesystem;

namespace radar::git {

namespace {

std::uint32_t read_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

std::uint64_t read_be64(const std::uint8_t* p) {
    return (static_cast<std::uint64_t>(read_be32(p)) << 32) | read_be32(p + 4);
}

// Inflates from `data` until `expected` bytes are produced.
std::vector<std::uint8_t> inflate_exact(std::span<const std::uint8_t> data, std::size_t expected) {
    z_stream stream{};
    if (inflateInit(&stream) != Z_OK)
        throw Error(ErrorKind::missing_object, "inflateInit failed");
    std::vector<std::uint8_t> out(expected);
    stream.next_in = const_cast<Bytef*>(data.data());
    stream.avail_in = static_cast<uInt>(data.size());
    stream.next_out = out.data();
    stream.avail_out = static_cast<uInt>(out.size());
    int rc = Z_OK;
    while (rc == Z_OK && stream.avail_out > 0) rc = inflate(&stream, Z_NO_FLUSH);
    inflateEnd(&stream);
    if (stream.avail_out != 0)
        throw Error(ErrorKind::missing_object, "short inflate in pack entry");
    return out;
}

std::uint64_t parse_delta_size(std::span<const std::uint8_t> data, std::size_t& pos) {
    std::uint64_t size = 0;
    int shift = 0;
    while (pos < data.size()) {
        std::uint8_t byte = data[pos++];
        size |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
        shift += 7;
        if ((byte & 0x80) == 0) break;
    }
    return size;
}

std::vector<std::uint8_t> apply_delta(std::span<const std::uint8_t> base,
                                      std::span<const std::uint8_t> delta) {
    std::size_t pos = 0;
    std::uint64_t src_size = parse_delta_size(delta, pos);
    std::uint64_t dst_size = parse_delta_size(delta, pos);
    if (src_size != base.size())
        throw Error(ErrorKind::missing_object, "delta base size mismatch");
    std::vector<std::uint8_t> out;
    out.reserve(dst_size);
    while (pos < delta.size()) {
        std::uint8_t cmd = delta[pos++];
        if (cmd & 0x80) { // copy from base
            std::uint64_t offset = 0;
            std::uint64_t size = 0;
            for (int i = 0; i < 4; ++i)
                if (cmd & (1u << i)) offset |= static_cast<std::uint64_t>(delta[pos++]) << (8 * i);
            for (int i = 0; i < 3; ++i)
                if (cmd & (0x10u << i)) size |= static_cast<std::uint64_t>(delta[pos++]) << (8 * i);
            if (size == 0) size = 0x10000;
            if (offset + size > base.size())
                throw Error(ErrorKind::missing_object, "delta copy out of range");
            out.insert(out.end(), base.begin() + offset, base.begin() + offset + size);
        } else if (cmd != 0) { // insert literal
            if (pos + cmd > delta.size())
                throw Error(ErrorKind::missing_object, "delta literal out of range");
            out.insert(out.end(), delta.begin() + pos, delta.begin() + pos + cmd);
            pos += cmd;
        } else {
            throw Error(ErrorKind::missing_object, "zero delta opcode");
        }
    }
    if (out.size() != dst_size)
        throw Error(ErrorKind::missing_object, "delta result size mismatch");
    return out;
}

struct PackFile {
    fs::path pack_path;
    std::vector<std::uint8_t> pack;   // whole .pack, loaded lazily
    std::vector<ObjectId> ids;        // sorted as stored in the idx
    std::vector<std::uint64_t> offsets;

    std::optional<std::size_t> find(const ObjectId& id) const {
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || !(*it == id)) return std::nullopt;
        return static_cast<std::size_t>(it - ids.begin());
    }
};

PackFile load_pack_index(const fs::path& idx_path) {
    auto idx = read_file_bytes(idx_path);
    if (idx.size() < 8 + 256 * 4 || read_be32(idx.data()) != 0xff744f63u ||
        read_be32(idx.data() + 4) != 2)
        throw Error(ErrorKind::not_a_repository, "unsupported pack index: " + idx_path.string());

    const std::uint8_t* fanout = idx.data() + 8;
    std::uint32_t count = read_be32(fanout + 255 * 4);
    std::size_t sha_base = 8 + 256 * 4;
    std::size_t crc_base = sha_base + static_cast<std::size_t>(count) * 20;
    std::size_t off_base = crc_base + static_cast<std::size_t>(count) * 4;
    std::size_t big_base = off_base + static_cast<std::size_t>(count) * 4;
    if (idx.size() < big_base)
        throw Error(ErrorKind::not_a_repository, "truncated pack index: " + idx_path.string());

    PackFile pack;
    pack.pack_path = idx_path;
    pack.pack_path.replace_extension(".pack");
    pack.ids.reserve(count);
    pack.offsets.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        pack.ids.push_back(ObjectId::from_raw(
            std::span<const std::uint8_t>(idx.data() + sha_base + i * 20, 20)));
        std::uint32_t off = read_be32(idx.data() + off_base + i * 4);
        if (off & 0x80000000u) {
            std::size_t big_index = off & 0x7fffffffu;
            pack.offsets.push_back(read_be64(idx.data() + big_base + big_index * 8));
        } else {
            pack.offsets.push_back(off);
        }
    }
    return pack;
}

} // namespace

struct ObjectStore::Impl {
    fs::path repo_path;
    fs::path git_dir;
    std::vector<fs::path> object_dirs; // primary plus alternates
    mutable std::vector<PackFile> packs;
    mutable bool packs_loaded = false;
    mutable std::unordered_map<ObjectId, GitObject> pack_cache;

    void ensure_packs() const {
        if (packs_loaded) return;
        packs_loaded = true;
        for (const fs::path& dir : object_dirs) {
            fs::path pack_dir = dir / "pack";
            if (!fs::is_directory(pack_dir)) continue;
            std::vector<fs::path> idx_files;
            for (const auto& entry : fs::directory_iterator(pack_dir)) {
                if (entry.path().extension() == ".idx") idx_files.push_back(entry.path());
            }
            std::sort(idx_files.begin(), idx_files.end());
            for (const fs::path& idx : idx_files) packs.push_back(load_pack_index(idx));
        }
    }

    const std::vector<std::uint8_t>& pack_bytes(PackFile& pack) const {
        if (pack.pack.empty()) pack.pack = read_file_bytes(pack.pack_path);
        return pack.pack;
    }

    std::optional<fs::path> loose_path(const ObjectId& id) const {
        std::string hex = id.hex();
        for (const fs::path& dir : object_dirs) {
            fs::path p = dir / hex.substr(0, 2) / hex.substr(2);
            if (fs::exists(p)) return p;
        }
        return std::nullopt;
    }

    GitObject read_loose(const fs::path& path) const {
        auto raw = zlib_inflate(read_file_bytes(path));
        // "<type> <size>\0<payload>"
        std::size_t zero = 0;
        while (zero < raw.size() && raw[zero] != '\0') ++zero;
        if (zero == raw.size())
            throw Error(ErrorKind::missing_object, "corrupt loose object: " + path.string());
        std::string header(reinterpret_cast<const char*>(raw.data()), zero);
        std::size_t space = header.find(' ');
        if (space == std::string::npos)
            throw Error(ErrorKind::missing_object, "corrupt loose header: " + path.string());
        GitObject object;
        object.type = object_type_from_string(header.substr(0, space));
        object.data.assign(raw.begin() + zero + 1, raw.end());
        if (object.data.size() != std::stoull(header.substr(space + 1)))
            throw Error(ErrorKind::missing_object, "loose object size mismatch: " + path.string());
        return object;
    }

    // Reads the object stored at `offset` within `pack`, resolving deltas.
    GitObject read_pack_entry(PackFile& pack, std::uint64_t offset) const {
        const auto& bytes = pack_bytes(pack);
        if (offset >= bytes.size())
            throw Error(ErrorKind::missing_object, "pack offset out of range");
        std::size_t pos = offset;
        std::uint8_t byte = bytes[pos++];
        int type_code = (byte >> 4) & 7;
        std::uint64_t size = byte & 0x0f;
        int shift = 4;
        while (byte & 0x80) {
            byte = bytes[pos++];
            size |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
            shift += 7;
        }

        if (type_code == 6) { // OFS_DELTA
            byte = bytes[pos++];
            std::uint64_t rel = byte & 0x7f;
            while (byte & 0x80) {
                byte = bytes[pos++];
                rel = ((rel + 1) << 7) | (byte & 0x7f);
            }
            GitObject base = read_pack_entry(pack, offset - rel);
            auto delta = inflate_exact(
                std::span<const std::uint8_t>(bytes.data() + pos, bytes.size() - pos), size);
            return {base.type, apply_delta(base.data, delta)};
        }
        if (type_code == 7) { // REF_DELTA
            ObjectId base_id =
                ObjectId::from_raw(std::span<const std::uint8_t>(bytes.data() + pos, 20));
            pos += 20;
            GitObject base = read_object(base_id);
            auto delta = inflate_exact(
                std::span<const std::uint8_t>(bytes.data() + pos, bytes.size() - pos), size);
            return {base.type, apply_delta(base.data, delta)};
        }

        ObjectType type;
        switch (type_code) {
        case 1: type = ObjectType::commit; break;
        case 2: type = ObjectType::tree; break;
        case 3: type = ObjectType::blob; break;
        case 4: type = ObjectType::tag; break;
        default:
            throw Error(ErrorKind::missing_object,
                        "unsupported pack object type " + std::to_string(type_code));
        }
        auto data = inflate_exact(
            std::span<const std::uint8_t>(bytes.data() + pos, bytes.size() - pos), size);
        return {type, std::move(data)};
    }

    GitObject read_object(const ObjectId& id) const {
        if (auto loose = loose_path(id)) return read_loose(*loose);
        ensure_packs();
        if (auto cached = pack_cache.find(id); cached != pack_cache.end()) return cached->second;
        for (PackFile& pack : packs) {
            if (auto index = pack.find(id)) {
                GitObject object = read_pack_entry(pack, pack.offsets[*index]);
                pack_cache.emplace(id, object);
                return object;
            }
        }
        throw Error(ErrorKind::missing_object, "object not found: " + id.hex());
    }
};

ObjectStore::ObjectStore(const fs::path& repo_path) : impl_(std::make_unique<Impl>()) {
    impl_->repo_path = repo_path;
    fs::path dotgit = repo_path / ".git";
    if (fs::is_directory(dotgit)) {
        impl_->git_dir = dotgit;
    } else if (fs::is_regular_file(dotgit)) {
        // gitfile indirection: "gitdir: <path>"
        std::string content = trim(read_file_text(dotgit));
        if (!content.starts_with("gitdir:"))
            throw Error(ErrorKind::not_a_repository, "bad .git file: " + dotgit.string());
        fs::path target = trim(content.substr(7));
        impl_->git_dir = target.is_absolute() ? target : repo_path / target;
    } else if (fs::is_directory(repo_path / "objects") && fs::exists(repo_path / "HEAD")) {
        impl_->git_dir = repo_path; // bare repository
    } else {
        throw Error(ErrorKind::not_a_repository, repo_path.string());
    }
    fs::path objects = impl_->git_dir / "objects";
    if (!fs::is_directory(objects))
        throw Error(ErrorKind::not_a_repository, "no object database: " + objects.string());
    impl_->object_dirs.push_back(objects);
    fs::path alternates = objects / "info" / "alternates";
    if (fs::exists(alternates)) {
        for (const std::string& line : split(read_file_text(alternates), '\n')) {
            std::string entry = trim(line);
            if (entry.empty() || entry[0] == '#') continue;
            fs::path alt(entry);
            if (!alt.is_absolute()) alt = objects / alt;
            if (fs::is_directory(alt)) impl_->object_dirs.push_back(alt);
        }
    }
}

ObjectStore::~ObjectStore() = default;
ObjectStore::ObjectStore(ObjectStore&&) noexcept = default;
ObjectStore& ObjectStore::operator=(ObjectStore&&) noexcept = default;

bool ObjectStore::looks_like_repository(const fs::path& repo_path) {
    if (fs::exists(repo_path / ".git")) return true;
    return fs::is_directory(repo_path / "objects") && fs::exists(repo_path / "HEAD");
}

const fs::path& ObjectStore::git_dir() const { return impl_->git_dir; }
const fs::path& ObjectStore::repo_path() const { return impl_->repo_path; }

std::vector<std::pair<ObjectId, ObjectType>> ObjectStore::enumerate_objects() const {
    std::map<ObjectId, ObjectType> objects;

    for (const fs::path& dir : impl_->object_dirs) {
        if (!fs::is_directory(dir)) continue;
        for (const auto& shard : fs::directory_iterator(dir)) {
            std::string shard_name = shard.path().filename().string();
            if (shard_name.size() != 2 || !shard.is_directory()) continue;
            for (const auto& file : fs::directory_iterator(shard.path())) {
                std::string rest = file.path().filename().string();
                if (rest.size() != 38) continue;
                ObjectId id = ObjectId::from_hex(shard_name + rest);
                objects.emplace(id, impl_->read_loose(file.path()).type);
            }
        }
    }

    impl_->ensure_packs();
    for (PackFile& pack : impl_->packs) {
        for (std::size_t i = 0; i < pack.ids.size(); ++i) {
            if (objects.contains(pack.ids[i])) continue;
            objects.emplace(pack.ids[i], impl_->read_pack_entry(pack, pack.offsets[i]).type);
        }
    }

    return {objects.begin(), objects.end()};
}

GitObject ObjectStore::read(const ObjectId& id) const { return impl_->read_object(id); }

std::optional<GitObject> ObjectStore::try_read(const ObjectId& id) const {
    try {
        return impl_->read_object(id);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::missing_object) return std::nullopt;
        throw;
    }
}

bool ObjectStore::contains(const ObjectId& id) const {
    if (impl_->loose_path(id)) return true;
    impl_->ensure_packs();
    for (const PackFile& pack : impl_->packs)
        if (pack.find(id)) return true;
    return false;
}

std::vector<std::string> ObjectStore::tag_names() const {
    std::set<std::string> names;
    fs::path tags_dir = impl_->git_dir / "refs" / "tags";
    if (fs::is_directory(tags_dir)) {
        for (const auto& entry : fs::recursive_directory_iterator(tags_dir)) {
            if (!entry.is_regular_file()) continue;
            names.insert(fs::relative(entry.path(), tags_dir).generic_string());
        }
    }
    fs::path packed = impl_->git_dir / "packed-refs";
    if (fs::exists(packed)) {
        for (const std::string& raw : split(read_file_text(packed), '\n')) {
            std::string line = trim(raw);
            if (line.empty() || line[0] == '#' || line[0] == '^') continue;
            std::size_t space = line.find(' ');
            if (space == std::string::npos) continue;
            std::string ref = line.substr(space + 1);
            if (ref.starts_with("refs/tags/")) names.insert(ref.substr(10));
        }
    }
    return {names.begin(), names.end()};
}

} // namespace radar::git
