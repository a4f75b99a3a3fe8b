#include "radar/archive.hpp"

#include "radar/errors.hpp"
#include "radar/util.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <span>

namespace fs = std::filesystem;

namespace radar {

std::vector<std::uint8_t> zlib_inflate(std::span<const std::uint8_t> data, bool raw_deflate) {
    z_stream stream{};
    // 47 = auto-detect zlib/gzip wrapper; -15 = raw deflate (zip entries).
    int window = raw_deflate ? -15 : 47;
    if (inflateInit2(&stream, window) != Z_OK)
        throw Error(ErrorKind::corrupt_archive, "inflateInit failed");

    std::vector<std::uint8_t> out;
    std::uint8_t buffer[65536];
    stream.next_in = const_cast<Bytef*>(data.data());
    stream.avail_in = static_cast<uInt>(data.size());
    while (true) {
        stream.next_out = buffer;
        stream.avail_out = sizeof(buffer);
        int rc = inflate(&stream, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            // Z_BUF_ERROR here means the input ran out mid-stream (the output
            // buffer is always fresh), i.e. a truncated archive.
            std::string detail = rc == Z_BUF_ERROR
                                     ? std::string("truncated compressed stream")
                                     : std::string("inflate failed: ") +
                                           (stream.msg ? stream.msg : "unknown error");
            inflateEnd(&stream);
            throw Error(ErrorKind::corrupt_archive, detail);
        }
        out.insert(out.end(), buffer, buffer + (sizeof(buffer) - stream.avail_out));
        if (rc == Z_STREAM_END) {
            if (!raw_deflate && stream.avail_in > 0) {
                // All-zero tails are padding; anything else should be another
                // gzip member (tar.gz files may carry several).
                std::span<const std::uint8_t> rest(stream.next_in, stream.avail_in);
                if (std::all_of(rest.begin(), rest.end(), [](auto b) { return b == 0; })) break;
                if (inflateReset2(&stream, window) != Z_OK) break;
                continue;
            }
            break;
        }
    }
    inflateEnd(&stream);
    return out;
}

namespace {

// --- tar ---

constexpr std::size_t tar_block = 512;

std::uint64_t parse_octal(const char* field, std::size_t len) {
    // GNU base-256 extension: high bit of the first byte set.
    if (len > 0 && (static_cast<unsigned char>(field[0]) & 0x80u) != 0) {
        std::uint64_t value = static_cast<unsigned char>(field[0]) & 0x7fu;
        for (std::size_t i = 1; i < len; ++i)
            value = (value << 8) | static_cast<unsigned char>(field[i]);
        return value;
    }
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < len; ++i) {
        char c = field[i];
        if (c == '\0' || c == ' ') {
            if (value > 0 || i > 0) break;
            continue;
        }
        if (c < '0' || c > '7')
            throw Error(ErrorKind::corrupt_archive, "bad octal field in tar header");
        value = value * 8 + static_cast<std::uint64_t>(c - '0');
    }
    return value;
}

std::string header_string(const char* field, std::size_t len) {
    std::size_t n = 0;
    while (n < len && field[n] != '\0') ++n;
    return std::string(field, n);
}

bool zero_block(std::span<const std::uint8_t> block) {
    return std::all_of(block.begin(), block.end(), [](std::uint8_t b) { return b == 0; });
}

// pax extended header: decimal-length-prefixed "len key=value\n" records.
void apply_pax_records(std::span<const std::uint8_t> data, std::string* path_override,
                       std::uint64_t* size_override, bool* has_size) {
    std::size_t pos = 0;
    while (pos < data.size()) {
        std::size_t len = 0;
        std::size_t digits = pos;
        while (digits < data.size() && data[digits] >= '0' && data[digits] <= '9') {
            len = len * 10 + (data[digits] - '0');
            ++digits;
        }
        if (digits == pos || digits >= data.size() || data[digits] != ' ' || len == 0 ||
            pos + len > data.size())
            break;
        std::string record(reinterpret_cast<const char*>(data.data()) + digits + 1,
                           len - (digits + 1 - pos) - 1);
        std::size_t eq = record.find('=');
        if (eq != std::string::npos) {
            std::string key = record.substr(0, eq);
            std::string value = record.substr(eq + 1);
            if (key == "path") *path_override = value;
            if (key == "size") {
                *size_override = std::stoull(value);
                *has_size = true;
            }
        }
        pos += len;
    }
}

std::vector<ArchiveMember> parse_tar(std::span<const std::uint8_t> tar) {
    std::vector<ArchiveMember> members;
    std::size_t pos = 0;
    std::string gnu_longname;
    std::string pax_path;
    std::uint64_t pax_size = 0;
    bool pax_has_size = false;

    while (pos + tar_block <= tar.size()) {
        std::span<const std::uint8_t> block = tar.subspan(pos, tar_block);
        if (zero_block(block)) break;
        const char* hdr = reinterpret_cast<const char*>(block.data());

        std::string name = header_string(hdr, 100);
        std::uint64_t size = parse_octal(hdr + 124, 12);
        char typeflag = hdr[156];
        std::string prefix = header_string(hdr + 345, 155);
        std::string magic = header_string(hdr + 257, 6);
        if (magic != "ustar" && magic != "ustar ")
            prefix.clear();     // pre-POSIX header, no prefix field
        bool is_meta = typeflag == 'L' || typeflag == 'x' || typeflag == 'g';
        if (pax_has_size && !is_meta) {
            size = pax_size;    // pax size wins over the octal field
            pax_has_size = false;
        }

        pos += tar_block;
        std::size_t data_len = static_cast<std::size_t>(size);
        if (pos + data_len > tar.size())
            throw Error(ErrorKind::corrupt_archive, "tar entry truncated: " + name);
        std::span<const std::uint8_t> data = tar.subspan(pos, data_len);
        pos += (data_len + tar_block - 1) / tar_block * tar_block;

        if (typeflag == 'L') {      // GNU long name applies to the next entry
            gnu_longname = header_string(reinterpret_cast<const char*>(data.data()), data.size());
            continue;
        }
        if (typeflag == 'x') {      // pax extended header for the next entry
            apply_pax_records(data, &pax_path, &pax_size, &pax_has_size);
            continue;
        }
        if (typeflag == 'g') continue; // pax global header: not used

        std::string path = name;
        if (!prefix.empty()) path = prefix + "/" + name;
        if (!gnu_longname.empty()) {
            path = gnu_longname;
            gnu_longname.clear();
        }
        if (!pax_path.empty()) {
            path = pax_path;
            pax_path.clear();
        }

        if (typeflag == '0' || typeflag == '\0') {
            members.push_back({std::move(path), std::vector<std::uint8_t>(data.begin(), data.end())});
        }
        // '5' directory, '1' hard link, '2' symlink and others: skipped
    }
    return members;
}

// --- zip ---

std::uint16_t read_u16(std::span<const std::uint8_t> d, std::size_t off) {
    return static_cast<std::uint16_t>(d[off] | (d[off + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> d, std::size_t off) {
    return static_cast<std::uint32_t>(d[off]) | (static_cast<std::uint32_t>(d[off + 1]) << 8) |
           (static_cast<std::uint32_t>(d[off + 2]) << 16) |
           (static_cast<std::uint32_t>(d[off + 3]) << 24);
}

std::vector<ArchiveMember> parse_zip(std::span<const std::uint8_t> zip) {
    // Locate the end-of-central-directory record (scan backwards over a
    // possible trailing comment).
    if (zip.size() < 22) throw Error(ErrorKind::corrupt_archive, "zip too small");
    std::size_t eocd = std::string::npos;
    std::size_t scan_start = zip.size() >= 22 + 65535 ? zip.size() - 22 - 65535 : 0;
    for (std::size_t i = zip.size() - 22 + 1; i-- > scan_start;) {
        if (zip[i] == 0x50 && zip[i + 1] == 0x4b && zip[i + 2] == 0x05 && zip[i + 3] == 0x06) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos)
        throw Error(ErrorKind::corrupt_archive, "zip end-of-central-directory not found");

    std::uint16_t entry_count = read_u16(zip, eocd + 10);
    std::uint32_t cd_offset = read_u32(zip, eocd + 16);

    std::vector<ArchiveMember> members;
    std::size_t pos = cd_offset;
    for (std::uint16_t i = 0; i < entry_count; ++i) {
        if (pos + 46 > zip.size() || read_u32(zip, pos) != 0x02014b50)
            throw Error(ErrorKind::corrupt_archive, "zip central directory corrupt");
        std::uint16_t method = read_u16(zip, pos + 10);
        std::uint32_t comp_size = read_u32(zip, pos + 20);
        std::uint16_t name_len = read_u16(zip, pos + 28);
        std::uint16_t extra_len = read_u16(zip, pos + 30);
        std::uint16_t comment_len = read_u16(zip, pos + 32);
        std::uint32_t local_offset = read_u32(zip, pos + 42);
        if (pos + 46 + name_len > zip.size())
            throw Error(ErrorKind::corrupt_archive, "zip name field truncated");
        std::string name(reinterpret_cast<const char*>(zip.data()) + pos + 46, name_len);
        pos += 46 + name_len + extra_len + comment_len;

        if (!name.empty() && name.back() == '/') continue; // directory entry

        if (local_offset + 30 > zip.size() || read_u32(zip, local_offset) != 0x04034b50)
            throw Error(ErrorKind::corrupt_archive, "zip local header corrupt: " + name);
        std::uint16_t local_name_len = read_u16(zip, local_offset + 26);
        std::uint16_t local_extra_len = read_u16(zip, local_offset + 28);
        std::size_t data_off = local_offset + 30 + local_name_len + local_extra_len;
        if (data_off + comp_size > zip.size())
            throw Error(ErrorKind::corrupt_archive, "zip data truncated: " + name);
        std::span<const std::uint8_t> raw = zip.subspan(data_off, comp_size);

        std::vector<std::uint8_t> content;
        if (method == 0) {
            content.assign(raw.begin(), raw.end());
        } else if (method == 8) {
            content = zlib_inflate(raw, /*raw_deflate=*/true);
        } else {
            throw Error(ErrorKind::unsupported_format,
                        "zip compression method " + std::to_string(method) + ": " + name);
        }
        members.push_back({std::move(name), std::move(content)});
    }
    return members;
}

} // namespace

std::vector<ArchiveMember> read_tar_gz(const fs::path& path) {
    auto compressed = read_file_bytes(path);
    if (compressed.size() < 2 || compressed[0] != 0x1f || compressed[1] != 0x8b)
        throw Error(ErrorKind::unsupported_format, "not a gzip file: " + path.string());
    auto tar = zlib_inflate(compressed);
    return parse_tar(tar);
}

std::vector<ArchiveMember> read_zip(const fs::path& path) {
    auto bytes = read_file_bytes(path);
    return parse_zip(bytes);
}

} // namespace radar
