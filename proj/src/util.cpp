#include "radar/util.hpp"

#include "radar/errors.hpp"

#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <span>

namespace fs = std::filesystem;

namespace radar {

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorKind::io, "read failed for " + path.string());
    return data;
}

std::string read_file_text(const fs::path& path) {
    auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

namespace {

void write_atomic_impl(const fs::path& path, const void* data, std::size_t size) {
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    // Unique temp name so concurrent writers of the same path never collide.
    static std::atomic<std::uint64_t> counter{0};
    std::random_device rd;
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(rd()) + "." + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot create " + tmp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw Error(ErrorKind::io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

} // namespace

void write_file_atomic(const fs::path& path, std::string_view content) {
    write_atomic_impl(path, content.data(), content.size());
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> content) {
    write_atomic_impl(path, content.data(), content.size());
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

std::string strip_non_alnum(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(c);
    }
    return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            break;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::string repo_cache_key(std::string_view url) {
    std::string s(url);
    for (std::string_view scheme : {"https://", "http://", "git+https://", "git+http://",
                                    "git://", "ssh://", "file://"}) {
        if (starts_with(s, scheme)) {
            s = s.substr(scheme.size());
            break;
        }
    }
    if (starts_with(s, "git@")) s = s.substr(4);
    while (!s.empty() && s.back() == '/') s.pop_back();
    if (ends_with(s, ".git")) s = s.substr(0, s.size() - 4);
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '/' || c == ':') {
            out += "__";
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
                   c == '_') {
            out.push_back(c);
        } else {
            out.push_back('_');
        }
    }
    return out;
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

double parse_double(std::string_view s) {
    std::string copy(s);
    char* end = nullptr;
    double value = std::strtod(copy.c_str(), &end);
    if (end == copy.c_str()) throw Error(ErrorKind::invalid_argument, "not a number: " + copy);
    return value;
}

} // namespace radar
