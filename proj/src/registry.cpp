#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "radar/registry.hpp"

#include "radar/errors.hpp"
#include "radar/hashing.hpp"
#include "radar/util.hpp"

#include <httplib.h>

#include <algorithm>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace radar {

namespace {

bool valid_package_name(const std::string& name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '.' || c == '-' || c == '_';
    });
}

std::string url_basename(const std::string& url) {
    std::string path = url;
    if (std::size_t q = path.find_first_of("?#"); q != std::string::npos) path = path.substr(0, q);
    std::size_t slash = path.rfind('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

DescriptionFormat parse_description_format(const std::string& content_type) {
    std::string lowered = to_lower(content_type);
    if (lowered.find("markdown") != std::string::npos) return DescriptionFormat::markdown;
    if (lowered.find("rst") != std::string::npos) return DescriptionFormat::rst;
    return DescriptionFormat::plain;
}

std::string optional_string(const ordered_json& node, const char* key) {
    auto it = node.find(key);
    if (it == node.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

// Splits "https://host[:port]/path" for the http client.
struct ParsedUrl {
    std::string origin; // scheme://host[:port]
    std::string path;   // starts with /
};

ParsedUrl split_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos)
        throw Error(ErrorKind::transport, "unsupported url: " + url);
    std::size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) return {url, "/"};
    return {url.substr(0, path), url.substr(path)};
}

} // namespace

ordered_json metadata_to_json(const MetadataDoc& doc) {
    ordered_json urls = ordered_json::object();
    for (const auto& [label, url] : doc.project_urls) urls[label] = url;
    const char* format = doc.description_format == DescriptionFormat::markdown ? "markdown"
                         : doc.description_format == DescriptionFormat::rst    ? "rst"
                                                                               : "plain";
    return ordered_json{{"name", doc.name},
                        {"version", doc.version},
                        {"home_page", doc.home_page},
                        {"download_url", doc.download_url},
                        {"project_urls", urls},
                        {"description_format", format},
                        {"sdist_url", doc.sdist_url},
                        {"sdist_filename", doc.sdist_filename},
                        {"sdist_sha256", doc.sdist_sha256}};
}

MetadataDoc parse_registry_document(const std::string& body) {
    ordered_json root = ordered_json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (root.is_discarded() || !root.is_object() || !root.contains("info") ||
        !root["info"].is_object())
        throw Error(ErrorKind::malformed_document, "registry document is not an info object");

    const ordered_json& info = root["info"];
    MetadataDoc doc;
    doc.name = optional_string(info, "name");
    doc.version = optional_string(info, "version");
    if (doc.name.empty() || doc.version.empty())
        throw Error(ErrorKind::malformed_document, "registry document lacks name or version");

    doc.home_page = optional_string(info, "home_page");
    doc.download_url = optional_string(info, "download_url");
    doc.description = optional_string(info, "description");
    doc.description_format = parse_description_format(optional_string(info, "description_content_type"));

    if (auto urls = info.find("project_urls"); urls != info.end() && urls->is_object()) {
        for (const auto& [label, url] : urls->items())
            if (url.is_string()) doc.project_urls.emplace_back(label, url.get<std::string>());
    }

    if (auto files = root.find("urls"); files != root.end() && files->is_array()) {
        for (const ordered_json& file : *files) {
            if (!file.is_object() || optional_string(file, "packagetype") != "sdist") continue;
            doc.sdist_url = optional_string(file, "url");
            doc.sdist_filename = optional_string(file, "filename");
            if (doc.sdist_filename.empty()) doc.sdist_filename = url_basename(doc.sdist_url);
            if (auto digests = file.find("digests"); digests != file.end() && digests->is_object())
                doc.sdist_sha256 = optional_string(*digests, "sha256");
            break;
        }
    }
    return doc;
}

FixtureSource::FixtureSource(fs::path root) : root_(std::move(root)) {}

std::string FixtureSource::fetch_document(const std::string& package, const std::string& version) {
    if (!fs::is_directory(root_))
        throw Error(ErrorKind::transport, "fixture root missing: " + root_.string());
    fs::path doc = root_ / "pypi" / package;
    if (!version.empty()) doc /= version;
    doc /= "json";
    if (!fs::exists(doc))
        throw Error(ErrorKind::not_found, package + (version.empty() ? "" : " " + version));
    return read_file_text(doc);
}

std::vector<std::uint8_t> FixtureSource::fetch_file(const std::string& url) {
    if (!fs::is_directory(root_))
        throw Error(ErrorKind::transport, "fixture root missing: " + root_.string());
    fs::path file = root_ / "files" / url_basename(url);
    if (!fs::exists(file))
        throw Error(ErrorKind::transport, "fixture file missing for " + url);
    return read_file_bytes(file);
}

HttpSource::HttpSource(std::string base_url) : base_url_(std::move(base_url)) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::string HttpSource::fetch_document(const std::string& package, const std::string& version) {
    std::string path = "/pypi/" + package + (version.empty() ? "" : "/" + version) + "/json";
    httplib::Client client(base_url_);
    client.set_follow_location(true);
    auto response = client.Get(path);
    if (!response)
        throw Error(ErrorKind::transport, base_url_ + path + ": " + to_string(response.error()));
    if (response->status == 404)
        throw Error(ErrorKind::not_found, package + (version.empty() ? "" : " " + version));
    if (response->status != 200)
        throw Error(ErrorKind::transport,
                    base_url_ + path + ": HTTP " + std::to_string(response->status));
    return response->body;
}

std::vector<std::uint8_t> HttpSource::fetch_file(const std::string& url) {
    ParsedUrl parsed = split_url(url);
    httplib::Client client(parsed.origin);
    client.set_follow_location(true);
    auto response = client.Get(parsed.path);
    if (!response)
        throw Error(ErrorKind::transport, url + ": " + to_string(response.error()));
    if (response->status != 200)
        throw Error(ErrorKind::transport, url + ": HTTP " + std::to_string(response->status));
    return {response->body.begin(), response->body.end()};
}

RegistryGateway::RegistryGateway(RegistrySource& source, fs::path cache_dir)
    : source_(source), cache_(std::move(cache_dir)) {}

MetadataDoc RegistryGateway::fetch_metadata(const std::string& package,
                                            const std::string& version) {
    if (!valid_package_name(package))
        throw Error(ErrorKind::invalid_argument, "invalid package name: '" + package + "'");

    std::string resolved = version;
    if (resolved.empty()) {
        // "latest" resolves through a pointer file so a warm cache needs no
        // network round-trip.
        fs::path pointer = cache_ / package / "latest";
        if (fs::exists(pointer)) resolved = trim(read_file_text(pointer));
    }
    if (!resolved.empty()) {
        fs::path cached = cache_ / package / resolved / "metadata";
        if (fs::exists(cached)) return parse_registry_document(read_file_text(cached));
    }

    std::string body = source_.fetch_document(package, version);
    MetadataDoc doc = parse_registry_document(body);
    fs::path dir = cache_ / package / doc.version;
    fs::create_directories(dir);
    write_file_atomic(dir / "metadata", body);
    if (version.empty()) write_file_atomic(cache_ / package / "latest", doc.version + "\n");
    return doc;
}

fs::path RegistryGateway::download_sdist(const MetadataDoc& doc) {
    if (doc.sdist_url.empty())
        throw Error(ErrorKind::no_sdist,
                    doc.name + " " + doc.version + " publishes no source distribution");

    fs::path dir = cache_ / doc.name / doc.version;
    fs::path target = dir / doc.sdist_filename;

    std::vector<std::uint8_t> bytes;
    if (fs::exists(target)) {
        bytes = read_file_bytes(target);
    } else {
        bytes = source_.fetch_file(doc.sdist_url);
    }
    if (!doc.sdist_sha256.empty()) {
        std::string digest = sha256_hex(bytes);
        if (digest != doc.sdist_sha256)
            throw Error(ErrorKind::checksum_mismatch, doc.sdist_filename + ": expected sha256 " +
                                                          doc.sdist_sha256 + ", got " + digest);
    }
    if (!fs::exists(target)) {
        fs::create_directories(dir);
        write_file_atomic(target, std::span<const std::uint8_t>(bytes));
    }
    return target;
}

MaintainerInfo UnknownMaintainerProvider::get(const std::string&) { return {}; }

FixtureMaintainerProvider::FixtureMaintainerProvider(const fs::path& file) {
    ordered_json root = ordered_json::parse(read_file_text(file), nullptr, false);
    if (root.is_discarded() || !root.is_object())
        throw Error(ErrorKind::malformed_document, "maintainer fixture: " + file.string());
    for (const auto& [package, entry] : root.items()) {
        if (!entry.is_object()) continue;
        MaintainerInfo info;
        if (entry.contains("maintainers") && entry["maintainers"].is_number_integer()) {
            int n = entry["maintainers"].get<int>();
            if (n >= 0) info.maintainer_count = n;
        }
        if (entry.contains("maintainer_pkgs") && entry["maintainer_pkgs"].is_number_integer()) {
            int n = entry["maintainer_pkgs"].get<int>();
            if (n >= 0) info.maintained_package_count = n;
        }
        table_[package] = info;
    }
}

MaintainerInfo FixtureMaintainerProvider::get(const std::string& package) {
    auto it = table_.find(package);
    return it == table_.end() ? MaintainerInfo{} : it->second;
}

MaintainerInfo get_maintainers(const std::string& package, MaintainerProvider& provider) {
    return provider.get(package);
}

} // namespace radar
