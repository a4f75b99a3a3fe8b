#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace radar {

enum class DescriptionFormat { markdown, rst, plain };

/// Normalized view of one release's registry document. Everything downstream
/// reads this, never raw registry JSON.
struct MetadataDoc {
    std::string name;
    std::string version;
    std::string home_page;     // empty when the registry reports none
    std::string download_url;  // ditto
    std::vector<std::pair<std::string, std::string>> project_urls; // source order
    std::string description;
    DescriptionFormat description_format = DescriptionFormat::plain;
    std::string sdist_url;      // empty: release publishes no sdist
    std::string sdist_filename;
    std::string sdist_sha256;   // empty: registry carries no digest
};

nlohmann::ordered_json metadata_to_json(const MetadataDoc& doc);

/// Where registry documents and hosted files come from. Implementations:
/// a directory of fixtures (offline) or the live JSON API.
class RegistrySource {
public:
    virtual ~RegistrySource() = default;
    /// Raw JSON document for a package; empty version means "latest".
    virtual std::string fetch_document(const std::string& package,
                                       const std::string& version) = 0;
    virtual std::vector<std::uint8_t> fetch_file(const std::string& url) = 0;
};

/// Serves documents from a directory tree laid out like the JSON API:
/// <root>/pypi/<package>/json, <root>/pypi/<package>/<version>/json, and
/// hosted files under <root>/files/<basename>.
class FixtureSource : public RegistrySource {
public:
    explicit FixtureSource(std::filesystem::path root);
    std::string fetch_document(const std::string& package, const std::string& version) override;
    std::vector<std::uint8_t> fetch_file(const std::string& url) override;

private:
    std::filesystem::path root_;
};

/// Live JSON API client (e.g. https://pypi.org). Follows redirects; 404 maps
/// to NotFound, connection problems to TransportError.
class HttpSource : public RegistrySource {
public:
    explicit HttpSource(std::string base_url);
    std::string fetch_document(const std::string& package, const std::string& version) override;
    std::vector<std::uint8_t> fetch_file(const std::string& url) override;

private:
    std::string base_url_;
};

/// Fetches, normalizes, and caches release metadata and sdists. Cache layout:
/// <cache>/<package>/<version>/metadata holds the raw document,
/// <cache>/<package>/<version>/<filename> the sdist, and
/// <cache>/<package>/latest the most recently seen latest-version string.
class RegistryGateway {
public:
    RegistryGateway(RegistrySource& source, std::filesystem::path cache_dir);

    /// Document for (package, version); latest version when omitted. A warm
    /// cache answers without touching the source.
    MetadataDoc fetch_metadata(const std::string& package, const std::string& version = "");

    /// Downloads the release's sdist into the cache and returns its path.
    /// Verifies the registry digest when one is present.
    std::filesystem::path download_sdist(const MetadataDoc& doc);

private:
    RegistrySource& source_;
    std::filesystem::path cache_;
};

/// Parses a raw JSON API document into the normalized form. Exposed for the
/// gateway's cache path and for tests.
MetadataDoc parse_registry_document(const std::string& body);

struct MaintainerInfo {
    std::optional<int> maintainer_count;
    std::optional<int> maintained_package_count;
};

class MaintainerProvider {
public:
    virtual ~MaintainerProvider() = default;
    virtual MaintainerInfo get(const std::string& package) = 0;
};

/// Offline default: every package is unknown.
class UnknownMaintainerProvider : public MaintainerProvider {
public:
    MaintainerInfo get(const std::string& package) override;
};

/// Reads a JSON file {"pkg": {"maintainers": n, "maintainer_pkgs": m}, …}.
class FixtureMaintainerProvider : public MaintainerProvider {
public:
    explicit FixtureMaintainerProvider(const std::filesystem::path& file);
    MaintainerInfo get(const std::string& package) override;

private:
    std::map<std::string, MaintainerInfo> table_;
};

MaintainerInfo get_maintainers(const std::string& package, MaintainerProvider& provider);

} // namespace radar
