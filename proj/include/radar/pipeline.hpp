#pragma once

#include "radar/git/walker.hpp"
#include "radar/metadata_retriever.hpp"
#include "radar/provenance.hpp"
#include "radar/registry.hpp"
#include "radar/retriever.hpp"
#include "radar/validator.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radar {

inline constexpr int report_schema_version = 1;

/// Where the final answer came from: the claimed metadata link survived
/// validation, the code retriever found a repository instead, or neither.
enum class Route { metadata_validated, code_retrieved, none };
std::string_view to_string(Route route);

/// Metadata stage result, reduced to the plain strings a report carries.
struct MetadataSummary {
    std::string url;          // canonical repository URL, empty when none found
    std::string source_field; // field that produced it ("none" otherwise)
    bool redirected = false;
    std::vector<std::string> candidates; // every coordinate seen, in order
    std::vector<std::string> notes;

    bool operator==(const MetadataSummary&) const = default;
};

struct ValidationSummary {
    double probability = 0.0; // chance the claimed link is wrong
    double threshold = 0.5;
    bool correct = false; // probability < threshold

    bool operator==(const ValidationSummary&) const = default;
};

struct CodeRetrievalSummary {
    std::optional<std::string> repo_id;
    std::string reason; // "found", "no_candidates", ...
    RetrieverParams params;

    bool operator==(const CodeRetrievalSummary&) const = default;
};

struct StageError {
    std::string stage;
    std::string message;

    bool operator==(const StageError&) const = default;
};

struct StageTiming {
    std::string stage;
    double milliseconds = 0.0;

    bool operator==(const StageTiming&) const = default;
};

/// One release's full pipeline story. final_repo is non-empty exactly when
/// route != none, and route == metadata_validated only ever appears together
/// with a correct validation verdict.
struct RadarReport {
    int schema_version = report_schema_version;
    std::string package;
    std::string version; // resolved version once metadata answered
    Route route = Route::none;
    std::string final_repo; // canonical URL, empty iff route == none
    std::optional<MetadataSummary> metadata;
    std::optional<ValidationSummary> validation;
    std::optional<CodeRetrievalSummary> code_retrieval;
    std::string rejected_candidate; // claimed URL that failed validation
    bool unvalidated = false;       // claimed URL present but never checked
    std::vector<StageError> errors;
    std::vector<StageTiming> timings;

    bool operator==(const RadarReport&) const = default;
};

/// The routing rule by itself, free of plumbing: a validated-correct
/// metadata link wins, a code-retrieval hit is the fallback, everything
/// else is a dead end.
Route decide_route(bool metadata_url_found, const std::optional<ValidationSummary>& validation,
                   const std::optional<CodeRetrievalSummary>& code_retrieval);

std::string report_to_json(const RadarReport& report);

/// Inverse of report_to_json. Throws MalformedDocument for anything that is
/// not a well-formed report and UnsupportedFormat for a schema_version newer
/// than this build understands.
RadarReport report_from_json(std::string_view text);

/// Everything run_pipeline needs, owned by the caller. The first five parts
/// are required; leaving model or index null switches the corresponding
/// stage off, which the report records as a stage error when the stage
/// would have run.
struct PipelineContext {
    RegistryGateway* gateway = nullptr;
    RedirectResolver* resolver = nullptr;
    PageFetcher* pages = nullptr;
    MaintainerProvider* maintainers = nullptr;
    git::RepoFetcher* repos = nullptr;
    const ValidatorModel* model = nullptr;
    const ProvenanceIndex* index = nullptr;
    double threshold = 0.5;
    RetrieverParams retriever;
};

/// Runs metadata retrieval, link validation, and — when the claimed link is
/// missing or rejected — code retrieval for one release. Stage failures are
/// recorded in the report and only block the stages that actually need the
/// missing input; a release without an sdist still gets its metadata
/// outcome, flagged unvalidated.
RadarReport run_pipeline(const std::string& package, const std::string& version,
                         const PipelineContext& ctx);

struct BatchItem {
    std::string package;
    std::string version; // empty means latest
};

/// File a batch run writes for one release: <package>-<version>.json with
/// "latest" standing in for an empty version.
std::filesystem::path report_filename(const BatchItem& item);

/// Runs every release through run_pipeline on a worker pool and writes each
/// report atomically into out_dir. Context parts must tolerate concurrent
/// use (the bundled fixtures and caches do). Reports come back in input
/// order; workers == 0 picks a size from the hardware.
std::vector<RadarReport> run_batch(const std::vector<BatchItem>& items,
                                   const PipelineContext& ctx,
                                   const std::filesystem::path& out_dir, unsigned workers = 0);

} // namespace radar
