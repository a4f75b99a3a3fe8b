#include "radar/pipeline.hpp"

#include "radar/errors.hpp"
#include "radar/git/object_store.hpp"
#include "radar/repo_url.hpp"
#include "radar/sdist.hpp"
#include "radar/util.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <exception>
#include <thread>
#include <utility>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace radar {

namespace {

void check_context(const PipelineContext& ctx) {
    if (!ctx.gateway || !ctx.resolver || !ctx.pages || !ctx.maintainers || !ctx.repos)
        throw Error(ErrorKind::invalid_argument, "pipeline context is missing a required part");
    if (!(ctx.threshold >= 0.0 && ctx.threshold <= 1.0))
        throw Error(ErrorKind::invalid_argument, "threshold must be within [0,1]");
    if (ctx.retriever.blob_uniqueness < 1 || ctx.retriever.topn < 1 ||
        ctx.retriever.name_similarity < 0.0 || ctx.retriever.name_similarity > 1.0)
        throw Error(ErrorKind::invalid_argument, "retriever parameters out of range");
}

/// Runs one stage body, converting any exception into a recorded stage
/// error and always booking the elapsed time.
struct StageRunner {
    RadarReport& report;

    template <typename Body>
    bool run(const char* stage, Body&& body) {
        const auto start = std::chrono::steady_clock::now();
        bool ok = true;
        try {
            body();
        } catch (const std::exception& e) {
            report.errors.push_back({stage, e.what()});
            ok = false;
        }
        const std::chrono::duration<double, std::milli> elapsed =
            std::chrono::steady_clock::now() - start;
        report.timings.push_back({stage, elapsed.count()});
        return ok;
    }
};

MetadataSummary summarize(const RetrievalOutcome& outcome) {
    MetadataSummary summary;
    if (outcome.url) summary.url = outcome.url->canonical;
    summary.source_field = std::string(to_string(outcome.source_field));
    summary.redirected = outcome.redirected;
    summary.candidates.reserve(outcome.candidates.size());
    for (const RepoUrl& candidate : outcome.candidates)
        summary.candidates.push_back(candidate.canonical);
    summary.notes = outcome.notes;
    return summary;
}

Route route_from_string(const std::string& text) {
    if (text == "metadata_validated") return Route::metadata_validated;
    if (text == "code_retrieved") return Route::code_retrieved;
    if (text == "none") return Route::none;
    throw Error(ErrorKind::malformed_document, "unknown route: " + text);
}

const ordered_json& require(const ordered_json& object, const char* key) {
    auto it = object.find(key);
    if (it == object.end())
        throw Error(ErrorKind::malformed_document, std::string("report lacks field: ") + key);
    return *it;
}

std::string require_string(const ordered_json& object, const char* key) {
    const ordered_json& value = require(object, key);
    if (!value.is_string())
        throw Error(ErrorKind::malformed_document, std::string(key) + " must be a string");
    return value.get<std::string>();
}

double require_number(const ordered_json& object, const char* key) {
    const ordered_json& value = require(object, key);
    if (!value.is_number())
        throw Error(ErrorKind::malformed_document, std::string(key) + " must be a number");
    return value.get<double>();
}

bool require_bool(const ordered_json& object, const char* key) {
    const ordered_json& value = require(object, key);
    if (!value.is_boolean())
        throw Error(ErrorKind::malformed_document, std::string(key) + " must be a boolean");
    return value.get<bool>();
}

int require_int(const ordered_json& object, const char* key) {
    const ordered_json& value = require(object, key);
    if (!value.is_number_integer())
        throw Error(ErrorKind::malformed_document, std::string(key) + " must be an integer");
    return value.get<int>();
}

std::vector<std::string> require_string_array(const ordered_json& object, const char* key) {
    const ordered_json& value = require(object, key);
    if (!value.is_array())
        throw Error(ErrorKind::malformed_document, std::string(key) + " must be an array");
    std::vector<std::string> items;
    items.reserve(value.size());
    for (const ordered_json& item : value) {
        if (!item.is_string())
            throw Error(ErrorKind::malformed_document,
                        std::string(key) + " must contain only strings");
        items.push_back(item.get<std::string>());
    }
    return items;
}

std::string optional_string(const ordered_json& object, const char* key) {
    auto it = object.find(key);
    if (it == object.end()) return {};
    if (!it->is_string())
        throw Error(ErrorKind::malformed_document, std::string(key) + " must be a string");
    return it->get<std::string>();
}

} // namespace

std::string_view to_string(Route route) {
    switch (route) {
    case Route::metadata_validated: return "metadata_validated";
    case Route::code_retrieved: return "code_retrieved";
    case Route::none: return "none";
    }
    return "none";
}

Route decide_route(bool metadata_url_found, const std::optional<ValidationSummary>& validation,
                   const std::optional<CodeRetrievalSummary>& code_retrieval) {
    if (metadata_url_found && validation && validation->correct)
        return Route::metadata_validated;
    if (code_retrieval && code_retrieval->repo_id) return Route::code_retrieved;
    return Route::none;
}

RadarReport run_pipeline(const std::string& package, const std::string& version,
                         const PipelineContext& ctx) {
    check_context(ctx);

    RadarReport report;
    report.package = package;
    report.version = version;
    StageRunner stages{report};

    MetadataDoc doc;
    bool have_doc = false;
    std::optional<RepoUrl> claimed;
    stages.run("metadata", [&] {
        doc = ctx.gateway->fetch_metadata(package, version);
        report.version = doc.version;
        have_doc = true;
        RetrievalOutcome outcome = retrieve_from_metadata(doc, *ctx.resolver, *ctx.pages);
        claimed = outcome.url;
        report.metadata = summarize(outcome);
    });

    std::optional<SdistInventory> inventory;
    if (have_doc) {
        stages.run("sdist", [&] {
            fs::path archive = ctx.gateway->download_sdist(doc);
            inventory = open_sdist(archive);
        });
    }

    if (claimed && inventory) {
        if (!ctx.model) {
            report.errors.push_back(
                {"validation", "validator model unavailable; claimed repository left unchecked"});
        } else {
            stages.run("validation", [&] {
                std::optional<fs::path> clone = ctx.repos->fetch(claimed->canonical);
                if (!clone)
                    throw Error(ErrorKind::not_found,
                                "claimed repository unavailable: " + claimed->canonical);
                git::RepoFileSet files = git::traverse(clone->string(), ctx.repos);
                std::vector<std::string> tags = git::ObjectStore(*clone).tag_names();
                MaintainerInfo counts = get_maintainers(package, *ctx.maintainers);
                FeatureVector features =
                    extract_features(*inventory, files, tags, package, claimed->name, counts);
                double probability = predict_proba(*ctx.model, features);
                bool correct = probability < ctx.threshold;
                report.validation = ValidationSummary{probability, ctx.threshold, correct};
                if (!correct) report.rejected_candidate = claimed->canonical;
            });
        }
    }

    const bool validated_correct = report.validation && report.validation->correct;
    if (inventory && !validated_correct) {
        if (!ctx.index) {
            report.errors.push_back(
                {"code_retrieval", "provenance index unavailable; retrieval skipped"});
        } else {
            stages.run("code_retrieval", [&] {
                RetrievalResult result =
                    get_most_probable(*inventory, *ctx.index, ctx.retriever, package);
                CodeRetrievalSummary summary;
                summary.repo_id = result.repo_id;
                summary.reason = std::string(to_string(result.reason));
                summary.params = ctx.retriever;
                report.code_retrieval = std::move(summary);
            });
        }
    }

    report.unvalidated = claimed.has_value() && !report.validation.has_value();
    report.route = decide_route(claimed.has_value(), report.validation, report.code_retrieval);
    switch (report.route) {
    case Route::metadata_validated: report.final_repo = claimed->canonical; break;
    case Route::code_retrieved: report.final_repo = "https://" + *report.code_retrieval->repo_id; break;
    case Route::none: break;
    }
    return report;
}

std::string report_to_json(const RadarReport& report) {
    ordered_json doc{{"schema_version", report.schema_version},
                     {"package", report.package},
                     {"version", report.version},
                     {"route", std::string(to_string(report.route))}};
    if (!report.final_repo.empty()) doc["final_repo"] = report.final_repo;
    if (report.metadata) {
        const MetadataSummary& m = *report.metadata;
        ordered_json block;
        if (!m.url.empty()) block["url"] = m.url;
        block["source_field"] = m.source_field;
        block["redirected"] = m.redirected;
        block["candidates"] = m.candidates;
        block["notes"] = m.notes;
        doc["metadata"] = std::move(block);
    }
    if (report.validation) {
        const ValidationSummary& v = *report.validation;
        doc["validation"] = ordered_json{{"probability", v.probability},
                                         {"threshold", v.threshold},
                                         {"correct", v.correct}};
    }
    if (report.code_retrieval) {
        const CodeRetrievalSummary& c = *report.code_retrieval;
        ordered_json block;
        if (c.repo_id) block["repo_id"] = *c.repo_id;
        block["reason"] = c.reason;
        block["params"] = ordered_json{{"blob_uniqueness", c.params.blob_uniqueness},
                                       {"topn", c.params.topn},
                                       {"name_similarity", c.params.name_similarity}};
        doc["code_retrieval"] = std::move(block);
    }
    if (!report.rejected_candidate.empty()) doc["rejected_candidate"] = report.rejected_candidate;
    if (report.unvalidated) doc["unvalidated"] = true;
    ordered_json errors = ordered_json::array();
    for (const StageError& e : report.errors)
        errors.push_back(ordered_json{{"stage", e.stage}, {"message", e.message}});
    doc["errors"] = std::move(errors);
    ordered_json timings = ordered_json::array();
    for (const StageTiming& t : report.timings)
        timings.push_back(ordered_json{{"stage", t.stage}, {"milliseconds", t.milliseconds}});
    doc["timings"] = std::move(timings);
    return doc.dump(2) + "\n";
}

RadarReport report_from_json(std::string_view text) {
    ordered_json doc = ordered_json::parse(text, nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorKind::malformed_document, "report is not valid JSON");
    if (!doc.is_object())
        throw Error(ErrorKind::malformed_document, "report must be a JSON object");

    RadarReport report;
    report.schema_version = require_int(doc, "schema_version");
    if (report.schema_version > report_schema_version)
        throw Error(ErrorKind::unsupported_format,
                    "report schema_version " + std::to_string(report.schema_version) +
                        " is newer than this build understands");
    if (report.schema_version < 1)
        throw Error(ErrorKind::malformed_document, "schema_version must be positive");
    report.package = require_string(doc, "package");
    report.version = require_string(doc, "version");
    report.route = route_from_string(require_string(doc, "route"));
    report.final_repo = optional_string(doc, "final_repo");

    if (auto it = doc.find("metadata"); it != doc.end()) {
        if (!it->is_object())
            throw Error(ErrorKind::malformed_document, "metadata must be an object");
        MetadataSummary m;
        m.url = optional_string(*it, "url");
        m.source_field = require_string(*it, "source_field");
        m.redirected = require_bool(*it, "redirected");
        m.candidates = require_string_array(*it, "candidates");
        m.notes = require_string_array(*it, "notes");
        report.metadata = std::move(m);
    }
    if (auto it = doc.find("validation"); it != doc.end()) {
        if (!it->is_object())
            throw Error(ErrorKind::malformed_document, "validation must be an object");
        ValidationSummary v;
        v.probability = require_number(*it, "probability");
        v.threshold = require_number(*it, "threshold");
        v.correct = require_bool(*it, "correct");
        report.validation = v;
    }
    if (auto it = doc.find("code_retrieval"); it != doc.end()) {
        if (!it->is_object())
            throw Error(ErrorKind::malformed_document, "code_retrieval must be an object");
        CodeRetrievalSummary c;
        if (auto id = it->find("repo_id"); id != it->end()) {
            if (!id->is_string())
                throw Error(ErrorKind::malformed_document, "repo_id must be a string");
            c.repo_id = id->get<std::string>();
        }
        c.reason = require_string(*it, "reason");
        const ordered_json& params = require(*it, "params");
        if (!params.is_object())
            throw Error(ErrorKind::malformed_document, "params must be an object");
        c.params.blob_uniqueness = require_int(params, "blob_uniqueness");
        c.params.topn = require_int(params, "topn");
        c.params.name_similarity = require_number(params, "name_similarity");
        report.code_retrieval = std::move(c);
    }
    report.rejected_candidate = optional_string(doc, "rejected_candidate");
    if (auto it = doc.find("unvalidated"); it != doc.end()) {
        if (!it->is_boolean())
            throw Error(ErrorKind::malformed_document, "unvalidated must be a boolean");
        report.unvalidated = it->get<bool>();
    }
    const ordered_json& errors = require(doc, "errors");
    if (!errors.is_array())
        throw Error(ErrorKind::malformed_document, "errors must be an array");
    for (const ordered_json& entry : errors) {
        if (!entry.is_object())
            throw Error(ErrorKind::malformed_document, "errors entries must be objects");
        report.errors.push_back({require_string(entry, "stage"), require_string(entry, "message")});
    }
    const ordered_json& timings = require(doc, "timings");
    if (!timings.is_array())
        throw Error(ErrorKind::malformed_document, "timings must be an array");
    for (const ordered_json& entry : timings) {
        if (!entry.is_object())
            throw Error(ErrorKind::malformed_document, "timings entries must be objects");
        report.timings.push_back(
            {require_string(entry, "stage"), require_number(entry, "milliseconds")});
    }
    return report;
}

fs::path report_filename(const BatchItem& item) {
    auto tame = [](std::string text) {
        for (char& c : text)
            if (c == '/' || c == '\\') c = '_';
        return text;
    };
    const std::string version = item.version.empty() ? "latest" : item.version;
    return tame(item.package) + "-" + tame(version) + ".json";
}

std::vector<RadarReport> run_batch(const std::vector<BatchItem>& items,
                                   const PipelineContext& ctx, const fs::path& out_dir,
                                   unsigned workers) {
    check_context(ctx);
    fs::create_directories(out_dir);
    if (items.empty()) return {};

    std::vector<RadarReport> reports(items.size());
    std::vector<std::exception_ptr> failures(items.size());
    std::atomic<std::size_t> cursor{0};

    auto work = [&] {
        for (std::size_t i = cursor.fetch_add(1); i < items.size(); i = cursor.fetch_add(1)) {
            try {
                reports[i] = run_pipeline(items[i].package, items[i].version, ctx);
                write_file_atomic(out_dir / report_filename(items[i]),
                                  report_to_json(reports[i]));
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };

    unsigned pool_size = workers != 0 ? workers : std::thread::hardware_concurrency();
    if (pool_size == 0) pool_size = 1;
    pool_size = std::min<std::size_t>(pool_size, items.size());
    std::vector<std::thread> pool;
    pool.reserve(pool_size - 1);
    for (unsigned t = 1; t < pool_size; ++t) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();

    for (const std::exception_ptr& failure : failures)
        if (failure) std::rethrow_exception(failure);
    return reports;
}

} // namespace radar
