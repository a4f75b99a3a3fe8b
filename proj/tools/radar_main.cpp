#include "radar/errors.hpp"
#include "radar/git/object_store.hpp"
#include "radar/git/walker.hpp"
#include "radar/metadata_retriever.hpp"
#include "radar/phantom.hpp"
#include "radar/pipeline.hpp"
#include "radar/provenance.hpp"
#include "radar/registry.hpp"
#include "radar/retriever.hpp"
#include "radar/sdist.hpp"
#include "radar/util.hpp"
#include "radar/validator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace radar;

namespace {

struct SourceOpts {
    std::string fixtures;
    std::string registry = "https://pypi.org";
    std::string cache = ".radar-cache";
    bool offline = false;
};

struct ContextOpts {
    SourceOpts source;
    std::string model_file;
    std::string index_dir;
    std::string repo_cache;
    std::string maintainers_file;
    std::string redirects_file;
    std::string pages_dir;
    double threshold = 0.5;
    RetrieverParams retriever;
};

/// Stand-in source for --offline runs without fixtures: anything not already
/// in the gateway cache is refused with a recognizable status.
class OfflineSource : public RegistrySource {
public:
    std::string fetch_document(const std::string& package, const std::string& version) override {
        throw Error(ErrorKind::transport,
                    "offline_skipped: registry lookup for " + package +
                        (version.empty() ? "" : " " + version));
    }
    std::vector<std::uint8_t> fetch_file(const std::string& url) override {
        throw Error(ErrorKind::transport, "offline_skipped: download of " + url);
    }
};

std::unique_ptr<RedirectResolver> load_redirects(const fs::path& file) {
    ordered_json doc = ordered_json::parse(read_file_text(file), nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error(ErrorKind::malformed_document,
                    "redirect map must be a JSON object: " + file.string());
    auto resolver = std::make_unique<FixtureRedirectResolver>();
    if (auto it = doc.find("moved"); it != doc.end()) {
        if (!it->is_object())
            throw Error(ErrorKind::malformed_document, "redirect map: moved must be an object");
        for (const auto& [from, to] : it->items()) {
            if (!to.is_string())
                throw Error(ErrorKind::malformed_document,
                            "redirect map: moved values must be strings");
            resolver->add_move(from, to.get<std::string>());
        }
    }
    if (auto it = doc.find("gone"); it != doc.end()) {
        if (!it->is_array())
            throw Error(ErrorKind::malformed_document, "redirect map: gone must be an array");
        for (const ordered_json& url : *it) {
            if (!url.is_string())
                throw Error(ErrorKind::malformed_document,
                            "redirect map: gone entries must be strings");
            resolver->add_gone(url.get<std::string>());
        }
    }
    return resolver;
}

/// Owns every pluggable part a subcommand may need, built once from flags.
struct Parts {
    std::unique_ptr<RegistrySource> source;
    std::unique_ptr<RegistryGateway> gateway;
    std::unique_ptr<RedirectResolver> resolver;
    std::unique_ptr<PageFetcher> pages;
    std::unique_ptr<MaintainerProvider> maintainers;
    std::unique_ptr<git::CacheDirFetcher> repos;
    std::optional<ValidatorModel> model;
    std::optional<ProvenanceIndex> index;

    PipelineContext context(const ContextOpts& opts) const {
        PipelineContext ctx;
        ctx.gateway = gateway.get();
        ctx.resolver = resolver.get();
        ctx.pages = pages.get();
        ctx.maintainers = maintainers.get();
        ctx.repos = repos.get();
        ctx.model = model ? &*model : nullptr;
        ctx.index = index ? &*index : nullptr;
        ctx.threshold = opts.threshold;
        ctx.retriever = opts.retriever;
        return ctx;
    }
};

Parts assemble(const ContextOpts& opts) {
    Parts parts;
    if (!opts.source.fixtures.empty())
        parts.source = std::make_unique<FixtureSource>(opts.source.fixtures);
    else if (opts.source.offline)
        parts.source = std::make_unique<OfflineSource>();
    else
        parts.source = std::make_unique<HttpSource>(opts.source.registry);
    parts.gateway = std::make_unique<RegistryGateway>(*parts.source, opts.source.cache);

    if (!opts.redirects_file.empty())
        parts.resolver = load_redirects(opts.redirects_file);
    else
        parts.resolver = std::make_unique<OfflineRedirectResolver>();

    if (!opts.pages_dir.empty())
        parts.pages = std::make_unique<FixturePageFetcher>(opts.pages_dir);
    else
        parts.pages = std::make_unique<NullPageFetcher>();

    if (!opts.maintainers_file.empty())
        parts.maintainers = std::make_unique<FixtureMaintainerProvider>(opts.maintainers_file);
    else
        parts.maintainers = std::make_unique<UnknownMaintainerProvider>();

    parts.repos = std::make_unique<git::CacheDirFetcher>(
        opts.repo_cache.empty() ? fs::path{} : fs::path(opts.repo_cache));

    if (!opts.model_file.empty()) parts.model = load_model(opts.model_file);
    if (!opts.index_dir.empty()) parts.index = ProvenanceIndex::load(opts.index_dir);
    return parts;
}

void add_source_options(CLI::App& cmd, SourceOpts& opts) {
    cmd.add_option("--fixtures", opts.fixtures,
                   "Serve registry documents and files from this directory")
        ->check(CLI::ExistingDirectory);
    cmd.add_option("--registry", opts.registry, "Registry base URL")->capture_default_str();
    cmd.add_option("--cache", opts.cache, "Metadata and sdist cache directory")
        ->capture_default_str();
    cmd.add_flag("--offline", opts.offline,
                 "Never touch the network; skipped lookups report offline_skipped");
}

void add_metadata_options(CLI::App& cmd, ContextOpts& opts) {
    cmd.add_option("--redirects", opts.redirects_file,
                   "JSON redirect map: {\"moved\": {from: to}, \"gone\": [urls]}")
        ->check(CLI::ExistingFile);
    cmd.add_option("--pages", opts.pages_dir, "Directory of page bodies for homepage scraping")
        ->check(CLI::ExistingDirectory);
}

void add_validation_options(CLI::App& cmd, ContextOpts& opts, bool model_required) {
    CLI::Option* model =
        cmd.add_option("--model", opts.model_file, "Trained validator model file")
            ->check(CLI::ExistingFile);
    if (model_required) model->required();
    cmd.add_option("--repo-cache", opts.repo_cache,
                   "Directory of local clones, keyed by repository URL");
    cmd.add_option("--maintainers", opts.maintainers_file, "Maintainer counts JSON file")
        ->check(CLI::ExistingFile);
    cmd.add_option("--threshold", opts.threshold,
                   "Probability at or above which the claimed link counts as wrong")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
}

void add_retriever_options(CLI::App& cmd, ContextOpts& opts, bool index_required) {
    CLI::Option* index = cmd.add_option("--index", opts.index_dir, "Provenance index directory")
                             ->check(CLI::ExistingDirectory);
    if (index_required) index->required();
    cmd.add_option("--blob-uniqueness", opts.retriever.blob_uniqueness,
                   "Drop blobs whose first commit appears in more repositories")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd.add_option("--topn", opts.retriever.topn, "Candidates entering the majority vote")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd.add_option("--name-similarity", opts.retriever.name_similarity,
                   "Similarity gate between package and repository name")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
}

void emit(const ordered_json& doc) { std::cout << doc.dump(2) << "\n"; }

ordered_json candidates_json(const std::vector<RepoUrl>& candidates) {
    ordered_json list = ordered_json::array();
    for (const RepoUrl& c : candidates) list.push_back(c.canonical);
    return list;
}

struct ValidationInputs {
    MetadataDoc doc;
    RepoUrl url;
    SdistInventory inventory;
    fs::path clone;
};

/// Shared legwork for `validate` and anything else that needs the claimed
/// repository checked out next to the release's inventory.
ValidationInputs gather_validation_inputs(Parts& parts, const std::string& package,
                                          const std::string& version) {
    ValidationInputs in;
    in.doc = parts.gateway->fetch_metadata(package, version);
    RetrievalOutcome outcome = retrieve_from_metadata(in.doc, *parts.resolver, *parts.pages);
    if (!outcome.url)
        throw Error(ErrorKind::not_found, "metadata offers no repository URL for " + package);
    in.url = *outcome.url;
    in.inventory = open_sdist(parts.gateway->download_sdist(in.doc));
    std::optional<fs::path> clone = parts.repos->fetch(in.url.canonical);
    if (!clone)
        throw Error(ErrorKind::not_found, "claimed repository unavailable: " + in.url.canonical);
    in.clone = *clone;
    return in;
}

std::vector<BatchItem> read_batch_file(const fs::path& file) {
    std::vector<BatchItem> items;
    std::istringstream lines(read_file_text(file));
    std::string line;
    while (std::getline(lines, line)) {
        std::string text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        std::istringstream fields(text);
        BatchItem item;
        fields >> item.package >> item.version;
        items.push_back(std::move(item));
    }
    if (items.empty())
        throw Error(ErrorKind::invalid_argument, "batch file lists no releases: " + file.string());
    return items;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finds and verifies the source repository behind package releases"};
    app.name("radar");
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI file (sections per subcommand)");

    int rc = 0;

    // --- metadata ---------------------------------------------------------
    struct {
        ContextOpts ctx;
        std::string package, version;
    } meta;
    CLI::App* metadata_cmd =
        app.add_subcommand("metadata", "Resolve the repository claimed by registry metadata");
    metadata_cmd->add_option("package", meta.package, "Package name")->required();
    metadata_cmd->add_option("version", meta.version, "Release version (latest when omitted)");
    add_source_options(*metadata_cmd, meta.ctx.source);
    add_metadata_options(*metadata_cmd, meta.ctx);
    metadata_cmd->callback([&] {
        Parts parts = assemble(meta.ctx);
        MetadataDoc doc = parts.gateway->fetch_metadata(meta.package, meta.version);
        RetrievalOutcome outcome = retrieve_from_metadata(doc, *parts.resolver, *parts.pages);
        ordered_json out{{"package", doc.name}, {"version", doc.version}};
        if (outcome.url) out["url"] = outcome.url->canonical;
        out["source_field"] = std::string(to_string(outcome.source_field));
        out["redirected"] = outcome.redirected;
        out["candidates"] = candidates_json(outcome.candidates);
        out["notes"] = outcome.notes;
        emit(out);
    });

    // --- phantom ----------------------------------------------------------
    struct {
        std::string sdist, repo, repo_cache;
    } ph;
    CLI::App* phantom_cmd = app.add_subcommand(
        "phantom", "List sdist files whose content never appears in a repository's history");
    phantom_cmd->add_option("sdist", ph.sdist, "Source distribution archive")
        ->required()
        ->check(CLI::ExistingFile);
    phantom_cmd->add_option("repo", ph.repo, "Repository path or URL")->required();
    phantom_cmd->add_option("--repo-cache", ph.repo_cache,
                            "Directory of local clones, keyed by repository URL");
    phantom_cmd->callback([&] {
        SdistInventory inventory = open_sdist(ph.sdist);
        git::CacheDirFetcher fetcher(ph.repo_cache.empty() ? fs::path{} : fs::path(ph.repo_cache));
        std::optional<fs::path> clone = fetcher.fetch(ph.repo);
        if (!clone) throw Error(ErrorKind::not_found, "repository unavailable: " + ph.repo);
        git::RepoFileSet files = git::traverse(clone->string(), &fetcher);
        PhantomReport report = phantom_report(inventory, files);
        emit(ordered_json{{"sdist", ph.sdist},
                          {"repo", ph.repo},
                          {"total_files", report.total_files},
                          {"phantom_files", report.phantom_files},
                          {"phantom_python_files", report.phantom_python_files},
                          {"pkg_spec_phantom", report.pkg_spec_phantom},
                          {"matched_ratio", report.matched_ratio},
                          {"phantom_paths", report.phantom_paths}});
    });

    // --- validate ---------------------------------------------------------
    struct {
        ContextOpts ctx;
        std::string package, version;
    } val;
    CLI::App* validate_cmd =
        app.add_subcommand("validate", "Score whether the claimed repository link is correct");
    validate_cmd->add_option("package", val.package, "Package name")->required();
    validate_cmd->add_option("version", val.version, "Release version (latest when omitted)");
    add_source_options(*validate_cmd, val.ctx.source);
    add_metadata_options(*validate_cmd, val.ctx);
    add_validation_options(*validate_cmd, val.ctx, /*model_required=*/true);
    validate_cmd->callback([&] {
        Parts parts = assemble(val.ctx);
        ValidationInputs in = gather_validation_inputs(parts, val.package, val.version);
        git::RepoFileSet files = git::traverse(in.clone.string(), parts.repos.get());
        std::vector<std::string> tags = git::ObjectStore(in.clone).tag_names();
        MaintainerInfo counts = get_maintainers(val.package, *parts.maintainers);
        FeatureVector features =
            extract_features(in.inventory, files, tags, val.package, in.url.name, counts);
        double probability = predict_proba(*parts.model, features);
        emit(ordered_json{
            {"package", in.doc.name},
            {"version", in.doc.version},
            {"url", in.url.canonical},
            {"probability", probability},
            {"threshold", val.ctx.threshold},
            {"verdict", probability < val.ctx.threshold ? "correct" : "incorrect"}});
    });

    // --- retrieve ---------------------------------------------------------
    struct {
        ContextOpts ctx;
        std::string package, version;
    } ret;
    CLI::App* retrieve_cmd = app.add_subcommand(
        "retrieve", "Find the repository from the release's files via the provenance index");
    retrieve_cmd->add_option("package", ret.package, "Package name")->required();
    retrieve_cmd->add_option("version", ret.version, "Release version (latest when omitted)");
    add_source_options(*retrieve_cmd, ret.ctx.source);
    add_retriever_options(*retrieve_cmd, ret.ctx, /*index_required=*/true);
    retrieve_cmd->callback([&] {
        Parts parts = assemble(ret.ctx);
        MetadataDoc doc = parts.gateway->fetch_metadata(ret.package, ret.version);
        SdistInventory inventory = open_sdist(parts.gateway->download_sdist(doc));
        RetrievalResult result =
            get_most_probable(inventory, *parts.index, ret.ctx.retriever, ret.package);
        ordered_json out{{"package", doc.name}, {"version", doc.version}};
        if (result.repo_id) out["repo_id"] = *result.repo_id;
        out["reason"] = std::string(to_string(result.reason));
        out["name_score"] = result.name_score;
        ordered_json ranked = ordered_json::array();
        for (const Candidate& c : result.candidates.ranked)
            ranked.push_back(ordered_json{{"repo_id", c.repo_id}, {"matched", c.matched}});
        out["candidates"] = std::move(ranked);
        emit(out);
    });

    // --- index build ------------------------------------------------------
    struct {
        std::string manifest, out;
    } idx;
    CLI::App* index_cmd = app.add_subcommand("index", "Provenance index maintenance");
    index_cmd->require_subcommand(1);
    CLI::App* build_cmd =
        index_cmd->add_subcommand("build", "Build the blob provenance index from a manifest");
    build_cmd->add_option("manifest", idx.manifest, "Corpus manifest JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    build_cmd->add_option("out", idx.out, "Output directory")->required();
    build_cmd->callback([&] {
        CorpusManifest manifest = load_manifest(idx.manifest);
        IndexStats stats = build_index(manifest, idx.out);
        emit(ordered_json{{"manifest", idx.manifest},
                          {"out", idx.out},
                          {"repos_indexed", stats.repos_indexed},
                          {"commits", stats.commits},
                          {"blobs", stats.blobs},
                          {"skipped", stats.skipped}});
    });

    // --- train ------------------------------------------------------------
    struct {
        std::string dataset, out, kind = "forest";
        std::uint32_t seed = 1;
        int trees = 100, min_leaf = 1;
        bool grid = false;
        double holdout = 0.0;
    } tr;
    CLI::App* train_cmd =
        app.add_subcommand("train", "Fit a link validator model from a labeled dataset");
    train_cmd->add_option("dataset", tr.dataset, "Labeled feature CSV")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--out", tr.out, "Where to write the model")->required();
    train_cmd->add_option("--kind", tr.kind, "Model family")
        ->check(CLI::IsMember({"forest", "logistic"}))
        ->capture_default_str();
    train_cmd->add_option("--seed", tr.seed, "Training seed")->capture_default_str();
    train_cmd->add_option("--trees", tr.trees, "Trees in the forest")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_option("--min-leaf", tr.min_leaf, "Smallest leaf the trees may grow")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_flag("--grid", tr.grid, "Pick trees/min-leaf by internal grid search");
    train_cmd->add_option("--holdout", tr.holdout,
                          "Fraction set aside to report a held-out AUC (0 trains on everything)")
        ->check(CLI::Range(0.0, 0.9))
        ->capture_default_str();
    train_cmd->callback([&] {
        std::vector<LabeledLink> links = dataset_from_csv(read_file_text(tr.dataset));
        Split split;
        const std::vector<LabeledLink>* fit = &links;
        if (tr.holdout > 0.0) {
            split = stratified_split(links, tr.holdout, tr.seed);
            fit = &split.train;
        }
        ForestParams params;
        params.trees = tr.trees;
        params.min_leaf = tr.min_leaf;
        if (tr.grid && tr.kind == "forest") params = grid_search(*fit, tr.seed).best;
        ValidatorModel model = train(*fit, tr.kind, tr.seed, params);
        save_model(model, tr.out);
        ordered_json out{{"dataset", tr.dataset}, {"kind", tr.kind}, {"seed", tr.seed},
                         {"links", links.size()},  {"model", tr.out}};
        if (tr.kind == "forest")
            out["params"] =
                ordered_json{{"trees", params.trees}, {"min_leaf", params.min_leaf}};
        if (tr.holdout > 0.0) {
            std::vector<double> scores;
            std::vector<int> labels;
            scores.reserve(split.test.size());
            for (const LabeledLink& link : split.test) {
                scores.push_back(predict_proba(model, link.features));
                labels.push_back(link.label);
            }
            out["heldout_auc"] = auc(scores, labels);
        }
        emit(out);
    });

    // --- sweep ------------------------------------------------------------
    struct {
        ContextOpts ctx;
        std::string corpus;
        std::vector<double> thresholds{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    } sw;
    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "Coverage/accuracy trade-off of the name gate over a labeled corpus");
    sweep_cmd
        ->add_option("corpus", sw.corpus,
                     "Labeled corpus: cases.json, or a directory containing one")
        ->required()
        ->check(CLI::ExistingPath);
    add_retriever_options(*sweep_cmd, sw.ctx, /*index_required=*/true);
    sweep_cmd->add_option("--thresholds", sw.thresholds, "Gate thresholds to tabulate")
        ->delimiter(',');
    sweep_cmd->callback([&] {
        Parts parts = assemble(sw.ctx);
        fs::path file = sw.corpus;
        if (fs::is_directory(file)) file /= "cases.json";
        ordered_json doc = ordered_json::parse(read_file_text(file), nullptr, false);
        if (doc.is_discarded() || !doc.is_array())
            throw Error(ErrorKind::malformed_document,
                        "corpus must be a JSON array of cases: " + file.string());
        std::vector<ReleaseCase> cases;
        for (const ordered_json& entry : doc) {
            if (!entry.is_object() || !entry.contains("sdist") || !entry.contains("package") ||
                !entry.contains("repo_id"))
                throw Error(ErrorKind::malformed_document,
                            "each case needs sdist, package, and repo_id fields");
            fs::path archive = file.parent_path() / entry["sdist"].get<std::string>();
            cases.push_back(ReleaseCase{open_sdist(archive), entry["package"].get<std::string>(),
                                        entry["repo_id"].get<std::string>()});
        }
        std::vector<SweepRow> rows =
            similarity_sweep(cases, *parts.index, sw.ctx.retriever, sw.thresholds);
        std::cout << sweep_to_csv(rows);
    });

    // --- pipeline ---------------------------------------------------------
    struct {
        ContextOpts ctx;
        std::string package, version, out, batch, out_dir = "reports";
        unsigned jobs = 0;
    } pl;
    CLI::App* pipeline_cmd = app.add_subcommand(
        "pipeline", "Metadata retrieval, link validation, and code-retrieval fallback in one run");
    pipeline_cmd->add_option("package", pl.package, "Package name");
    pipeline_cmd->add_option("version", pl.version, "Release version (latest when omitted)");
    add_source_options(*pipeline_cmd, pl.ctx.source);
    add_metadata_options(*pipeline_cmd, pl.ctx);
    add_validation_options(*pipeline_cmd, pl.ctx, /*model_required=*/false);
    add_retriever_options(*pipeline_cmd, pl.ctx, /*index_required=*/false);
    pipeline_cmd->add_option("--out", pl.out, "Also write the report to this file");
    pipeline_cmd->add_option("--batch", pl.batch, "File of releases, one `package [version]` per line")
        ->check(CLI::ExistingFile);
    pipeline_cmd->add_option("--out-dir", pl.out_dir, "Directory for batch reports")
        ->capture_default_str();
    pipeline_cmd->add_option("--jobs", pl.jobs, "Batch worker threads (0 = hardware)")
        ->capture_default_str();
    pipeline_cmd->callback([&] {
        if (pl.batch.empty() == pl.package.empty())
            throw CLI::ValidationError("--batch",
                                       "give either a package argument or --batch, not both");
        Parts parts = assemble(pl.ctx);
        PipelineContext ctx = parts.context(pl.ctx);
        if (pl.batch.empty()) {
            RadarReport report = run_pipeline(pl.package, pl.version, ctx);
            std::string body = report_to_json(report);
            if (!pl.out.empty()) write_file_atomic(pl.out, body);
            std::cout << body;
            rc = report.errors.empty() ? 0 : 1;
            return;
        }
        std::vector<BatchItem> items = read_batch_file(pl.batch);
        std::vector<RadarReport> reports = run_batch(items, ctx, pl.out_dir, pl.jobs);
        std::size_t failures = 0;
        ordered_json routes{{"metadata_validated", 0}, {"code_retrieved", 0}, {"none", 0}};
        for (const RadarReport& report : reports) {
            routes[std::string(to_string(report.route))] =
                routes[std::string(to_string(report.route))].get<int>() + 1;
            if (!report.errors.empty()) ++failures;
        }
        emit(ordered_json{{"releases", reports.size()},
                          {"out_dir", pl.out_dir},
                          {"routes", routes},
                          {"reports_with_errors", failures}});
        rc = failures == 0 ? 0 : 1;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "radar: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "radar: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
