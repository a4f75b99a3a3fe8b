#include "radar/retriever.hpp"

#include "radar/errors.hpp"
#include "radar/features.hpp"
#include "radar/util.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace radar {

namespace {

std::string gate_normalize(std::string_view name) {
    std::string lowered = to_lower(name);
    std::string out;
    out.reserve(lowered.size());
    for (char c : lowered)
        if (c != '-' && c != '_' && c != '.') out.push_back(c);
    return out;
}

std::string repo_basename(const std::string& repo_id) {
    std::size_t slash = repo_id.rfind('/');
    return slash == std::string::npos ? repo_id : repo_id.substr(slash + 1);
}

void check_params(const RetrieverParams& params) {
    if (params.blob_uniqueness < 1)
        throw Error(ErrorKind::invalid_argument, "blob_uniqueness must be at least 1");
    if (params.topn < 1) throw Error(ErrorKind::invalid_argument, "topn must be at least 1");
    if (params.name_similarity < 0.0 || params.name_similarity > 1.0)
        throw Error(ErrorKind::invalid_argument, "name_similarity must be within [0,1]");
}

} // namespace

double repo_name_similarity(const std::string& package_name, const std::string& repo_id) {
    return normalized_levenshtein(gate_normalize(package_name),
                                  gate_normalize(repo_basename(repo_id)));
}

CandidateList get_candidates(const SdistInventory& inventory, const ProvenanceIndex& index,
                             int blob_uniqueness) {
    if (blob_uniqueness < 1)
        throw Error(ErrorKind::invalid_argument, "blob_uniqueness must be at least 1");

    std::set<std::string> digests;
    for (const FileEntry& entry : inventory.entries)
        if (entry.is_python) digests.insert(entry.blob_sha1);
    if (digests.empty())
        throw Error(ErrorKind::no_python_files,
                    inventory.package + " " + inventory.version + " ships no python files");

    std::size_t known = 0;
    std::map<std::string, int> matched;
    for (const std::string& digest : digests) {
        std::optional<std::string> first = index.blob_to_first_commit(digest);
        if (!first) continue;
        ++known;
        std::vector<std::string> repos = index.commit_to_repos(*first);
        if (repos.size() > static_cast<std::size_t>(blob_uniqueness)) continue;
        for (const std::string& repo : repos) ++matched[repo];
    }
    if (matched.empty())
        throw Error(ErrorKind::empty_candidates,
                    known == 0 ? "no python blob of the sdist is known to the index"
                               : "every known blob is carried by too many repositories");

    CandidateList candidates;
    for (const auto& [repo, count] : matched) candidates.ranked.push_back({repo, count});
    std::sort(candidates.ranked.begin(), candidates.ranked.end(),
              [](const Candidate& a, const Candidate& b) {
                  return a.matched != b.matched ? a.matched > b.matched : a.repo_id < b.repo_id;
              });
    return candidates;
}

std::string_view to_string(RetrievalReason reason) {
    switch (reason) {
    case RetrievalReason::found: return "found";
    case RetrievalReason::no_python_files: return "no_python_files";
    case RetrievalReason::no_candidates: return "no_candidates";
    case RetrievalReason::name_mismatch: return "name_mismatch";
    }
    return "unknown";
}

RetrievalResult get_most_probable(const SdistInventory& inventory, const ProvenanceIndex& index,
                                  const RetrieverParams& params,
                                  const std::string& package_name) {
    check_params(params);

    RetrievalResult result;
    try {
        result.candidates = get_candidates(inventory, index, params.blob_uniqueness);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::no_python_files) {
            result.reason = RetrievalReason::no_python_files;
            return result;
        }
        if (e.kind() == ErrorKind::empty_candidates) {
            result.reason = RetrievalReason::no_candidates;
            return result;
        }
        throw;
    }

    struct RootScore {
        int votes = 0;
        int matched = 0;
    };
    std::map<std::string, RootScore> roots;
    std::size_t considered =
        std::min(result.candidates.ranked.size(), static_cast<std::size_t>(params.topn));
    for (std::size_t i = 0; i < considered; ++i) {
        const Candidate& candidate = result.candidates.ranked[i];
        RootScore& score = roots[index.defork(candidate.repo_id)];
        score.votes += 1;
        score.matched += candidate.matched;
    }

    const std::string* winner = nullptr;
    RootScore best;
    for (const auto& [root, score] : roots) {
        bool better = winner == nullptr || score.votes > best.votes ||
                      (score.votes == best.votes && score.matched > best.matched);
        // map order makes the remaining tie-break (smallest id) automatic
        if (better) {
            winner = &root;
            best = score;
        }
    }

    result.name_score = repo_name_similarity(package_name, *winner);
    if (result.name_score < params.name_similarity) {
        result.reason = RetrievalReason::name_mismatch;
        return result;
    }
    result.reason = RetrievalReason::found;
    result.repo_id = *winner;
    return result;
}

std::vector<SweepRow> similarity_sweep(const std::vector<ReleaseCase>& cases,
                                       const ProvenanceIndex& index, RetrieverParams params,
                                       const std::vector<double>& thresholds) {
    if (cases.empty())
        throw Error(ErrorKind::invalid_argument, "a sweep needs at least one labeled case");
    check_params(params);

    struct Outcome {
        bool found = false;
        double score = 0.0;
        bool correct = false;
    };
    std::vector<Outcome> outcomes;
    outcomes.reserve(cases.size());
    params.name_similarity = 0.0; // record every winner; thresholds are applied below
    for (const ReleaseCase& item : cases) {
        RetrievalResult result = get_most_probable(item.inventory, index, params, item.package);
        Outcome outcome;
        outcome.found = result.reason == RetrievalReason::found;
        outcome.score = result.name_score;
        outcome.correct = outcome.found && *result.repo_id == item.repo_id;
        outcomes.push_back(outcome);
    }

    std::vector<SweepRow> rows;
    for (double threshold : thresholds) {
        if (threshold < 0.0 || threshold > 1.0)
            throw Error(ErrorKind::invalid_argument, "sweep thresholds must be within [0,1]");
        SweepRow row;
        row.threshold = threshold;
        for (const Outcome& outcome : outcomes) {
            if (!outcome.found || outcome.score < threshold) continue;
            ++row.answered;
            if (outcome.correct) ++row.correct;
        }
        row.coverage = static_cast<double>(row.answered) / static_cast<double>(cases.size());
        row.accuracy = row.answered == 0 ? 0.0
                                         : static_cast<double>(row.correct) /
                                               static_cast<double>(row.answered);
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "threshold,coverage,accuracy\n";
    char buffer[128];
    for (const SweepRow& row : rows) {
        std::snprintf(buffer, sizeof buffer, "%.2f,%.4f,%.4f\n", row.threshold, row.coverage,
                      row.accuracy);
        out << buffer;
    }
    return out.str();
}

} // namespace radar
