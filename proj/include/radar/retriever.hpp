#pragma once

#include "radar/provenance.hpp"
#include "radar/sdist.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radar {

struct RetrieverParams {
    int blob_uniqueness = 500;    // discard blobs whose first commit lives in more repos
    int topn = 5;                 // candidates that make it into the majority vote
    double name_similarity = 0.5; // gate between winner repo name and package name

    bool operator==(const RetrieverParams&) const = default;
};

struct Candidate {
    std::string repo_id;
    int matched = 0; // distinct python blob digests credited to this repository
};

struct CandidateList {
    std::vector<Candidate> ranked; // matched descending, repo_id ascending
};

/// Looks up every distinct python blob digest of the sdist: digest → first
/// introducing commit → repositories carrying that commit, one credit per
/// digest. Digests whose repository list exceeds `blob_uniqueness` carry no
/// signal (boilerplate shipped everywhere) and are dropped.
CandidateList get_candidates(const SdistInventory& inventory, const ProvenanceIndex& index,
                             int blob_uniqueness);

enum class RetrievalReason {
    found,
    no_python_files, // nothing to query with
    no_candidates,   // no python blob known to the index, or all too common
    name_mismatch,   // a winner emerged but failed the similarity gate
};

std::string_view to_string(RetrievalReason reason);

struct RetrievalResult {
    std::optional<std::string> repo_id; // the winning fork root, when found
    RetrievalReason reason = RetrievalReason::no_candidates;
    double name_score = 0.0; // gate similarity of the winner, when there was one
    CandidateList candidates;
};

/// Ranks candidates, deforks the top `params.topn`, picks the most common
/// fork root (ties: larger summed match count, then smaller id), and answers
/// only if the root's repository name resembles the package name.
RetrievalResult get_most_probable(const SdistInventory& inventory, const ProvenanceIndex& index,
                                  const RetrieverParams& params, const std::string& package_name);

/// The gate's similarity: package name vs the repo_id's final path segment,
/// both lowercased with '-', '_' and '.' removed.
double repo_name_similarity(const std::string& package_name, const std::string& repo_id);

/// A labeled release for threshold sweeps: what was shipped and where it
/// really came from.
struct ReleaseCase {
    SdistInventory inventory;
    std::string package;
    std::string repo_id; // ground truth, already a fork root
};

struct SweepRow {
    double threshold = 0.0;
    std::size_t answered = 0;
    std::size_t correct = 0;
    double coverage = 0.0; // answered / cases
    double accuracy = 0.0; // correct / answered, 0 when nothing was answered
};

/// Runs retrieval once per case with the gate open, then applies each
/// threshold to the recorded winner scores. Raising the threshold can only
/// shrink the answered set.
std::vector<SweepRow> similarity_sweep(const std::vector<ReleaseCase>& cases,
                                       const ProvenanceIndex& index, RetrieverParams params,
                                       const std::vector<double>& thresholds);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

} // namespace radar
