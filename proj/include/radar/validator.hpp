#pragma once

#include "radar/features.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace radar {

struct LabeledLink {
    FeatureVector features;
    int label = 0; // 0 = correct link, 1 = incorrect link
};

/// Dense row the models consume, in feature_names() order, unknown
/// maintainer counts already imputed.
using FeatureRow = std::array<double, feature_count>;

/// Fill-in values for the two optional counts, learned at training time
/// (median of the known values) and carried inside the model.
struct Imputation {
    double maintainers = 0.0;
    double maintainer_pkgs = 0.0;
};

FeatureRow vectorize(const FeatureVector& features, const Imputation& impute);

struct ForestParams {
    int trees = 100;
    int min_leaf = 1;
    int mtry = 3; // features drawn per split; ceil(sqrt(6))
};

/// One decision node; feature == -1 marks a leaf carrying its majority vote.
/// Nodes are stored in preorder, children after their parent.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int vote = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;
};

struct LogisticState {
    std::array<double, feature_count> mean{};
    std::array<double, feature_count> scale{};
    std::array<double, feature_count> weights{};
    double bias = 0.0;
};

struct ValidatorModel {
    std::string kind; // "forest" or "logistic"
    std::uint32_t seed = 0;
    Imputation impute;
    ForestParams params;      // forest only
    std::vector<Tree> trees;  // forest only
    LogisticState logistic;   // logistic only
};

/// Fits a classifier on the labeled links: imputation medians come from the
/// data as given, then the minority class is randomly oversampled with
/// replacement to parity before fitting. "forest" grows bagged Gini trees
/// (unlimited depth); "logistic" fits a standardized gradient-descent
/// baseline. Same seed, same data, same model. Throws DegenerateDataset
/// unless both labels are present.
ValidatorModel train(const std::vector<LabeledLink>& dataset, const std::string& kind,
                     std::uint32_t seed, const ForestParams& params = {});

/// Probability the link is incorrect. For a forest this is literally the
/// fraction of trees voting 1.
double predict_proba(const ValidatorModel& model, const FeatureVector& features);

/// Probability that a random incorrect link outranks a random correct one:
/// the Mann-Whitney estimator, midranks for ties. Throws SingleClass when
/// labels are all equal.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct Split {
    std::vector<LabeledLink> train;
    std::vector<LabeledLink> test;
};

/// Shuffles each label class separately and sets aside test_fraction of it
/// (rounded to nearest), so both splits keep the class balance.
Split stratified_split(const std::vector<LabeledLink>& dataset, double test_fraction,
                       std::uint32_t seed);

/// Appends random re-draws of the minority class until both classes are the
/// same size. The input order is preserved as a prefix.
std::vector<LabeledLink> oversample_to_parity(const std::vector<LabeledLink>& links,
                                              std::uint32_t seed);

struct GridPoint {
    ForestParams params;
    double auc = 0.0;
};

struct GridSearchResult {
    std::vector<GridPoint> tried; // fixed documented order
    ForestParams best;
};

/// Tries trees ∈ {50,100,200} × min_leaf ∈ {1,5} on an internal stratified
/// 80/20 split of the given data and keeps the combination with the best
/// held-out AUC (first wins a tie).
GridSearchResult grid_search(const std::vector<LabeledLink>& training, std::uint32_t seed);

/// Mean AUC drop when one feature column is shuffled across the evaluation
/// set, averaged over `repeats` shuffles; ordered like feature_names().
std::array<double, feature_count> permutation_importance(
    const ValidatorModel& model, const std::vector<LabeledLink>& evaluation,
    std::uint32_t seed, int repeats = 5);

/// Versioned text format: a header carrying kind/seed/feature order and
/// imputation, then the trained state (trees as preorder node records).
void save_model(const ValidatorModel& model, const std::filesystem::path& file);
ValidatorModel load_model(const std::filesystem::path& file);

/// Six feature columns plus label; empty cells for unknown maintainer counts.
std::string dataset_to_csv(const std::vector<LabeledLink>& links);
std::vector<LabeledLink> dataset_from_csv(std::string_view text);

} // namespace radar
