#include "radar/validator.hpp"

#include "radar/errors.hpp"
#include "radar/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

namespace radar {

namespace {

// mt19937 output is pinned by the standard; the <random> distributions are
// not. All randomness below draws from the engine directly so a model is
// reproducible everywhere, not just on one standard library.
std::mt19937 seeded(std::uint32_t seed, std::uint32_t salt, std::uint32_t extra = 0) {
    std::seed_seq seq{seed, salt, extra};
    return std::mt19937(seq);
}

std::uint32_t bounded(std::mt19937& rng, std::uint32_t n) {
    return rng() % n; // modulo bias is noise at these scales; determinism matters
}

template <class T>
void shuffle_in_place(std::vector<T>& values, std::mt19937& rng) {
    for (std::size_t i = values.size(); i > 1; --i)
        std::swap(values[i - 1], values[bounded(rng, static_cast<std::uint32_t>(i))]);
}

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return (values[mid - 1] + values[mid]) / 2.0;
}

double gini(std::size_t n0, std::size_t n1) {
    double n = static_cast<double>(n0 + n1);
    if (n == 0.0) return 0.0;
    double p0 = static_cast<double>(n0) / n;
    double p1 = static_cast<double>(n1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeBuilder {
    const std::vector<FeatureRow>& rows;
    const std::vector<int>& labels;
    const ForestParams& params;
    std::mt19937& rng;
    std::vector<TreeNode> nodes;

    // Grows the subtree over idx[lo, hi) and returns its root's node index.
    // Nodes land in preorder because each node is appended before its
    // children are built.
    int build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) {
        int me = static_cast<int>(nodes.size());
        nodes.push_back({});

        std::size_t len = hi - lo;
        std::size_t n1 = 0;
        for (std::size_t i = lo; i < hi; ++i) n1 += labels[idx[i]] != 0 ? 1 : 0;
        std::size_t n0 = len - n1;
        std::size_t min_leaf = static_cast<std::size_t>(params.min_leaf);

        auto leaf = [&] {
            nodes[me].vote = n1 > n0 ? 1 : 0;
            return me;
        };
        if (n0 == 0 || n1 == 0 || len < 2 * min_leaf) return leaf();

        // Per-split feature subsample: partial Fisher-Yates, first mtry slots.
        std::array<int, feature_count> order;
        std::iota(order.begin(), order.end(), 0);
        int mtry = std::min<int>(params.mtry, feature_count);
        for (int i = 0; i < mtry; ++i) {
            auto j = static_cast<std::size_t>(i) +
                     bounded(rng, static_cast<std::uint32_t>(feature_count - i));
            std::swap(order[static_cast<std::size_t>(i)], order[j]);
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = std::numeric_limits<double>::infinity();
        std::vector<std::pair<double, int>> column(len);
        for (int fi = 0; fi < mtry; ++fi) {
            int f = order[static_cast<std::size_t>(fi)];
            for (std::size_t i = 0; i < len; ++i) {
                std::size_t row = idx[lo + i];
                column[i] = {rows[row][static_cast<std::size_t>(f)], labels[row]};
            }
            std::sort(column.begin(), column.end());
            std::size_t left1 = 0;
            for (std::size_t k = 1; k < len; ++k) {
                left1 += column[k - 1].second != 0 ? 1 : 0;
                if (column[k].first == column[k - 1].first) continue;
                std::size_t nl = k;
                std::size_t nr = len - k;
                if (nl < min_leaf || nr < min_leaf) continue;
                std::size_t l1 = left1;
                std::size_t l0 = nl - l1;
                std::size_t r1 = n1 - l1;
                std::size_t r0 = nr - r1;
                double score = (static_cast<double>(nl) * gini(l0, l1) +
                                static_cast<double>(nr) * gini(r0, r1)) /
                               static_cast<double>(len);
                if (score < best_score) {
                    double threshold = (column[k - 1].first + column[k].first) / 2.0;
                    // The midpoint of two adjacent doubles can round up to the
                    // larger one, which would send everything left; fall back
                    // to the lower value so both sides stay nonempty.
                    if (!(threshold < column[k].first)) threshold = column[k - 1].first;
                    best_score = score;
                    best_feature = f;
                    best_threshold = threshold;
                }
            }
        }
        if (best_feature < 0) return leaf();

        auto split_point = std::partition(
            idx.begin() + static_cast<std::ptrdiff_t>(lo),
            idx.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t row) {
                return rows[row][static_cast<std::size_t>(best_feature)] <= best_threshold;
            });
        auto mid = static_cast<std::size_t>(split_point - idx.begin());
        int left = build(idx, lo, mid);
        int right = build(idx, mid, hi);
        nodes[me].feature = best_feature;
        nodes[me].threshold = best_threshold;
        nodes[me].left = left;
        nodes[me].right = right;
        return me;
    }
};

std::vector<Tree> fit_forest(const std::vector<FeatureRow>& rows,
                             const std::vector<int>& labels, const ForestParams& params,
                             std::uint32_t seed) {
    std::vector<Tree> trees;
    trees.reserve(static_cast<std::size_t>(params.trees));
    auto n = static_cast<std::uint32_t>(rows.size());
    for (int t = 0; t < params.trees; ++t) {
        auto rng = seeded(seed, 0xC3, static_cast<std::uint32_t>(t));
        std::vector<std::size_t> idx(rows.size());
        for (std::size_t& i : idx) i = bounded(rng, n);
        TreeBuilder builder{rows, labels, params, rng, {}};
        builder.build(idx, 0, idx.size());
        trees.push_back(Tree{std::move(builder.nodes)});
    }
    return trees;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

LogisticState fit_logistic(const std::vector<FeatureRow>& rows,
                           const std::vector<int>& labels) {
    LogisticState state;
    auto n = static_cast<double>(rows.size());
    for (std::size_t f = 0; f < feature_count; ++f) {
        double sum = 0.0;
        for (const FeatureRow& row : rows) sum += row[f];
        state.mean[f] = sum / n;
        double var = 0.0;
        for (const FeatureRow& row : rows) {
            double d = row[f] - state.mean[f];
            var += d * d;
        }
        double sd = std::sqrt(var / n);
        state.scale[f] = sd > 0.0 ? sd : 1.0;
    }

    constexpr int iterations = 2000;
    constexpr double rate = 0.4;
    for (int it = 0; it < iterations; ++it) {
        std::array<double, feature_count> grad{};
        double grad_bias = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double z = state.bias;
            for (std::size_t f = 0; f < feature_count; ++f)
                z += state.weights[f] * (rows[i][f] - state.mean[f]) / state.scale[f];
            double err = sigmoid(z) - labels[i];
            for (std::size_t f = 0; f < feature_count; ++f)
                grad[f] += err * (rows[i][f] - state.mean[f]) / state.scale[f];
            grad_bias += err;
        }
        for (std::size_t f = 0; f < feature_count; ++f)
            state.weights[f] -= rate * grad[f] / n;
        state.bias -= rate * grad_bias / n;
    }
    return state;
}

double score_row(const ValidatorModel& model, const FeatureRow& row) {
    if (model.kind == "forest") {
        if (model.trees.empty()) return 0.0;
        int votes = 0;
        for (const Tree& tree : model.trees) {
            const TreeNode* node = &tree.nodes[0];
            while (node->feature >= 0) {
                bool go_left = row[static_cast<std::size_t>(node->feature)] <= node->threshold;
                node = &tree.nodes[static_cast<std::size_t>(go_left ? node->left : node->right)];
            }
            votes += node->vote;
        }
        return static_cast<double>(votes) / static_cast<double>(model.trees.size());
    }
    double z = model.logistic.bias;
    for (std::size_t f = 0; f < feature_count; ++f)
        z += model.logistic.weights[f] * (row[f] - model.logistic.mean[f]) /
             model.logistic.scale[f];
    return sigmoid(z);
}

const std::string dataset_header =
    "phantom_pyfiles,pkg_spec_change,tag_alignment,name_similarity,maintainers,"
    "maintainer_pkgs,label";

int parse_int(const std::string& field) {
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(field, &used);
    } catch (const std::exception&) {
        throw Error(ErrorKind::malformed_document, "not an integer: '" + field + "'");
    }
    if (used != field.size())
        throw Error(ErrorKind::malformed_document, "not an integer: '" + field + "'");
    return value;
}

} // namespace

FeatureRow vectorize(const FeatureVector& features, const Imputation& impute) {
    return {
        static_cast<double>(features.phantom_pyfiles),
        static_cast<double>(features.pkg_spec_change),
        static_cast<double>(features.tag_alignment),
        features.name_similarity,
        features.maintainers ? static_cast<double>(*features.maintainers)
                             : impute.maintainers,
        features.maintainer_pkgs ? static_cast<double>(*features.maintainer_pkgs)
                                 : impute.maintainer_pkgs,
    };
}

std::vector<LabeledLink> oversample_to_parity(const std::vector<LabeledLink>& links,
                                              std::uint32_t seed) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < links.size(); ++i)
        by_class[links[i].label != 0 ? 1 : 0].push_back(i);
    if (by_class[0].empty() || by_class[1].empty())
        throw Error(ErrorKind::degenerate_dataset, "both labels are required");

    const auto& minority =
        by_class[0].size() < by_class[1].size() ? by_class[0] : by_class[1];
    std::size_t need =
        std::max(by_class[0].size(), by_class[1].size()) - minority.size();

    std::vector<LabeledLink> out = links;
    out.reserve(links.size() + need);
    auto rng = seeded(seed, 0xB2);
    for (std::size_t i = 0; i < need; ++i)
        out.push_back(links[minority[bounded(rng, static_cast<std::uint32_t>(minority.size()))]]);
    return out;
}

Split stratified_split(const std::vector<LabeledLink>& dataset, double test_fraction,
                       std::uint32_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
        throw Error(ErrorKind::invalid_argument, "test fraction outside [0,1]");
    Split split;
    for (std::uint32_t cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < dataset.size(); ++i)
            if ((dataset[i].label != 0 ? 1u : 0u) == cls) idx.push_back(i);
        auto rng = seeded(seed, 0xA1, cls);
        shuffle_in_place(idx, rng);
        auto take = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(idx.size())));
        take = std::min(take, idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < take ? split.test : split.train).push_back(dataset[idx[i]]);
    }
    return split;
}

ValidatorModel train(const std::vector<LabeledLink>& dataset, const std::string& kind,
                     std::uint32_t seed, const ForestParams& params) {
    if (kind != "forest" && kind != "logistic")
        throw Error(ErrorKind::invalid_argument, "unknown classifier kind: " + kind);
    std::size_t n1 = 0;
    for (const LabeledLink& link : dataset) n1 += link.label != 0 ? 1 : 0;
    if (dataset.empty() || n1 == 0 || n1 == dataset.size())
        throw Error(ErrorKind::degenerate_dataset, "training needs both labels");

    ValidatorModel model;
    model.kind = kind;
    model.seed = seed;
    model.params = params;

    // Imputation reflects the data as observed, before balancing skews it.
    std::vector<double> known_maintainers;
    std::vector<double> known_pkgs;
    for (const LabeledLink& link : dataset) {
        if (link.features.maintainers)
            known_maintainers.push_back(static_cast<double>(*link.features.maintainers));
        if (link.features.maintainer_pkgs)
            known_pkgs.push_back(static_cast<double>(*link.features.maintainer_pkgs));
    }
    model.impute.maintainers = median_of(std::move(known_maintainers));
    model.impute.maintainer_pkgs = median_of(std::move(known_pkgs));

    std::vector<LabeledLink> balanced = oversample_to_parity(dataset, seed);
    std::vector<FeatureRow> rows;
    rows.reserve(balanced.size());
    std::vector<int> labels;
    labels.reserve(balanced.size());
    for (const LabeledLink& link : balanced) {
        rows.push_back(vectorize(link.features, model.impute));
        labels.push_back(link.label != 0 ? 1 : 0);
    }

    if (kind == "forest")
        model.trees = fit_forest(rows, labels, params, seed);
    else
        model.logistic = fit_logistic(rows, labels);
    return model;
}

double predict_proba(const ValidatorModel& model, const FeatureVector& features) {
    return score_row(model, vectorize(features, model.impute));
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw Error(ErrorKind::invalid_argument, "scores and labels must pair up");
    std::size_t npos = 0;
    for (int label : labels) npos += label != 0 ? 1 : 0;
    std::size_t nneg = labels.size() - npos;
    if (npos == 0 || nneg == 0)
        throw Error(ErrorKind::single_class, "need both labels to rank");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    // Midrank sweep: tied scores share the average of their 1-based ranks.
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        double rank = static_cast<double>(i + j + 1) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[idx[k]] != 0) positive_rank_sum += rank;
        i = j;
    }
    double u = positive_rank_sum -
               static_cast<double>(npos) * static_cast<double>(npos + 1) / 2.0;
    return u / (static_cast<double>(npos) * static_cast<double>(nneg));
}

GridSearchResult grid_search(const std::vector<LabeledLink>& training,
                             std::uint32_t seed) {
    Split split = stratified_split(training, 0.2, seed);
    std::vector<int> labels;
    labels.reserve(split.test.size());
    for (const LabeledLink& link : split.test) labels.push_back(link.label);

    GridSearchResult result;
    double best = -1.0;
    for (int trees : {50, 100, 200}) {
        for (int min_leaf : {1, 5}) {
            ForestParams params{trees, min_leaf, 3};
            ValidatorModel model = train(split.train, "forest", seed, params);
            std::vector<double> scores;
            scores.reserve(split.test.size());
            for (const LabeledLink& link : split.test)
                scores.push_back(predict_proba(model, link.features));
            double score = auc(scores, labels);
            result.tried.push_back({params, score});
            if (score > best) {
                best = score;
                result.best = params;
            }
        }
    }
    return result;
}

std::array<double, feature_count> permutation_importance(
    const ValidatorModel& model, const std::vector<LabeledLink>& evaluation,
    std::uint32_t seed, int repeats) {
    std::vector<FeatureRow> rows;
    rows.reserve(evaluation.size());
    std::vector<int> labels;
    labels.reserve(evaluation.size());
    for (const LabeledLink& link : evaluation) {
        rows.push_back(vectorize(link.features, model.impute));
        labels.push_back(link.label);
    }
    std::vector<double> scores(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) scores[i] = score_row(model, rows[i]);
    double baseline = auc(scores, labels);

    std::array<double, feature_count> importance{};
    for (std::size_t f = 0; f < feature_count; ++f) {
        double drop = 0.0;
        for (int r = 0; r < repeats; ++r) {
            std::vector<double> column(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i][f];
            auto rng = seeded(seed, 0xD4,
                              static_cast<std::uint32_t>(f) * 65536u +
                                  static_cast<std::uint32_t>(r));
            shuffle_in_place(column, rng);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                FeatureRow shuffled = rows[i];
                shuffled[f] = column[i];
                scores[i] = score_row(model, shuffled);
            }
            drop += baseline - auc(scores, labels);
        }
        importance[f] = drop / repeats;
    }
    return importance;
}

void save_model(const ValidatorModel& model, const std::filesystem::path& file) {
    std::ostringstream out;
    out << "radar-validator 1\n";
    out << "kind " << model.kind << '\n';
    out << "seed " << model.seed << '\n';
    out << "features";
    for (const std::string& name : feature_names()) out << ' ' << name;
    out << '\n';
    out << "impute " << format_double(model.impute.maintainers) << ' '
        << format_double(model.impute.maintainer_pkgs) << '\n';
    if (model.kind == "forest") {
        out << "params trees=" << model.params.trees << " min_leaf=" << model.params.min_leaf
            << " mtry=" << model.params.mtry << '\n';
        out << "trees " << model.trees.size() << '\n';
        for (const Tree& tree : model.trees) {
            out << "tree " << tree.nodes.size() << '\n';
            for (const TreeNode& node : tree.nodes)
                out << node.feature << ' ' << format_double(node.threshold) << ' '
                    << node.left << ' ' << node.right << ' ' << node.vote << '\n';
        }
    } else {
        auto row = [&](const char* name, const std::array<double, feature_count>& values) {
            out << name;
            for (double v : values) out << ' ' << format_double(v);
            out << '\n';
        };
        row("mean", model.logistic.mean);
        row("scale", model.logistic.scale);
        row("weights", model.logistic.weights);
        out << "bias " << format_double(model.logistic.bias) << '\n';
    }
    out << "end\n";
    write_file_atomic(file, out.str());
}

ValidatorModel load_model(const std::filesystem::path& file) {
    std::istringstream in(read_file_text(file));
    auto malformed = [&](const std::string& what) {
        return Error(ErrorKind::malformed_document, file.string() + ": " + what);
    };

    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "radar-validator")
        throw malformed("not a validator model file");
    if (version != 1)
        throw Error(ErrorKind::unsupported_format,
                    file.string() + ": unknown model format version " +
                        std::to_string(version));

    ValidatorModel model;
    bool done = false;
    std::string key;
    while (!done && in >> key) {
        if (key == "kind") {
            if (!(in >> model.kind)) throw malformed("kind missing");
        } else if (key == "seed") {
            if (!(in >> model.seed)) throw malformed("seed missing");
        } else if (key == "features") {
            for (const std::string& expected : feature_names()) {
                std::string name;
                if (!(in >> name) || name != expected)
                    throw malformed("feature order mismatch");
            }
        } else if (key == "impute") {
            if (!(in >> model.impute.maintainers >> model.impute.maintainer_pkgs))
                throw malformed("imputation values missing");
        } else if (key == "params") {
            for (int* slot : {&model.params.trees, &model.params.min_leaf, &model.params.mtry}) {
                std::string token;
                if (!(in >> token)) throw malformed("truncated params");
                auto eq = token.find('=');
                if (eq == std::string::npos) throw malformed("bad params token: " + token);
                *slot = parse_int(token.substr(eq + 1));
            }
        } else if (key == "trees") {
            std::size_t count = 0;
            if (!(in >> count)) throw malformed("tree count missing");
            model.trees.reserve(count);
            for (std::size_t t = 0; t < count; ++t) {
                std::string marker;
                std::size_t node_count = 0;
                if (!(in >> marker >> node_count) || marker != "tree")
                    throw malformed("expected a tree record");
                Tree tree;
                tree.nodes.resize(node_count);
                for (TreeNode& node : tree.nodes) {
                    if (!(in >> node.feature >> node.threshold >> node.left >> node.right >>
                          node.vote))
                        throw malformed("truncated tree record");
                }
                model.trees.push_back(std::move(tree));
            }
        } else if (key == "mean" || key == "scale" || key == "weights") {
            auto& values = key == "mean"      ? model.logistic.mean
                           : key == "scale"   ? model.logistic.scale
                                              : model.logistic.weights;
            for (double& v : values)
                if (!(in >> v)) throw malformed("truncated " + key + " row");
        } else if (key == "bias") {
            if (!(in >> model.logistic.bias)) throw malformed("bias missing");
        } else if (key == "end") {
            done = true;
        } else {
            throw malformed("unknown record: " + key);
        }
    }
    if (!done) throw malformed("missing end marker");
    if (model.kind != "forest" && model.kind != "logistic")
        throw malformed("unknown classifier kind: " + model.kind);
    return model;
}

std::string dataset_to_csv(const std::vector<LabeledLink>& links) {
    std::ostringstream out;
    out << dataset_header << '\n';
    for (const LabeledLink& link : links) {
        const FeatureVector& f = link.features;
        out << f.phantom_pyfiles << ',' << f.pkg_spec_change << ',' << f.tag_alignment
            << ',' << format_double(f.name_similarity) << ',';
        if (f.maintainers) out << *f.maintainers;
        out << ',';
        if (f.maintainer_pkgs) out << *f.maintainer_pkgs;
        out << ',' << link.label << '\n';
    }
    return out.str();
}

std::vector<LabeledLink> dataset_from_csv(std::string_view text) {
    std::vector<std::string> lines = split(text, '\n');
    for (std::string& line : lines)
        if (!line.empty() && line.back() == '\r') line.pop_back();
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty() || lines.front() != dataset_header)
        throw Error(ErrorKind::malformed_document, "missing dataset header row");

    std::vector<LabeledLink> links;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> fields = split(lines[i], ',');
        if (fields.size() != 7)
            throw Error(ErrorKind::malformed_document,
                        "row " + std::to_string(i + 1) + ": expected 7 columns, got " +
                            std::to_string(fields.size()));
        LabeledLink link;
        link.features.phantom_pyfiles = parse_int(fields[0]);
        link.features.pkg_spec_change = parse_int(fields[1]);
        link.features.tag_alignment = parse_int(fields[2]);
        link.features.name_similarity = parse_double(fields[3]);
        if (!fields[4].empty()) link.features.maintainers = parse_int(fields[4]);
        if (!fields[5].empty()) link.features.maintainer_pkgs = parse_int(fields[5]);
        link.label = parse_int(fields[6]);
        if (link.label != 0 && link.label != 1)
            throw Error(ErrorKind::malformed_document,
                        "row " + std::to_string(i + 1) + ": label must be 0 or 1");
        links.push_back(std::move(link));
    }
    return links;
}

} // namespace radar
