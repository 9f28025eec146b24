#include "deepfeat/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "json.hpp"

#include "deepfeat/error.hpp"
#include "deepfeat/random.hpp"

namespace deepfeat {

namespace {

// Sum of squared class counts.
template <typename Counts>
double sum_sq(const Counts& c, int k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += static_cast<double>(c[i]) * c[i];
    return s;
}

int majority(const std::vector<int>& counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct Candidate {
    int feature = -1;
    double proxy = -1.0;        // sum_k L_k^2 / nL + sum_k R_k^2 / nR
    double threshold = 0.0;
    std::vector<int> left_categories;
};

// Grows one tree over index ranges of `sample`.
class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& data, std::span<const int> y, int n_classes, int mtry,
                std::uint64_t seed)
        : x_(data.values), kinds_(data.kinds), y_(y), k_(n_classes), mtry_(mtry), rng_(seed),
          features_(data.cols()) {
        std::iota(features_.begin(), features_.end(), 0);
        int max_card = 0;
        for (const auto& kind : kinds_) max_card = std::max(max_card, kind.cardinality);
        cat_counts_.assign(static_cast<std::size_t>(max_card) * k_, 0);
        cat_total_.assign(max_card, 0);
        for (const auto& kind : kinds_)
            words_.push_back(kind.is_categorical() ? (kind.cardinality + 63) / 64 : 0);
    }

    DecisionTree build(std::vector<int> sample) {
        idx_ = std::move(sample);
        nodes_.clear();
        bits_.clear();
        struct Job {
            int node, begin, end;
        };
        nodes_.emplace_back();
        std::vector<Job> stack{{0, 0, static_cast<int>(idx_.size())}};
        std::vector<int> counts(k_);
        while (!stack.empty()) {
            const Job job = stack.back();
            stack.pop_back();
            std::fill(counts.begin(), counts.end(), 0);
            for (int t = job.begin; t < job.end; ++t) ++counts[y_[idx_[t]]];
            nodes_[job.node].prediction = majority(counts);
            const int m = job.end - job.begin;
            const bool pure = *std::max_element(counts.begin(), counts.end()) == m;
            if (m < 2 || pure) continue;

            const Candidate best = find_split(job.begin, job.end, counts);
            if (best.feature < 0) continue;

            DecisionTree::Node& node = nodes_[job.node];
            node.feature = best.feature;
            const auto col = x_.col(best.feature);
            int mid;
            if (kinds_[best.feature].is_categorical()) {
                node.category_block = static_cast<int>(bits_.size());
                bits_.resize(bits_.size() + words_[best.feature], 0);
                std::vector<char> present(kinds_[best.feature].cardinality, 0);
                int n_left = 0;
                for (int c : best.left_categories) {
                    bits_[node.category_block + c / 64] |= std::uint64_t{1} << (c % 64);
                }
                for (int t = job.begin; t < job.end; ++t) {
                    const int c = static_cast<int>(col(idx_[t]));
                    present[c] = 1;
                    if (bit(node.category_block, c)) ++n_left;
                }
                // categories absent from this node follow the larger child
                if (n_left >= m - n_left) {
                    for (int c = 0; c < kinds_[best.feature].cardinality; ++c)
                        if (!present[c]) bits_[node.category_block + c / 64] |= std::uint64_t{1} << (c % 64);
                }
                const int block = node.category_block;
                mid = static_cast<int>(
                    std::partition(idx_.begin() + job.begin, idx_.begin() + job.end,
                                   [&](int i) { return bit(block, static_cast<int>(col(i))); }) -
                    idx_.begin());
            } else {
                node.threshold = best.threshold;
                const double thr = best.threshold;
                mid = static_cast<int>(std::partition(idx_.begin() + job.begin,
                                                      idx_.begin() + job.end,
                                                      [&](int i) { return col(i) <= thr; }) -
                                       idx_.begin());
            }
            const int left = static_cast<int>(nodes_.size());
            nodes_[job.node].left = left;
            nodes_[job.node].right = left + 1;
            nodes_.emplace_back();
            nodes_.emplace_back();
            stack.push_back({left + 1, mid, job.end});
            stack.push_back({left, job.begin, mid});
        }
        return DecisionTree(std::move(nodes_), std::move(bits_), words_);
    }

private:
    bool bit(int block, int c) const { return (bits_[block + c / 64] >> (c % 64)) & 1U; }

    Candidate find_split(int begin, int end, const std::vector<int>& counts) {
        const int m = end - begin;
        const double parent_proxy = sum_sq(counts, k_) / m;
        Candidate best;
        best.proxy = parent_proxy + 1e-12 * m;
        const int p = static_cast<int>(features_.size());
        for (int draw = 0; draw < mtry_; ++draw) {
            std::uniform_int_distribution<int> pick(draw, p - 1);
            std::swap(features_[draw], features_[pick(rng_)]);
            const int j = features_[draw];
            if (kinds_[j].is_categorical()) {
                categorical(j, begin, end, counts, best);
            } else {
                continuous(j, begin, end, counts, best);
            }
        }
        return best;
    }

    void consider(Candidate& best, int j, double proxy) {
        // ties go to the lowest column index
        if (proxy > best.proxy || (proxy == best.proxy && best.feature >= 0 && j < best.feature)) {
            best.proxy = proxy;
            best.feature = j;
        }
    }

    void continuous(int j, int begin, int end, const std::vector<int>& counts, Candidate& best) {
        const int m = end - begin;
        const auto col = x_.col(j);
        pairs_.resize(m);
        for (int t = 0; t < m; ++t) {
            const int i = idx_[begin + t];
            pairs_[t] = {col(i), y_[i]};
        }
        std::sort(pairs_.begin(), pairs_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (pairs_.front().first == pairs_.back().first) return;

        left_.assign(k_, 0);
        right_.assign(counts.begin(), counts.end());
        double sl = 0.0;
        double sr = sum_sq(counts, k_);
        for (int t = 0; t + 1 < m; ++t) {
            const int c = pairs_[t].second;
            sl += 2.0 * left_[c] + 1.0;
            sr -= 2.0 * right_[c] - 1.0;
            ++left_[c];
            --right_[c];
            if (pairs_[t].first == pairs_[t + 1].first) continue;
            const double proxy = sl / (t + 1) + sr / (m - t - 1);
            const int before = best.feature;
            const double before_proxy = best.proxy;
            consider(best, j, proxy);
            if (best.feature != before || best.proxy != before_proxy) {
                const double a = pairs_[t].first;
                const double b = pairs_[t + 1].first;
                double thr = 0.5 * (a + b);
                if (!(thr < b)) thr = a;
                best.threshold = thr;
                best.left_categories.clear();
            }
        }
    }

    void categorical(int j, int begin, int end, const std::vector<int>& counts, Candidate& best) {
        const auto col = x_.col(j);
        touched_.clear();
        for (int t = begin; t < end; ++t) {
            const int i = idx_[t];
            const int c = static_cast<int>(col(i));
            if (cat_total_[c]++ == 0) touched_.push_back(c);
            ++cat_counts_[static_cast<std::size_t>(c) * k_ + y_[i]];
        }
        if (touched_.size() >= 2) {
            const int m = end - begin;
            const double total_sq = sum_sq(counts, k_);
            const int orderings = k_ == 2 ? 1 : k_;
            for (int cls = 0; cls < orderings; ++cls) {
                const int target = k_ == 2 ? 1 : cls;
                order_ = touched_;
                std::sort(order_.begin(), order_.end(), [&](int a, int b) {
                    const double pa = static_cast<double>(cat_counts_[a * k_ + target]) * cat_total_[b];
                    const double pb = static_cast<double>(cat_counts_[b * k_ + target]) * cat_total_[a];
                    return pa < pb || (pa == pb && a < b);
                });
                left_.assign(k_, 0);
                int nl = 0;
                for (std::size_t s = 0; s + 1 < order_.size(); ++s) {
                    const int c = order_[s];
                    for (int q = 0; q < k_; ++q) left_[q] += cat_counts_[c * k_ + q];
                    nl += cat_total_[c];
                    double sl = 0.0, sr = 0.0;
                    for (int q = 0; q < k_; ++q) {
                        sl += static_cast<double>(left_[q]) * left_[q];
                        const double r = counts[q] - left_[q];
                        sr += r * r;
                    }
                    (void)total_sq;
                    const double proxy = sl / nl + sr / (m - nl);
                    const int before = best.feature;
                    const double before_proxy = best.proxy;
                    consider(best, j, proxy);
                    if (best.feature != before || best.proxy != before_proxy)
                        best.left_categories.assign(order_.begin(), order_.begin() + s + 1);
                }
            }
        }
        for (int c : touched_) {
            cat_total_[c] = 0;
            std::fill_n(cat_counts_.begin() + static_cast<std::ptrdiff_t>(c) * k_, k_, 0);
        }
    }

    const Eigen::MatrixXd& x_;
    const std::vector<ColumnKind>& kinds_;
    std::span<const int> y_;
    int k_;
    int mtry_;
    Rng rng_;
    std::vector<int> features_;
    std::vector<int> words_;
    std::vector<int> idx_;
    std::vector<DecisionTree::Node> nodes_;
    std::vector<std::uint64_t> bits_;
    std::vector<std::pair<double, int>> pairs_;
    std::vector<int> left_, right_;
    std::vector<int> cat_counts_, cat_total_, touched_, order_;
};

std::vector<int> class_indices(const FeatureMatrix& data, std::vector<int>& classes) {
    classes = data.labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::vector<int> y(data.labels.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), data.labels[i]) -
                                classes.begin());
    return y;
}

const char* kind_name(const ColumnKind& k) { return k.is_categorical() ? "categorical" : "continuous"; }

}  // namespace

DecisionTree::DecisionTree(std::vector<Node> nodes, std::vector<std::uint64_t> category_bits,
                           std::vector<int> category_words)
    : nodes_(std::move(nodes)),
      category_bits_(std::move(category_bits)),
      category_words_(std::move(category_words)) {
    if (nodes_.empty()) throw InvalidData("decision tree has no nodes");
}

bool DecisionTree::goes_left(const Node& node, double value) const {
    if (node.category_block < 0) return value <= node.threshold;
    const auto c = static_cast<long>(value);
    const int words = category_words_[node.feature];
    if (c < 0 || c >= 64L * words) return false;
    return (category_bits_[node.category_block + c / 64] >> (c % 64)) & 1U;
}

int DecisionTree::leaf_index(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int i = 0;
    while (!nodes_[i].is_leaf())
        i = goes_left(nodes_[i], x(nodes_[i].feature)) ? nodes_[i].left : nodes_[i].right;
    return i;
}

int DecisionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return nodes_[leaf_index(x)].prediction;
}

std::vector<int> DecisionTree::left_categories(const Node& node, int cardinality) const {
    std::vector<int> out;
    for (int c = 0; c < cardinality; ++c)
        if (goes_left(node, c)) out.push_back(c);
    return out;
}

int DecisionTree::depth() const {
    int best = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (!nodes_[i].is_leaf()) {
            stack.emplace_back(nodes_[i].left, d + 1);
            stack.emplace_back(nodes_[i].right, d + 1);
        }
    }
    return best;
}

DecisionTree train_tree(const FeatureMatrix& data, std::span<const int> class_index, int n_classes,
                        std::span<const int> sample, int mtry, std::uint64_t seed) {
    if (mtry < 1 || mtry > data.cols()) throw InvalidParameter("mtry must lie in [1, p]");
    if (sample.empty()) throw InvalidData("empty training sample");
    TreeBuilder builder(data, class_index, n_classes, mtry, seed);
    return builder.build(std::vector<int>(sample.begin(), sample.end()));
}

std::vector<int> mtry_candidates(int p) {
    const double root = std::sqrt(static_cast<double>(p));
    std::vector<int> out{static_cast<int>(std::ceil(root)), static_cast<int>(std::ceil(2.0 * root))};
    for (int& m : out) m = std::clamp(m, 1, std::max(p, 1));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ForestModel train_forest(const FeatureMatrix& data, const ForestOptions& options) {
    data.validate();
    const auto n = static_cast<int>(data.rows());
    const auto p = static_cast<int>(data.cols());
    if (!data.has_labels()) throw InvalidData("training data has no labels");
    if (n < 2) throw InvalidData("training needs at least two rows");
    if (options.n_trees < 1) throw InvalidParameter("n_trees must be >= 1");
    const int mtry = options.mtry == 0 ? mtry_candidates(p).front() : options.mtry;
    if (mtry < 1 || mtry > p)
        throw InvalidParameter("mtry=" + std::to_string(mtry) + " outside [1, p=" + std::to_string(p) + "]");

    std::vector<int> classes;
    const std::vector<int> y = class_indices(data, classes);
    if (classes.size() < 2) throw DegenerateModel("training labels contain a single class");
    const int k = static_cast<int>(classes.size());

    std::vector<DecisionTree> trees(options.n_trees);
    std::vector<std::vector<int>> samples(options.n_trees);
    auto grow = [&](int t) {
        Rng rng(derive_seed(options.seed, "bootstrap", t));
        std::vector<int> sample(n);
        if (options.bootstrap) {
            std::uniform_int_distribution<int> draw(0, n - 1);
            for (int& s : sample) s = draw(rng);
        } else {
            std::iota(sample.begin(), sample.end(), 0);
        }
        TreeBuilder builder(data, y, k, mtry, derive_seed(options.seed, "tree", t));
        samples[t] = sample;
        trees[t] = builder.build(std::move(sample));
    };
    const int jobs = std::clamp(options.jobs, 1, options.n_trees);
    if (jobs == 1) {
        for (int t = 0; t < options.n_trees; ++t) grow(t);
    } else {
        std::vector<std::thread> workers;
        for (int w = 0; w < jobs; ++w)
            workers.emplace_back([&, w] {
                for (int t = w; t < options.n_trees; t += jobs) grow(t);
            });
        for (auto& th : workers) th.join();
    }

    double oob = std::numeric_limits<double>::quiet_NaN();
    if (options.bootstrap) {
        Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(n, k);
        std::vector<char> in_bag(n);
        Eigen::RowVectorXd row(p);
        for (int t = 0; t < options.n_trees; ++t) {
            std::fill(in_bag.begin(), in_bag.end(), 0);
            for (int s : samples[t]) in_bag[s] = 1;
            for (int i = 0; i < n; ++i) {
                if (in_bag[i]) continue;
                row = data.values.row(i);
                ++votes(i, trees[t].predict(row));
            }
        }
        int scored = 0, wrong = 0;
        for (int i = 0; i < n; ++i) {
            if (votes.row(i).sum() == 0) continue;
            Eigen::Index best;
            votes.row(i).maxCoeff(&best);
            ++scored;
            if (best != y[i]) ++wrong;
        }
        oob = scored ? static_cast<double>(wrong) / scored : oob;
    }
    return ForestModel(std::move(classes), std::move(trees), mtry, data.names, data.kinds, oob);
}

ForestModel::ForestModel(std::vector<int> classes, std::vector<DecisionTree> trees, int mtry,
                         std::vector<std::string> names, std::vector<ColumnKind> kinds,
                         double oob_error)
    : classes_(std::move(classes)),
      trees_(std::move(trees)),
      mtry_(mtry),
      names_(std::move(names)),
      kinds_(std::move(kinds)),
      oob_error_(oob_error) {
    if (trees_.empty()) throw InvalidData("forest has no trees");
    if (names_.size() != kinds_.size()) throw InvalidData("forest schema is inconsistent");
    const auto p = static_cast<int>(names_.size());
    for (const auto& tree : trees_)
        for (const auto& node : tree.nodes()) {
            if (node.is_leaf()) {
                if (node.prediction < 0 || node.prediction >= static_cast<int>(classes_.size()))
                    throw InvalidData("tree leaf predicts an unknown class");
            } else if (node.feature >= p) {
                throw InvalidData("tree split references a missing column");
            }
        }
}

VoteVector ForestModel::predict_votes(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (x.size() != static_cast<Eigen::Index>(names_.size()))
        throw InvalidData("row has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(names_.size()));
    VoteVector v = VoteVector::Zero(static_cast<Eigen::Index>(classes_.size()));
    for (const auto& tree : trees_) v(tree.predict(x)) += 1.0;
    return v / static_cast<double>(trees_.size());
}

void ForestModel::check_schema(const FeatureMatrix& data) const {
    if (data.cols() != static_cast<Eigen::Index>(names_.size()))
        throw InvalidData("data has " + std::to_string(data.cols()) + " columns, model expects " +
                          std::to_string(names_.size()));
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (data.names[j] != names_[j])
            throw InvalidData("column " + std::to_string(j) + " is '" + data.names[j] +
                              "', model expects '" + names_[j] + "'");
        if (data.kinds[j].type != kinds_[j].type)
            throw InvalidData("column '" + names_[j] + "' kind differs from the training schema");
    }
}

Eigen::MatrixXd ForestModel::predict_votes(const FeatureMatrix& data) const {
    check_schema(data);
    Eigen::MatrixXd out(data.rows(), static_cast<Eigen::Index>(classes_.size()));
    Eigen::RowVectorXd row(data.cols());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        row = data.values.row(i);
        out.row(i) = predict_votes(row).transpose();
    }
    return out;
}

std::vector<int> ForestModel::predict_labels(const FeatureMatrix& data) const {
    const Eigen::MatrixXd votes = predict_votes(data);
    std::vector<int> out(votes.rows());
    for (Eigen::Index i = 0; i < votes.rows(); ++i)
        out[i] = label_from_votes(votes.row(i).transpose(), classes_);
    return out;
}

std::string ForestModel::to_json() const {
    using nlohmann::json;
    json j;
    j["format"] = "deepfeat-forest";
    j["version"] = kForestFormatVersion;
    j["classes"] = classes_;
    j["mtry"] = mtry_;
    if (std::isnan(oob_error_)) {
        j["oob_error"] = nullptr;
    } else {
        j["oob_error"] = oob_error_;
    }
    j["schema"] = json::array();
    for (std::size_t c = 0; c < names_.size(); ++c) {
        json col{{"name", names_[c]}, {"kind", kind_name(kinds_[c])}};
        if (kinds_[c].is_categorical()) col["cardinality"] = kinds_[c].cardinality;
        j["schema"].push_back(std::move(col));
    }
    j["trees"] = json::array();
    for (const auto& tree : trees_) {
        // nested nodes, built bottom-up (children always follow their parent)
        const auto& nodes = tree.nodes();
        std::vector<json> built(nodes.size());
        for (auto i = static_cast<std::ptrdiff_t>(nodes.size()) - 1; i >= 0; --i) {
            const auto& node = nodes[i];
            json nj;
            if (node.is_leaf()) {
                nj["class"] = classes_[node.prediction];
            } else {
                nj["feature"] = node.feature;
                if (node.category_block >= 0) {
                    nj["left_categories"] = tree.left_categories(node, kinds_[node.feature].cardinality);
                } else {
                    nj["threshold"] = node.threshold;
                }
                nj["left"] = std::move(built[node.left]);
                nj["right"] = std::move(built[node.right]);
            }
            built[i] = std::move(nj);
        }
        j["trees"].push_back(std::move(built[0]));
    }
    return j.dump();
}

ForestModel ForestModel::from_json(const std::string& text) {
    using nlohmann::json;
    try {
        const json j = json::parse(text);
        if (j.at("format") != "deepfeat-forest") throw InvalidData("not a forest model document");
        if (j.at("version").get<int>() != kForestFormatVersion)
            throw InvalidData("unsupported forest model version");
        auto classes = j.at("classes").get<std::vector<int>>();
        std::vector<std::string> names;
        std::vector<ColumnKind> kinds;
        for (const auto& col : j.at("schema")) {
            names.push_back(col.at("name").get<std::string>());
            kinds.push_back(col.at("kind") == "categorical"
                                ? ColumnKind::categorical(col.at("cardinality").get<int>())
                                : ColumnKind::continuous());
        }
        std::vector<int> words;
        for (const auto& k : kinds) words.push_back(k.is_categorical() ? (k.cardinality + 63) / 64 : 0);

        std::vector<DecisionTree> trees;
        for (const auto& tj : j.at("trees")) {
            std::vector<DecisionTree::Node> nodes;
            std::vector<std::uint64_t> bits;
            std::vector<std::pair<const json*, int>> stack{{&tj, 0}};
            nodes.emplace_back();
            while (!stack.empty()) {
                auto [nj, id] = stack.back();
                stack.pop_back();
                if (nj->contains("class")) {
                    const int label = nj->at("class").get<int>();
                    const auto it = std::find(classes.begin(), classes.end(), label);
                    if (it == classes.end()) throw InvalidData("leaf class not in the class list");
                    nodes[id].prediction = static_cast<int>(it - classes.begin());
                    continue;
                }
                const int f = nj->at("feature").get<int>();
                if (f < 0 || f >= static_cast<int>(kinds.size()))
                    throw InvalidData("split feature out of range");
                nodes[id].feature = f;
                if (nj->contains("left_categories")) {
                    nodes[id].category_block = static_cast<int>(bits.size());
                    bits.resize(bits.size() + words[f], 0);
                    for (int c : nj->at("left_categories").get<std::vector<int>>()) {
                        if (c < 0 || c >= kinds[f].cardinality)
                            throw InvalidData("category outside the column cardinality");
                        bits[nodes[id].category_block + c / 64] |= std::uint64_t{1} << (c % 64);
                    }
                } else {
                    nodes[id].threshold = nj->at("threshold").get<double>();
                }
                const int left = static_cast<int>(nodes.size());
                nodes[id].left = left;
                nodes[id].right = left + 1;
                nodes.emplace_back();
                nodes.emplace_back();
                stack.push_back({&nj->at("right"), left + 1});
                stack.push_back({&nj->at("left"), left});
            }
            trees.emplace_back(std::move(nodes), std::move(bits), words);
        }
        const double oob = j.at("oob_error").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                       : j.at("oob_error").get<double>();
        return ForestModel(std::move(classes), std::move(trees), j.at("mtry").get<int>(),
                           std::move(names), std::move(kinds), oob);
    } catch (const json::exception& e) {
        throw InvalidData(std::string("malformed forest JSON: ") + e.what());
    }
}

VoteVector predict_votes(const ForestModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return model.predict_votes(x);
}

int predict_label(const ForestModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return label_from_votes(model.predict_votes(x), model.classes());
}

int label_from_votes(const VoteVector& votes, std::span<const int> classes) {
    if (votes.size() != static_cast<Eigen::Index>(classes.size()) || votes.size() == 0)
        throw InvalidData("vote vector length does not match the class list");
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < votes.size(); ++c) {
        if (votes(c) > votes(best) || (votes(c) == votes(best) && classes[c] < classes[best]))
            best = c;
    }
    return classes[best];
}

VoteVector combine_votes(const VoteVector& v1, const VoteVector& v2, double beta) {
    if (v1.size() != v2.size())
        throw InvalidData("vote vectors differ in length (" + std::to_string(v1.size()) + " vs " +
                          std::to_string(v2.size()) + ")");
    if (!(beta >= 0.0)) throw InvalidParameter("beta must be non-negative");
    return v1 + beta * v2;
}

double categorical_split_gain(const std::vector<std::vector<int>>& counts,
                              const std::vector<int>& left) {
    if (counts.empty()) return 0.0;
    const auto k = static_cast<int>(counts.front().size());
    std::vector<double> l(k, 0.0), total(k, 0.0);
    std::vector<char> is_left(counts.size(), 0);
    for (int c : left) is_left.at(c) = 1;
    for (std::size_t c = 0; c < counts.size(); ++c)
        for (int q = 0; q < k; ++q) {
            total[q] += counts[c][q];
            if (is_left[c]) l[q] += counts[c][q];
        }
    const double n = std::accumulate(total.begin(), total.end(), 0.0);
    const double nl = std::accumulate(l.begin(), l.end(), 0.0);
    const double nr = n - nl;
    if (n == 0 || nl == 0 || nr == 0) return 0.0;
    double sl = 0, sr = 0, sp = 0;
    for (int q = 0; q < k; ++q) {
        sl += l[q] * l[q];
        sr += (total[q] - l[q]) * (total[q] - l[q]);
        sp += total[q] * total[q];
    }
    return (sl / nl + sr / nr - sp / n) / n;
}

CategoricalSplit best_categorical_split(const std::vector<std::vector<int>>& counts) {
    CategoricalSplit best;
    if (counts.empty()) return best;
    const auto k = static_cast<int>(counts.front().size());
    std::vector<int> present;
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (std::accumulate(counts[c].begin(), counts[c].end(), 0) > 0)
            present.push_back(static_cast<int>(c));
    if (present.size() < 2) return best;
    const int orderings = k == 2 ? 1 : k;
    for (int cls = 0; cls < orderings; ++cls) {
        const int target = k == 2 ? 1 : cls;
        std::vector<int> order = present;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ta = std::accumulate(counts[a].begin(), counts[a].end(), 0.0);
            const double tb = std::accumulate(counts[b].begin(), counts[b].end(), 0.0);
            const double pa = counts[a][target] * tb;
            const double pb = counts[b][target] * ta;
            return pa < pb || (pa == pb && a < b);
        });
        for (std::size_t s = 1; s < order.size(); ++s) {
            std::vector<int> left(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s));
            const double g = categorical_split_gain(counts, left);
            if (g > best.gain) {
                best.gain = g;
                std::sort(left.begin(), left.end());
                best.left = std::move(left);
            }
        }
    }
    return best;
}

}  // namespace deepfeat
