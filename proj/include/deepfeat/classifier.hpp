#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "deepfeat/feature_matrix.hpp"

namespace deepfeat {

/// Per-class weights, ordered like ForestModel::classes().
using VoteVector = Eigen::VectorXd;

/// CART classification tree (Gini impurity, no pruning).
class DecisionTree {
public:
    struct Node {
        int feature = -1;         // -1 for leaves
        double threshold = 0.0;   // continuous: x <= threshold goes left
        int category_block = -1;  // categorical: offset of the left-set bitmap
        int left = -1;
        int right = -1;
        int prediction = 0;       // class index (leaves)

        bool is_leaf() const { return feature < 0; }
    };

    DecisionTree() = default;
    DecisionTree(std::vector<Node> nodes, std::vector<std::uint64_t> category_bits,
                 std::vector<int> category_words);

    /// Class index predicted for a row.
    int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    /// Index of the leaf reached by a row.
    int leaf_index(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

    const std::vector<Node>& nodes() const { return nodes_; }
    bool goes_left(const Node& node, double value) const;
    /// Categories sent left by a categorical node (codes < cardinality).
    std::vector<int> left_categories(const Node& node, int cardinality) const;
    int depth() const;

private:
    std::vector<Node> nodes_;
    std::vector<std::uint64_t> category_bits_;
    std::vector<int> category_words_;  // per feature: 64-bit words per bitmap
};

struct ForestOptions {
    int n_trees = 100;
    /// Features tried per node; 0 selects ceil(sqrt(p)).
    int mtry = 0;
    std::uint64_t seed = 0;
    /// Test hook: false trains every tree on the full sample.
    bool bootstrap = true;
    /// Worker threads for tree growing; results do not depend on it.
    int jobs = 1;
};

class ForestModel {
public:
    ForestModel() = default;
    ForestModel(std::vector<int> classes, std::vector<DecisionTree> trees, int mtry,
                std::vector<std::string> names, std::vector<ColumnKind> kinds, double oob_error);

    const std::vector<int>& classes() const { return classes_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }
    int n_trees() const { return static_cast<int>(trees_.size()); }
    int mtry() const { return mtry_; }
    const std::vector<std::string>& feature_names() const { return names_; }
    const std::vector<ColumnKind>& feature_kinds() const { return kinds_; }
    /// Out-of-bag error rate; NaN when bootstrap was disabled.
    double oob_error() const { return oob_error_; }

    VoteVector predict_votes(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    /// Votes for every row (rows x classes). Columns must match the training schema.
    Eigen::MatrixXd predict_votes(const FeatureMatrix& data) const;
    std::vector<int> predict_labels(const FeatureMatrix& data) const;

    /// Throws InvalidData unless data has the training columns in order.
    void check_schema(const FeatureMatrix& data) const;

    std::string to_json() const;
    static ForestModel from_json(const std::string& text);

private:
    std::vector<int> classes_;
    std::vector<DecisionTree> trees_;
    int mtry_ = 0;
    std::vector<std::string> names_;
    std::vector<ColumnKind> kinds_;
    double oob_error_ = 0.0;
};

inline constexpr int kForestFormatVersion = 1;

/// Random forest: bootstrap sample per tree, mtry features sampled per node,
/// best Gini split, grown until pure or fewer than two samples.
ForestModel train_forest(const FeatureMatrix& data, const ForestOptions& options);

/// Grows one tree on the given rows (duplicates allowed). Labels must be
/// class indices into `classes`.
DecisionTree train_tree(const FeatureMatrix& data, std::span<const int> class_index, int n_classes,
                        std::span<const int> sample, int mtry, std::uint64_t seed);

/// ceil(sqrt(p)) and ceil(2 sqrt(p)), deduplicated and clamped to [1, p].
std::vector<int> mtry_candidates(int p);

VoteVector predict_votes(const ForestModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x);
int predict_label(const ForestModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Argmax of a vote vector mapped through classes; ties go to the smallest class.
int label_from_votes(const VoteVector& votes, std::span<const int> classes);

/// v1 + beta * v2.
VoteVector combine_votes(const VoteVector& v1, const VoteVector& v2, double beta);

struct CategoricalSplit {
    double gain = 0.0;              // Gini impurity decrease (weighted by node size)
    std::vector<int> left;          // category codes sent left
};

/// Best subset split of a categorical column from per-category class counts
/// (counts[c][k]). Orders categories by class probability; exact for two
/// classes, one-vs-rest heuristic otherwise.
CategoricalSplit best_categorical_split(const std::vector<std::vector<int>>& counts);

/// Gini impurity decrease of sending `left` categories left (brute-force helper).
double categorical_split_gain(const std::vector<std::vector<int>>& counts,
                              const std::vector<int>& left);

}  // namespace deepfeat
