#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace deepfeat {

struct ColumnKind {
    enum class Type { Continuous, Categorical };

    Type type = Type::Continuous;
    /// Number of category codes; codes lie in [0, cardinality). 0 for continuous.
    int cardinality = 0;

    static ColumnKind continuous() { return {}; }
    static ColumnKind categorical(int cardinality) { return {Type::Categorical, cardinality}; }
    bool is_categorical() const { return type == Type::Categorical; }

    friend bool operator==(const ColumnKind&, const ColumnKind&) = default;
};

/// Named collection of categorical columns produced by an unsupervised
/// learner (cluster IDs, leaf IDs, root paths).
struct DeepFeatureSet {
    std::vector<std::string> names;
    /// columns[j][i] is the non-negative category code of row i.
    std::vector<std::vector<int>> columns;
    /// Optional printable value per code (root-path strings); may be empty.
    std::vector<std::vector<std::string>> levels;
    std::string provenance;

    std::size_t size() const { return columns.size(); }
    bool empty() const { return columns.empty(); }
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

    void add(std::string name, std::vector<int> column);
    /// Appends all columns of another set (names must stay unique).
    void merge(const DeepFeatureSet& other);
    /// Throws InvalidData if names repeat or column lengths differ.
    void validate() const;
};

/// Relabels so that IDs appear as 0, 1, 2, ... in row order.
std::vector<int> canonical_labels(std::span<const int> labels);

/// n x p numeric table with per-column kinds and (optionally) class labels.
struct FeatureMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;
    std::vector<int> labels;

    FeatureMatrix() = default;
    /// All-continuous matrix with generated names x_0000, x_0001, ...
    explicit FeatureMatrix(Eigen::MatrixXd values, std::vector<int> labels = {});

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    bool has_labels() const { return !labels.empty(); }

    /// Checks shapes, finiteness and categorical codes; throws InvalidData.
    void validate() const;

    /// Returns a copy with the deep-feature columns appended as categoricals.
    FeatureMatrix augmented(const DeepFeatureSet& deep) const;
    FeatureMatrix select_rows(std::span<const int> rows) const;
};

}  // namespace deepfeat
