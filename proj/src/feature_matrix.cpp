#include "deepfeat/feature_matrix.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include "deepfeat/error.hpp"

namespace deepfeat {

void DeepFeatureSet::add(std::string name, std::vector<int> column) {
    names.push_back(std::move(name));
    columns.push_back(std::move(column));
}

void DeepFeatureSet::merge(const DeepFeatureSet& other) {
    const bool with_levels = !levels.empty() || !other.levels.empty();
    if (with_levels) levels.resize(columns.size());
    for (std::size_t j = 0; j < other.size(); ++j) {
        add(other.names[j], other.columns[j]);
        if (with_levels) levels.push_back(j < other.levels.size() ? other.levels[j]
                                                                  : std::vector<std::string>{});
    }
    if (provenance.empty()) {
        provenance = other.provenance;
    } else if (!other.provenance.empty()) {
        provenance += "; " + other.provenance;
    }
    validate();
}

void DeepFeatureSet::validate() const {
    if (names.size() != columns.size()) throw InvalidData("deep feature names/columns mismatch");
    std::unordered_set<std::string> seen;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (!seen.insert(names[j]).second)
            throw InvalidData("duplicate deep feature name '" + names[j] + "'");
        if (columns[j].size() != columns.front().size())
            throw InvalidData("deep feature column '" + names[j] + "' has a different length");
    }
}

std::vector<int> canonical_labels(std::span<const int> labels) {
    std::unordered_map<int, int> remap;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int v : labels) {
        auto [it, inserted] = remap.try_emplace(v, static_cast<int>(remap.size()));
        out.push_back(it->second);
    }
    return out;
}

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd v, std::vector<int> y)
    : values(std::move(v)), kinds(values.cols()), labels(std::move(y)) {
    names.reserve(values.cols());
    char buf[32];
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "x_%04ld", static_cast<long>(j));
        names.emplace_back(buf);
    }
}

void FeatureMatrix::validate() const {
    if (static_cast<Eigen::Index>(names.size()) != cols() ||
        static_cast<Eigen::Index>(kinds.size()) != cols())
        throw InvalidData("feature matrix schema does not match its column count");
    if (has_labels() && static_cast<Eigen::Index>(labels.size()) != rows())
        throw InvalidData("label count does not match row count");
    if (!values.allFinite()) throw InvalidData("feature matrix contains non-finite values");
    for (Eigen::Index j = 0; j < cols(); ++j) {
        if (!kinds[j].is_categorical()) continue;
        for (Eigen::Index i = 0; i < rows(); ++i) {
            const double v = values(i, j);
            if (v < 0 || v >= kinds[j].cardinality || v != std::floor(v))
                throw InvalidData("column '" + names[j] + "' has category code outside [0, " +
                                  std::to_string(kinds[j].cardinality) + ")");
        }
    }
}

FeatureMatrix FeatureMatrix::augmented(const DeepFeatureSet& deep) const {
    if (!deep.empty() && static_cast<Eigen::Index>(deep.rows()) != rows())
        throw InvalidData("deep features have " + std::to_string(deep.rows()) + " rows, expected " +
                          std::to_string(rows()));
    FeatureMatrix out;
    out.values.resize(rows(), cols() + static_cast<Eigen::Index>(deep.size()));
    out.values.leftCols(cols()) = values;
    out.names = names;
    out.kinds = kinds;
    out.labels = labels;
    for (std::size_t j = 0; j < deep.size(); ++j) {
        int card = 0;
        const auto col = cols() + static_cast<Eigen::Index>(j);
        for (Eigen::Index i = 0; i < rows(); ++i) {
            const int code = deep.columns[j][i];
            if (code < 0) throw InvalidData("negative category code in '" + deep.names[j] + "'");
            card = std::max(card, code + 1);
            out.values(i, col) = code;
        }
        out.names.push_back(deep.names[j]);
        out.kinds.push_back(ColumnKind::categorical(card));
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const int> rows_idx) const {
    FeatureMatrix out;
    out.values.resize(static_cast<Eigen::Index>(rows_idx.size()), cols());
    for (std::size_t k = 0; k < rows_idx.size(); ++k) out.values.row(k) = values.row(rows_idx[k]);
    out.names = names;
    out.kinds = kinds;
    if (has_labels()) {
        out.labels.reserve(rows_idx.size());
        for (int r : rows_idx) out.labels.push_back(labels[r]);
    }
    return out;
}

}  // namespace deepfeat
