#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "deepfeat/feature_matrix.hpp"

namespace deepfeat {

/// Writes to a sibling temporary file, then renames over the target.
void write_file_atomically(const std::filesystem::path& path, std::string_view content);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column_index(std::string_view name) const;
};

/// Plain comma-separated reader (no quoting); every row must match the header width.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, std::string_view source = "<memory>");

/// Shortest round-tripping decimal form of a double.
std::string format_full(double v);
/// Six significant digits, for human-facing output.
std::string format_short(double v);

/// Column name reserved for class labels in feature CSVs.
inline constexpr std::string_view kLabelColumn = "label";

/// Feature CSV: one column per feature plus an optional trailing `label` column.
std::string feature_csv(const FeatureMatrix& m);
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m);

/// Reads a feature CSV. Columns named in the schema as "categorical" get that
/// kind (cardinality = max code + 1, or the schema's value if larger); all
/// other columns are continuous.
FeatureMatrix read_feature_csv(const std::filesystem::path& path,
                               const std::optional<std::filesystem::path>& schema = std::nullopt);

/// Sidecar schema: JSON object mapping column name -> "continuous" | "categorical".
std::string schema_json(const FeatureMatrix& m);
void write_schema(const std::filesystem::path& path, const FeatureMatrix& m);

/// Vote table: one row per instance, columns vote_<label>.
struct VoteTable {
    std::vector<int> classes;
    Eigen::MatrixXd votes;  // rows x classes
};

VoteTable read_votes_csv(const std::filesystem::path& path);
std::string votes_csv(const VoteTable& t, const std::vector<int>& predicted);

}  // namespace deepfeat
