#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace deepfeat {

/// 8-bit grayscale raster. Row 0 is the top of the image.
struct GrayImage {
    Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pixels;

    GrayImage() = default;
    GrayImage(Eigen::Index height, Eigen::Index width) : pixels(height, width) { pixels.setZero(); }

    Eigen::Index height() const { return pixels.rows(); }
    Eigen::Index width() const { return pixels.cols(); }
};

/// Gray levels mapped onto [0, n_gray_levels).
struct QuantizedImage {
    Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> bins;
    int n_gray_levels = 0;

    Eigen::Index height() const { return bins.rows(); }
    Eigen::Index width() const { return bins.cols(); }
};

/// The eight compass moves. N decreases the row index, E increases the column.
enum class Direction { NE, SE, NW, SW, S, N, E, W };

struct SpatialRelationship {
    Direction direction = Direction::NE;
    int distance = 1;

    int row_step() const;
    int col_step() const;
    SpatialRelationship reversed() const;
    std::string name() const;

    /// Parses "NE", "SE", ..., "W" (case-insensitive); throws InvalidParameter.
    static SpatialRelationship parse(std::string_view direction, int distance);
    static constexpr std::array<Direction, 8> all_directions() {
        return {Direction::NE, Direction::SE, Direction::NW, Direction::SW,
                Direction::S,  Direction::N,  Direction::E,  Direction::W};
    }
};

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Directed gray-level co-occurrence matrix for one spatial relationship.
struct Glcm {
    int n_gray_levels = 0;
    CountMatrix counts;
    SpatialRelationship relationship;

    std::int64_t total() const { return counts.sum(); }
    bool empty() const { return total() == 0; }
};

/// Set of (row, col) positions into an N_g x N_g matrix, kept sorted
/// row-major and free of duplicates.
class FeatureMask {
public:
    FeatureMask() = default;
    FeatureMask(int n_gray_levels, std::vector<std::pair<int, int>> indices);

    static FeatureMask full(int n_gray_levels);

    int n_gray_levels() const { return n_gray_levels_; }
    const std::vector<std::pair<int, int>>& indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    bool contains(int a, int b) const;

    FeatureMask union_with(const FeatureMask& other) const;

    friend bool operator==(const FeatureMask&, const FeatureMask&) = default;

private:
    int n_gray_levels_ = 0;
    std::vector<std::pair<int, int>> indices_;
};

/// Uniform quantization: bin(g) = floor(g * n_gray_levels / 256).
QuantizedImage quantize(const GrayImage& img, int n_gray_levels);

/// Number of in-bounds pixel pairs for a relationship on a height x width grid.
std::int64_t expected_pair_count(Eigen::Index height, Eigen::Index width,
                                 const SpatialRelationship& rel);

/// Counts ordered pairs (P1, P1 + distance * direction). An all-zero matrix is
/// returned when the offset leaves the image; check Glcm::empty().
Glcm compute_glcm(const QuantizedImage& img, const SpatialRelationship& rel);

/// Row-major flatten of the counts (length N_g^2).
Eigen::VectorXd glcm_to_features(const Glcm& glcm);
/// Sub-vector at the mask positions, in row-major order.
Eigen::VectorXd glcm_to_features(const Glcm& glcm, const FeatureMask& mask);

/// Positions whose entry strictly exceeds the median of all N_g^2 entries.
FeatureMask patch_mask(const Glcm& glcm);

/// Union over patches of patch_mask(compute_glcm(patch, rel)).
FeatureMask build_mask(std::span<const QuantizedImage> patches, const SpatialRelationship& rel);

/// Column names f_0000, f_0001, ... used for GLCM feature tables.
std::vector<std::string> glcm_feature_names(std::size_t count);

}  // namespace deepfeat
