#include "deepfeat/imagery.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <iterator>

#include "deepfeat/error.hpp"

namespace deepfeat {

namespace {

struct Offset {
    int row;
    int col;
};

Offset unit_offset(Direction d) {
    switch (d) {
        case Direction::NE: return {-1, 1};
        case Direction::SE: return {1, 1};
        case Direction::NW: return {-1, -1};
        case Direction::SW: return {1, -1};
        case Direction::S: return {1, 0};
        case Direction::N: return {-1, 0};
        case Direction::E: return {0, 1};
        case Direction::W: return {0, -1};
    }
    throw InvalidParameter("unknown direction");
}

constexpr std::array<std::string_view, 8> kDirectionNames = {"NE", "SE", "NW", "SW",
                                                              "S",  "N",  "E",  "W"};

}  // namespace

int SpatialRelationship::row_step() const { return unit_offset(direction).row * distance; }
int SpatialRelationship::col_step() const { return unit_offset(direction).col * distance; }

SpatialRelationship SpatialRelationship::reversed() const {
    const Offset o = unit_offset(direction);
    for (Direction d : all_directions()) {
        const Offset r = unit_offset(d);
        if (r.row == -o.row && r.col == -o.col) return {d, distance};
    }
    throw InvalidParameter("direction has no reverse");
}

std::string SpatialRelationship::name() const {
    return std::string(kDirectionNames[static_cast<std::size_t>(direction)]) + "," +
           std::to_string(distance);
}

SpatialRelationship SpatialRelationship::parse(std::string_view direction, int distance) {
    if (distance < 1) throw InvalidParameter("relationship distance must be >= 1");
    std::string upper;
    std::transform(direction.begin(), direction.end(), std::back_inserter(upper),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (std::size_t i = 0; i < kDirectionNames.size(); ++i) {
        if (kDirectionNames[i] == upper) return {static_cast<Direction>(i), distance};
    }
    throw InvalidParameter("unknown direction '" + std::string(direction) +
                           "' (expected one of NE SE NW SW S N E W)");
}

FeatureMask::FeatureMask(int n_gray_levels, std::vector<std::pair<int, int>> indices)
    : n_gray_levels_(n_gray_levels), indices_(std::move(indices)) {
    for (const auto& [a, b] : indices_) {
        if (a < 0 || b < 0 || a >= n_gray_levels_ || b >= n_gray_levels_)
            throw InvalidData("mask index (" + std::to_string(a) + "," + std::to_string(b) +
                              ") outside " + std::to_string(n_gray_levels_) + "^2");
    }
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
}

FeatureMask FeatureMask::full(int n_gray_levels) {
    std::vector<std::pair<int, int>> all;
    all.reserve(static_cast<std::size_t>(n_gray_levels) * n_gray_levels);
    for (int a = 0; a < n_gray_levels; ++a)
        for (int b = 0; b < n_gray_levels; ++b) all.emplace_back(a, b);
    return FeatureMask(n_gray_levels, std::move(all));
}

bool FeatureMask::contains(int a, int b) const {
    return std::binary_search(indices_.begin(), indices_.end(), std::make_pair(a, b));
}

FeatureMask FeatureMask::union_with(const FeatureMask& other) const {
    if (other.n_gray_levels_ != n_gray_levels_)
        throw InvalidParameter("cannot union masks over different gray-level counts");
    std::vector<std::pair<int, int>> merged;
    std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(),
                   other.indices_.end(), std::back_inserter(merged));
    return FeatureMask(n_gray_levels_, std::move(merged));
}

QuantizedImage quantize(const GrayImage& img, int n_gray_levels) {
    if (n_gray_levels < 2 || n_gray_levels > 256)
        throw InvalidParameter("n_gray_levels must lie in [2, 256], got " +
                               std::to_string(n_gray_levels));
    if (img.height() < 1 || img.width() < 1) throw InvalidData("empty image");
    QuantizedImage q;
    q.n_gray_levels = n_gray_levels;
    q.bins = img.pixels.cast<int>() * n_gray_levels / 256;
    return q;
}

std::int64_t expected_pair_count(Eigen::Index height, Eigen::Index width,
                                 const SpatialRelationship& rel) {
    const std::int64_t rows = height - std::abs(rel.row_step());
    const std::int64_t cols = width - std::abs(rel.col_step());
    return rows > 0 && cols > 0 ? rows * cols : 0;
}

Glcm compute_glcm(const QuantizedImage& img, const SpatialRelationship& rel) {
    if (img.height() < 1 || img.width() < 1) throw InvalidData("empty image");
    if (rel.distance < 1) throw InvalidParameter("relationship distance must be >= 1");
    const int ng = img.n_gray_levels;
    Glcm out{ng, CountMatrix::Zero(ng, ng), rel};

    const Eigen::Index dr = rel.row_step();
    const Eigen::Index dc = rel.col_step();
    const Eigen::Index r0 = std::max<Eigen::Index>(0, -dr);
    const Eigen::Index r1 = std::min(img.height(), img.height() - dr);
    const Eigen::Index c0 = std::max<Eigen::Index>(0, -dc);
    const Eigen::Index c1 = std::min(img.width(), img.width() - dc);
    for (Eigen::Index r = r0; r < r1; ++r) {
        for (Eigen::Index c = c0; c < c1; ++c) {
            const int a = img.bins(r, c);
            const int b = img.bins(r + dr, c + dc);
            if (a < 0 || a >= ng || b < 0 || b >= ng)
                throw InvalidData("quantized bin outside [0, n_gray_levels)");
            ++out.counts(a, b);
        }
    }
    return out;
}

Eigen::VectorXd glcm_to_features(const Glcm& glcm) {
    // counts is row-major, so its storage order is already the flatten order
    return Eigen::Map<const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>>(glcm.counts.data(),
                                                                          glcm.counts.size())
        .cast<double>();
}

Eigen::VectorXd glcm_to_features(const Glcm& glcm, const FeatureMask& mask) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(mask.size()));
    Eigen::Index i = 0;
    for (const auto& [a, b] : mask.indices()) {
        if (a >= glcm.n_gray_levels || b >= glcm.n_gray_levels)
            throw InvalidData("mask index outside the GLCM");
        out(i++) = static_cast<double>(glcm.counts(a, b));
    }
    return out;
}

FeatureMask patch_mask(const Glcm& glcm) {
    std::vector<std::int64_t> entries(glcm.counts.data(),
                                      glcm.counts.data() + glcm.counts.size());
    const std::size_t n = entries.size();
    std::nth_element(entries.begin(), entries.begin() + n / 2, entries.end());
    double median = static_cast<double>(entries[n / 2]);
    if (n % 2 == 0) {
        const auto lower = *std::max_element(entries.begin(), entries.begin() + n / 2);
        median = 0.5 * (median + static_cast<double>(lower));
    }
    std::vector<std::pair<int, int>> kept;
    for (int a = 0; a < glcm.n_gray_levels; ++a)
        for (int b = 0; b < glcm.n_gray_levels; ++b)
            if (static_cast<double>(glcm.counts(a, b)) > median) kept.emplace_back(a, b);
    return FeatureMask(glcm.n_gray_levels, std::move(kept));
}

FeatureMask build_mask(std::span<const QuantizedImage> patches, const SpatialRelationship& rel) {
    if (patches.empty()) throw InvalidParameter("build_mask needs at least one patch");
    FeatureMask mask(patches.front().n_gray_levels, {});
    for (const auto& patch : patches) mask = mask.union_with(patch_mask(compute_glcm(patch, rel)));
    return mask;
}

std::vector<std::string> glcm_feature_names(std::size_t count) {
    std::vector<std::string> names;
    names.reserve(count);
    char buf[32];
    for (std::size_t i = 0; i < count; ++i) {
        std::snprintf(buf, sizeof buf, "f_%04zu", i);
        names.emplace_back(buf);
    }
    return names;
}

}  // namespace deepfeat
