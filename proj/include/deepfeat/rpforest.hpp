#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "deepfeat/feature_matrix.hpp"

namespace deepfeat {

/// Random projection tree. Internal nodes split on the projection onto a
/// random unit direction; points with projection < split go left.
class RpTree {
public:
    struct Node {
        Eigen::VectorXd direction;  // empty for leaves
        double split = 0.0;
        int left = -1;
        int right = -1;
        int leaf_id = -1;           // left-to-right leaf index, -1 for internal nodes
        std::vector<int> members;   // build-time members (leaves only)

        bool is_leaf() const { return left < 0; }
    };

    RpTree() = default;
    RpTree(std::vector<Node> nodes, int dim, int min_node_size);

    const std::vector<Node>& nodes() const { return nodes_; }
    int dim() const { return dim_; }
    int min_node_size() const { return min_node_size_; }
    int n_leaves() const { return n_leaves_; }
    int depth() const;

    /// Leaf index reached by routing x (length dim()).
    int leaf_of(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// "L"/"R" sequence from the root to the leaf reached by x.
    std::string path_of(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Leaf index of every row of data.
    std::vector<int> leaf_ids(const Eigen::MatrixXd& data) const;

private:
    std::vector<Node> nodes_;  // node 0 is the root
    int dim_ = 0;
    int min_node_size_ = 2;
    int n_leaves_ = 0;
};

/// Grows a tree on the rows of data. Nodes with fewer than min_node_size
/// members, or whose members all project to one value, become leaves.
RpTree build_rptree(const Eigen::MatrixXd& data, int min_node_size, std::uint64_t seed);

struct RpForest {
    std::vector<RpTree> trees;
    int min_node_size = 20;
    std::uint64_t seed = 0;
};

/// Seed of tree `index` within a forest grown from `seed`.
std::uint64_t rptree_seed(std::uint64_t seed, int index);

RpForest build_rpforest(const Eigen::MatrixXd& data, int n_trees, int min_node_size,
                        std::uint64_t seed);

/// One categorical column per tree ("rptree_<t>"): the leaf index of each row.
DeepFeatureSet leaf_features(const RpForest& forest, const Eigen::MatrixXd& data);

/// Root-path encoding of one tree ("rppath_<index>"), values kept in `levels`.
DeepFeatureSet encode_root_paths(const RpTree& tree, const Eigen::MatrixXd& data, int index = 0);
DeepFeatureSet encode_root_paths(const RpForest& forest, const Eigen::MatrixXd& data);

/// Grows trees one at a time on fit_data and routes route_data through each,
/// without keeping the forest in memory. Identical to
/// leaf_features(build_rpforest(fit_data, ...), route_data).
DeepFeatureSet rpforest_leaf_features(const Eigen::MatrixXd& fit_data,
                                      const Eigen::MatrixXd& route_data, int n_trees,
                                      int min_node_size, std::uint64_t seed);

inline constexpr int kRpForestFormatVersion = 1;

std::string rpforest_to_json(const RpForest& forest);
RpForest rpforest_from_json(const std::string& text);

}  // namespace deepfeat
