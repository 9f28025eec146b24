#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "deepfeat/feature_matrix.hpp"

namespace deepfeat {

/// Flat clustering: labels in [0, k).
struct ClusterAssignment {
    std::vector<int> labels;
    int k = 0;
    /// Within-cluster sum of squared distances to the cluster means.
    double inertia = 0.0;
};

struct KMeansResult : ClusterAssignment {
    Eigen::MatrixXd centroids;            // k x p
    std::vector<double> objective_trace;  // SS_W after each centroid update
    int iterations = 0;
    bool converged = false;
};

/// Lloyd's algorithm with seeded initialization from k distinct rows.
/// Empty clusters are re-seeded at the point farthest from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& data, int k, int max_iter, std::uint64_t seed);

/// Assigns each row to its nearest centroid (squared Euclidean, lowest index on ties).
std::vector<int> nearest_centroid(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids);

/// Within-cluster sum of squares for the given labels (cluster means as centers).
double within_cluster_ss(const Eigen::MatrixXd& data, const std::vector<int>& labels, int k);

enum class Linkage { Single, Complete, Average };

std::string_view linkage_name(Linkage l);

/// One step of a binary hierarchy. Node ids follow the usual convention:
/// 0..n-1 are leaves, n+m is the cluster produced by merge m.
struct Merge {
    int left = 0;
    int right = 0;
    double height = 0.0;
};

struct Dendrogram {
    int n_leaves = 0;
    std::vector<Merge> merges;  // n_leaves - 1 entries, bottom-up
    std::string method;
};

/// Euclidean distance matrix between rows.
template <typename Derived>
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixBase<Derived>& data) {
    const Eigen::MatrixXd points = data.transpose();  // one point per column
    const Eigen::Index n = points.cols();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j + 1; i < n; ++i)
            d(i, j) = d(j, i) = (points.col(i) - points.col(j)).norm();
    return d;
}

/// Bottom-up clustering from a distance matrix. Ties are broken toward the
/// lexicographically smallest pair of cluster indices (a cluster is indexed
/// by its smallest member).
Dendrogram agglomerative_from_distances(const Eigen::MatrixXd& distances, Linkage linkage);
Dendrogram agglomerative(const Eigen::MatrixXd& data, Linkage linkage);

/// Top-down splinter-group clustering (DIANA) from a distance matrix.
/// Split heights are the diameters of the clusters being split.
Dendrogram divisive_from_distances(const Eigen::MatrixXd& distances);
Dendrogram divisive(const Eigen::MatrixXd& data);

/// Exactly k clusters: applies the first n - k merges. IDs follow first
/// appearance in row order.
ClusterAssignment cut_dendrogram(const Dendrogram& d, int k);

/// Leaves in dendrogram order: depth-first from the root, left child first.
std::vector<int> leaf_order(const Dendrogram& d);

/// Renumbers cluster IDs so they increase along `order` (a permutation of
/// the rows); neighbouring branches get neighbouring IDs.
std::vector<int> relabel_along(std::span<const int> labels, std::span<const int> order);

struct ClusteringMethod {
    enum class Algorithm { KMeans, Agglomerative, Divisive };

    Algorithm algorithm = Algorithm::KMeans;
    Linkage linkage = Linkage::Average;

    /// Accepts kmeans, agnes (average), hclust (complete), diana, single,
    /// complete, average.
    static ClusteringMethod parse(std::string_view name);
    std::string name() const;
};

/// One column per (method, k), named "<method>_k<k>". Hierarchical cluster
/// IDs increase along the dendrogram leaf order; K-means IDs follow first
/// appearance. K-means for k uses seed derive_seed(seed, "kmeans", k).
DeepFeatureSet clustering_features(const Eigen::MatrixXd& data,
                                   const std::vector<ClusteringMethod>& methods, int k_min,
                                   int k_max, std::uint64_t seed, int kmeans_max_iter = 100);

}  // namespace deepfeat
