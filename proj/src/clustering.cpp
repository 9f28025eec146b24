#include "deepfeat/clustering.hpp"

#include <algorithm>
#include <map>
#include <cctype>
#include <limits>
#include <numeric>

#include "deepfeat/error.hpp"
#include "deepfeat/random.hpp"

namespace deepfeat {

namespace {

void require_finite(const Eigen::MatrixXd& data) {
    if (!data.allFinite()) throw InvalidData("clustering input contains non-finite values");
}

double squared_distance(const Eigen::MatrixXd& points, Eigen::Index i,
                        const Eigen::MatrixXd& centers, Eigen::Index j) {
    return (points.col(i) - centers.col(j)).squaredNorm();
}

// Means of each cluster as columns of a p x k matrix; counts returned alongside.
Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k,
                              std::vector<int>& counts) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
    counts.assign(k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        sums.col(labels[i]) += points.col(static_cast<Eigen::Index>(i));
        ++counts[labels[i]];
    }
    for (int j = 0; j < k; ++j)
        if (counts[j] > 0) sums.col(j) /= counts[j];
    return sums;
}

}  // namespace

std::vector<int> nearest_centroid(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids) {
    if (data.cols() != centroids.cols()) throw InvalidData("centroid dimension mismatch");
    const Eigen::MatrixXd points = data.transpose();
    const Eigen::MatrixXd centers = centroids.transpose();
    std::vector<int> labels(data.rows());
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < centers.cols(); ++j) {
            const double d = squared_distance(points, i, centers, j);
            if (d < best) {
                best = d;
                labels[i] = static_cast<int>(j);
            }
        }
    }
    return labels;
}

double within_cluster_ss(const Eigen::MatrixXd& data, const std::vector<int>& labels, int k) {
    const Eigen::MatrixXd points = data.transpose();
    std::vector<int> counts;
    const Eigen::MatrixXd means = cluster_means(points, labels, k, counts);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < points.cols(); ++i)
        ss += squared_distance(points, i, means, labels[i]);
    return ss;
}

KMeansResult kmeans(const Eigen::MatrixXd& data, int k, int max_iter, std::uint64_t seed) {
    const auto n = static_cast<int>(data.rows());
    if (k < 1 || k > n)
        throw InvalidParameter("kmeans needs 1 <= k <= n (k=" + std::to_string(k) +
                               ", n=" + std::to_string(n) + ")");
    if (max_iter < 1) throw InvalidParameter("kmeans max_iter must be >= 1");
    if (data.cols() < 1) throw InvalidData("kmeans needs at least one column");
    require_finite(data);

    const Eigen::MatrixXd points = data.transpose();  // p x n

    // k distinct rows, uniformly without replacement (partial Fisher-Yates)
    Rng rng(seed);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    Eigen::MatrixXd centers(points.rows(), k);
    for (int j = 0; j < k; ++j) centers.col(j) = points.col(order[j]);

    std::vector<int> labels(n);
    std::vector<double> dist(n);
    auto assign = [&](bool keep_ties) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best_j = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                const double d = squared_distance(points, i, centers, j);
                if (d < best) {
                    best = d;
                    best_j = j;
                }
            }
            // only move on a strict improvement so the objective strictly drops
            if (keep_ties && squared_distance(points, i, centers, labels[i]) <= best)
                best_j = labels[i];
            if (best_j != labels[i]) changed = true;
            labels[i] = best_j;
        }
        return changed;
    };
    assign(false);

    KMeansResult result;
    std::vector<int> counts;
    while (true) {
        centers = cluster_means(points, labels, k, counts);
        for (int j = 0; j < k; ++j) {
            if (counts[j] > 0) continue;
            // re-seed the empty cluster at the point farthest from its centroid
            int far = -1;
            double far_d = -1.0;
            for (int i = 0; i < n; ++i) {
                if (counts[labels[i]] < 2) continue;
                const double d = squared_distance(points, i, centers, labels[i]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            labels[far] = j;
            centers = cluster_means(points, labels, k, counts);
        }
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
            dist[i] = squared_distance(points, i, centers, labels[i]);
            ss += dist[i];
        }
        result.objective_trace.push_back(ss);
        ++result.iterations;
        if (result.iterations >= max_iter) break;
        if (!assign(true)) {
            result.converged = true;
            break;
        }
    }

    result.labels = std::move(labels);
    result.k = k;
    result.inertia = result.objective_trace.back();
    result.centroids = centers.transpose();
    return result;
}

std::string_view linkage_name(Linkage l) {
    switch (l) {
        case Linkage::Single: return "single";
        case Linkage::Complete: return "complete";
        case Linkage::Average: return "average";
    }
    return "?";
}

Dendrogram agglomerative_from_distances(const Eigen::MatrixXd& distances, Linkage linkage) {
    const auto n = static_cast<int>(distances.rows());
    if (n < 2 || distances.cols() != n)
        throw InvalidParameter("agglomerative clustering needs a square matrix with n >= 2");
    if (!distances.allFinite()) throw InvalidData("distance matrix contains non-finite values");

    Eigen::MatrixXd d = distances;
    std::vector<char> active(n, 1);
    std::vector<int> size(n, 1);
    std::vector<int> node(n);
    std::iota(node.begin(), node.end(), 0);
    std::vector<int> nn(n, -1);
    std::vector<double> nnd(n, std::numeric_limits<double>::infinity());

    // slot s always holds the cluster whose smallest member is s
    auto refresh = [&](int i) {
        nn[i] = -1;
        nnd[i] = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (j == i || !active[j]) continue;
            if (d(i, j) < nnd[i]) {
                nnd[i] = d(i, j);
                nn[i] = j;
            }
        }
    };
    for (int i = 0; i < n; ++i) refresh(i);

    Dendrogram out;
    out.n_leaves = n;
    out.method = std::string(linkage_name(linkage));
    out.merges.reserve(n - 1);

    for (int step = 0; step < n - 1; ++step) {
        int a = -1;
        for (int i = 0; i < n; ++i)
            if (active[i] && nn[i] >= 0 && (a < 0 || nnd[i] < nnd[a])) a = i;
        const int b = nn[a];
        out.merges.push_back({node[a], node[b], d(a, b)});
        node[a] = n + step;

        for (int k = 0; k < n; ++k) {
            if (!active[k] || k == a || k == b) continue;
            double v = 0.0;
            switch (linkage) {
                case Linkage::Single: v = std::min(d(a, k), d(b, k)); break;
                case Linkage::Complete: v = std::max(d(a, k), d(b, k)); break;
                case Linkage::Average:
                    v = (size[a] * d(a, k) + size[b] * d(b, k)) / (size[a] + size[b]);
                    break;
            }
            d(a, k) = d(k, a) = v;
        }
        active[b] = 0;
        size[a] += size[b];

        refresh(a);
        for (int k = 0; k < n; ++k) {
            if (!active[k] || k == a) continue;
            if (nn[k] == a || nn[k] == b) {
                refresh(k);
            } else if (d(k, a) < nnd[k] || (d(k, a) == nnd[k] && a < nn[k])) {
                nnd[k] = d(k, a);
                nn[k] = a;
            }
        }
    }
    return out;
}

Dendrogram agglomerative(const Eigen::MatrixXd& data, Linkage linkage) {
    require_finite(data);
    if (data.rows() < 2) throw InvalidParameter("agglomerative clustering needs n >= 2");
    return agglomerative_from_distances(pairwise_distances(data), linkage);
}

Dendrogram divisive_from_distances(const Eigen::MatrixXd& d) {
    const auto n = static_cast<int>(d.rows());
    if (n < 2 || d.cols() != n)
        throw InvalidParameter("divisive clustering needs a square matrix with n >= 2");
    if (!d.allFinite()) throw InvalidData("distance matrix contains non-finite values");

    struct Cluster {
        std::vector<int> members;  // sorted
        double diameter = 0.0;
        int node = -1;             // filled in when building merges
    };
    auto diameter = [&](const std::vector<int>& m) {
        double best = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = i + 1; j < m.size(); ++j) best = std::max(best, d(m[i], m[j]));
        return best;
    };

    struct Split {
        int parent;
        int first;   // child holding the smallest member
        int second;
        double height;
    };
    std::vector<Cluster> clusters;
    std::vector<Split> splits;
    std::vector<int> open;  // indices into clusters with >= 2 members

    Cluster root;
    root.members.resize(n);
    std::iota(root.members.begin(), root.members.end(), 0);
    root.diameter = diameter(root.members);
    clusters.push_back(std::move(root));
    open.push_back(0);

    std::vector<double> sum_rest(n), sum_splinter(n);
    std::vector<char> in_splinter(n, 0);

    while (!open.empty()) {
        // largest diameter; ties go to the cluster with the smallest member
        std::size_t pick = 0;
        for (std::size_t i = 1; i < open.size(); ++i) {
            const Cluster& c = clusters[open[i]];
            const Cluster& best = clusters[open[pick]];
            if (c.diameter > best.diameter ||
                (c.diameter == best.diameter && c.members.front() < best.members.front()))
                pick = i;
        }
        const int parent = open[pick];
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        const std::vector<int> members = clusters[parent].members;
        const double height = clusters[parent].diameter;

        for (int x : members) {
            sum_rest[x] = 0.0;
            for (int y : members) sum_rest[x] += d(x, y);
            sum_splinter[x] = 0.0;
        }
        int seed = members.front();
        for (int x : members)
            if (sum_rest[x] > sum_rest[seed]) seed = x;

        auto move_to_splinter = [&](int x) {
            in_splinter[x] = 1;
            for (int y : members) {
                if (in_splinter[y]) continue;
                sum_rest[y] -= d(x, y);
                sum_splinter[y] += d(x, y);
            }
        };
        move_to_splinter(seed);
        std::size_t n_splinter = 1;
        std::size_t n_rest = members.size() - 1;
        while (n_rest > 1) {
            int best = -1;
            double best_gap = 0.0;
            for (int x : members) {
                if (in_splinter[x]) continue;
                const double gap = sum_rest[x] / static_cast<double>(n_rest - 1) -
                                   sum_splinter[x] / static_cast<double>(n_splinter);
                if (best < 0 || gap > best_gap) {
                    best = x;
                    best_gap = gap;
                }
            }
            if (best_gap <= 0.0) break;
            move_to_splinter(best);
            ++n_splinter;
            --n_rest;
        }

        Cluster a, b;
        for (int x : members) (in_splinter[x] ? a : b).members.push_back(x);
        for (int x : members) in_splinter[x] = 0;
        if (b.members.front() < a.members.front()) std::swap(a, b);
        a.diameter = diameter(a.members);
        b.diameter = diameter(b.members);
        const int ia = static_cast<int>(clusters.size());
        clusters.push_back(std::move(a));
        clusters.push_back(std::move(b));
        for (int c : {ia, ia + 1})
            if (clusters[c].members.size() >= 2) open.push_back(c);
        splits.push_back({parent, ia, ia + 1, height});
    }

    // the last split becomes the first merge
    Dendrogram out;
    out.n_leaves = n;
    out.method = "diana";
    out.merges.reserve(splits.size());
    for (auto it = splits.rbegin(); it != splits.rend(); ++it) {
        auto node_of = [&](int c) {
            const Cluster& cl = clusters[c];
            return cl.members.size() == 1 ? cl.members.front() : cl.node;
        };
        out.merges.push_back({node_of(it->first), node_of(it->second), it->height});
        clusters[it->parent].node = n + static_cast<int>(out.merges.size()) - 1;
    }
    return out;
}

Dendrogram divisive(const Eigen::MatrixXd& data) {
    require_finite(data);
    if (data.rows() < 2) throw InvalidParameter("divisive clustering needs n >= 2");
    return divisive_from_distances(pairwise_distances(data));
}

ClusterAssignment cut_dendrogram(const Dendrogram& dendro, int k) {
    const int n = dendro.n_leaves;
    if (k < 1 || k > n)
        throw InvalidParameter("cut needs 1 <= k <= n (k=" + std::to_string(k) +
                               ", n=" + std::to_string(n) + ")");
    if (static_cast<int>(dendro.merges.size()) != n - 1)
        throw InvalidData("dendrogram must hold n - 1 merges");

    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<int> rep(2 * n - 1);
    std::iota(rep.begin(), rep.begin() + n, 0);
    for (int m = 0; m < n - k; ++m) {
        const Merge& mg = dendro.merges[m];
        if (mg.left < 0 || mg.right < 0 || mg.left >= n + m || mg.right >= n + m)
            throw InvalidData("dendrogram merge references an unknown node");
        const int a = find(rep[mg.left]);
        const int b = find(rep[mg.right]);
        parent[b] = a;
        rep[n + m] = a;
    }
    std::vector<int> roots(n);
    for (int i = 0; i < n; ++i) roots[i] = find(i);

    ClusterAssignment out;
    out.labels = canonical_labels(roots);
    out.k = k;
    return out;
}

std::vector<int> leaf_order(const Dendrogram& d) {
    const int n = d.n_leaves;
    if (static_cast<int>(d.merges.size()) != n - 1) throw InvalidData("dendrogram must hold n - 1 merges");
    std::vector<int> out;
    out.reserve(n);
    std::vector<int> stack{n == 1 ? 0 : 2 * n - 2};
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        if (node < n) {
            out.push_back(node);
            continue;
        }
        const Merge& m = d.merges[node - n];
        stack.push_back(m.right);
        stack.push_back(m.left);
    }
    return out;
}

std::vector<int> relabel_along(std::span<const int> labels, std::span<const int> order) {
    if (order.size() != labels.size()) throw InvalidParameter("order must list every row once");
    std::map<int, int> ids;
    for (int row : order) ids.emplace(labels[row], static_cast<int>(ids.size()));
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids.at(labels[i]);
    return out;
}

ClusteringMethod ClusteringMethod::parse(std::string_view raw) {
    std::string name;
    for (char c : raw) name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (name == "kmeans" || name == "k-means") return {Algorithm::KMeans, Linkage::Average};
    if (name == "diana" || name == "divisive") return {Algorithm::Divisive, Linkage::Average};
    if (name == "agnes" || name == "average") return {Algorithm::Agglomerative, Linkage::Average};
    if (name == "hclust" || name == "complete") return {Algorithm::Agglomerative, Linkage::Complete};
    if (name == "single") return {Algorithm::Agglomerative, Linkage::Single};
    throw InvalidParameter("unknown clustering method '" + std::string(raw) + "'");
}

std::string ClusteringMethod::name() const {
    switch (algorithm) {
        case Algorithm::KMeans: return "kmeans";
        case Algorithm::Divisive: return "diana";
        case Algorithm::Agglomerative:
            switch (linkage) {
                case Linkage::Average: return "agnes";
                case Linkage::Complete: return "hclust";
                case Linkage::Single: return "single";
            }
    }
    return "?";
}

DeepFeatureSet clustering_features(const Eigen::MatrixXd& data,
                                   const std::vector<ClusteringMethod>& methods, int k_min,
                                   int k_max, std::uint64_t seed, int kmeans_max_iter) {
    DeepFeatureSet out;
    out.provenance = "clustering k=[" + std::to_string(k_min) + "," + std::to_string(k_max) + "]";
    if (methods.empty()) return out;
    const auto n = static_cast<int>(data.rows());
    if (k_min < 2 || k_max < k_min || k_max > n)
        throw InvalidParameter("k range [" + std::to_string(k_min) + "," + std::to_string(k_max) +
                               "] must lie within [2, n=" + std::to_string(n) + "]");
    require_finite(data);

    Eigen::MatrixXd distances;
    auto dist = [&]() -> const Eigen::MatrixXd& {
        if (distances.size() == 0) distances = pairwise_distances(data);
        return distances;
    };

    for (const auto& method : methods) {
        const std::string prefix = method.name();
        if (method.algorithm == ClusteringMethod::Algorithm::KMeans) {
            for (int k = k_min; k <= k_max; ++k) {
                const std::string col = prefix + "_k" + std::to_string(k);
                const auto km = kmeans(data, k, kmeans_max_iter, derive_seed(seed, "kmeans", k));
                out.add(col, canonical_labels(km.labels));
            }
            continue;
        }
        const Dendrogram dendro = method.algorithm == ClusteringMethod::Algorithm::Divisive
                                      ? divisive_from_distances(dist())
                                      : agglomerative_from_distances(dist(), method.linkage);
        const std::vector<int> order = leaf_order(dendro);
        for (int k = k_min; k <= k_max; ++k)
            out.add(prefix + "_k" + std::to_string(k), relabel_along(cut_dendrogram(dendro, k).labels, order));
    }
    out.validate();
    return out;
}

}  // namespace deepfeat
