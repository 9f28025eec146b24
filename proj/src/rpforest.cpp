#include "deepfeat/rpforest.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "json.hpp"

#include "deepfeat/error.hpp"
#include "deepfeat/random.hpp"

namespace deepfeat {

namespace {

void check_dim(const Eigen::MatrixXd& data, int dim) {
    if (data.cols() != dim)
        throw InvalidData("data has " + std::to_string(data.cols()) +
                          " columns but the tree was grown on " + std::to_string(dim));
}

// Renumbers leaves left to right (depth-first, left child first).
int number_leaves(std::vector<RpTree::Node>& nodes) {
    int next = 0;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        if (nodes[i].is_leaf()) {
            nodes[i].leaf_id = next++;
        } else {
            stack.push_back(nodes[i].right);
            stack.push_back(nodes[i].left);
        }
    }
    return next;
}

}  // namespace

RpTree::RpTree(std::vector<Node> nodes, int dim, int min_node_size)
    : nodes_(std::move(nodes)), dim_(dim), min_node_size_(min_node_size) {
    if (nodes_.empty()) throw InvalidData("tree has no nodes");
    for (const auto& node : nodes_) {
        if (node.is_leaf()) continue;
        const auto count = static_cast<int>(nodes_.size());
        if (node.left >= count || node.right < 0 || node.right >= count)
            throw InvalidData("tree node references a missing child");
        if (node.direction.size() != dim_) throw InvalidData("split direction has wrong length");
    }
    n_leaves_ = number_leaves(nodes_);
}

int RpTree::depth() const {
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

int RpTree::leaf_of(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    int i = 0;
    while (!nodes_[i].is_leaf())
        i = x.dot(nodes_[i].direction) < nodes_[i].split ? nodes_[i].left : nodes_[i].right;
    return nodes_[i].leaf_id;
}

std::string RpTree::path_of(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    std::string path;
    int i = 0;
    while (!nodes_[i].is_leaf()) {
        const bool left = x.dot(nodes_[i].direction) < nodes_[i].split;
        path.push_back(left ? 'L' : 'R');
        i = left ? nodes_[i].left : nodes_[i].right;
    }
    return path;
}

std::vector<int> RpTree::leaf_ids(const Eigen::MatrixXd& data) const {
    check_dim(data, dim_);
    const Eigen::MatrixXd points = data.transpose();
    std::vector<int> out(points.cols());
    for (Eigen::Index i = 0; i < points.cols(); ++i) out[i] = leaf_of(points.col(i));
    return out;
}

RpTree build_rptree(const Eigen::MatrixXd& data, int min_node_size, std::uint64_t seed) {
    if (min_node_size < 2) throw InvalidParameter("rpTree minimum node size must be >= 2");
    if (data.rows() < 1 || data.cols() < 1) throw InvalidData("rpTree needs a non-empty matrix");
    if (!data.allFinite()) throw InvalidData("rpTree input contains non-finite values");

    const Eigen::MatrixXd points = data.transpose();
    const auto dim = static_cast<int>(points.rows());
    Rng rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit;

    std::vector<RpTree::Node> nodes(1);
    nodes[0].members.resize(points.cols());
    std::iota(nodes[0].members.begin(), nodes[0].members.end(), 0);

    std::deque<int> work{0};
    std::vector<double> proj;
    while (!work.empty()) {
        const int id = work.front();
        work.pop_front();
        if (static_cast<int>(nodes[id].members.size()) < min_node_size) continue;

        Eigen::VectorXd dir(dim);
        for (int k = 0; k < dim; ++k) dir(k) = gauss(rng);
        const double norm = dir.norm();
        if (norm == 0.0) continue;
        dir /= norm;

        const std::vector<int>& members = nodes[id].members;
        proj.resize(members.size());
        for (std::size_t i = 0; i < members.size(); ++i) proj[i] = points.col(members[i]).dot(dir);
        const auto [lo, hi] = std::minmax_element(proj.begin(), proj.end());
        const double a = *lo;
        const double b = *hi;
        if (!(a < b)) continue;  // every member projects to one value

        // s on (a, b] keeps both children non-empty
        const double s = a + (1.0 - unit(rng)) * (b - a);
        RpTree::Node left, right;
        for (std::size_t i = 0; i < members.size(); ++i)
            (proj[i] < s ? left : right).members.push_back(members[i]);

        const auto li = static_cast<int>(nodes.size());
        nodes[id].direction = std::move(dir);
        nodes[id].split = s;
        nodes[id].left = li;
        nodes[id].right = li + 1;
        nodes[id].members.clear();
        nodes[id].members.shrink_to_fit();
        nodes.push_back(std::move(left));
        nodes.push_back(std::move(right));
        work.push_back(li);
        work.push_back(li + 1);
    }
    return RpTree(std::move(nodes), dim, min_node_size);
}

std::uint64_t rptree_seed(std::uint64_t seed, int index) { return derive_seed(seed, "rptree", index); }

RpForest build_rpforest(const Eigen::MatrixXd& data, int n_trees, int min_node_size,
                        std::uint64_t seed) {
    if (n_trees < 1) throw InvalidParameter("forest needs at least one tree");
    RpForest forest;
    forest.min_node_size = min_node_size;
    forest.seed = seed;
    forest.trees.reserve(n_trees);
    for (int t = 0; t < n_trees; ++t)
        forest.trees.push_back(build_rptree(data, min_node_size, rptree_seed(seed, t)));
    return forest;
}

DeepFeatureSet leaf_features(const RpForest& forest, const Eigen::MatrixXd& data) {
    DeepFeatureSet out;
    out.provenance = "rpforest T=" + std::to_string(forest.trees.size()) +
                     " n_s=" + std::to_string(forest.min_node_size);
    for (std::size_t t = 0; t < forest.trees.size(); ++t)
        out.add("rptree_" + std::to_string(t), forest.trees[t].leaf_ids(data));
    return out;
}

DeepFeatureSet encode_root_paths(const RpTree& tree, const Eigen::MatrixXd& data, int index) {
    check_dim(data, tree.dim());
    const Eigen::MatrixXd points = data.transpose();
    std::vector<std::string> paths(points.cols());
    std::vector<std::string> levels;
    std::vector<int> codes(points.cols());
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        paths[i] = tree.path_of(points.col(i));
        auto it = std::find(levels.begin(), levels.end(), paths[i]);
        codes[i] = static_cast<int>(it - levels.begin());
        if (it == levels.end()) levels.push_back(paths[i]);
    }
    DeepFeatureSet out;
    out.provenance = "rpTree root paths";
    out.add("rppath_" + std::to_string(index), std::move(codes));
    out.levels.push_back(std::move(levels));
    return out;
}

DeepFeatureSet encode_root_paths(const RpForest& forest, const Eigen::MatrixXd& data) {
    DeepFeatureSet out;
    out.provenance = "rpTree root paths";
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        auto one = encode_root_paths(forest.trees[t], data, static_cast<int>(t));
        out.add(std::move(one.names.front()), std::move(one.columns.front()));
        out.levels.push_back(std::move(one.levels.front()));
    }
    return out;
}

DeepFeatureSet rpforest_leaf_features(const Eigen::MatrixXd& fit_data,
                                      const Eigen::MatrixXd& route_data, int n_trees,
                                      int min_node_size, std::uint64_t seed) {
    if (n_trees < 1) throw InvalidParameter("forest needs at least one tree");
    DeepFeatureSet out;
    out.provenance = "rpforest T=" + std::to_string(n_trees) + " n_s=" + std::to_string(min_node_size);
    for (int t = 0; t < n_trees; ++t) {
        const RpTree tree = build_rptree(fit_data, min_node_size, rptree_seed(seed, t));
        out.add("rptree_" + std::to_string(t), tree.leaf_ids(route_data));
    }
    return out;
}

std::string rpforest_to_json(const RpForest& forest) {
    nlohmann::json j;
    j["format"] = "deepfeat-rpforest";
    j["version"] = kRpForestFormatVersion;
    j["min_node_size"] = forest.min_node_size;
    j["seed"] = forest.seed;
    j["trees"] = nlohmann::json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::json t;
        t["dim"] = tree.dim();
        t["nodes"] = nlohmann::json::array();
        for (const auto& node : tree.nodes()) {
            nlohmann::json n;
            if (node.is_leaf()) {
                n["members"] = node.members;
            } else {
                n["direction"] = std::vector<double>(node.direction.data(),
                                                     node.direction.data() + node.direction.size());
                n["split"] = node.split;
                n["left"] = node.left;
                n["right"] = node.right;
            }
            t["nodes"].push_back(std::move(n));
        }
        j["trees"].push_back(std::move(t));
    }
    return j.dump();
}

RpForest rpforest_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format") != "deepfeat-rpforest") throw InvalidData("not an rpforest document");
        if (j.at("version").get<int>() != kRpForestFormatVersion)
            throw InvalidData("unsupported rpforest version");
        RpForest forest;
        forest.min_node_size = j.at("min_node_size").get<int>();
        forest.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("trees")) {
            std::vector<RpTree::Node> nodes;
            for (const auto& n : t.at("nodes")) {
                RpTree::Node node;
                if (n.contains("direction")) {
                    const auto dir = n.at("direction").get<std::vector<double>>();
                    node.direction = Eigen::Map<const Eigen::VectorXd>(
                        dir.data(), static_cast<Eigen::Index>(dir.size()));
                    node.split = n.at("split").get<double>();
                    node.left = n.at("left").get<int>();
                    node.right = n.at("right").get<int>();
                } else {
                    node.members = n.at("members").get<std::vector<int>>();
                }
                nodes.push_back(std::move(node));
            }
            forest.trees.emplace_back(std::move(nodes), t.at("dim").get<int>(), forest.min_node_size);
        }
        return forest;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("malformed rpforest JSON: ") + e.what());
    }
}

}  // namespace deepfeat
