#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <random>
#include <set>

#include "deepfeat/error.hpp"
#include "deepfeat/rpforest.hpp"
#include "oracles.hpp"

using namespace deepfeat;

namespace {

Eigen::MatrixXd gaussian(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = g(rng);
    return x;
}

// Members of every node, gathered from the leaves below it.
std::vector<std::vector<int>> subtree_members(const RpTree& t) {
    std::vector<std::vector<int>> out(t.nodes().size());
    std::function<const std::vector<int>&(int)> walk = [&](int id) -> const std::vector<int>& {
        const auto& node = t.nodes()[id];
        if (node.is_leaf()) {
            out[id] = node.members;
        } else {
            out[id] = walk(node.left);
            const auto& r = walk(node.right);
            out[id].insert(out[id].end(), r.begin(), r.end());
        }
        return out[id];
    };
    walk(0);
    return out;
}

}  // namespace

TEST_CASE("tree invariants over 200 seeded trees") {
    const Eigen::MatrixXd x = gaussian(150, 5, 1);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const int ns = 5 + static_cast<int>(seed % 20);
        const RpTree t = build_rptree(x, ns, seed);
        const auto members = subtree_members(t);

        std::vector<int> all = members[0];
        std::sort(all.begin(), all.end());
        REQUIRE(all.size() == 150);
        for (int i = 0; i < 150; ++i) CHECK(all[i] == i);

        std::set<int> leaf_ids;
        for (std::size_t id = 0; id < t.nodes().size(); ++id) {
            const auto& node = t.nodes()[id];
            if (node.is_leaf()) {
                leaf_ids.insert(node.leaf_id);
                for (int i : node.members) CHECK(t.leaf_of(x.row(i).transpose()) == node.leaf_id);
                continue;
            }
            CHECK(static_cast<int>(members[id].size()) >= ns);
            CHECK(node.direction.norm() == doctest::Approx(1.0));
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (int i : members[id]) {
                const double proj = x.row(i).dot(node.direction);
                lo = std::min(lo, proj);
                hi = std::max(hi, proj);
            }
            CHECK(node.split >= lo);
            CHECK(node.split <= hi);
            for (int i : members[node.left]) CHECK(x.row(i).dot(node.direction) < node.split);
            for (int i : members[node.right]) CHECK(x.row(i).dot(node.direction) >= node.split);
        }
        CHECK(static_cast<int>(leaf_ids.size()) == t.n_leaves());
        CHECK(*leaf_ids.begin() == 0);
        CHECK(*leaf_ids.rbegin() == t.n_leaves() - 1);
    }
}

TEST_CASE("leaf IDs run left to right in pre-order") {
    const RpTree t = build_rptree(gaussian(80, 3, 2), 10, 3);
    std::vector<int> seen;
    std::function<void(int)> walk = [&](int id) {
        const auto& n = t.nodes()[id];
        if (n.is_leaf()) {
            seen.push_back(n.leaf_id);
            return;
        }
        walk(n.left);
        walk(n.right);
    };
    walk(0);
    for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == static_cast<int>(i));
}

TEST_CASE("small samples stay in a single leaf") {
    const RpTree t = build_rptree(gaussian(5, 3, 4), 20, 1);
    CHECK(t.n_leaves() == 1);
    CHECK(t.depth() == 0);
    const DeepFeatureSet paths = encode_root_paths(t, gaussian(5, 3, 4));
    for (const auto& s : paths.levels[0]) CHECK(s.empty());
    RpForest f;
    f.trees.push_back(t);
    const DeepFeatureSet leaves = leaf_features(f, gaussian(5, 3, 4));
    REQUIRE(leaves.size() == 1);
    for (int id : leaves.columns[0]) CHECK(id == 0);
}

TEST_CASE("identical points make a leaf") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(40, 2);
    const RpTree t = build_rptree(x, 2, 5);
    CHECK(t.n_leaves() == 1);
    CHECK_THROWS_AS(build_rptree(x, 1, 5), InvalidParameter);
}

TEST_CASE("two far blobs are rarely mixed in a leaf") {
    Eigen::MatrixXd x = gaussian(200, 4, 6) * 0.2;
    x.bottomRows(100).array() += 20.0;
    int mixed = 0, leaves = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const RpTree t = build_rptree(x, 20, seed);
        for (const auto& n : t.nodes()) {
            if (!n.is_leaf()) continue;
            ++leaves;
            bool low = false, high = false;
            for (int i : n.members) (i < 100 ? low : high) = true;
            mixed += low && high;
        }
    }
    CHECK(static_cast<double>(mixed) / leaves < 0.10);
}

TEST_CASE("streaming features equal the stored forest") {
    const Eigen::MatrixXd fit = gaussian(120, 4, 7);
    const Eigen::MatrixXd route = gaussian(30, 4, 8);
    const RpForest forest = build_rpforest(fit, 12, 15, 99);
    const DeepFeatureSet a = leaf_features(forest, route);
    const DeepFeatureSet b = rpforest_leaf_features(fit, route, 12, 15, 99);
    CHECK(a.names == b.names);
    CHECK(a.columns == b.columns);
    CHECK(a.names.front() == "rptree_0");
    CHECK(a.size() == 12);
    const RpForest again = build_rpforest(fit, 12, 15, 99);
    CHECK(leaf_features(again, route).columns == a.columns);
    CHECK(rpforest_leaf_features(fit, route, 12, 15, 100).columns != a.columns);
}

TEST_CASE("root paths induce the same partition as leaf IDs") {
    const Eigen::MatrixXd x = gaussian(100, 3, 9);
    const RpForest forest = build_rpforest(x, 5, 10, 4);
    const DeepFeatureSet paths = encode_root_paths(forest, x);
    const DeepFeatureSet leaves = leaf_features(forest, x);
    for (std::size_t t = 0; t < 5; ++t) {
        CHECK(oracle::partition_of(paths.columns[t]) == oracle::partition_of(leaves.columns[t]));
        const RpTree& tree = forest.trees[t];
        if (tree.n_leaves() < 2) continue;
        // rows on opposite sides of the root differ at the first step
        const auto& root = tree.nodes()[0];
        for (int i = 0; i < 100; ++i) {
            const std::string p = tree.path_of(x.row(i).transpose());
            CHECK(p.front() == (x.row(i).dot(root.direction) < root.split ? 'L' : 'R'));
        }
    }
}

TEST_CASE("JSON round trip preserves routing") {
    const Eigen::MatrixXd x = gaussian(90, 6, 10);
    const RpForest forest = build_rpforest(x, 4, 12, 5);
    const RpForest back = rpforest_from_json(rpforest_to_json(forest));
    CHECK(leaf_features(back, x).columns == leaf_features(forest, x).columns);
    CHECK(back.min_node_size == 12);
    CHECK_THROWS(rpforest_from_json("{\"format\":\"something-else\"}"));
}

TEST_CASE("routing data of the wrong width is rejected") {
    const RpForest forest = build_rpforest(gaussian(60, 3, 11), 2, 10, 1);
    CHECK_THROWS_AS(leaf_features(forest, gaussian(5, 4, 1)), InvalidData);
}
