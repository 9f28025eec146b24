#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "deepfeat/classifier.hpp"
#include "deepfeat/error.hpp"
#include "oracles.hpp"

using namespace deepfeat;

namespace {

std::vector<std::vector<int>> random_counts(std::mt19937_64& rng, int categories, int classes) {
    std::uniform_int_distribution<int> c(0, 6);
    std::vector<std::vector<int>> counts(categories, std::vector<int>(classes));
    for (auto& row : counts)
        for (int& v : row) v = c(rng);
    return counts;
}

double brute_best(const std::vector<std::vector<int>>& counts) {
    const int n = static_cast<int>(counts.size());
    double best = 0.0;
    for (int mask = 1; mask < (1 << n) - 1; ++mask) {
        std::set<int> left;
        for (int c = 0; c < n; ++c)
            if (mask >> c & 1) left.insert(c);
        best = std::max(best, oracle::gini_gain(counts, left));
    }
    return best;
}

double total(const std::vector<std::vector<int>>& counts) {
    double n = 0;
    for (const auto& r : counts)
        for (int v : r) n += v;
    return n;
}

FeatureMatrix blobs(int n, double gap, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(n, 3);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = i % 2 ? 7 : 3;
        for (int j = 0; j < 3; ++j) x(i, j) = g(rng) + (y[i] == 7 ? gap : 0.0);
    }
    return FeatureMatrix(x, y);
}

}  // namespace

TEST_CASE("split gain agrees with the Gini definition") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto counts = random_counts(rng, 5, 3);
        std::vector<int> left;
        std::set<int> left_set;
        for (int c = 0; c < 5; ++c)
            if (rng() % 2) {
                left.push_back(c);
                left_set.insert(c);
            }
        const double n = total(counts);
        CHECK(categorical_split_gain(counts, left) == doctest::Approx(oracle::gini_gain(counts, left_set) / n));
    }
}

TEST_CASE("two-class subset search is exact") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 300; ++trial) {
        const int cats = 2 + static_cast<int>(trial % 7);
        const auto counts = random_counts(rng, cats, 2);
        const CategoricalSplit s = best_categorical_split(counts);
        const double n = total(counts);
        if (n == 0) continue;
        CHECK(s.gain == doctest::Approx(brute_best(counts) / n));
        if (!s.left.empty()) CHECK(s.gain == doctest::Approx(categorical_split_gain(counts, s.left)));
    }
}

TEST_CASE("multiclass heuristic never beats the exhaustive optimum") {
    std::mt19937_64 rng(3);
    int exact = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto counts = random_counts(rng, 6, 4);
        const CategoricalSplit s = best_categorical_split(counts);
        const double n = total(counts);
        const double opt = brute_best(counts) / n;
        CHECK(s.gain <= opt + 1e-12);
        if (!s.left.empty()) CHECK(s.gain == doctest::Approx(categorical_split_gain(counts, s.left)));
        exact += std::abs(s.gain - opt) < 1e-12;
    }
    // one-vs-rest orderings find the optimum most of the time
    CHECK(exact > 200);
}

TEST_CASE("a single present category cannot be split") {
    const std::vector<std::vector<int>> counts{{0, 0}, {3, 4}, {0, 0}};
    CHECK(best_categorical_split(counts).left.empty());
    CHECK(best_categorical_split(counts).gain == 0.0);
}

TEST_CASE("one tree separates a threshold cleanly") {
    Eigen::MatrixXd x(6, 1);
    x << 1, 2, 3, 10, 11, 12;
    FeatureMatrix m(x, {0, 0, 0, 1, 1, 1});
    ForestOptions opt;
    opt.n_trees = 1;
    opt.bootstrap = false;
    const ForestModel f = train_forest(m, opt);
    const auto& root = f.trees()[0].nodes()[0];
    CHECK(root.feature == 0);
    CHECK(root.threshold == 6.5);
    CHECK(f.trees()[0].depth() == 1);
    CHECK(f.predict_labels(m) == m.labels);
    CHECK(std::isnan(f.oob_error()));
}

TEST_CASE("equal splits go to the lowest column") {
    Eigen::MatrixXd x(8, 3);
    for (int i = 0; i < 8; ++i) x.row(i) << (i < 4 ? 0 : 1), i % 3, (i < 4 ? 0 : 1);
    FeatureMatrix m(x, {1, 1, 1, 1, 2, 2, 2, 2});
    ForestOptions opt;
    opt.n_trees = 5;
    opt.mtry = 3;
    opt.bootstrap = false;
    const ForestModel f = train_forest(m, opt);
    for (const auto& t : f.trees()) CHECK(t.nodes()[0].feature == 0);
}

TEST_CASE("categorical column splits by subset, unseen codes follow the larger child") {
    // code 0 -> class 1, codes 1 and 2 -> class 2 (the larger side), code 3 never seen
    Eigen::MatrixXd x(9, 1);
    x << 0, 0, 0, 1, 1, 1, 2, 2, 2;
    FeatureMatrix m(x, {1, 1, 1, 2, 2, 2, 2, 2, 2});
    m.kinds[0] = ColumnKind::categorical(4);
    ForestOptions opt;
    opt.n_trees = 1;
    opt.bootstrap = false;
    const ForestModel f = train_forest(m, opt);
    const DecisionTree& t = f.trees()[0];
    const auto& root = t.nodes()[0];
    REQUIRE(root.category_block >= 0);
    std::vector<int> left = t.left_categories(root, 4);
    const bool zero_left = std::find(left.begin(), left.end(), 0) != left.end();
    const bool three_left = std::find(left.begin(), left.end(), 3) != left.end();
    CHECK(zero_left != three_left);
    Eigen::RowVectorXd probe(1);
    probe << 3;
    CHECK(predict_label(f, probe) == 2);
    CHECK(f.predict_labels(m) == m.labels);
}

TEST_CASE("forest learns separated blobs and reports OOB error") {
    const FeatureMatrix train = blobs(200, 4.0, 1);
    const FeatureMatrix test = blobs(200, 4.0, 2);
    ForestOptions opt;
    opt.n_trees = 50;
    opt.seed = 4;
    const ForestModel f = train_forest(train, opt);
    CHECK(f.classes() == std::vector<int>{3, 7});
    int wrong = 0;
    const auto pred = f.predict_labels(test);
    for (int i = 0; i < 200; ++i) wrong += pred[i] != test.labels[i];
    CHECK(wrong < 10);
    CHECK(f.oob_error() >= 0.0);
    CHECK(f.oob_error() < 0.1);
    const Eigen::MatrixXd votes = f.predict_votes(test);
    for (int i = 0; i < votes.rows(); ++i) CHECK(votes.row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("training is deterministic and thread-count independent") {
    const FeatureMatrix data = blobs(120, 1.0, 5);
    ForestOptions opt;
    opt.n_trees = 30;
    opt.seed = 11;
    const std::string a = train_forest(data, opt).to_json();
    opt.jobs = 3;
    CHECK(train_forest(data, opt).to_json() == a);
    opt.seed = 12;
    CHECK(train_forest(data, opt).to_json() != a);
}

TEST_CASE("JSON round trip keeps predictions and schema") {
    FeatureMatrix data = blobs(80, 1.5, 6);
    Eigen::MatrixXd codes(80, 1);
    for (int i = 0; i < 80; ++i) codes(i) = (i * 7) % 5;
    DeepFeatureSet deep;
    deep.add("cluster", std::vector<int>(codes.data(), codes.data() + 80));
    data = data.augmented(deep);
    ForestOptions opt;
    opt.n_trees = 20;
    opt.seed = 2;
    const ForestModel f = train_forest(data, opt);
    const ForestModel back = ForestModel::from_json(f.to_json());
    CHECK(back.to_json() == f.to_json());
    CHECK(back.predict_votes(data).isApprox(f.predict_votes(data)));
    CHECK(back.feature_kinds() == f.feature_kinds());
    CHECK(back.mtry() == f.mtry());
    CHECK_THROWS(ForestModel::from_json("{\"format\":\"deepfeat-forest\",\"version\":99}"));
    CHECK_THROWS(ForestModel::from_json("not json"));

    FeatureMatrix narrow = blobs(10, 1.5, 7);
    CHECK_THROWS_AS(f.check_schema(narrow), InvalidData);
}

TEST_CASE("single-class training data is degenerate") {
    FeatureMatrix m(Eigen::MatrixXd::Random(10, 2), std::vector<int>(10, 4));
    CHECK_THROWS_AS(train_forest(m, ForestOptions{}), DegenerateModel);
    FeatureMatrix unlabeled(Eigen::MatrixXd::Random(10, 2));
    CHECK_THROWS(train_forest(unlabeled, ForestOptions{}));
}

TEST_CASE("mtry candidates") {
    CHECK(mtry_candidates(40) == std::vector<int>{7, 13});
    CHECK(mtry_candidates(2601) == std::vector<int>{51, 102});
    CHECK(mtry_candidates(1) == std::vector<int>{1});
    CHECK(mtry_candidates(2) == std::vector<int>{2});
}

TEST_CASE("vote combination") {
    VoteVector v1(4), v2(4);
    v1 << 0.38, 0.14, 0.11, 0.37;
    v2 << 0.28, 0.08, 0.15, 0.49;
    const VoteVector c = combine_votes(v1, v2, 1.1);
    const double expect[] = {0.688, 0.228, 0.275, 0.909};
    for (int i = 0; i < 4; ++i) CHECK(c(i) == doctest::Approx(expect[i]).epsilon(1e-12));
    const std::vector<int> classes{0, 1, 2, 3};
    CHECK(label_from_votes(c, classes) == 3);
    CHECK(label_from_votes(v1, classes) == 0);
    CHECK(combine_votes(v1, v2, 0.0) == v1);
    CHECK_THROWS_AS(combine_votes(v1, v2, -0.5), InvalidParameter);
    CHECK_THROWS_AS(combine_votes(v1, VoteVector::Zero(3), 1.0), InvalidData);

    VoteVector tie(3);
    tie << 0.4, 0.2, 0.4;
    CHECK(label_from_votes(tie, std::vector<int>{5, 6, 9}) == 5);
}

TEST_CASE("combination is linear in beta") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u;
    for (int trial = 0; trial < 50; ++trial) {
        VoteVector a(4), b(4);
        for (int i = 0; i < 4; ++i) {
            a(i) = u(rng);
            b(i) = u(rng);
        }
        const double beta = 3 * u(rng);
        CHECK((combine_votes(a, b, beta) - a - beta * b).norm() < 1e-12);
        CHECK((combine_votes(a, b, beta) - combine_votes(b, a, 1.0 / beta) * beta).norm() < 1e-9);
    }
}
