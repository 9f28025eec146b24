#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "deepfeat/analysis.hpp"
#include "deepfeat/clustering.hpp"
#include "deepfeat/error.hpp"
#include "deepfeat/harness.hpp"
#include "deepfeat/table_io.hpp"

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

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.data = DataSource::synthetic(make_g1(0.1), 120);
    cfg.n_runs = 2;
    cfg.n_trees = 15;
    cfg.epsilons = {0.0, 0.2};
    FeatureRecipe r;
    r.clusterers = {ClusteringMethod::parse("agnes")};
    r.k_min = 3;
    r.k_max = 6;
    cfg.methods = {Method::plain(), Method::with("agnes", r)};
    return cfg;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("holdout split: exact halves, disjoint and exhaustive") {
    for (int run = 0; run < 50; ++run) {
        const int n = 50 + run;
        const HoldoutSplit s = holdout_split(n, 0.5, 3, run);
        CHECK(s.train.size() == static_cast<std::size_t>(n / 2));
        std::vector<int> all = s.train;
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        for (int i = 0; i < n; ++i) CHECK(all[i] == i);
    }
    CHECK(holdout_split(100, 0.5, 3, 1).train != holdout_split(100, 0.5, 3, 2).train);
    CHECK_THROWS_AS(holdout_split(10, 1.0, 1, 0), InvalidParameter);
}

TEST_CASE("every row lands in training about half the time") {
    std::vector<int> hits(40, 0);
    for (int run = 0; run < 2000; ++run)
        for (int i : holdout_split(40, 0.5, 9, run).train) ++hits[i];
    for (int h : hits) CHECK(std::abs(h / 2000.0 - 0.5) < 0.05);
}

TEST_CASE("mean and standard error") {
    const auto [m, se] = mean_and_se({1.0, 2.0, 3.0, 4.0});
    CHECK(m == doctest::Approx(2.5));
    CHECK(se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    const auto [m2, se2] = mean_and_se({1.0, std::nan(""), 3.0});
    CHECK(m2 == doctest::Approx(2.0));
    CHECK(se2 == doctest::Approx(1.0));
}

TEST_CASE("config validation and hashing") {
    ExperimentConfig cfg = small_config();
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.hash() == small_config().hash());
    cfg.train_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
    cfg = small_config();
    cfg.n_runs = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
    cfg = small_config();
    cfg.epsilons = {1.2};
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
    cfg = small_config();
    cfg.seed = 2;
    CHECK(cfg.hash() != small_config().hash());
    CHECK(parse_fit_scope("train-only") == FitScope::TrainOnly);
    CHECK(parse_deep_encoding("categorical") == DeepEncoding::Categorical);
    CHECK_THROWS_AS(parse_deep_encoding("ordinal"), InvalidParameter);
}

TEST_CASE("experiments are reproducible and thread-count independent") {
    ExperimentConfig cfg = small_config();
    const ExperimentResult a = run_experiment(cfg);
    const ExperimentResult b = run_experiment(cfg);
    CHECK(result_csv(a) == result_csv(b));
    CHECK(summary_csv(a) == summary_csv(b));
    cfg.jobs = 2;
    CHECK(result_csv(run_experiment(cfg)) == result_csv(a));
    CHECK(a.config_hash == cfg.hash());

    REQUIRE(a.cells.size() == 4);
    for (const auto& c : a.cells) {
        CHECK(c.errors.size() == 2);
        CHECK(c.valid_runs == 2);
        double sum = 0.0;
        for (double e : c.errors) {
            CHECK(e >= 0.0);
            CHECK(e <= 1.0);
            sum += e;
        }
        CHECK(c.mean == doctest::Approx(sum / 2).epsilon(1e-15));
        CHECK(c.candidates.size() == 2);
        for (const auto& [key, value] : c.candidates) CHECK(c.mean <= value);
    }
    CHECK(count_lines(result_csv(a)) == 1 + 4 * 2);
    CHECK(result_metadata_json(cfg, a).find("wall_seconds") != std::string::npos);
}

TEST_CASE("separable data gives near-zero error") {
    ExperimentConfig cfg;
    cfg.data = DataSource::synthetic(make_g1(0.1, 10, 3.0), 200);
    cfg.n_runs = 3;
    cfg.n_trees = 25;
    const ExperimentResult r = run_experiment(cfg);
    CHECK(r.cells[0].mean < 0.01);
}

TEST_CASE("noise reaches training labels only") {
    // flipping every training label inverts the rule, measured against clean test labels
    ExperimentConfig cfg;
    cfg.data = DataSource::synthetic(make_g1(0.1, 10, 3.0), 200);
    cfg.n_runs = 2;
    cfg.n_trees = 25;
    cfg.epsilons = {1.0};
    CHECK(run_experiment(cfg).cells[0].mean > 0.99);
}

TEST_CASE("train-only scope routes test rows to the fitted groups") {
    ExperimentConfig cfg = small_config();
    cfg.methods.push_back(Method::with("rp", FeatureRecipe{{}, 10, 60, 5, 10}));
    const ExperimentResult pooled = run_experiment(cfg);
    cfg.scope = FitScope::TrainOnly;
    const ExperimentResult r = run_experiment(cfg);
    for (const auto& c : r.cells) CHECK(c.valid_runs == 2);
    for (double eps : cfg.epsilons) CHECK(r.cell("RF", eps).errors == pooled.cell("RF", eps).errors);
    CHECK(result_csv(r) != result_csv(pooled));
}

TEST_CASE("vote-combination methods score the weighted sum") {
    ExperimentConfig cfg = small_config();
    FeatureRecipe a;
    a.clusterers = {ClusteringMethod::parse("agnes")};
    a.k_min = 3;
    a.k_max = 6;
    Method combo;
    combo.name = "combo";
    combo.combine = std::make_pair(FeatureRecipe{}, a);
    combo.beta = 0.0;
    cfg.methods = {Method::plain(), combo};
    const ExperimentResult r = run_experiment(cfg);
    // beta = 0 leaves only the plain forest's votes
    for (double eps : cfg.epsilons) CHECK(r.cell("combo", eps).errors == r.cell("RF", eps).errors);
}

TEST_CASE("single-class training splits are skipped with a warning") {
    Eigen::MatrixXd x = gaussian(6, 2, 1);
    FeatureMatrix table(x, {1, 1, 1, 1, 1, 2});
    ExperimentConfig cfg;
    cfg.data = DataSource::table(table, "tiny");
    cfg.n_runs = 12;
    cfg.n_trees = 3;
    const ExperimentResult r = run_experiment(cfg);
    CHECK(!r.warnings.empty());
    CHECK(r.cells[0].valid_runs < 12);
    CHECK(r.cells[0].valid_runs + static_cast<int>(r.warnings.size()) == 12);
}

TEST_CASE("PCA: full rank projection is an isometry") {
    const Eigen::MatrixXd x = gaussian(50, 10, 2);
    const PcaModel m = fit_pca(x);
    CHECK(m.rank() == 10);
    const Eigen::MatrixXd z = m.transform(x, 10);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i)
        for (int j = i + 1; j < 50; ++j)
            worst = std::max(worst, std::abs((x.row(i) - x.row(j)).norm() - (z.row(i) - z.row(j)).norm()));
    CHECK(worst < 1e-9);
    CHECK((m.reconstruct(z) - x).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(m.explained_ratio(10) == doctest::Approx(1.0));
}

TEST_CASE("PCA: discarded variance matches the eigendecomposition") {
    for (int p = 2; p <= 10; ++p) {
        const Eigen::MatrixXd x = gaussian(30, p, 100 + p);
        const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
        const Eigen::MatrixXd cov = centered.transpose() * centered / 29.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        const Eigen::VectorXd ev = es.eigenvalues().reverse();  // descending
        const PcaModel m = fit_pca(x);
        for (int k = 0; k <= p; ++k) {
            const double discarded = ev.tail(p - k).sum();
            CHECK(reconstruction_error(m, x, k) == doctest::Approx(discarded).epsilon(1e-9).scale(1.0));
        }
        CHECK((m.variances - ev).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("PCA on a line explains everything with one component") {
    Eigen::MatrixXd x(20, 3);
    for (int i = 0; i < 20; ++i) x.row(i) = Eigen::RowVector3d(1, 2, -1) * (i - 3.5) + Eigen::RowVector3d(5, 5, 5);
    CHECK(fit_pca(x).explained_ratio(1) >= 0.999);
}

TEST_CASE("PCA baseline truncates k above the rank") {
    FeatureMatrix table(gaussian(30, 4, 3), std::vector<int>(30));
    for (int i = 0; i < 30; ++i) table.labels[i] = i % 2 + 1;
    ExperimentConfig cfg;
    cfg.data = DataSource::table(table, "t");
    cfg.n_runs = 2;
    cfg.n_trees = 5;
    const ExperimentResult r = pca_baseline(cfg, {2, 9});
    REQUIRE(r.cells.size() == 2);
    CHECK(r.cells[0].method == "PCA-2");
    CHECK(!r.warnings.empty());
}

TEST_CASE("correlation census") {
    Eigen::MatrixXd x = gaussian(10000, 5, 4);
    x.col(1) = x.col(0) * 2.0 + Eigen::VectorXd::Constant(10000, 1.0);
    x.col(2) = -x.col(0);
    x.col(4).setConstant(3.0);
    const auto counts = correlation_census(x, 0.6);
    CHECK(counts == std::vector<int>{2, 2, 2, 0, 0});
    const Eigen::MatrixXd r = correlation_matrix(x);
    CHECK(r(0, 2) == doctest::Approx(-1.0));
    CHECK(r(4, 4) == 0.0);

    const auto independent = correlation_census(gaussian(10000, 8, 5), 0.6);
    for (int c : independent) CHECK(c == 0);
}

TEST_CASE("published values and table layout") {
    CHECK(published_value(TableId::G1, "RF", 0.1, 0.0) == doctest::Approx(8.18));
    CHECK(published_value(TableId::G1, "hClustering", 0.1, 0.0) == doctest::Approx(5.16));
    CHECK(published_value(TableId::G2, "RF", 0.1, 0.0) == doctest::Approx(12.69));
    CHECK(std::isnan(published_value(TableId::G1, "nothing", 0.1, 0.0)));
    CHECK(parse_table_id("tma") == TableId::TMA);
    CHECK_THROWS_AS(parse_table_id("g9"), InvalidParameter);

    TableOptions opt;
    std::set<std::string> names;
    for (const auto& m : table_methods(TableId::TMA, opt)) names.insert(m.name);
    for (const char* row : {"RF", "K-means", "Diana", "Agnes", "hclust", "Agnes+Diana", "Agnes+hclust",
                            "hclust+Diana", "Agnes+Diana+hclust", "rpTrees"})
        CHECK(names.count(row) == 1);
    CHECK(table_methods(TableId::G1, opt).size() == 4);
}

TEST_CASE("G1 grid has 48 cells") {
    TableOptions opt;
    opt.n_runs = 1;
    opt.n = 60;
    opt.n_trees = 5;
    opt.kmeans_k = {5};
    opt.hclust_k_min = 3;
    opt.hclust_k_max = 4;
    opt.rp_trees = 3;
    const TableOutput t = reproduce_table(TableId::G1, opt);
    CHECK(t.available);
    CHECK(count_lines(t.csv) == 1 + 48);
    CHECK(t.text.find("8.18") != std::string::npos);
}

TEST_CASE("TMA grid without data is marked unavailable") {
    const TableOutput t = reproduce_table(TableId::TMA, TableOptions{});
    CHECK(!t.available);
    CHECK(!t.note.empty());
}

TEST_CASE("toy tissue features feed the TMA grid") {
    TableOptions opt;
    opt.n_runs = 1;
    opt.n_trees = 10;
    opt.tma = std::make_shared<const FeatureMatrix>(toy_glcm_features(60, 48, 3));
    opt.tma_k_min = 3;
    opt.tma_k_max = 5;
    opt.tma_kmeans_k = 5;
    opt.tma_rp_trees = 5;
    opt.tma_rp_min_node = 10;
    const TableOutput t = reproduce_table(TableId::TMA, opt);
    CHECK(t.available);
    CHECK(t.csv.find("rpTrees") != std::string::npos);
    CHECK(t.csv.find("Vote combination") != std::string::npos);
}

TEST_CASE("GLCM feature tables keep matrix positions in the names") {
    GlcmSettings s;
    s.n_gray_levels = 8;
    s.mask = true;
    const FeatureMatrix full = toy_glcm_features(4, 32, 1);
    CHECK(full.cols() == 2601);
    std::vector<GrayImage> images;
    for (int i = 0; i < 3; ++i) {
        GrayImage g(16, 16);
        for (int r = 0; r < 16; ++r)
            for (int c = 0; c < 16; ++c) g.pixels(r, c) = static_cast<std::uint8_t>((r * 16 + c * (i + 1)) % 256);
        images.push_back(g);
    }
    const FeatureMatrix masked = image_glcm_features(images, {0, 1, 2}, s);
    CHECK(masked.cols() < 64);
    for (const auto& name : masked.names) CHECK(std::stoi(name.substr(2)) < 64);
}
