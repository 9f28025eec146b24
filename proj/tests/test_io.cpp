#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "deepfeat/error.hpp"
#include "deepfeat/feature_matrix.hpp"
#include "deepfeat/table_io.hpp"

using namespace deepfeat;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "deepfeat_io";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("full-precision formatting round-trips") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) / 7.0;
        CHECK(std::stod(format_full(v)) == v);
    }
    CHECK(format_full(0.1) == "0.1");
    CHECK(format_short(1.0 / 3.0) == "0.333333");
    CHECK(format_short(8.18) == "8.18");
}

TEST_CASE("feature CSV round trip with schema") {
    FeatureMatrix m(Eigen::MatrixXd::Random(6, 2), {1, 2, 1, 2, 1, 2});
    DeepFeatureSet d;
    d.add("agnes_k3", {0, 1, 2, 0, 1, 2});
    const FeatureMatrix a = m.augmented(d);
    CHECK(a.kinds[2] == ColumnKind::categorical(3));
    CHECK(a.values.leftCols(2) == m.values);

    write_feature_csv(scratch("f.csv"), a);
    write_schema(scratch("f.json"), a);
    const FeatureMatrix back = read_feature_csv(scratch("f.csv"), scratch("f.json"));
    CHECK(back.names == a.names);
    CHECK(back.values == a.values);
    CHECK(back.labels == a.labels);
    CHECK(back.kinds == a.kinds);

    const FeatureMatrix plain = read_feature_csv(scratch("f.csv"));
    CHECK(!plain.kinds[2].is_categorical());
    CHECK(slurp(scratch("f.json")).find("categorical") != std::string::npos);
}

TEST_CASE("malformed CSV is reported as data error") {
    {
        std::ofstream out(scratch("bad.csv"));
        out << "a,b\n1,2\n3\n";
    }
    CHECK_THROWS_AS(read_feature_csv(scratch("bad.csv")), InvalidData);
    {
        std::ofstream out(scratch("nan.csv"));
        out << "a,b\n1,x\n";
    }
    CHECK_THROWS_AS(read_feature_csv(scratch("nan.csv")), InvalidData);
    CHECK_THROWS_AS(read_feature_csv(scratch("nope.csv")), IoError);
}

TEST_CASE("atomic writes replace the whole file") {
    write_file_atomically(scratch("atomic.txt"), "first version, longer\n");
    write_file_atomically(scratch("atomic.txt"), "second\n");
    CHECK(slurp(scratch("atomic.txt")) == "second\n");
    for (const auto& e : fs::directory_iterator(scratch("").parent_path()))
        CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
}

TEST_CASE("vote tables") {
    VoteTable t{{0, 1, 2, 3}, Eigen::MatrixXd(1, 4)};
    t.votes << 0.38, 0.14, 0.11, 0.37;
    write_file_atomically(scratch("v.csv"), votes_csv(t, {0}));
    const VoteTable back = read_votes_csv(scratch("v.csv"));
    CHECK(back.classes == t.classes);
    CHECK(back.votes == t.votes);
    {
        std::ofstream out(scratch("bare.csv"));
        out << "vote_1,vote_2\n0.5,0.5\n";
    }
    CHECK(read_votes_csv(scratch("bare.csv")).classes == std::vector<int>{1, 2});
    {
        std::ofstream out(scratch("novotes.csv"));
        out << "a,b\n0.5,0.5\n";
    }
    CHECK_THROWS_AS(read_votes_csv(scratch("novotes.csv")), InvalidData);
}

TEST_CASE("deep feature sets validate names and lengths") {
    DeepFeatureSet d;
    d.add("a", {0, 1});
    DeepFeatureSet e;
    e.add("a", {1, 0});
    CHECK_THROWS_AS(d.merge(e), InvalidData);
    DeepFeatureSet f;
    f.add("b", {0, 1, 2});
    CHECK_THROWS_AS(d.merge(f), InvalidData);
    CHECK(canonical_labels(std::vector<int>{7, 7, 3, 9, 3}) == std::vector<int>{0, 0, 1, 2, 1});
}

TEST_CASE("feature matrix validation") {
    FeatureMatrix m(Eigen::MatrixXd::Zero(3, 2));
    m.values(1, 1) = std::nan("");
    CHECK_THROWS_AS(m.validate(), InvalidData);
    FeatureMatrix c(Eigen::MatrixXd::Zero(3, 1));
    c.kinds[0] = ColumnKind::categorical(2);
    c.values(0, 0) = 5;
    CHECK_THROWS_AS(c.validate(), InvalidData);
    const std::vector<int> rows{2, 0};
    FeatureMatrix r(Eigen::MatrixXd::Identity(3, 3), {1, 2, 3});
    CHECK(r.select_rows(rows).labels == std::vector<int>{3, 1});
}
