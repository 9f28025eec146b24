#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "deepfeat_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::string& args, const char* binary = DEEPFEAT_CLI) {
    const fs::path out = work() / "stdout.txt";
    const fs::path err = work() / "stderr.txt";
    const std::string cmd = "cd '" + work().string() + "' && '" + binary + "' " + args + " >'" + out.string() +
                            "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

const std::string toy_manifest = std::string(DEEPFEAT_TEST_DATA) + "/toy_tma/manifest.csv";

}  // namespace

TEST_CASE("help exits 0") {
    CHECK(run("--help").code == 0);
    const Result r = run("glcm --help");
    CHECK(r.code == 0);
    CHECK(r.out.find("--rel") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run("").code == 1);
    CHECK(run("glcm --bogus 1 --out x.csv").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("bench --eps 2 --runs 1").code == 1);
    CHECK(run("bench --family g7 --runs 1").code == 1);
    const Result r = run("glcm --rel UP --manifest '" + toy_manifest + "' --out x.csv");
    CHECK(r.code == 1);
    CHECK(r.err.find("UP") != std::string::npos);
}

TEST_CASE("unreadable inputs exit 2") {
    CHECK(run("train --features missing.csv --model m.json").code == 2);
    CHECK(run("glcm --manifest missing.csv --out x.csv").code == 2);
    {
        std::ofstream bad(work() / "ragged.csv");
        bad << "a,b,label\n1,2,1\n3,1\n";
    }
    CHECK(run("corr --features ragged.csv --out c.csv").code == 2);
    CHECK(!fs::exists(work() / "c.csv"));
}

TEST_CASE("combine reproduces the worked example") {
    {
        std::ofstream a(work() / "v1.csv");
        a << "vote_0,vote_1,vote_2,vote_3\n0.38,0.14,0.11,0.37\n";
        std::ofstream b(work() / "v2.csv");
        b << "vote_0,vote_1,vote_2,vote_3\n0.28,0.08,0.15,0.49\n";
    }
    const Result r = run("combine --votes1 v1.csv --votes2 v2.csv --beta 1.1 --out combined.csv");
    CHECK(r.code == 0);
    CHECK(r.out == "3\n");
    CHECK(r.err.find("seed=") != std::string::npos);
    const std::string csv = slurp(work() / "combined.csv");
    CHECK(csv.find("0,3,0.688") != std::string::npos);
    CHECK(run("combine --votes1 v1.csv --votes2 v2.csv --beta -1").code == 1);
}

TEST_CASE("toy pipeline: images to scores") {
    REQUIRE(run("glcm --rel NE --dist 3 --ngray 51 --manifest '" + toy_manifest + "' --out feats.csv").code == 0);
    const std::string feats = slurp(work() / "feats.csv");
    CHECK(feats.rfind("f_0000,", 0) == 0);
    CHECK(feats.find("f_2600,label") != std::string::npos);
    REQUIRE(run("glcm --rel NE --dist 3 --ngray 51 --manifest '" + toy_manifest + "' --out feats2.csv").code == 0);
    CHECK(slurp(work() / "feats2.csv") == feats);

    REQUIRE(run("deepfeat --features feats.csv --method agnes --method diana --method rptrees --k-min 4 "
                "--k-max 6 --trees 10 --leaf-size 10 --append --encoding categorical --out aug.csv "
                "--schema-out aug.json --seed 5")
                .code == 0);
    CHECK(slurp(work() / "aug.json").find("\"rptree_9\": \"categorical\"") != std::string::npos);

    const Result t = run("train --features aug.csv --schema aug.json --trees 40 --mtry auto --seed 7 --model m.json");
    REQUIRE(t.code == 0);
    CHECK(t.err.find("mtry=") != std::string::npos);
    CHECK(slurp(work() / "m.json").find("deepfeat-forest") != std::string::npos);

    const Result s = run("score --model m.json --features aug.csv --schema aug.json --out preds.csv --votes");
    REQUIRE(s.code == 0);
    CHECK(slurp(work() / "preds.csv").rfind("row,predicted,vote_0,vote_1,vote_2,vote_3", 0) == 0);
    CHECK(run("score --model m.json --features feats.csv --out p.csv").code == 2);

    const Result c = run("corr --features feats.csv --threshold 0.6 --out corr.csv");
    CHECK(c.code == 0);
    CHECK(slurp(work() / "corr.csv").rfind("feature,count\nf_0000,", 0) == 0);

    const Result p = run("pca --features feats.csv --k 2,5 --runs 2 --trees 10 --out pca.csv");
    CHECK(p.code == 0);
    CHECK(slurp(work() / "pca.csv").rfind("components,explained_variance", 0) == 0);
}

TEST_CASE("mask directory limits the columns") {
    fs::create_directories(work() / "patches");
    fs::copy_file(fs::path(DEEPFEAT_TEST_DATA) / "toy_tma" / "img_0000.pgm", work() / "patches" / "a.pgm",
                  fs::copy_options::overwrite_existing);
    REQUIRE(run("glcm --manifest '" + toy_manifest + "' --mask patches --out masked.csv").code == 0);
    const std::string header = slurp(work() / "masked.csv").substr(0, slurp(work() / "masked.csv").find('\n'));
    const auto columns = std::count(header.begin(), header.end(), ',');
    CHECK(columns > 1);
    CHECK(columns < 2601);
}

TEST_CASE("bench is deterministic and writes its sidecars") {
    const std::string args = "bench --family g1 --rho 0.1 --eps 0,0.1 --runs 2 --n 200 --trees 20 "
                             "--methods rf,agnes,rptrees --k-min 5 --k-max 8 --rp-trees 10 --seed 3 ";
    REQUIRE(run(args + "--out b1.csv").code == 0);
    REQUIRE(run(args + "--jobs 2 --out b2.csv").code == 0);
    CHECK(slurp(work() / "b1.csv") == slurp(work() / "b2.csv"));
    CHECK(slurp(work() / "b1.runs.csv") == slurp(work() / "b2.runs.csv"));
    CHECK(slurp(work() / "b1.json").find("wall_seconds") != std::string::npos);
    CHECK(slurp(work() / "b1.csv").rfind("method,epsilon,mean_error", 0) == 0);

    const Result stdout_only = run(args);
    CHECK(stdout_only.code == 0);
    CHECK(stdout_only.out == slurp(work() / "b1.csv"));
}

TEST_CASE("config file values and flag overrides") {
    {
        std::ofstream cfg(work() / "run.toml");
        cfg << "seed = 42\n";
    }
    const Result r = run("--config run.toml combine --votes1 v1.csv --votes2 v2.csv");
    CHECK(r.code == 0);
    CHECK(r.err.find("seed=42") != std::string::npos);
    const Result o = run("--config run.toml --seed 9 combine --votes1 v1.csv --votes2 v2.csv");
    CHECK(o.err.find("seed=9") != std::string::npos);
}

TEST_CASE("pinned defaults are reported") {
    const Result r = run("--paper-defaults combine --votes1 v1.csv --votes2 v2.csv");
    CHECK(r.code == 0);
    CHECK(r.err.find("paper-defaults") != std::string::npos);
}

TEST_CASE("tables with no selection succeed without output") {
    const Result r = run("tables --out-dir tables_none");
    CHECK(r.code == 0);
    CHECK(!fs::exists(work() / "tables_none" / "g1.csv"));
}

TEST_CASE("toy TMA table through the CLI") {
    const Result r = run("tables --table tma --runs 1 --trees 10 --tma-manifest '" + toy_manifest +
                         "' --out-dir tables_toy");
    CHECK(r.code == 0);
    CHECK(slurp(work() / "tables_toy" / "tma.csv").find("rpTrees") != std::string::npos);
}

TEST_CASE("toy corpus tool") {
    const Result r = run("--n 5 --size 32 --seed 1 --out-dir corpus", DEEPFEAT_TOY_CORPUS);
    CHECK(r.code == 0);
    CHECK(fs::exists(work() / "corpus" / "img_0004.pgm"));
    CHECK(slurp(work() / "corpus" / "manifest.csv").rfind("path,score\n", 0) == 0);
}
