// deepfeat: command-line front end for the GLCM / deep-feature / forest pipeline.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "deepfeat/analysis.hpp"
#include "deepfeat/classifier.hpp"
#include "deepfeat/clustering.hpp"
#include "deepfeat/error.hpp"
#include "deepfeat/harness.hpp"
#include "deepfeat/image_io.hpp"
#include "deepfeat/imagery.hpp"
#include "deepfeat/random.hpp"
#include "deepfeat/rpforest.hpp"
#include "deepfeat/synth.hpp"
#include "deepfeat/table_io.hpp"

namespace fs = std::filesystem;
using namespace deepfeat;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct Globals {
    std::uint64_t seed = 1;
    int jobs = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    bool paper_defaults = false;
};

// Settings that --paper-defaults pins, reported in the resolved config.
struct Settings {
    int levels = 51;
    std::string direction = "NE";
    int distance = 3;
    int trees = 100;
    int runs = 100;
    int n = 1000;
    double train_fraction = 0.5;
    int k_min = 10;
    int k_max = 60;
    int rp_trees = 800;
    int rp_min_node = 20;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw InvalidParameter("'" + item + "' is not a number");
        }
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_list(text)) {
        if (v != std::floor(v)) throw InvalidParameter("expected integers, got " + format_short(v));
        out.push_back(static_cast<int>(v));
    }
    return out;
}

void report(const Globals& g, const std::string& command, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::cerr << "deepfeat " << command << " seed=" << g.seed << " jobs=" << g.jobs;
    if (g.paper_defaults) std::cerr << " paper-defaults";
    for (const auto& [k, v] : kv) std::cerr << " " << k << "=" << v;
    std::cerr << "\n";
}

FeatureMatrix load_features(const std::string& path, const std::string& schema) {
    return read_feature_csv(path, schema.empty() ? std::nullopt : std::optional<fs::path>(schema));
}

Method method_from_name(const std::string& raw, const Settings& s) {
    std::string name;
    for (char c : raw) name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    FeatureRecipe r;
    r.k_min = s.k_min;
    r.k_max = s.k_max;
    if (name == "rf" || name == "none") return Method::plain("RF");
    if (name == "hclustering") {
        r.clusterers = {ClusteringMethod::parse("agnes"), ClusteringMethod::parse("diana"),
                        ClusteringMethod::parse("hclust")};
        return Method::with("hClustering", r);
    }
    if (name == "rptrees") {
        r.rp_trees = s.rp_trees;
        r.rp_min_node = s.rp_min_node;
        return Method::with("rpTrees", r);
    }
    if (name == "kmeans" || name == "k-means") {
        Method m = Method::plain("K-means");
        m.variants.clear();
        for (int k = 30; k <= 120; k += 10) {
            FeatureRecipe v;
            v.clusterers = {ClusteringMethod::parse("kmeans")};
            v.k_min = v.k_max = k;
            m.variants.push_back(v);
        }
        return m;
    }
    // single clusterer, or several joined by '+'
    std::stringstream ss(name);
    std::string part;
    while (std::getline(ss, part, '+')) r.clusterers.push_back(ClusteringMethod::parse(part));
    return Method::with(raw, r);
}

void print_result_table(const ExperimentResult& res) {
    std::printf("%-22s %8s %10s %10s %6s\n", "method", "epsilon", "error", "se", "runs");
    for (const auto& c : res.cells)
        std::printf("%-22s %8s %10s %10s %6d\n", c.method.c_str(), format_short(c.epsilon).c_str(),
                    format_short(c.mean).c_str(), format_short(c.standard_error).c_str(), c.valid_runs);
}

int run_app(int argc, char** argv) {
    CLI::App app{"GLCM texture features, unsupervised group features and random forests"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read option values from a TOML/INI file");
    Globals g;
    Settings s;
    app.add_option("--seed", g.seed, "Master seed for every random stream")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_flag("--paper-defaults", g.paper_defaults,
                 "Use the published settings: 51 gray levels, (NE,3), 100 trees, 100 runs, half split, "
                 "k in [10,60], rpTrees T=800 n_s=20");

    // glcm
    auto* glcm = app.add_subcommand("glcm", "GLCM feature table from images");
    std::string manifest, out_path, schema_out;
    std::vector<std::string> image_files;
    std::string mask_dir;
    bool mask = false;
    glcm->add_option("--manifest", manifest, "CSV with path,score columns");
    glcm->add_option("--image", image_files, "Image file (repeatable)");
    glcm->add_option("--ngray,--levels", s.levels, "Gray levels after quantization")->check(CLI::Range(2, 256));
    glcm->add_option("--rel,--direction", s.direction, "NE, SE, NW, SW, S, N, E or W");
    glcm->add_option("--dist,--distance", s.distance, "Pixel distance")->check(CLI::PositiveNumber);
    glcm->add_option("--mask", mask_dir, "Directory of patches; keep entries above the median of some patch");
    glcm->add_flag("--self-mask", mask, "Build the median mask from the featurized images themselves");
    glcm->add_option("--out", out_path, "Feature CSV to write")->required();
    glcm->add_option("--schema-out", schema_out, "Optional schema JSON to write");

    // deepfeat
    auto* deep = app.add_subcommand("deepfeat", "Unsupervised group features");
    std::string features_path, schema_path, encoding = "numeric";
    std::vector<std::string> methods;
    bool append = false;
    deep->add_option("--features", features_path, "Feature CSV")->required();
    deep->add_option("--schema", schema_path, "Schema JSON for the feature CSV");
    deep->add_option("--method", methods,
                     "agnes, diana, hclust, single, kmeans or rptrees (repeatable)")->required();
    deep->add_option("--k-min", s.k_min, "Smallest cluster count")->check(CLI::PositiveNumber);
    deep->add_option("--k-max", s.k_max, "Largest cluster count")->check(CLI::PositiveNumber);
    deep->add_option("--trees", s.rp_trees, "rpTrees in the ensemble")->check(CLI::PositiveNumber);
    deep->add_option("--leaf-size", s.rp_min_node, "Nodes below this size become leaves")->check(CLI::Range(2, 1 << 30));
    deep->add_option("--encoding", encoding, "numeric or categorical (schema kind of the new columns)");
    deep->add_flag("--append", append, "Write the original columns followed by the new ones");
    deep->add_option("--out", out_path, "CSV to write")->required();
    deep->add_option("--schema-out", schema_out, "Schema JSON to write");

    // train
    auto* train = app.add_subcommand("train", "Train a random forest");
    std::string mtry_text = "auto", model_path;
    train->add_option("--features", features_path, "Labeled feature CSV")->required();
    train->add_option("--schema", schema_path, "Schema JSON");
    train->add_option("--trees", s.trees, "Number of trees")->check(CLI::PositiveNumber);
    train->add_option("--mtry", mtry_text, "Features tried per split, or auto (best OOB of ceil(sqrt p), ceil(2 sqrt p))");
    train->add_option("--model", model_path, "Model JSON to write")->required();

    // score
    auto* score = app.add_subcommand("score", "Apply a trained forest");
    bool with_votes = false;
    score->add_option("--model", model_path, "Model JSON")->required();
    score->add_option("--features", features_path, "Feature CSV")->required();
    score->add_option("--schema", schema_path, "Schema JSON");
    score->add_option("--out", out_path, "Prediction CSV to write")->required();
    score->add_flag("--votes", with_votes, "Include the per-class vote columns");

    // combine
    auto* combine = app.add_subcommand("combine", "Combine two vote tables as v1 + beta * v2");
    std::string votes1, votes2;
    double beta = 1.1;
    combine->add_option("--votes1", votes1, "First vote CSV")->required();
    combine->add_option("--votes2", votes2, "Second vote CSV")->required();
    combine->add_option("--beta", beta, "Weight of the second vote")->check(CLI::NonNegativeNumber)->capture_default_str();
    combine->add_option("--out", out_path, "Combined vote CSV (default: stdout)");

    // bench
    auto* bench = app.add_subcommand("bench", "Synthetic Gaussian-mixture benchmark");
    std::string family = "g1", eps_text = "0", methods_text = "rf", scope_text = "pooled", cov_source;
    double rho = 0.1, g3_scale = 0.0;
    bench->add_option("--family", family, "g1, g2 or g3");
    bench->add_option("--rho", rho, "AR(1) correlation (g1, g2)");
    bench->add_option("--eps", eps_text, "Comma-separated label-flip rates");
    bench->add_option("--runs", s.runs, "Repetitions")->check(CLI::PositiveNumber);
    bench->add_option("--n", s.n, "Sample size per run")->check(CLI::PositiveNumber);
    bench->add_option("--trees", s.trees, "Trees per forest")->check(CLI::PositiveNumber);
    bench->add_option("--methods", methods_text,
                      "Comma-separated: rf, kmeans, hclustering, rptrees, or clusterers joined by '+'");
    bench->add_option("--k-min", s.k_min, "Smallest cluster count")->check(CLI::PositiveNumber);
    bench->add_option("--k-max", s.k_max, "Largest cluster count")->check(CLI::PositiveNumber);
    bench->add_option("--rp-trees", s.rp_trees, "rpTrees per ensemble")->check(CLI::PositiveNumber);
    bench->add_option("--leaf-size", s.rp_min_node, "rpTree leaf size")->check(CLI::Range(2, 1 << 30));
    bench->add_option("--scope", scope_text, "pooled or train-only");
    bench->add_option("--encoding", encoding, "numeric or categorical deep-feature columns");
    bench->add_option("--cov-source", cov_source, "g3: feature CSV whose covariance is used (default: synthetic tissue corpus)");
    bench->add_option("--g3-scale", g3_scale, "g3: mean scale (0 calibrates to 2% clean error)");
    bench->add_option("--out", out_path, "Summary CSV to write; <out>.runs.csv and <out>.json go alongside (default: stdout)");

    // tables
    auto* tables = app.add_subcommand("tables", "Reproduce the published result grids");
    std::vector<std::string> table_ids;
    std::string out_dir = "tables", tma_manifest, tma_features;
    tables->add_option("--table", table_ids, "g1, g2, g3 or tma (repeatable)");
    tables->add_option("--runs", s.runs, "Repetitions per cell")->check(CLI::PositiveNumber);
    tables->add_option("--trees", s.trees, "Trees per forest")->check(CLI::PositiveNumber);
    tables->add_option("--out-dir", out_dir, "Directory for <table>.csv and <table>.txt");
    tables->add_option("--tma-manifest", tma_manifest, "Labeled image manifest for the TMA grid");
    tables->add_option("--tma-features", tma_features, "Precomputed labeled GLCM feature CSV for the TMA grid");
    tables->add_option("--scope", scope_text, "pooled or train-only");
    tables->add_option("--encoding", encoding, "numeric or categorical deep-feature columns");
    tables->add_option("--beta", beta, "Vote-combination weight");

    // pca
    auto* pca = app.add_subcommand("pca", "RF over leading principal components");
    std::string k_text = "2,5,10,20,30,40,50,60,70,80,90,100";
    pca->add_option("--features", features_path, "Labeled feature CSV")->required();
    pca->add_option("--schema", schema_path, "Schema JSON");
    pca->add_option("--k", k_text, "Comma-separated component counts");
    pca->add_option("--runs", s.runs, "Repetitions")->check(CLI::PositiveNumber);
    pca->add_option("--trees", s.trees, "Trees per forest")->check(CLI::PositiveNumber);
    pca->add_option("--out", out_path, "Summary CSV to write")->required();

    // corr
    auto* corr = app.add_subcommand("corr", "Count strongly correlated partners per feature");
    double threshold = 0.6;
    corr->add_option("--features", features_path, "Feature CSV")->required();
    corr->add_option("--schema", schema_path, "Schema JSON");
    corr->add_option("--threshold", threshold, "Absolute correlation cut-off")->check(CLI::Range(0.0, 1.0));
    corr->add_option("--out", out_path, "CSV (feature,count) to write")->required();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (g.paper_defaults) {
        const Settings pinned;
        s.levels = pinned.levels;
        s.direction = pinned.direction;
        s.distance = pinned.distance;
        s.trees = pinned.trees;
        s.runs = pinned.runs;
        s.train_fraction = pinned.train_fraction;
        s.k_min = pinned.k_min;
        s.k_max = pinned.k_max;
        s.rp_trees = pinned.rp_trees;
        s.rp_min_node = pinned.rp_min_node;
    }

    if (glcm->parsed()) {
        GlcmSettings gs;
        gs.n_gray_levels = s.levels;
        gs.relationship = SpatialRelationship::parse(s.direction, s.distance);
        gs.mask = mask || !mask_dir.empty();
        if (!mask_dir.empty()) {
            if (!fs::is_directory(mask_dir)) throw IoError(mask_dir + " is not a directory");
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(mask_dir))
                if (e.is_regular_file()) files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) gs.mask_patches.push_back(read_image(f));
            if (gs.mask_patches.empty()) throw InvalidData(mask_dir + " holds no images");
        }
        report(g, "glcm", {{"levels", std::to_string(s.levels)}, {"relationship", gs.relationship.name()},
                           {"mask", mask_dir.empty() ? (mask ? "self" : "off") : mask_dir}});
        FeatureMatrix m;
        if (!manifest.empty()) {
            if (!image_files.empty()) throw InvalidParameter("use --manifest or --image, not both");
            m = manifest_glcm_features(manifest, gs);
        } else {
            if (image_files.empty()) throw InvalidParameter("glcm needs --manifest or at least one --image");
            std::vector<GrayImage> images;
            for (const auto& f : image_files) images.push_back(read_image(f));
            m = image_glcm_features(images, {}, gs);
        }
        write_feature_csv(out_path, m);
        if (!schema_out.empty()) write_schema(schema_out, m);
        std::cout << m.rows() << " images, " << m.cols() << " features -> " << out_path << "\n";
        return kOk;
    }

    if (deep->parsed()) {
        const DeepEncoding enc = parse_deep_encoding(encoding);
        if (s.k_max < s.k_min) throw InvalidParameter("--k-max must be >= --k-min");
        const FeatureMatrix base = load_features(features_path, schema_path);
        report(g, "deepfeat", {{"rows", std::to_string(base.rows())}, {"k", std::to_string(s.k_min) + ".." + std::to_string(s.k_max)},
                               {"rp_trees", std::to_string(s.rp_trees)}, {"leaf_size", std::to_string(s.rp_min_node)},
                               {"encoding", std::string(deep_encoding_name(enc))}});
        std::vector<ClusteringMethod> clusterers;
        bool want_rp = false;
        for (const auto& name : methods) {
            if (name == "rptrees") {
                want_rp = true;
            } else {
                clusterers.push_back(ClusteringMethod::parse(name));
            }
        }
        DeepFeatureSet set = clustering_features(base.values, clusterers, s.k_min, s.k_max, g.seed);
        if (want_rp) set.merge(rpforest_leaf_features(base.values, base.values, s.rp_trees, s.rp_min_node, g.seed));
        FeatureMatrix out;
        if (append) {
            out = base.augmented(set);
        } else {
            FeatureMatrix empty(Eigen::MatrixXd(base.rows(), 0), base.labels);
            out = empty.augmented(set);
        }
        if (enc == DeepEncoding::Numeric)
            for (std::size_t j = append ? base.cols() : 0; j < out.kinds.size(); ++j) out.kinds[j] = ColumnKind::continuous();
        write_feature_csv(out_path, out);
        if (!schema_out.empty()) write_schema(schema_out, out);
        std::cout << set.size() << " deep-feature columns -> " << out_path << "\n";
        return kOk;
    }

    if (train->parsed()) {
        const FeatureMatrix data = load_features(features_path, schema_path);
        ForestOptions opt;
        opt.n_trees = s.trees;
        opt.seed = g.seed;
        opt.jobs = g.jobs;
        ForestModel model;
        if (mtry_text == "auto") {
            double best_oob = 2.0;
            for (int m : mtry_candidates(static_cast<int>(data.cols()))) {
                opt.mtry = m;
                ForestModel candidate = train_forest(data, opt);
                std::cerr << "mtry=" << m << " oob_error=" << format_short(candidate.oob_error()) << "\n";
                if (candidate.oob_error() < best_oob) {
                    best_oob = candidate.oob_error();
                    model = std::move(candidate);
                }
            }
        } else {
            const auto values = parse_int_list(mtry_text);
            if (values.size() != 1) throw InvalidParameter("--mtry takes one integer or 'auto'");
            opt.mtry = values.front();
            model = train_forest(data, opt);
        }
        report(g, "train", {{"rows", std::to_string(data.rows())}, {"features", std::to_string(data.cols())},
                            {"trees", std::to_string(s.trees)}, {"mtry", std::to_string(model.mtry())}});
        write_file_atomically(model_path, model.to_json());
        std::cout << "trained " << model.n_trees() << " trees, mtry=" << model.mtry()
                  << ", oob error " << format_short(model.oob_error()) << " -> " << model_path << "\n";
        return kOk;
    }

    if (score->parsed()) {
        const ForestModel model = ForestModel::from_json(read_text(model_path));
        FeatureMatrix data = load_features(features_path, schema_path);
        // an unseen schema file still has to agree with the model's kinds
        if (schema_path.empty())
            for (std::size_t j = 0; j < data.kinds.size() && j < model.feature_kinds().size(); ++j)
                data.kinds[j] = model.feature_kinds()[j];
        report(g, "score", {{"rows", std::to_string(data.rows())}, {"model", model_path}});
        const Eigen::MatrixXd votes = model.predict_votes(data);
        std::vector<int> predicted(votes.rows());
        for (Eigen::Index i = 0; i < votes.rows(); ++i)
            predicted[i] = label_from_votes(votes.row(i).transpose(), model.classes());
        std::string csv;
        if (with_votes) {
            csv = votes_csv(VoteTable{model.classes(), votes}, predicted);
        } else {
            csv = "row,predicted\n";
            for (std::size_t i = 0; i < predicted.size(); ++i)
                csv += std::to_string(i) + "," + std::to_string(predicted[i]) + "\n";
        }
        write_file_atomically(out_path, csv);
        if (data.has_labels()) {
            int wrong = 0;
            for (std::size_t i = 0; i < predicted.size(); ++i) wrong += predicted[i] != data.labels[i];
            std::cout << "error rate " << format_short(static_cast<double>(wrong) / predicted.size()) << " on "
                      << predicted.size() << " rows\n";
        }
        return kOk;
    }

    if (combine->parsed()) {
        const VoteTable a = read_votes_csv(votes1);
        const VoteTable b = read_votes_csv(votes2);
        report(g, "combine", {{"beta", format_short(beta)}});
        if (a.classes != b.classes) throw InvalidData("vote tables list different classes");
        if (a.votes.rows() != b.votes.rows()) throw InvalidData("vote tables have different row counts");
        VoteTable c{a.classes, Eigen::MatrixXd(a.votes.rows(), a.votes.cols())};
        std::vector<int> predicted(a.votes.rows());
        for (Eigen::Index i = 0; i < a.votes.rows(); ++i) {
            const VoteVector v = combine_votes(a.votes.row(i).transpose(), b.votes.row(i).transpose(), beta);
            c.votes.row(i) = v.transpose();
            predicted[i] = label_from_votes(v, c.classes);
        }
        const std::string csv = votes_csv(c, predicted);
        if (out_path.empty()) {
            std::cout << csv;
        } else {
            write_file_atomically(out_path, csv);
            for (int label : predicted) std::cout << label << "\n";
        }
        return kOk;
    }

    if (bench->parsed()) {
        ExperimentConfig cfg;
        cfg.n_runs = s.runs;
        cfg.n_trees = s.trees;
        cfg.train_fraction = s.train_fraction;
        cfg.seed = g.seed;
        cfg.jobs = g.jobs;
        cfg.scope = parse_fit_scope(scope_text);
        cfg.encoding = parse_deep_encoding(encoding);
        cfg.epsilons = parse_list(eps_text);
        cfg.methods.clear();
        std::stringstream ms(methods_text);
        std::string item;
        while (std::getline(ms, item, ','))
            if (!item.empty()) cfg.methods.push_back(method_from_name(item, s));
        std::string note;
        if (family == "g1" || family == "g2") {
            cfg.data = DataSource::synthetic(family == "g1" ? make_g1(rho) : make_g2(rho), s.n);
        } else if (family == "g3") {
            const FeatureMatrix source = cov_source.empty() ? toy_glcm_features(695, 64, derive_seed(g.seed, "g3-corpus"))
                                                            : read_feature_csv(cov_source);
            const ShrunkCovariance cov = shrink_to_spd(sample_covariance(source.values));
            if (g3_scale <= 0.0) {
                const Calibration cal = calibrate_g3_scale(cov, 0.02, s.n, 2, s.trees, derive_seed(g.seed, "g3-calibration"));
                g3_scale = cal.scale;
            }
            note = "g3_scale=" + format_full(g3_scale) + " shrinkage=" + format_full(cov.lambda);
            cfg.data = DataSource::synthetic(make_g3_from_covariance(cov, g3_mean(cov.covariance, g3_scale)), s.n);
        } else {
            throw InvalidParameter("--family must be g1, g2 or g3");
        }
        report(g, "bench", {{"family", family}, {"rho", format_short(rho)}, {"eps", eps_text}, {"runs", std::to_string(s.runs)},
                            {"n", std::to_string(s.n)}, {"trees", std::to_string(s.trees)}, {"methods", methods_text},
                            {"scope", scope_text}, {"encoding", encoding}, {"config_hash", cfg.hash()}});
        if (!note.empty()) std::cerr << note << "\n";
        const ExperimentResult res = run_experiment(cfg);
        for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
        if (out_path.empty()) {
            std::cout << summary_csv(res);
            return kOk;
        }
        const fs::path out(out_path);
        write_file_atomically(out, summary_csv(res));
        fs::path runs_path = out;
        runs_path.replace_extension(".runs.csv");
        write_file_atomically(runs_path, result_csv(res));
        fs::path meta_path = out;
        meta_path.replace_extension(".json");
        write_file_atomically(meta_path, result_metadata_json(cfg, res));
        print_result_table(res);
        return kOk;
    }

    if (tables->parsed()) {
        TableOptions opt;
        opt.n_runs = s.runs;
        opt.n_trees = s.trees;
        opt.seed = g.seed;
        opt.jobs = g.jobs;
        opt.scope = parse_fit_scope(scope_text);
        opt.beta = beta;
        opt.log = [](const std::string& line) { std::cerr << line << "\n"; };
        if (!tma_features.empty()) {
            opt.tma = std::make_shared<const FeatureMatrix>(read_feature_csv(tma_features));
        } else if (!tma_manifest.empty()) {
            opt.tma = std::make_shared<const FeatureMatrix>(manifest_glcm_features(tma_manifest));
        }
        const DeepEncoding enc = parse_deep_encoding(encoding);
        report(g, "tables", {{"runs", std::to_string(s.runs)}, {"trees", std::to_string(s.trees)},
                             {"out_dir", out_dir}, {"tma", opt.tma ? "yes" : "no"}, {"encoding", encoding}});
        if (enc != DeepEncoding::Numeric)
            throw InvalidParameter("tables always use the numeric encoding; run bench for categorical comparisons");
        std::vector<TableId> ids;
        for (const auto& t : table_ids) ids.push_back(parse_table_id(t));
        for (TableId id : ids) {
            const TableOutput t = reproduce_table(id, opt);
            const std::string name(table_name(id));
            write_file_atomically(fs::path(out_dir) / (name + ".csv"), t.csv);
            write_file_atomically(fs::path(out_dir) / (name + ".txt"), t.text);
            std::cout << t.text << "\n";
        }
        return kOk;
    }

    if (pca->parsed()) {
        const FeatureMatrix data = load_features(features_path, schema_path);
        ExperimentConfig cfg;
        cfg.data = DataSource::table(data, features_path);
        cfg.n_runs = s.runs;
        cfg.n_trees = s.trees;
        cfg.seed = g.seed;
        cfg.jobs = g.jobs;
        const auto ks = parse_int_list(k_text);
        report(g, "pca", {{"rows", std::to_string(data.rows())}, {"k", k_text}, {"runs", std::to_string(s.runs)}});
        const PcaModel model = fit_pca(data.values);
        const ExperimentResult res = pca_baseline(cfg, ks);
        std::string csv = "components,explained_variance,mean_error,standard_error,runs\n";
        for (std::size_t i = 0; i < ks.size(); ++i) {
            const auto& c = res.cells[i];
            csv += std::to_string(ks[i]) + "," + format_full(model.explained_ratio(ks[i])) + "," + format_full(c.mean) +
                   "," + format_full(c.standard_error) + "," + std::to_string(c.valid_runs) + "\n";
        }
        write_file_atomically(out_path, csv);
        for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
        print_result_table(res);
        return kOk;
    }

    if (corr->parsed()) {
        const FeatureMatrix data = load_features(features_path, schema_path);
        report(g, "corr", {{"rows", std::to_string(data.rows())}, {"threshold", format_short(threshold)}});
        const auto counts = correlation_census(data.values, threshold);
        std::string csv = "feature,count\n";
        for (std::size_t j = 0; j < counts.size(); ++j) csv += data.names[j] + "," + std::to_string(counts[j]) + "\n";
        write_file_atomically(out_path, csv);
        std::vector<int> sorted = counts;
        std::sort(sorted.begin(), sorted.end());
        std::cout << counts.size() << " features; median partners " << sorted[sorted.size() / 2] << ", max "
                  << sorted.back() << "\n";
        return kOk;
    }
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_app(argc, argv);
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidData& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kData;
    } catch (const DegenerateModel& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
