#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "deepfeat/clustering.hpp"
#include "deepfeat/feature_matrix.hpp"
#include "deepfeat/imagery.hpp"
#include "deepfeat/synth.hpp"

namespace deepfeat {

/// Which rows the unsupervised learners see. Labels are never used either way.
enum class FitScope { Pooled, TrainOnly };

std::string_view fit_scope_name(FitScope scope);
FitScope parse_fit_scope(std::string_view name);

/// How the forest sees deep-feature IDs: unordered categories with subset
/// splits, or plain numbers with threshold splits.
enum class DeepEncoding { Categorical, Numeric };

std::string_view deep_encoding_name(DeepEncoding encoding);
DeepEncoding parse_deep_encoding(std::string_view name);

/// One set of deep-feature columns: cluster IDs from each clusterer for every
/// k in [k_min, k_max], and/or leaf IDs from an rpTree ensemble.
struct FeatureRecipe {
    std::vector<ClusteringMethod> clusterers;
    int k_min = 10;
    int k_max = 60;
    int rp_trees = 0;
    int rp_min_node = 20;

    bool empty() const { return clusterers.empty() && rp_trees == 0; }
    std::string describe() const;
};

/// A table row. Every variant is evaluated on every run; the cell reports the
/// variant (and mtry) with the lowest mean error. A method with a `combine`
/// pair trains one forest per recipe and scores argmax(v1 + beta * v2).
struct Method {
    std::string name;
    std::vector<FeatureRecipe> variants{FeatureRecipe{}};
    std::optional<std::pair<FeatureRecipe, FeatureRecipe>> combine;
    double beta = 1.1;
    /// > 0 replaces the original columns by this many leading principal
    /// component scores (fitted on all rows of the run).
    int pca_components = 0;

    static Method plain(std::string name = "RF");
    static Method with(std::string name, FeatureRecipe recipe);
};

/// Rows either come from a mixture (fresh draw every run) or a fixed table.
struct DataSource {
    std::shared_ptr<const MixtureSpec> mixture;
    int n = 1000;
    std::shared_ptr<const FeatureMatrix> fixed;
    std::string description;

    static DataSource synthetic(MixtureSpec spec, int n);
    static DataSource table(FeatureMatrix data, std::string description);
};

struct ExperimentConfig {
    DataSource data;
    std::vector<Method> methods{Method::plain()};
    std::vector<double> epsilons{0.0};
    int n_runs = 100;
    double train_fraction = 0.5;
    int n_trees = 100;
    /// Explicit mtry values; empty means ceil(sqrt p) and ceil(2 sqrt p) of
    /// each augmented matrix.
    std::vector<int> mtry;
    std::uint64_t seed = 1;
    FitScope scope = FitScope::Pooled;
    DeepEncoding encoding = DeepEncoding::Numeric;
    int kmeans_max_iter = 100;
    int jobs = 1;

    /// Throws InvalidParameter on an unusable configuration.
    void validate() const;
    /// Canonical text form; identical configs give identical strings.
    std::string canonical() const;
    std::string hash() const;
};

struct CellResult {
    std::string method;
    double epsilon = 0.0;
    /// Test error per run for the selected variant and mtry; NaN for skipped runs.
    std::vector<double> errors;
    double mean = 0.0;
    double standard_error = 0.0;
    int valid_runs = 0;
    std::string variant;
    /// mtry index chosen (0: ceil sqrt p, 1: ceil 2 sqrt p, or position in the explicit list).
    int mtry_index = 0;
    /// Mean error of every (variant, mtry) pair, keyed "variant|mtry#i".
    std::map<std::string, double> candidates;
};

struct ExperimentResult {
    std::vector<CellResult> cells;
    std::string config_hash;
    std::uint64_t seed = 0;
    int n_runs = 0;
    /// "run r, eps e: reason" for every skipped (run, epsilon).
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;

    const CellResult& cell(std::string_view method, double epsilon) const;
};

struct HoldoutSplit {
    std::vector<int> train;  // sorted
    std::vector<int> test;   // sorted
};

/// floor(train_fraction * n) rows drawn without replacement for training;
/// the rest are the test rows. Stream: derive_seed(seed, "split", run).
HoldoutSplit holdout_split(int n, double train_fraction, std::uint64_t seed, int run);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Mean and standard error (sample sd / sqrt(m)) over the finite entries.
std::pair<double, double> mean_and_se(const std::vector<double>& values);

/// Per-cell CSV (one row per cell and run, full precision). Wall time is not
/// included so equal configs give equal bytes.
std::string result_csv(const ExperimentResult& result);
/// Summary CSV: method, epsilon, mean, se, runs, variant, mtry index.
std::string summary_csv(const ExperimentResult& result);
std::string result_metadata_json(const ExperimentConfig& cfg, const ExperimentResult& result);

/// RF over the leading k principal components, for each k in k_list. The
/// components are fitted on all rows of cfg.data (fixed table only).
ExperimentResult pca_baseline(const ExperimentConfig& cfg, const std::vector<int>& k_list);

/// Mean clean-label RF error of G3 at a given mean scale.
double g3_clean_error(const ShrunkCovariance& cov, double scale, int n, int runs, int n_trees,
                      std::uint64_t seed);

struct Calibration {
    double scale = 0.0;
    double error = 0.0;
    std::vector<std::pair<double, double>> trace;  // (scale, error)
};

/// Bisection on the G3 mean scale so that clean RF error lands near target.
Calibration calibrate_g3_scale(const ShrunkCovariance& cov, double target, int n, int runs,
                               int n_trees, std::uint64_t seed, int max_steps = 10);

struct GlcmSettings {
    int n_gray_levels = 51;
    SpatialRelationship relationship{Direction::NE, 3};
    /// Keep only entries above the per-image median in at least one image
    /// (of mask_patches when given, otherwise of the featurized images).
    bool mask = false;
    std::vector<GrayImage> mask_patches;
};

/// One GLCM feature row per image. Columns are named f_<a*N_g+b> after the
/// flattened matrix position, so masked tables keep the unmasked names.
FeatureMatrix image_glcm_features(const std::vector<GrayImage>& images, std::vector<int> labels,
                                  const GlcmSettings& settings = {});
/// Reads every image of a `path,score` manifest.
FeatureMatrix manifest_glcm_features(const std::filesystem::path& manifest,
                                     const GlcmSettings& settings = {});

/// GLCM feature rows of the synthetic tissue corpus.
FeatureMatrix toy_glcm_features(int n_images, int size, std::uint64_t seed);

/// Published table layout for the four grids.
enum class TableId { G1, G2, G3, TMA };
std::string_view table_name(TableId id);
TableId parse_table_id(std::string_view name);

struct TableOptions {
    int n_runs = 100;
    int n = 1000;
    int n_trees = 100;
    std::uint64_t seed = 1;
    int jobs = 1;
    FitScope scope = FitScope::Pooled;
    /// K values tried by the K-means row.
    std::vector<int> kmeans_k{30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
    int hclust_k_min = 10;
    int hclust_k_max = 60;
    int rp_trees = 800;
    int rp_min_node = 20;
    /// G3 settings.
    int g3_rp_trees = 200;
    double g3_scale = 0.0;  // 0: calibrate
    double g3_target_error = 0.02;
    /// TMA feature table (GLCM rows with scores); absent marks TMA unavailable.
    std::shared_ptr<const FeatureMatrix> tma;
    int tma_k_min = 10;
    int tma_k_max = 40;
    int tma_kmeans_k = 40;
    int tma_rp_trees = 600;
    int tma_rp_min_node = 30;
    double beta = 1.1;
    /// Optional progress sink.
    std::function<void(const std::string&)> log;
};

struct TableOutput {
    TableId id;
    bool available = true;
    std::string csv;
    std::string text;
    std::vector<ExperimentResult> results;
    std::string note;
};

/// Published error rates (percent) for a cell; NaN when the table has no such cell.
double published_value(TableId id, std::string_view method, double rho, double epsilon);

/// Methods used for a table under the given options.
std::vector<Method> table_methods(TableId id, const TableOptions& options);

TableOutput reproduce_table(TableId id, const TableOptions& options);

}  // namespace deepfeat
