#include "deepfeat/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "deepfeat/analysis.hpp"
#include "deepfeat/classifier.hpp"
#include "deepfeat/error.hpp"
#include "deepfeat/image_io.hpp"
#include "deepfeat/imagery.hpp"
#include "deepfeat/random.hpp"
#include "deepfeat/rpforest.hpp"
#include "deepfeat/table_io.hpp"
#include "deepfeat/toy_corpus.hpp"

namespace deepfeat {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Deep-feature columns for one run, computed lazily and shared by all methods.
class RunFeatures {
public:
    RunFeatures(const Eigen::MatrixXd& x, const std::vector<int>& train, FitScope scope,
                std::uint64_t seed, int kmeans_max_iter)
        : x_(x), scope_(scope), seed_(seed), kmeans_max_iter_(kmeans_max_iter) {
        if (scope == FitScope::Pooled) {
            fit_rows_.resize(x.rows());
            std::iota(fit_rows_.begin(), fit_rows_.end(), 0);
        } else {
            fit_rows_ = train;
        }
        fit_data_.resize(static_cast<Eigen::Index>(fit_rows_.size()), x.cols());
        for (std::size_t i = 0; i < fit_rows_.size(); ++i) fit_data_.row(i) = x.row(fit_rows_[i]);
    }

    DeepFeatureSet build(const FeatureRecipe& recipe) {
        DeepFeatureSet out;
        out.provenance = recipe.describe();
        for (const auto& method : recipe.clusterers) {
            for (int k = recipe.k_min; k <= recipe.k_max; ++k)
                out.add(method.name() + "_k" + std::to_string(k), cluster_column(method, k));
        }
        if (recipe.rp_trees > 0) {
            const auto& rp = rp_features(recipe.rp_trees, recipe.rp_min_node);
            for (std::size_t t = 0; t < rp.size(); ++t) out.add(rp.names[t], rp.columns[t]);
        }
        return out;
    }

private:
    std::vector<int> cluster_column(const ClusteringMethod& method, int k) {
        const int n_fit = static_cast<int>(fit_rows_.size());
        if (k > n_fit)
            throw InvalidParameter("cluster count " + std::to_string(k) + " exceeds the " +
                                   std::to_string(n_fit) + " rows being clustered");
        if (method.algorithm == ClusteringMethod::Algorithm::KMeans) return kmeans_column(k);
        const Dendrogram& d = dendrogram(method);
        const ClusterAssignment cut = cut_dendrogram(d, k);
        return spread(relabel_along(cut.labels, leaf_orders_.at(method.name())));
    }

    std::vector<int> kmeans_column(int k) {
        auto it = kmeans_.find(k);
        if (it != kmeans_.end()) return it->second;
        const KMeansResult km = kmeans(fit_data_, k, kmeans_max_iter_, derive_seed(seed_, "kmeans", k));
        std::vector<int> labels;
        if (scope_ == FitScope::Pooled) {
            labels = canonical_labels(km.labels);
        } else {
            labels = nearest_centroid(x_, km.centroids);
            for (std::size_t i = 0; i < fit_rows_.size(); ++i) labels[fit_rows_[i]] = km.labels[i];
            labels = canonical_labels(labels);
        }
        return kmeans_.emplace(k, std::move(labels)).first->second;
    }

    const Dendrogram& dendrogram(const ClusteringMethod& method) {
        const std::string key = method.name();
        auto it = dendrograms_.find(key);
        if (it != dendrograms_.end()) return it->second;
        if (distances_.size() == 0) distances_ = pairwise_distances(fit_data_);
        Dendrogram d = method.algorithm == ClusteringMethod::Algorithm::Divisive
                           ? divisive_from_distances(distances_)
                           : agglomerative_from_distances(distances_, method.linkage);
        leaf_orders_[key] = leaf_order(d);
        return dendrograms_.emplace(key, std::move(d)).first->second;
    }

    // Fit-row labels to all rows; rows outside the fit take their nearest fit row's label.
    std::vector<int> spread(const std::vector<int>& fit_labels) {
        if (scope_ == FitScope::Pooled) return fit_labels;
        if (nearest_.empty()) {
            nearest_.assign(x_.rows(), -1);
            for (std::size_t i = 0; i < fit_rows_.size(); ++i) nearest_[fit_rows_[i]] = static_cast<int>(i);
            const Eigen::MatrixXd fit_t = fit_data_.transpose();
            for (Eigen::Index r = 0; r < x_.rows(); ++r) {
                if (nearest_[r] >= 0) continue;
                const Eigen::VectorXd point = x_.row(r).transpose();
                Eigen::Index best;
                (fit_t.colwise() - point).colwise().squaredNorm().minCoeff(&best);
                nearest_[r] = static_cast<int>(best);
            }
        }
        std::vector<int> out(x_.rows());
        for (Eigen::Index r = 0; r < x_.rows(); ++r) out[r] = fit_labels[nearest_[r]];
        return out;
    }

    const DeepFeatureSet& rp_features(int n_trees, int min_node) {
        const auto key = std::make_pair(n_trees, min_node);
        auto it = rp_.find(key);
        if (it != rp_.end()) return it->second;
        DeepFeatureSet set = rpforest_leaf_features(fit_data_, x_, n_trees, min_node,
                                                    derive_seed(seed_, "rpforest", n_trees, min_node));
        return rp_.emplace(key, std::move(set)).first->second;
    }

    const Eigen::MatrixXd& x_;
    FitScope scope_;
    std::uint64_t seed_;
    int kmeans_max_iter_;
    std::vector<int> fit_rows_;
    Eigen::MatrixXd fit_data_;
    Eigen::MatrixXd distances_;
    std::vector<int> nearest_;
    std::map<std::string, Dendrogram> dendrograms_;
    std::map<std::string, std::vector<int>> leaf_orders_;
    std::map<int, std::vector<int>> kmeans_;
    std::map<std::pair<int, int>, DeepFeatureSet> rp_;
};

// errors[method][slot][eps][mtry] for one run; a slot is a variant or the combination.
using RunErrors = std::vector<std::vector<std::vector<std::vector<double>>>>;

int mtry_slots(const ExperimentConfig& cfg) {
    return cfg.mtry.empty() ? 2 : static_cast<int>(cfg.mtry.size());
}

std::vector<int> mtry_values(const ExperimentConfig& cfg, int p) {
    std::vector<int> out;
    if (cfg.mtry.empty()) {
        const double root = std::sqrt(static_cast<double>(p));
        out = {static_cast<int>(std::ceil(root)), static_cast<int>(std::ceil(2.0 * root))};
    } else {
        out = cfg.mtry;
    }
    for (int& m : out) m = std::clamp(m, 1, p);
    return out;
}

double test_error(const Eigen::MatrixXd& votes, const std::vector<int>& classes,
                  const std::vector<int>& truth) {
    int wrong = 0;
    for (Eigen::Index i = 0; i < votes.rows(); ++i)
        if (label_from_votes(votes.row(i).transpose(), classes) != truth[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(votes.rows());
}

struct RunOutput {
    RunErrors errors;
    std::vector<std::string> warnings;
};

}  // namespace

HoldoutSplit holdout_split(int n, double train_fraction, std::uint64_t seed, int run) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidParameter("train fraction must lie in (0, 1)");
    const int n_train = static_cast<int>(std::floor(train_fraction * n));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "split", run));
    std::shuffle(order.begin(), order.end(), rng);
    HoldoutSplit out{std::vector<int>(order.begin(), order.begin() + n_train),
                     std::vector<int>(order.begin() + n_train, order.end())};
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

namespace {

RunOutput run_once(const ExperimentConfig& cfg, int run) {
    const std::uint64_t seed = cfg.seed;
    FeatureMatrix base;
    LabeledSample sample_rows;
    if (cfg.data.mixture) {
        sample_rows = sample(*cfg.data.mixture, cfg.data.n, derive_seed(seed, "data", run));
        base = to_feature_matrix(sample_rows);
    } else {
        base = *cfg.data.fixed;
        sample_rows.y = base.labels;
        sample_rows.clean_y = base.labels;
        sample_rows.classes = base.labels;
        std::sort(sample_rows.classes.begin(), sample_rows.classes.end());
        sample_rows.classes.erase(std::unique(sample_rows.classes.begin(), sample_rows.classes.end()),
                                  sample_rows.classes.end());
        sample_rows.X.resize(base.rows(), 0);
    }
    const HoldoutSplit split = holdout_split(static_cast<int>(base.rows()), cfg.train_fraction, seed, run);
    const std::vector<int>& train = split.train;
    const std::vector<int>& test = split.test;

    RunOutput out;
    RunFeatures features(base.values, train, cfg.scope, derive_seed(seed, "features", run),
                         cfg.kmeans_max_iter);

    // base matrix per PCA setting (0 = original columns)
    std::map<int, FeatureMatrix> bases;
    std::optional<PcaModel> pca;
    auto base_for = [&](int components) -> const FeatureMatrix& {
        auto it = bases.find(components);
        if (it != bases.end()) return it->second;
        if (components == 0) return bases.emplace(0, base).first->second;
        if (!pca) pca = fit_pca(base.values);
        int k = components;
        if (k > pca->rank()) {
            out.warnings.push_back("run " + std::to_string(run) + ": " + std::to_string(k) +
                                   " components requested, rank is " + std::to_string(pca->rank()));
            k = pca->rank();
        }
        FeatureMatrix scores(pca->transform(base.values, k), base.labels);
        for (int j = 0; j < k; ++j) scores.names[j] = "pc_" + std::to_string(j + 1);
        return bases.emplace(components, std::move(scores)).first->second;
    };

    struct Prepared {
        FeatureMatrix train, test;
    };
    std::map<std::string, Prepared> prepared;
    auto prepare = [&](const FeatureRecipe& recipe, int components) -> Prepared& {
        const std::string key = recipe.describe() + "|pca" + std::to_string(components);
        auto it = prepared.find(key);
        if (it != prepared.end()) return it->second;
        const FeatureMatrix& b = base_for(components);
        FeatureMatrix aug = recipe.empty() ? b : b.augmented(features.build(recipe));
        if (cfg.encoding == DeepEncoding::Numeric)
            std::fill(aug.kinds.begin(), aug.kinds.end(), ColumnKind::continuous());
        Prepared p{aug.select_rows(train), aug.select_rows(test)};
        return prepared.emplace(key, std::move(p)).first->second;
    };

    const int n_mtry = mtry_slots(cfg);
    const int n_eps = static_cast<int>(cfg.epsilons.size());
    out.errors.resize(cfg.methods.size());
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        const std::size_t slots = cfg.methods[m].combine ? 1 : cfg.methods[m].variants.size();
        out.errors[m].assign(slots, std::vector<std::vector<double>>(n_eps, std::vector<double>(n_mtry, kNaN)));
    }

    for (int e = 0; e < n_eps; ++e) {
        const LabeledSample noisy =
            flip_labels(sample_rows, cfg.epsilons[e], derive_seed(seed, "flip", run, e), train);
        std::vector<int> train_labels(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) train_labels[i] = noisy.y[train[i]];
        std::vector<int> truth(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) truth[i] = base.labels[test[i]];

        // test votes per (recipe, pca, mtry slot), shared across methods
        std::map<std::string, std::pair<Eigen::MatrixXd, std::vector<int>>> votes_cache;
        auto votes_for = [&](const FeatureRecipe& recipe, int components, int slot)
            -> const std::pair<Eigen::MatrixXd, std::vector<int>>& {
            const std::string key =
                recipe.describe() + "|pca" + std::to_string(components) + "|m" + std::to_string(slot);
            auto it = votes_cache.find(key);
            if (it != votes_cache.end()) return it->second;
            Prepared& p = prepare(recipe, components);
            p.train.labels = train_labels;
            ForestOptions options;
            options.n_trees = cfg.n_trees;
            options.mtry = mtry_values(cfg, static_cast<int>(p.train.cols()))[slot];
            options.seed = derive_seed(seed, "forest", run, e, slot);
            const ForestModel model = train_forest(p.train, options);
            return votes_cache.emplace(key, std::make_pair(model.predict_votes(p.test), model.classes()))
                .first->second;
        };

        try {
            for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
                const Method& method = cfg.methods[m];
                for (int slot = 0; slot < n_mtry; ++slot) {
                    if (method.combine) {
                        const auto& a = votes_for(method.combine->first, method.pca_components, slot);
                        const auto& b = votes_for(method.combine->second, method.pca_components, slot);
                        if (a.second != b.second) throw DegenerateModel("combined forests saw different classes");
                        const Eigen::MatrixXd combined = a.first + method.beta * b.first;
                        out.errors[m][0][e][slot] = test_error(combined, a.second, truth);
                        continue;
                    }
                    for (std::size_t v = 0; v < method.variants.size(); ++v) {
                        const auto& votes = votes_for(method.variants[v], method.pca_components, slot);
                        out.errors[m][v][e][slot] = test_error(votes.first, votes.second, truth);
                    }
                }
            }
        } catch (const DegenerateModel& err) {
            out.warnings.push_back("run " + std::to_string(run) + ", eps " + format_full(cfg.epsilons[e]) +
                                   ": skipped (" + err.what() + ")");
            for (auto& method : out.errors)
                for (auto& slot : method)
                    std::fill(slot[e].begin(), slot[e].end(), kNaN);
        }
    }
    return out;
}

std::string method_variant_name(const Method& method, std::size_t slot) {
    if (method.combine)
        return "combine(" + method.combine->first.describe() + ";" + method.combine->second.describe() +
               ";beta=" + format_full(method.beta) + ")";
    return method.variants[slot].describe();
}

}  // namespace

std::string_view fit_scope_name(FitScope scope) {
    return scope == FitScope::Pooled ? "pooled" : "train-only";
}

FitScope parse_fit_scope(std::string_view name) {
    if (name == "pooled") return FitScope::Pooled;
    if (name == "train-only" || name == "train") return FitScope::TrainOnly;
    throw InvalidParameter("unknown fit scope '" + std::string(name) + "' (pooled | train-only)");
}

std::string FeatureRecipe::describe() const {
    if (empty()) return "none";
    std::string out;
    for (const auto& c : clusterers) {
        if (!out.empty()) out += "+";
        out += c.name();
    }
    if (!clusterers.empty()) out += "[" + std::to_string(k_min) + "," + std::to_string(k_max) + "]";
    if (rp_trees > 0) {
        if (!out.empty()) out += "+";
        out += "rptrees(T=" + std::to_string(rp_trees) + ",ns=" + std::to_string(rp_min_node) + ")";
    }
    return out;
}

std::string_view deep_encoding_name(DeepEncoding encoding) {
    return encoding == DeepEncoding::Categorical ? "categorical" : "numeric";
}

DeepEncoding parse_deep_encoding(std::string_view name) {
    if (name == "categorical") return DeepEncoding::Categorical;
    if (name == "numeric") return DeepEncoding::Numeric;
    throw InvalidParameter("unknown deep-feature encoding '" + std::string(name) + "' (categorical | numeric)");
}

Method Method::plain(std::string name) {
    Method m;
    m.name = std::move(name);
    return m;
}

Method Method::with(std::string name, FeatureRecipe recipe) {
    Method m;
    m.name = std::move(name);
    m.variants = {std::move(recipe)};
    return m;
}

DataSource DataSource::synthetic(MixtureSpec spec, int n) {
    DataSource d;
    d.description = spec.name + " hash=" + spec_hash(spec) + " n=" + std::to_string(n);
    d.mixture = std::make_shared<const MixtureSpec>(std::move(spec));
    d.n = n;
    return d;
}

DataSource DataSource::table(FeatureMatrix data, std::string description) {
    DataSource d;
    d.description = std::move(description);
    d.n = static_cast<int>(data.rows());
    d.fixed = std::make_shared<const FeatureMatrix>(std::move(data));
    return d;
}

void ExperimentConfig::validate() const {
    if (!data.mixture && !data.fixed) throw InvalidParameter("experiment has no data source");
    if (data.fixed && !data.fixed->has_labels()) throw InvalidData("experiment table has no labels");
    if (data.mixture && data.n < 4) throw InvalidParameter("synthetic sample size must be >= 4");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidParameter("train fraction must lie in (0, 1)");
    if (n_runs < 1) throw InvalidParameter("n_runs must be >= 1");
    if (n_trees < 1) throw InvalidParameter("n_trees must be >= 1");
    if (methods.empty()) throw InvalidParameter("experiment has no methods");
    if (epsilons.empty()) throw InvalidParameter("experiment has no epsilon values");
    for (double e : epsilons)
        if (!(e >= 0.0 && e <= 1.0)) throw InvalidParameter("epsilon must lie in [0, 1]");
    for (int m : mtry)
        if (m < 1) throw InvalidParameter("mtry must be >= 1");
    std::set<std::string> names;
    for (const auto& m : methods) {
        if (!names.insert(m.name).second) throw InvalidParameter("duplicate method name '" + m.name + "'");
        if (!m.combine && m.variants.empty()) throw InvalidParameter("method '" + m.name + "' has no variants");
        if (m.beta < 0.0) throw InvalidParameter("beta must be non-negative");
        auto check = [&](const FeatureRecipe& r) {
            if (!r.clusterers.empty() && (r.k_min < 1 || r.k_max < r.k_min))
                throw InvalidParameter("method '" + m.name + "' has an empty k range");
            if (r.rp_trees < 0 || (r.rp_trees > 0 && r.rp_min_node < 2))
                throw InvalidParameter("method '" + m.name + "' has invalid rpTree settings");
        };
        for (const auto& v : m.variants) check(v);
        if (m.combine) {
            check(m.combine->first);
            check(m.combine->second);
        }
    }
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream os;
    os << "data=" << data.description << "\n";
    for (const auto& m : methods) {
        os << "method=" << m.name << " pca=" << m.pca_components;
        if (m.combine) {
            os << " " << method_variant_name(m, 0);
        } else {
            for (const auto& v : m.variants) os << " " << v.describe();
        }
        os << "\n";
    }
    os << "eps=";
    for (double e : epsilons) os << format_full(e) << ",";
    os << "\nruns=" << n_runs << " train_fraction=" << format_full(train_fraction) << " trees=" << n_trees
       << " mtry=";
    for (int m : mtry) os << m << ",";
    os << " seed=" << seed << " scope=" << fit_scope_name(scope) << " encoding=" << deep_encoding_name(encoding) << " kmeans_max_iter=" << kmeans_max_iter
       << "\n";
    return os.str();
}

std::string ExperimentConfig::hash() const { return hex64(detail::fnv1a(canonical())); }

const CellResult& ExperimentResult::cell(std::string_view method, double epsilon) const {
    for (const auto& c : cells)
        if (c.method == method && std::abs(c.epsilon - epsilon) < 1e-12) return c;
    throw InvalidParameter("no cell for method '" + std::string(method) + "'");
}

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
    double sum = 0.0;
    int m = 0;
    for (double v : values)
        if (std::isfinite(v)) {
            sum += v;
            ++m;
        }
    if (m == 0) return {kNaN, kNaN};
    const double mean = sum / m;
    if (m == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values)
        if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (m - 1) / m)};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    std::vector<RunOutput> runs(cfg.n_runs);

    std::atomic<int> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (int r = next++; r < cfg.n_runs; r = next++) {
            try {
                runs[r] = run_once(cfg, r);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = cfg.n_runs;
            }
        }
    };
    const int jobs = std::clamp(cfg.jobs, 1, cfg.n_runs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentResult result;
    result.config_hash = cfg.hash();
    result.seed = cfg.seed;
    result.n_runs = cfg.n_runs;
    for (const auto& r : runs) result.warnings.insert(result.warnings.end(), r.warnings.begin(), r.warnings.end());

    const int n_mtry = mtry_slots(cfg);
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        const Method& method = cfg.methods[m];
        const std::size_t slots = method.combine ? 1 : method.variants.size();
        for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
            CellResult cell;
            cell.method = method.name;
            cell.epsilon = cfg.epsilons[e];
            double best = kNaN;
            for (std::size_t v = 0; v < slots; ++v)
                for (int s = 0; s < n_mtry; ++s) {
                    std::vector<double> errs(cfg.n_runs);
                    for (int r = 0; r < cfg.n_runs; ++r) errs[r] = runs[r].errors[m][v][e][s];
                    const auto [mean, se] = mean_and_se(errs);
                    cell.candidates[method_variant_name(method, v) + "|mtry#" + std::to_string(s)] = mean;
                    if (std::isfinite(mean) && !(mean >= best)) {
                        best = mean;
                        cell.errors = errs;
                        cell.mean = mean;
                        cell.standard_error = se;
                        cell.variant = method_variant_name(method, v);
                        cell.mtry_index = s;
                    }
                }
            if (!std::isfinite(best)) {
                cell.errors.assign(cfg.n_runs, kNaN);
                cell.mean = kNaN;
                cell.standard_error = kNaN;
            }
            cell.valid_runs = static_cast<int>(
                std::count_if(cell.errors.begin(), cell.errors.end(), [](double x) { return std::isfinite(x); }));
            result.cells.push_back(std::move(cell));
        }
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string result_csv(const ExperimentResult& result) {
    std::string out = "method,epsilon,run,error\n";
    for (const auto& c : result.cells)
        for (std::size_t r = 0; r < c.errors.size(); ++r)
            out += c.method + "," + format_full(c.epsilon) + "," + std::to_string(r) + "," +
                   (std::isfinite(c.errors[r]) ? format_full(c.errors[r]) : "NA") + "\n";
    return out;
}

std::string summary_csv(const ExperimentResult& result) {
    std::string out = "method,epsilon,mean_error,standard_error,runs,mtry_index,variant\n";
    for (const auto& c : result.cells)
        out += c.method + "," + format_full(c.epsilon) + "," + format_full(c.mean) + "," +
               format_full(c.standard_error) + "," + std::to_string(c.valid_runs) + "," +
               std::to_string(c.mtry_index) + ",\"" + c.variant + "\"\n";
    return out;
}

std::string result_metadata_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
    nlohmann::ordered_json j;
    j["config_hash"] = result.config_hash;
    j["config"] = cfg.canonical();
    j["seed"] = result.seed;
    j["n_runs"] = result.n_runs;
    j["wall_seconds"] = result.wall_seconds;
    j["jobs"] = cfg.jobs;
    j["warnings"] = result.warnings;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : result.cells) {
        nlohmann::ordered_json cj;
        cj["method"] = c.method;
        cj["epsilon"] = c.epsilon;
        cj["mean_error"] = c.mean;
        cj["standard_error"] = c.standard_error;
        cj["valid_runs"] = c.valid_runs;
        cj["variant"] = c.variant;
        cj["mtry_index"] = c.mtry_index;
        cj["candidates"] = c.candidates;
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    return j.dump(2);
}

ExperimentResult pca_baseline(const ExperimentConfig& cfg, const std::vector<int>& k_list) {
    if (k_list.empty()) throw InvalidParameter("PCA sweep needs at least one component count");
    ExperimentConfig pca_cfg = cfg;
    pca_cfg.methods.clear();
    for (int k : k_list) {
        if (k < 1) throw InvalidParameter("component count must be >= 1");
        Method m = Method::plain("PCA-" + std::to_string(k));
        m.pca_components = k;
        pca_cfg.methods.push_back(std::move(m));
    }
    return run_experiment(pca_cfg);
}

double g3_clean_error(const ShrunkCovariance& cov, double scale, int n, int runs, int n_trees,
                      std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.data = DataSource::synthetic(make_g3_from_covariance(cov, g3_mean(cov.covariance, scale)), n);
    cfg.n_runs = runs;
    cfg.n_trees = n_trees;
    cfg.seed = seed;
    const int p = static_cast<int>(cov.covariance.rows());
    cfg.mtry = {mtry_candidates(p).front()};
    return run_experiment(cfg).cells.front().mean;
}

Calibration calibrate_g3_scale(const ShrunkCovariance& cov, double target, int n, int runs,
                               int n_trees, std::uint64_t seed, int max_steps) {
    if (!(target > 0.0 && target < 0.5)) throw InvalidParameter("target error must lie in (0, 0.5)");
    Calibration cal;
    auto measure = [&](double scale) {
        const double err = g3_clean_error(cov, scale, n, runs, n_trees, seed);
        cal.trace.emplace_back(scale, err);
        return err;
    };
    // error falls as the scale grows: bracket, then bisect
    double lo = 0.0;
    double hi = 0.1;
    double hi_err = measure(hi);
    while (hi_err > target && hi < 100.0) {
        lo = hi;
        hi *= 2.0;
        hi_err = measure(hi);
    }
    cal.scale = hi;
    cal.error = hi_err;
    for (int step = 0; step < max_steps; ++step) {
        const double mid = 0.5 * (lo + hi);
        const double err = measure(mid);
        if (std::abs(err - target) < std::abs(cal.error - target)) {
            cal.scale = mid;
            cal.error = err;
        }
        (err > target ? lo : hi) = mid;
        if (std::abs(err - target) < 0.1 * target) break;
    }
    return cal;
}

FeatureMatrix image_glcm_features(const std::vector<GrayImage>& images, std::vector<int> labels,
                                  const GlcmSettings& settings) {
    if (images.empty()) throw InvalidData("no images to featurize");
    if (!labels.empty() && labels.size() != images.size())
        throw InvalidData("label count differs from image count");
    const int ng = settings.n_gray_levels;
    std::vector<QuantizedImage> quantized;
    quantized.reserve(images.size());
    for (const auto& img : images) quantized.push_back(quantize(img, ng));
    FeatureMask mask = FeatureMask::full(ng);
    if (settings.mask && settings.mask_patches.empty()) {
        mask = build_mask(quantized, settings.relationship);
    } else if (settings.mask) {
        std::vector<QuantizedImage> patches;
        for (const auto& img : settings.mask_patches) patches.push_back(quantize(img, ng));
        mask = build_mask(patches, settings.relationship);
    }
    if (mask.empty()) throw InvalidData("GLCM mask selects no entries");

    Eigen::MatrixXd values(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(mask.size()));
    for (std::size_t i = 0; i < quantized.size(); ++i) {
        const Glcm glcm = compute_glcm(quantized[i], settings.relationship);
        if (glcm.empty())
            throw InvalidData("image " + std::to_string(i) + " is too small for " + settings.relationship.name());
        values.row(static_cast<Eigen::Index>(i)) = glcm_to_features(glcm, mask).transpose();
    }
    FeatureMatrix out(std::move(values), std::move(labels));
    for (std::size_t j = 0; j < mask.size(); ++j) {
        const auto [a, b] = mask.indices()[j];
        char name[24];
        std::snprintf(name, sizeof name, "f_%04d", a * ng + b);
        out.names[j] = name;
    }
    return out;
}

FeatureMatrix manifest_glcm_features(const std::filesystem::path& manifest, const GlcmSettings& settings) {
    const auto entries = read_manifest(manifest);
    std::vector<GrayImage> images;
    std::vector<int> labels;
    for (const auto& e : entries) {
        images.push_back(read_image(e.path));
        labels.push_back(e.score);
    }
    return image_glcm_features(images, std::move(labels), settings);
}

FeatureMatrix toy_glcm_features(int n_images, int size, std::uint64_t seed) {
    auto corpus = toy_corpus(n_images, size, seed);
    std::vector<GrayImage> images;
    std::vector<int> labels;
    for (auto& t : corpus) {
        images.push_back(std::move(t.image));
        labels.push_back(t.score);
    }
    return image_glcm_features(images, std::move(labels));
}

// ---------------------------------------------------------------- tables

namespace {

struct PublishedCell {
    TableId table;
    const char* method;
    double rho;
    double epsilon;
    double value;
};

// Published error rates in percent. G3 and TMA rows use rho = 0.
constexpr PublishedCell kPublished[] = {
    {TableId::G1, "RF", 0.1, 0.0, 8.18},         {TableId::G1, "RF", 0.1, 0.1, 9.25},
    {TableId::G1, "RF", 0.1, 0.2, 11.16},        {TableId::G1, "RF", 0.1, 0.3, 15.28},
    {TableId::G1, "K-means", 0.1, 0.0, 7.68},    {TableId::G1, "K-means", 0.1, 0.1, 8.90},
    {TableId::G1, "K-means", 0.1, 0.2, 10.71},   {TableId::G1, "K-means", 0.1, 0.3, 15.04},
    {TableId::G1, "hClustering", 0.1, 0.0, 5.16}, {TableId::G1, "hClustering", 0.1, 0.1, 5.52},
    {TableId::G1, "hClustering", 0.1, 0.2, 6.91}, {TableId::G1, "hClustering", 0.1, 0.3, 11.21},
    {TableId::G1, "rpTrees", 0.1, 0.0, 5.82},    {TableId::G1, "rpTrees", 0.1, 0.1, 6.32},
    {TableId::G1, "rpTrees", 0.1, 0.2, 8.06},    {TableId::G1, "rpTrees", 0.1, 0.3, 12.25},
    {TableId::G1, "RF", 0.3, 0.0, 11.55},        {TableId::G1, "RF", 0.3, 0.1, 12.32},
    {TableId::G1, "RF", 0.3, 0.2, 13.77},        {TableId::G1, "RF", 0.3, 0.3, 18.09},
    {TableId::G1, "K-means", 0.3, 0.0, 11.08},   {TableId::G1, "K-means", 0.3, 0.1, 12.16},
    {TableId::G1, "K-means", 0.3, 0.2, 13.53},   {TableId::G1, "K-means", 0.3, 0.3, 17.69},
    {TableId::G1, "hClustering", 0.3, 0.0, 9.26}, {TableId::G1, "hClustering", 0.3, 0.1, 9.68},
    {TableId::G1, "hClustering", 0.3, 0.2, 11.15}, {TableId::G1, "hClustering", 0.3, 0.3, 16.17},
    {TableId::G1, "rpTrees", 0.3, 0.0, 9.51},    {TableId::G1, "rpTrees", 0.3, 0.1, 9.98},
    {TableId::G1, "rpTrees", 0.3, 0.2, 11.61},   {TableId::G1, "rpTrees", 0.3, 0.3, 15.58},
    {TableId::G1, "RF", 0.5, 0.0, 15.81},        {TableId::G1, "RF", 0.5, 0.1, 16.73},
    {TableId::G1, "RF", 0.5, 0.2, 17.83},        {TableId::G1, "RF", 0.5, 0.3, 22.17},
    {TableId::G1, "K-means", 0.5, 0.0, 15.73},   {TableId::G1, "K-means", 0.5, 0.1, 16.44},
    {TableId::G1, "K-means", 0.5, 0.2, 17.56},   {TableId::G1, "K-means", 0.5, 0.3, 21.87},
    {TableId::G1, "hClustering", 0.5, 0.0, 14.47}, {TableId::G1, "hClustering", 0.5, 0.1, 15.43},
    {TableId::G1, "hClustering", 0.5, 0.2, 17.09}, {TableId::G1, "hClustering", 0.5, 0.3, 21.98},
    {TableId::G1, "rpTrees", 0.5, 0.0, 14.38},   {TableId::G1, "rpTrees", 0.5, 0.1, 14.97},
    {TableId::G1, "rpTrees", 0.5, 0.2, 16.43},   {TableId::G1, "rpTrees", 0.5, 0.3, 19.88},

    {TableId::G2, "RF", 0.1, 0.0, 12.69},        {TableId::G2, "RF", 0.1, 0.1, 13.64},
    {TableId::G2, "RF", 0.1, 0.2, 15.63},        {TableId::G2, "RF", 0.1, 0.3, 20.53},
    {TableId::G2, "K-means", 0.1, 0.0, 12.45},   {TableId::G2, "K-means", 0.1, 0.1, 13.55},
    {TableId::G2, "K-means", 0.1, 0.2, 15.42},   {TableId::G2, "K-means", 0.1, 0.3, 20.18},
    {TableId::G2, "hClustering", 0.1, 0.0, 9.89}, {TableId::G2, "hClustering", 0.1, 0.1, 10.50},
    {TableId::G2, "hClustering", 0.1, 0.2, 12.38}, {TableId::G2, "hClustering", 0.1, 0.3, 17.37},
    {TableId::G2, "rpTrees", 0.1, 0.0, 10.36},   {TableId::G2, "rpTrees", 0.1, 0.1, 11.53},
    {TableId::G2, "rpTrees", 0.1, 0.2, 13.40},   {TableId::G2, "rpTrees", 0.1, 0.3, 18.48},
    {TableId::G2, "RF", 0.3, 0.0, 15.69},        {TableId::G2, "RF", 0.3, 0.1, 17.28},
    {TableId::G2, "RF", 0.3, 0.2, 18.76},        {TableId::G2, "RF", 0.3, 0.3, 23.41},
    {TableId::G2, "K-means", 0.3, 0.0, 15.91},   {TableId::G2, "K-means", 0.3, 0.1, 16.79},
    {TableId::G2, "K-means", 0.3, 0.2, 18.61},   {TableId::G2, "K-means", 0.3, 0.3, 23.03},
    {TableId::G2, "hClustering", 0.3, 0.0, 14.11}, {TableId::G2, "hClustering", 0.3, 0.1, 14.95},
    {TableId::G2, "hClustering", 0.3, 0.2, 16.67}, {TableId::G2, "hClustering", 0.3, 0.3, 22.39},
    {TableId::G2, "rpTrees", 0.3, 0.0, 14.14},   {TableId::G2, "rpTrees", 0.3, 0.1, 15.22},
    {TableId::G2, "rpTrees", 0.3, 0.2, 16.95},   {TableId::G2, "rpTrees", 0.3, 0.3, 21.37},
    {TableId::G2, "RF", 0.5, 0.0, 19.56},        {TableId::G2, "RF", 0.5, 0.1, 20.65},
    {TableId::G2, "RF", 0.5, 0.2, 22.63},        {TableId::G2, "RF", 0.5, 0.3, 26.35},
    {TableId::G2, "K-means", 0.5, 0.0, 20.49},   {TableId::G2, "K-means", 0.5, 0.1, 21.33},
    {TableId::G2, "K-means", 0.5, 0.2, 23.02},   {TableId::G2, "K-means", 0.5, 0.3, 26.67},
    {TableId::G2, "hClustering", 0.5, 0.0, 19.85}, {TableId::G2, "hClustering", 0.5, 0.1, 20.50},
    {TableId::G2, "hClustering", 0.5, 0.2, 23.07}, {TableId::G2, "hClustering", 0.5, 0.3, 26.67},
    {TableId::G2, "rpTrees", 0.5, 0.0, 18.07},   {TableId::G2, "rpTrees", 0.5, 0.1, 19.14},
    {TableId::G2, "rpTrees", 0.5, 0.2, 21.08},   {TableId::G2, "rpTrees", 0.5, 0.3, 24.44},

    {TableId::G3, "RF", 0.0, 0.1, 1.58},          {TableId::G3, "RF", 0.0, 0.2, 3.42},
    {TableId::G3, "RF", 0.0, 0.3, 9.48},          {TableId::G3, "RF", 0.0, 0.4, 26.50},
    {TableId::G3, "K-means", 0.0, 0.1, 1.48},     {TableId::G3, "K-means", 0.0, 0.2, 3.24},
    {TableId::G3, "K-means", 0.0, 0.3, 9.12},     {TableId::G3, "K-means", 0.0, 0.4, 25.70},
    {TableId::G3, "hClustering", 0.0, 0.1, 1.18}, {TableId::G3, "hClustering", 0.0, 0.2, 3.06},
    {TableId::G3, "hClustering", 0.0, 0.3, 8.24}, {TableId::G3, "hClustering", 0.0, 0.4, 26.16},
    {TableId::G3, "rpTrees", 0.0, 0.1, 1.10},     {TableId::G3, "rpTrees", 0.0, 0.2, 2.40},
    {TableId::G3, "rpTrees", 0.0, 0.3, 7.68},     {TableId::G3, "rpTrees", 0.0, 0.4, 25.94},

    {TableId::TMA, "RF", 0.0, 0.0, 24.79},
    {TableId::TMA, "K-means", 0.0, 0.0, 24.02},
    {TableId::TMA, "Diana", 0.0, 0.0, 24.20},
    {TableId::TMA, "Agnes", 0.0, 0.0, 24.14},
    {TableId::TMA, "hclust", 0.0, 0.0, 24.29},
    {TableId::TMA, "Agnes+Diana", 0.0, 0.0, 23.77},
    {TableId::TMA, "Agnes+hclust", 0.0, 0.0, 23.71},
    {TableId::TMA, "hclust+Diana", 0.0, 0.0, 23.52},
    {TableId::TMA, "Agnes+Diana+hclust", 0.0, 0.0, 23.46},
    {TableId::TMA, "rpTrees", 0.0, 0.0, 23.28},
    {TableId::TMA, "All deep features", 0.0, 0.0, 23.40},
    {TableId::TMA, "Vote combination", 0.0, 0.0, 23.16},
};

ClusteringMethod agnes() { return ClusteringMethod::parse("agnes"); }
ClusteringMethod diana() { return ClusteringMethod::parse("diana"); }
ClusteringMethod hclust() { return ClusteringMethod::parse("hclust"); }

FeatureRecipe clusters(std::vector<ClusteringMethod> methods, int k_min, int k_max) {
    FeatureRecipe r;
    r.clusterers = std::move(methods);
    r.k_min = k_min;
    r.k_max = k_max;
    return r;
}

FeatureRecipe rptrees(int trees, int min_node) {
    FeatureRecipe r;
    r.rp_trees = trees;
    r.rp_min_node = min_node;
    return r;
}

std::string pct(double fraction) {
    if (!std::isfinite(fraction)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

void log_line(const TableOptions& options, const std::string& line) {
    if (options.log) options.log(line);
}

ExperimentConfig base_config(const TableOptions& options) {
    ExperimentConfig cfg;
    cfg.n_runs = options.n_runs;
    cfg.n_trees = options.n_trees;
    cfg.seed = options.seed;
    cfg.jobs = options.jobs;
    cfg.scope = options.scope;
    return cfg;
}

}  // namespace

double published_value(TableId id, std::string_view method, double rho, double epsilon) {
    for (const auto& c : kPublished)
        if (c.table == id && method == c.method && std::abs(c.rho - rho) < 1e-9 &&
            std::abs(c.epsilon - epsilon) < 1e-9)
            return c.value;
    return kNaN;
}

std::string_view table_name(TableId id) {
    switch (id) {
        case TableId::G1: return "g1";
        case TableId::G2: return "g2";
        case TableId::G3: return "g3";
        case TableId::TMA: return "tma";
    }
    return "?";
}

TableId parse_table_id(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "g1") return TableId::G1;
    if (lower == "g2") return TableId::G2;
    if (lower == "g3") return TableId::G3;
    if (lower == "tma") return TableId::TMA;
    throw InvalidParameter("unknown table '" + std::string(name) + "' (g1 | g2 | g3 | tma)");
}

std::vector<Method> table_methods(TableId id, const TableOptions& options) {
    std::vector<Method> methods;
    if (id == TableId::TMA) {
        const int lo = options.tma_k_min, hi = options.tma_k_max;
        methods.push_back(Method::plain("RF"));
        methods.push_back(Method::with("K-means", clusters({ClusteringMethod{}}, options.tma_kmeans_k,
                                                           options.tma_kmeans_k)));
        methods.push_back(Method::with("Diana", clusters({diana()}, lo, hi)));
        methods.push_back(Method::with("Agnes", clusters({agnes()}, lo, hi)));
        methods.push_back(Method::with("hclust", clusters({hclust()}, lo, hi)));
        methods.push_back(Method::with("Agnes+Diana", clusters({agnes(), diana()}, lo, hi)));
        methods.push_back(Method::with("Agnes+hclust", clusters({agnes(), hclust()}, lo, hi)));
        methods.push_back(Method::with("hclust+Diana", clusters({hclust(), diana()}, lo, hi)));
        const FeatureRecipe triple = clusters({agnes(), diana(), hclust()}, lo, hi);
        const FeatureRecipe rp = rptrees(options.tma_rp_trees, options.tma_rp_min_node);
        methods.push_back(Method::with("Agnes+Diana+hclust", triple));
        methods.push_back(Method::with("rpTrees", rp));
        FeatureRecipe all = triple;
        all.rp_trees = rp.rp_trees;
        all.rp_min_node = rp.rp_min_node;
        methods.push_back(Method::with("All deep features", all));
        Method vote = Method::plain("Vote combination");
        vote.combine = std::make_pair(triple, rp);
        vote.beta = options.beta;
        methods.push_back(std::move(vote));
        return methods;
    }
    const bool g3 = id == TableId::G3;
    methods.push_back(Method::plain("RF"));
    Method km = Method::plain("K-means");
    km.variants.clear();
    for (int k : options.kmeans_k) km.variants.push_back(clusters({ClusteringMethod{}}, k, k));
    methods.push_back(std::move(km));
    methods.push_back(Method::with("hClustering",
                                   clusters({agnes(), diana(), hclust()}, options.hclust_k_min, options.hclust_k_max)));
    methods.push_back(Method::with("rpTrees", rptrees(g3 ? options.g3_rp_trees : options.rp_trees, options.rp_min_node)));
    return methods;
}

TableOutput reproduce_table(TableId id, const TableOptions& options) {
    TableOutput out;
    out.id = id;
    std::string csv = "table,rho,epsilon,method,mean_error,standard_error,runs,published_error,variant\n";
    std::ostringstream text;
    const std::string name(table_name(id));
    auto csv_row = [&](double rho, const CellResult& c) {
        const double published = published_value(id, c.method, rho, c.epsilon);
        csv += name + "," + format_full(rho) + "," + format_full(c.epsilon) + "," + c.method + "," +
               format_full(c.mean) + "," + format_full(c.standard_error) + "," + std::to_string(c.valid_runs) +
               "," + (std::isfinite(published) ? format_full(published / 100.0) : "NA") + ",\"" + c.variant + "\"\n";
    };
    const std::vector<Method> methods = table_methods(id, options);

    if (id == TableId::TMA) {
        if (!options.tma) {
            out.available = false;
            out.note = "TMA image features not supplied; table unavailable";
            text << "Table tma: unavailable (no labeled image manifest supplied)\n";
            out.text = text.str();
            out.csv = csv;
            return out;
        }
        ExperimentConfig cfg = base_config(options);
        cfg.data = DataSource::table(*options.tma, "tma rows=" + std::to_string(options.tma->rows()));
        cfg.methods = methods;
        log_line(options, "table tma: " + std::to_string(cfg.n_runs) + " runs");
        ExperimentResult res = run_experiment(cfg);
        text << "Table tma: error rate (%), ours vs published\n";
        text << pad("Deep features", 22) << pad("ours", 9) << pad("se", 7) << pad("published", 11) << "\n";
        for (const auto& c : res.cells) {
            csv_row(0.0, c);
            text << pad(c.method, 22) << pad(pct(c.mean), 9) << pad(pct(c.standard_error), 7)
                 << pad(pct(published_value(id, c.method, 0.0, 0.0) / 100.0), 9) << "\n";
        }
        out.results.push_back(std::move(res));
        out.csv = csv;
        out.text = text.str();
        return out;
    }

    std::vector<std::pair<double, DataSource>> grids;
    std::vector<double> epsilons{0.0, 0.1, 0.2, 0.3};
    if (id == TableId::G3) {
        epsilons = {0.1, 0.2, 0.3, 0.4};
        FeatureMatrix source = options.tma ? *options.tma : toy_glcm_features(695, 64, derive_seed(options.seed, "g3-corpus"));
        log_line(options, "table g3: estimating covariance from " + std::to_string(source.rows()) + " GLCM rows");
        const ShrunkCovariance cov = shrink_to_spd(sample_covariance(source.values));
        double scale = options.g3_scale;
        if (scale <= 0.0) {
            const Calibration cal = calibrate_g3_scale(cov, options.g3_target_error, options.n,
                                                       std::max(2, options.n_runs / 10), options.n_trees,
                                                       derive_seed(options.seed, "g3-calibration"));
            scale = cal.scale;
            out.note = "g3 mean scale " + format_full(scale) + " (clean RF error " + format_full(cal.error) +
                       "), shrinkage " + format_full(cov.lambda);
        } else {
            out.note = "g3 mean scale " + format_full(scale) + ", shrinkage " + format_full(cov.lambda);
        }
        log_line(options, out.note);
        grids.emplace_back(0.0, DataSource::synthetic(make_g3_from_covariance(cov, g3_mean(cov.covariance, scale)),
                                                      options.n));
    } else {
        for (double rho : {0.1, 0.3, 0.5})
            grids.emplace_back(rho, DataSource::synthetic(id == TableId::G1 ? make_g1(rho) : make_g2(rho), options.n));
    }

    text << "Table " << name << ": error rate (%), ours [published]\n";
    text << pad("rho", 5) << pad("eps", 6);
    for (const auto& m : methods) text << pad(m.name, 22);
    text << "\n";
    for (auto& [rho, source] : grids) {
        ExperimentConfig cfg = base_config(options);
        cfg.data = source;
        cfg.methods = methods;
        cfg.epsilons = epsilons;
        log_line(options, "table " + name + ": rho=" + format_short(rho) + ", " + std::to_string(cfg.n_runs) + " runs");
        ExperimentResult res = run_experiment(cfg);
        for (double eps : epsilons) {
            text << pad(id == TableId::G3 ? "-" : format_short(rho), 5) << pad(format_short(eps), 6);
            for (const auto& m : methods) {
                const CellResult& c = res.cell(m.name, eps);
                csv_row(rho, c);
                text << pad(pct(c.mean) + " [" + pct(published_value(id, m.name, rho, eps) / 100.0) + "]", 22);
            }
            text << "\n";
        }
        out.results.push_back(std::move(res));
    }
    if (!out.note.empty()) text << out.note << "\n";
    out.csv = csv;
    out.text = text.str();
    return out;
}

}  // namespace deepfeat
