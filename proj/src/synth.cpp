#include "deepfeat/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <Eigen/Cholesky>

#include "json.hpp"

#include "deepfeat/random.hpp"

namespace deepfeat {

namespace {

Eigen::MatrixXd factorize(const Eigen::MatrixXd& cov, bool& ok) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    ok = llt.info() == Eigen::Success;
    if (!ok) return {};
    return llt.matrixL();
}

std::vector<int> distinct_sorted(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

int flip_one(int label, const std::vector<int>& classes, Rng& rng) {
    if (classes.size() == 2) return label == classes[0] ? classes[1] : classes[0];
    std::uniform_int_distribution<std::size_t> pick(0, classes.size() - 2);
    std::size_t k = pick(rng);
    const auto own = static_cast<std::size_t>(std::find(classes.begin(), classes.end(), label) -
                                              classes.begin());
    if (k >= own) ++k;
    return classes[k];
}

}  // namespace

std::vector<int> MixtureSpec::classes() const { return distinct_sorted(component_labels); }

MixtureSpec make_mixture(std::vector<Eigen::VectorXd> means, Eigen::VectorXd weights,
                         Eigen::MatrixXd covariance, std::vector<int> component_labels,
                         std::string name) {
    if (means.empty()) throw InvalidParameter("mixture needs at least one component");
    const auto p = covariance.rows();
    if (covariance.cols() != p || p == 0) throw InvalidParameter("covariance must be square");
    if (weights.size() != static_cast<Eigen::Index>(means.size()) ||
        component_labels.size() != means.size())
        throw InvalidParameter("means, weights and labels must have one entry per component");
    for (const auto& m : means)
        if (m.size() != p) throw InvalidParameter("mean length differs from the covariance size");
    if ((weights.array() < 0).any() || std::abs(weights.sum() - 1.0) > 1e-9)
        throw InvalidParameter("weights must be non-negative and sum to 1");
    if (!covariance.isApprox(covariance.transpose(), 1e-12))
        throw InvalidData("covariance is not symmetric");
    if (distinct_sorted(component_labels).size() < 2 && means.size() > 1)
        throw InvalidParameter("mixture components must cover at least two classes");

    MixtureSpec spec;
    bool ok = false;
    spec.cholesky = factorize(covariance, ok);
    if (!ok) throw InvalidData("covariance is not positive definite");
    spec.means = std::move(means);
    spec.weights = std::move(weights);
    spec.covariance = std::move(covariance);
    spec.component_labels = std::move(component_labels);
    spec.name = std::move(name);
    return spec;
}

MixtureSpec make_g1(double rho, int p, double mu_val) {
    const Eigen::VectorXd mu = Eigen::VectorXd::Constant(p, mu_val);
    return make_mixture({mu, -mu}, Eigen::Vector2d(0.5, 0.5), ar1_covariance(p, rho), {1, 2}, "g1");
}

MixtureSpec make_g2(double rho, int p, double mu_val) {
    if (p < 2) throw InvalidParameter("G2 needs p >= 2");
    const int half = p / 2;
    Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd mu2 = Eigen::VectorXd::Zero(p);
    mu1.head(half).setConstant(mu_val);
    mu2.tail(p - half).setConstant(mu_val);
    return make_mixture({mu1, mu2, -mu1, -mu2}, Eigen::Vector4d::Constant(0.25),
                        ar1_covariance(p, rho), {1, 1, 2, 2}, "g2");
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data) {
    if (data.rows() < 2) throw InvalidData("covariance needs at least two rows");
    const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    Eigen::MatrixXd s(data.cols(), data.cols());
    s.setZero();
    s.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    s = s.selfadjointView<Eigen::Lower>();
    return s / static_cast<double>(data.rows() - 1);
}

ShrunkCovariance shrink_to_spd(const Eigen::MatrixXd& s) {
    const Eigen::VectorXd diag = s.diagonal();
    if (!(diag.array() > 0).all())
        throw InvalidData("covariance has a zero-variance coordinate; diagonal shrinkage cannot fix it");
    auto shrunk = [&](double lambda) {
        Eigen::MatrixXd out = (1.0 - lambda) * s;
        out.diagonal() = diag;
        return out;
    };
    auto factorizes = [&](double lambda) {
        Eigen::LLT<Eigen::MatrixXd> llt(shrunk(lambda));
        return llt.info() == Eigen::Success;
    };
    if (factorizes(0.0)) return {s, 0.0};

    // decade ladder, then bisection in log space between the bracketing rungs
    double hi = 1e-12;
    while (hi < 1.0 && !factorizes(hi)) hi *= 10.0;
    if (hi >= 1.0) hi = 1.0;
    double lo = hi / 10.0;
    if (hi > 1e-12) {
        for (int step = 0; step < 8; ++step) {
            const double mid = std::sqrt(lo * hi);
            (factorizes(mid) ? hi : lo) = mid;
        }
    }
    return {shrunk(hi), hi};
}

MixtureSpec make_g3_from_covariance(const ShrunkCovariance& cov, const Eigen::VectorXd& mu) {
    if (mu.size() != cov.covariance.rows())
        throw InvalidParameter("mean length differs from the covariance size");
    MixtureSpec spec = make_mixture({mu, -mu}, Eigen::Vector2d(0.5, 0.5), cov.covariance, {1, 2}, "g3");
    spec.shrinkage = cov.lambda;
    return spec;
}

MixtureSpec make_g3(const Eigen::MatrixXd& cov_source, const Eigen::VectorXd& mu) {
    return make_g3_from_covariance(shrink_to_spd(sample_covariance(cov_source)), mu);
}

Eigen::VectorXd g3_mean(const Eigen::MatrixXd& covariance, double scale) {
    return scale * covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

LabeledSample sample(const MixtureSpec& spec, int n, std::uint64_t seed, SampleOptions options) {
    if (n < 1) throw InvalidParameter("sample size must be >= 1");
    const int p = spec.dim();
    const int k = spec.n_components();
    Rng rng(seed);

    LabeledSample out;
    out.components.resize(n);
    if (options.exact_counts) {
        // largest-remainder apportionment, then a shuffle of the row order
        std::vector<int> counts(k);
        std::vector<std::pair<double, int>> remainders;
        int assigned = 0;
        for (int c = 0; c < k; ++c) {
            const double share = spec.weights(c) * n;
            counts[c] = static_cast<int>(std::floor(share));
            assigned += counts[c];
            remainders.emplace_back(share - counts[c], c);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (int r = 0; assigned < n; ++r, ++assigned) ++counts[remainders[r].second];
        int row = 0;
        for (int c = 0; c < k; ++c)
            for (int t = 0; t < counts[c]; ++t) out.components[row++] = c;
        std::shuffle(out.components.begin(), out.components.end(), rng);
    } else {
        std::uniform_real_distribution<double> unit;
        Eigen::VectorXd cumulative(k);
        std::partial_sum(spec.weights.begin(), spec.weights.end(), cumulative.begin());
        for (int i = 0; i < n; ++i) {
            const double u = unit(rng) * cumulative(k - 1);
            int c = 0;
            while (c + 1 < k && u >= cumulative(c)) ++c;
            out.components[i] = c;
        }
    }

    std::normal_distribution<double> gauss;
    Eigen::MatrixXd z(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) z(i, j) = gauss(rng);
    out.X.noalias() = z * spec.cholesky.transpose().triangularView<Eigen::Upper>();
    out.y.resize(n);
    for (int i = 0; i < n; ++i) {
        out.X.row(i) += spec.means[out.components[i]].transpose();
        out.y[i] = spec.component_labels[out.components[i]];
    }
    out.clean_y = out.y;
    out.classes = spec.classes();
    return out;
}

LabeledSample flip_labels_at(const LabeledSample& s, std::span<const int> rows, std::uint64_t seed) {
    if (s.classes.size() < 2) throw InvalidParameter("flipping needs at least two classes");
    LabeledSample out = s;
    Rng rng(seed);
    for (int i : rows) {
        if (i < 0 || i >= s.rows()) throw InvalidParameter("flip index outside the sample");
        out.y[i] = flip_one(out.y[i], s.classes, rng);
    }
    out.flipped.clear();
    for (int i = 0; i < out.rows(); ++i)
        if (out.y[i] != out.clean_y[i]) out.flipped.push_back(i);
    return out;
}

LabeledSample flip_labels(const LabeledSample& s, double epsilon, std::uint64_t seed,
                          std::span<const int> scope) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidParameter("epsilon must lie in [0, 1]");
    if (scope.empty() && epsilon > 0.0) throw InvalidParameter("flip scope is empty");
    std::vector<int> pool(scope.begin(), scope.end());
    if (distinct_sorted(pool).size() != pool.size()) throw InvalidParameter("flip scope repeats a row");
    const auto count = static_cast<std::size_t>(std::llround(epsilon * static_cast<double>(pool.size())));
    Rng rng(seed);
    for (std::size_t t = 0; t < count; ++t) {
        std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
        std::swap(pool[t], pool[pick(rng)]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return flip_labels_at(s, pool, derive_seed(seed, "flip-target"));
}

LabeledSample flip_labels(const LabeledSample& s, double epsilon, std::uint64_t seed) {
    std::vector<int> all(s.rows());
    std::iota(all.begin(), all.end(), 0);
    return flip_labels(s, epsilon, seed, all);
}

FeatureMatrix to_feature_matrix(const LabeledSample& s) { return FeatureMatrix(s.X, s.y); }

std::string spec_hash(const MixtureSpec& spec) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& m : spec.means) feed(m.data(), sizeof(double) * m.size());
    feed(spec.weights.data(), sizeof(double) * spec.weights.size());
    feed(spec.covariance.data(), sizeof(double) * spec.covariance.size());
    feed(spec.component_labels.data(), sizeof(int) * spec.component_labels.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string sample_metadata_json(const MixtureSpec& spec, const LabeledSample& s, std::uint64_t seed,
                                 double epsilon) {
    nlohmann::ordered_json j;
    j["spec"] = spec.name;
    j["spec_hash"] = spec_hash(spec);
    j["dim"] = spec.dim();
    j["shrinkage"] = spec.shrinkage;
    j["rows"] = s.rows();
    j["seed"] = seed;
    j["epsilon"] = epsilon;
    j["flipped"] = s.flipped;
    return j.dump(2);
}

}  // namespace deepfeat
