#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "deepfeat/error.hpp"
#include "deepfeat/feature_matrix.hpp"

namespace deepfeat {

/// Sigma_ij = rho^|i-j|.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ar1_covariance(int p, Scalar rho) {
    if (!(std::abs(rho) < Scalar(1))) throw InvalidParameter("|rho| must be < 1");
    if (p < 1) throw InvalidParameter("dimension must be >= 1");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> s(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
    return s;
}

/// Gaussian mixture with one covariance shared by every component.
struct MixtureSpec {
    std::vector<Eigen::VectorXd> means;
    Eigen::VectorXd weights;
    Eigen::MatrixXd covariance;
    std::vector<int> component_labels;
    /// Lower Cholesky factor of covariance.
    Eigen::MatrixXd cholesky;
    /// Diagonal shrinkage applied to reach a factorizable covariance.
    double shrinkage = 0.0;
    std::string name;

    int dim() const { return static_cast<int>(covariance.rows()); }
    int n_components() const { return static_cast<int>(means.size()); }
    /// Sorted distinct labels.
    std::vector<int> classes() const;
};

/// Validates the parts and factorizes the covariance (InvalidData if not SPD).
MixtureSpec make_mixture(std::vector<Eigen::VectorXd> means, Eigen::VectorXd weights,
                         Eigen::MatrixXd covariance, std::vector<int> component_labels,
                         std::string name = "mixture");

/// 1/2 N(mu, Sigma) + 1/2 N(-mu, Sigma), mu = (mu_val, ..., mu_val); +mu -> 1, -mu -> 2.
MixtureSpec make_g1(double rho, int p = 40, double mu_val = 0.3);

/// Four equal-weight components +-mu1, +-mu2 with mu1 = (mu_val on the first half, 0),
/// mu2 = (0, mu_val on the second half); + -> 1, - -> 2.
MixtureSpec make_g2(double rho, int p = 40, double mu_val = 0.5);

struct ShrunkCovariance {
    Eigen::MatrixXd covariance;
    double lambda = 0.0;
};

/// Unbiased sample covariance of the rows.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data);

/// lambda * diag(S) + (1 - lambda) * S with the smallest lambda found for which
/// the Cholesky factorization succeeds. InvalidData on a non-positive diagonal.
ShrunkCovariance shrink_to_spd(const Eigen::MatrixXd& s);

/// 1/2 N(-mu, Sigma) + 1/2 N(mu, Sigma) with Sigma the shrunk covariance of
/// cov_source; +mu -> 1, -mu -> 2.
MixtureSpec make_g3(const Eigen::MatrixXd& cov_source, const Eigen::VectorXd& mu);
MixtureSpec make_g3_from_covariance(const ShrunkCovariance& cov, const Eigen::VectorXd& mu);

/// Mean direction for G3: scale * sqrt(diag(Sigma)).
Eigen::VectorXd g3_mean(const Eigen::MatrixXd& covariance, double scale);

struct LabeledSample {
    Eigen::MatrixXd X;
    std::vector<int> y;
    std::vector<int> clean_y;
    std::vector<int> components;
    /// Label set the flip rule draws from.
    std::vector<int> classes;
    /// Sorted indices whose label was flipped.
    std::vector<int> flipped;

    int rows() const { return static_cast<int>(X.rows()); }
};

struct SampleOptions {
    /// Split n among components in proportion to the weights instead of
    /// drawing each row's component.
    bool exact_counts = false;
};

LabeledSample sample(const MixtureSpec& spec, int n, std::uint64_t seed, SampleOptions options = {});

/// Flips round(epsilon * |scope|) distinct labels chosen uniformly from scope.
/// Two classes swap; with more classes a different class is drawn uniformly.
LabeledSample flip_labels(const LabeledSample& s, double epsilon, std::uint64_t seed,
                          std::span<const int> scope);
/// Same, over every row.
LabeledSample flip_labels(const LabeledSample& s, double epsilon, std::uint64_t seed);

/// Flips exactly the given rows (the set is recorded symmetric-difference style).
LabeledSample flip_labels_at(const LabeledSample& s, std::span<const int> rows, std::uint64_t seed);

FeatureMatrix to_feature_matrix(const LabeledSample& s);

/// FNV-1a digest of means, weights, covariance and labels, as 16 hex digits.
std::string spec_hash(const MixtureSpec& spec);

/// Audit record: spec hash, seed, epsilon and flipped rows.
std::string sample_metadata_json(const MixtureSpec& spec, const LabeledSample& s, std::uint64_t seed,
                                 double epsilon);

}  // namespace deepfeat
