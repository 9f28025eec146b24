#pragma once

#include <vector>

#include <Eigen/Core>

namespace deepfeat {

/// Principal components of the rows of a matrix.
struct PcaModel {
    Eigen::RowVectorXd mean;
    /// p x r principal directions (columns), r = min(n, p), by decreasing variance.
    Eigen::MatrixXd components;
    /// Sample variance (divisor n - 1) along each direction.
    Eigen::VectorXd variances;

    int rank() const { return static_cast<int>(components.cols()); }
    /// Scores on the leading k directions (n x k).
    Eigen::MatrixXd transform(const Eigen::MatrixXd& data, int k) const;
    /// Maps k-column scores back to the original coordinates.
    Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& scores) const;
    /// Fraction of total variance carried by the leading k directions.
    double explained_ratio(int k) const;
};

/// Centers the columns and takes the thin SVD of the centered matrix.
PcaModel fit_pca(const Eigen::MatrixXd& data);

/// Sum of squared reconstruction residuals divided by n - 1.
double reconstruction_error(const PcaModel& model, const Eigen::MatrixXd& data, int k);

/// Pearson correlation matrix; constant columns get zero rows/columns.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data);

/// For each column, how many other columns have |r| > threshold.
std::vector<int> correlation_census(const Eigen::MatrixXd& data, double threshold = 0.6);

}  // namespace deepfeat
