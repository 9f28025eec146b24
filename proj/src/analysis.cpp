#include "deepfeat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "deepfeat/error.hpp"

namespace deepfeat {

PcaModel fit_pca(const Eigen::MatrixXd& data) {
    if (data.rows() < 2 || data.cols() < 1) throw InvalidData("PCA needs at least two rows");
    if (!data.allFinite()) throw InvalidData("PCA input contains non-finite values");
    PcaModel model;
    model.mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - model.mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    model.components = svd.matrixV();
    model.variances = svd.singularValues().array().square() / static_cast<double>(data.rows() - 1);
    return model;
}

Eigen::MatrixXd PcaModel::transform(const Eigen::MatrixXd& data, int k) const {
    if (data.cols() != mean.size())
        throw InvalidData("data has " + std::to_string(data.cols()) + " columns, PCA expects " +
                          std::to_string(mean.size()));
    if (k < 0 || k > rank()) throw InvalidParameter("component count outside [0, rank]");
    return (data.rowwise() - mean) * components.leftCols(k);
}

Eigen::MatrixXd PcaModel::reconstruct(const Eigen::MatrixXd& scores) const {
    if (scores.cols() > rank()) throw InvalidParameter("more scores than components");
    return (scores * components.leftCols(scores.cols()).transpose()).rowwise() + mean;
}

double PcaModel::explained_ratio(int k) const {
    const double total = variances.sum();
    if (total <= 0.0) return 1.0;
    return variances.head(std::clamp(k, 0, rank())).sum() / total;
}

double reconstruction_error(const PcaModel& model, const Eigen::MatrixXd& data, int k) {
    const Eigen::MatrixXd residual = data - model.reconstruct(model.transform(data, k));
    return residual.squaredNorm() / static_cast<double>(data.rows() - 1);
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data) {
    if (data.rows() < 2) throw InvalidData("correlation needs at least two rows");
    Eigen::MatrixXd z = data.rowwise() - data.colwise().mean();
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double norm = z.col(j).norm();
        // columns that are constant up to rounding carry no correlation
        if (norm <= 1e-12 * std::max(1.0, data.col(j).cwiseAbs().maxCoeff()) * std::sqrt(double(z.rows())))
            z.col(j).setZero();
        else
            z.col(j) /= norm;
    }
    Eigen::MatrixXd r(z.cols(), z.cols());
    r.setZero();
    r.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
    return r.selfadjointView<Eigen::Lower>();
}

std::vector<int> correlation_census(const Eigen::MatrixXd& data, double threshold) {
    const Eigen::MatrixXd r = correlation_matrix(data);
    std::vector<int> counts(r.cols(), 0);
    for (Eigen::Index j = 0; j < r.cols(); ++j)
        for (Eigen::Index k = 0; k < r.rows(); ++k)
            if (k != j && std::abs(r(k, j)) > threshold) ++counts[j];
    return counts;
}

}  // namespace deepfeat
