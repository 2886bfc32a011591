#pragma once

#include <Eigen/Dense>

namespace translqr::linalg {

// Singular values below kRankRelTol * sigma_max are treated as zero, both for
// pseudo-inversion and for rank decisions.
inline constexpr double kRankRelTol = 1e-10;

inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M, double rel_tol = kRankRelTol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? rel_tol * sv(0) : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) {
            inv(i) = 1.0 / sv(i);
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline Eigen::Index rank(const Eigen::MatrixXd& M, double rel_tol = kRankRelTol) {
    if (M.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    const double cutoff = rel_tol * sv(0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) {
            ++r;
        }
    }
    return r;
}

inline double spectral_radius(const Eigen::MatrixXd& A) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Eigen::MatrixXd& M, double tol = 1e-9) {
    if (M.rows() != M.cols()) {
        return false;
    }
    return (M - M.transpose()).norm() <= tol * (1.0 + M.norm());
}

// Smallest eigenvalue of a symmetric matrix; the caller decides the PSD/PD cut.
inline double min_symmetric_eigenvalue(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
    return es.eigenvalues().minCoeff();
}

// Block-diagonal with `count` copies of X.
inline Eigen::MatrixXd block_diag_repeat(const Eigen::MatrixXd& X, int count) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows() * count, X.cols() * count);
    for (int i = 0; i < count; ++i) {
        out.block(i * X.rows(), i * X.cols(), X.rows(), X.cols()) = X;
    }
    return out;
}

inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& A, int p) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    for (int i = 0; i < p; ++i) {
        out = out * A;
    }
    return out;
}

} // namespace translqr::linalg
