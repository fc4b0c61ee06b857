#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "posi/errors.hpp"

namespace posi {

// A validated correlation matrix. Coordinates whose source variance is zero
// follow the Moore-Penrose convention: their rows/columns (including the
// diagonal) are zero and they are flagged, so they contribute |0| to any
// max-norm computed from the matrix.
class CorrelationMatrix {
public:
    static CorrelationMatrix from_covariance(const Eigen::MatrixXd& sigma) {
        check_square(sigma);
        const Eigen::Index k = sigma.rows();
        Eigen::VectorXd d = sigma.diagonal();
        const double dmax = d.maxCoeff();
        std::vector<bool> zero(static_cast<std::size_t>(k), false);
        Eigen::VectorXd scale(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            if (!(d[i] > dmax * 1e-14) || !(d[i] > 0.0)) {
                zero[static_cast<std::size_t>(i)] = true;
                scale[i] = 0.0;
            } else {
                scale[i] = 1.0 / std::sqrt(d[i]);
            }
        }
        Eigen::MatrixXd c = scale.asDiagonal() * sigma * scale.asDiagonal();
        // exact zeros on flagged coordinates, exact ones elsewhere
        for (Eigen::Index i = 0; i < k; ++i) {
            if (zero[static_cast<std::size_t>(i)]) {
                c.row(i).setZero();
                c.col(i).setZero();
            } else {
                c(i, i) = 1.0;
            }
        }
        c = 0.5 * (c + c.transpose()).eval();
        return CorrelationMatrix(std::move(c), std::move(zero));
    }

    static CorrelationMatrix from_correlation(const Eigen::MatrixXd& corr) {
        check_square(corr);
        const Eigen::Index k = corr.rows();
        std::vector<bool> zero(static_cast<std::size_t>(k), false);
        for (Eigen::Index i = 0; i < k; ++i) {
            const double dii = corr(i, i);
            if (std::fabs(dii) <= 1e-8) {
                zero[static_cast<std::size_t>(i)] = true;
            } else if (std::fabs(dii - 1.0) > 1e-8) {
                throw NonPsd("correlation diagonal entries must be 1 (or 0 for degenerate coordinates)");
            }
        }
        Eigen::MatrixXd c = corr;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (zero[static_cast<std::size_t>(i)]) {
                c.row(i).setZero();
                c.col(i).setZero();
            }
        }
        return CorrelationMatrix(std::move(c), std::move(zero));
    }

    Eigen::Index dim() const { return entries_.rows(); }
    const Eigen::MatrixXd& entries() const { return entries_; }
    int rank() const { return rank_; }
    const std::vector<bool>& zero_variance() const { return zero_; }

    // k x rank factor B with B B' = entries, from the symmetric PSD square
    // root restricted to the numerically positive eigenspace.
    Eigen::MatrixXd factor() const {
        const Eigen::Index k = dim();
        Eigen::MatrixXd b(k, rank_);
        int col = 0;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (eigenvalues_[i] > rank_tol_) {
                b.col(col++) = eigenvectors_.col(i) * std::sqrt(eigenvalues_[i]);
            }
        }
        return b;
    }

private:
    CorrelationMatrix(Eigen::MatrixXd entries, std::vector<bool> zero)
        : entries_(std::move(entries)), zero_(std::move(zero)) {
        const Eigen::Index k = entries_.rows();
        const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-10) throw NonPsd("correlation matrix is not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (entries_ + entries_.transpose()));
        eigenvalues_ = es.eigenvalues();
        eigenvectors_ = es.eigenvectors();
        const double lmax = eigenvalues_[k - 1];
        if (eigenvalues_[0] < -1e-8 * std::max(lmax, 1.0)) {
            throw NonPsd("correlation matrix has a significantly negative eigenvalue");
        }
        rank_tol_ = static_cast<double>(k) * std::max(lmax, 0.0) * 1e-12;
        rank_ = 0;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (eigenvalues_[i] > rank_tol_) ++rank_;
        }
    }

    static void check_square(const Eigen::MatrixXd& m) {
        if (m.rows() == 0 || m.rows() != m.cols()) {
            throw DimensionMismatch("correlation matrix must be square and nonempty");
        }
    }

    Eigen::MatrixXd entries_;
    std::vector<bool> zero_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    double rank_tol_ = 0.0;
    int rank_ = 0;
};

} // namespace posi
