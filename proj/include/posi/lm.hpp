#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "posi/confidence.hpp"
#include "posi/constants.hpp"
#include "posi/correlation.hpp"
#include "posi/design.hpp"
#include "posi/errors.hpp"

// Ordinary least squares per candidate model, the observable part of the
// block covariance of the stacked OLS estimators, and the simultaneous /
// individual post-selection intervals for homoskedastic linear models.

namespace posi::lm {

struct LmFit {
    CandidateModel model;
    Eigen::VectorXd beta_hat;
    double sigma2_hat = 0.0;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd gram_inverse; // (X[M]'X[M])^{-1}
};

namespace detail {

inline Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& g, const char* what) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= g.diagonal().maxCoeff() * 1e-13) {
        throw RankDeficient(what);
    }
    return ldlt.solve(Eigen::MatrixXd::Identity(g.rows(), g.cols()));
}

} // namespace detail

// least-squares coefficients without degree-of-freedom bookkeeping
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& xm, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xm);
    qr.setThreshold(1e-10);
    if (qr.rank() < xm.cols()) throw RankDeficient("least squares: rank deficient design");
    return qr.solve(y);
}

inline LmFit ols(const DesignMatrix& x, const CandidateModel& m, const Eigen::VectorXd& y) {
    if (y.size() != x.n()) throw DimensionMismatch("response length does not match design");
    const Eigen::MatrixXd xm = submatrix(x, m);
    const Eigen::Index n = xm.rows();
    const Eigen::Index mm = xm.cols();
    if (n <= mm) throw DegenerateDof("ols: sigma^2 requires n > |M|");
    LmFit fit;
    fit.model = m;
    fit.beta_hat = least_squares(xm, y);
    fit.residuals = y - xm * fit.beta_hat;
    fit.sigma2_hat = fit.residuals.squaredNorm() / static_cast<double>(n - mm);
    fit.gram_inverse = detail::inverse_spd(xm.transpose() * xm, "ols: singular Gram matrix");
    return fit;
}

// Projection coefficients of a mean vector onto span(X[M]) -- the
// simulation-side oracle for the model-specific target.
inline Eigen::VectorXd target_lm(const DesignMatrix& x, const CandidateModel& m,
                                 const Eigen::VectorXd& mu) {
    if (mu.size() != x.n()) throw DimensionMismatch("mean vector length does not match design");
    return least_squares(submatrix(x, m), mu);
}

// Asymptotic mean of the model-M variance estimator under mean
// misspecification: sigma^2 + ||(I - P_{X[M]}) mu||^2 / (n - |M|).
inline double sigma2_bias(const DesignMatrix& x, const CandidateModel& m,
                          const Eigen::VectorXd& mu, double sigma2) {
    const Eigen::MatrixXd xm = submatrix(x, m);
    if (xm.rows() <= xm.cols()) throw DegenerateDof("sigma2_bias: requires n > |M|");
    const Eigen::VectorXd resid = mu - xm * least_squares(xm, mu);
    return sigma2 + resid.squaredNorm() / static_cast<double>(xm.rows() - xm.cols());
}

// The sigma^2-free block structure of the covariance of the stacked OLS
// estimators: block (s,t) = (Xs'Xs)^{-1} Xs'Xt (Xt'Xt)^{-1}.
struct GammaBlocks {
    CandidateSet candidates;
    std::vector<std::vector<Eigen::MatrixXd>> blocks; // d x d grid
    CorrelationMatrix corr;

    const Eigen::MatrixXd& block(int s, int t) const {
        return blocks[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
    }
};

inline GammaBlocks gamma_blocks(const DesignMatrix& x, const CandidateSet& candidates) {
    const int d = candidates.d();
    const Eigen::MatrixXd g = x.values.transpose() * x.values;
    std::vector<Eigen::MatrixXd> ginv(static_cast<std::size_t>(d));
    std::vector<Eigen::MatrixXd> gsel(static_cast<std::size_t>(d)); // G[M, :]
    for (int s = 0; s < d; ++s) {
        const auto& m = candidates.models()[static_cast<std::size_t>(s)];
        check_model_bounds(x, m);
        Eigen::MatrixXd gmm(m.size(), m.size());
        Eigen::MatrixXd gmp(m.size(), x.p());
        for (int a = 0; a < m.size(); ++a) {
            gmp.row(a) = g.row(m.indices[static_cast<std::size_t>(a)] - 1);
            for (int b = 0; b < m.size(); ++b) {
                gmm(a, b) = g(m.indices[static_cast<std::size_t>(a)] - 1,
                              m.indices[static_cast<std::size_t>(b)] - 1);
            }
        }
        ginv[static_cast<std::size_t>(s)] =
            detail::inverse_spd(gmm, "gamma_blocks: singular X[M]'X[M]");
        gsel[static_cast<std::size_t>(s)] = std::move(gmp);
    }

    std::vector<std::vector<Eigen::MatrixXd>> blocks(
        static_cast<std::size_t>(d), std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(d)));
    Eigen::MatrixXd stacked(candidates.k(), candidates.k());
    for (int s = 0; s < d; ++s) {
        const auto& ms = candidates.models()[static_cast<std::size_t>(s)];
        for (int t = 0; t < d; ++t) {
            const auto& mt = candidates.models()[static_cast<std::size_t>(t)];
            Eigen::MatrixXd cross(ms.size(), mt.size());
            for (int b = 0; b < mt.size(); ++b) {
                cross.col(b) = gsel[static_cast<std::size_t>(s)].col(
                    mt.indices[static_cast<std::size_t>(b)] - 1);
            }
            Eigen::MatrixXd blk = ginv[static_cast<std::size_t>(s)] * cross *
                                  ginv[static_cast<std::size_t>(t)];
            stacked.block(candidates.offsets()[static_cast<std::size_t>(s)],
                          candidates.offsets()[static_cast<std::size_t>(t)], ms.size(),
                          mt.size()) = blk;
            blocks[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] = std::move(blk);
        }
    }
    stacked = 0.5 * (stacked + stacked.transpose()).eval();
    return GammaBlocks{candidates, std::move(blocks), CorrelationMatrix::from_covariance(stacked)};
}

// k x p factor W with W W' = corr(Gamma), built without materializing the
// k x k matrix. Row (rho(M)+j) is the standardized j-th row of
// (X[M]'X[M])^{-1} X[M]' X G^{-1/2} ... times G^{1/2}; explicitly,
// W_M = diag((X[M]'X[M])^{-1})^{-1/2} (X[M]'X[M])^{-1} S[M,:] with S = (X'X)^{1/2}.
inline Eigen::MatrixXd gamma_corr_factor(const DesignMatrix& x, const CandidateSet& candidates) {
    const Eigen::MatrixXd g = x.values.transpose() * x.values;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.eigenvalues().minCoeff() <= es.eigenvalues().maxCoeff() * 1e-13) {
        throw RankDeficient("gamma_corr_factor: design is rank deficient");
    }
    const Eigen::MatrixXd s = es.operatorSqrt();
    Eigen::MatrixXd w(candidates.k(), x.p());
    for (int t = 0; t < candidates.d(); ++t) {
        const auto& m = candidates.models()[static_cast<std::size_t>(t)];
        check_model_bounds(x, m);
        Eigen::MatrixXd gmm(m.size(), m.size());
        Eigen::MatrixXd sm(m.size(), x.p());
        for (int a = 0; a < m.size(); ++a) {
            sm.row(a) = s.row(m.indices[static_cast<std::size_t>(a)] - 1);
            for (int b = 0; b < m.size(); ++b) {
                gmm(a, b) = g(m.indices[static_cast<std::size_t>(a)] - 1,
                              m.indices[static_cast<std::size_t>(b)] - 1);
            }
        }
        const Eigen::MatrixXd ginv =
            detail::inverse_spd(gmm, "gamma_corr_factor: singular X[M]'X[M]");
        Eigen::MatrixXd rows = ginv * sm;
        for (int a = 0; a < m.size(); ++a) {
            rows.row(a) /= std::sqrt(ginv(a, a));
        }
        w.middleRows(candidates.offsets()[static_cast<std::size_t>(t)], m.size()) = rows;
    }
    return w;
}

// d x d matrix of the forced-coordinate entries of the Gamma blocks, used for
// individual-coefficient intervals; every candidate must contain column 1.
inline CorrelationMatrix xi_matrix(const DesignMatrix& x, const CandidateSet& candidates) {
    for (const auto& m : candidates.models()) {
        if (!m.contains(1)) {
            throw MissingForcedIndex("xi_matrix: model " + m.label() + " does not contain index 1");
        }
    }
    const GammaBlocks gb = gamma_blocks(x, candidates);
    const int d = candidates.d();
    Eigen::MatrixXd xi(d, d);
    for (int s = 0; s < d; ++s) {
        const int ps = gb.candidates.models()[static_cast<std::size_t>(s)].position_of(1);
        for (int t = 0; t < d; ++t) {
            const int pt = gb.candidates.models()[static_cast<std::size_t>(t)].position_of(1);
            xi(s, t) = gb.block(s, t)(ps, pt);
        }
    }
    xi = 0.5 * (xi + xi.transpose()).eval();
    return CorrelationMatrix::from_covariance(xi);
}

// d x p factor whose rows standardize the Xi matrix, built without the d x d
// grid: Xi[s,t] = v_s' (X'X) v_t with v_s the forced-coordinate row of
// (X[Ms]'X[Ms])^{-1} scattered into the Ms positions.
inline Eigen::MatrixXd xi_corr_factor(const DesignMatrix& x, const CandidateSet& candidates) {
    const Eigen::MatrixXd g = x.values.transpose() * x.values;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.eigenvalues().minCoeff() <= es.eigenvalues().maxCoeff() * 1e-13) {
        throw RankDeficient("xi_corr_factor: design is rank deficient");
    }
    const Eigen::MatrixXd s = es.operatorSqrt();
    const int d = candidates.d();
    Eigen::MatrixXd w(d, x.p());
    for (int t = 0; t < d; ++t) {
        const auto& m = candidates.models()[static_cast<std::size_t>(t)];
        if (!m.contains(1)) {
            throw MissingForcedIndex("xi_corr_factor: model " + m.label() +
                                     " does not contain index 1");
        }
        check_model_bounds(x, m);
        Eigen::MatrixXd gmm(m.size(), m.size());
        for (int a = 0; a < m.size(); ++a) {
            for (int b = 0; b < m.size(); ++b) {
                gmm(a, b) = g(m.indices[static_cast<std::size_t>(a)] - 1,
                              m.indices[static_cast<std::size_t>(b)] - 1);
            }
        }
        const Eigen::MatrixXd ginv =
            detail::inverse_spd(gmm, "xi_corr_factor: singular X[M]'X[M]");
        const int pos = m.position_of(1);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(x.p());
        for (int a = 0; a < m.size(); ++a) {
            v[m.indices[static_cast<std::size_t>(a)] - 1] = ginv(a, pos);
        }
        w.row(t) = (s * v).transpose() / std::sqrt(ginv(pos, pos));
    }
    return w;
}

namespace detail {

inline ConfidenceSet assemble(const DesignMatrix& x, const LmFit& fit, double alpha,
                              const PosiConstant& constant, ConstantKind kind) {
    ConfidenceSet cs;
    cs.model = fit.model;
    cs.level = 1.0 - alpha;
    cs.constant_kind = kind;
    cs.constant = constant;
    cs.intervals.reserve(static_cast<std::size_t>(fit.model.size()));
    for (int j = 0; j < fit.model.size(); ++j) {
        Interval iv;
        iv.coef = j + 1;
        iv.name = x.column_names[static_cast<std::size_t>(
            fit.model.indices[static_cast<std::size_t>(j)] - 1)];
        iv.estimate = fit.beta_hat[j];
        iv.stderr_ = std::sqrt(fit.sigma2_hat * fit.gram_inverse(j, j));
        iv.constant = constant.value;
        iv.lower = iv.estimate - iv.stderr_ * constant.value;
        iv.upper = iv.estimate + iv.stderr_ * constant.value;
        cs.intervals.push_back(std::move(iv));
    }
    return cs;
}

} // namespace detail

// Simultaneous post-selection intervals for every coefficient of the selected
// model; k_const must be K_{1-alpha}(corr(Gamma_n)) for this design and
// candidate family.
inline ConfidenceSet ci_lm(const DesignMatrix& x, const Eigen::VectorXd& y,
                           const CandidateSet& candidates, double alpha,
                           const CandidateModel& selected, const PosiConstant& k_const) {
    if (candidates.find(selected) < 0) {
        throw ModelNotInCandidateSet("ci_lm: " + selected.label());
    }
    return detail::assemble(x, ols(x, selected, y), alpha, k_const, ConstantKind::posi_gamma);
}

// Individual-coverage interval for the coefficient of design column 1, using
// the smaller constant K_{1-alpha}(corr(Xi_n)).
inline ConfidenceSet ci_individual(const DesignMatrix& x, const Eigen::VectorXd& y,
                                   const CandidateSet& candidates, double alpha,
                                   const CandidateModel& selected, const PosiConstant& xi_const) {
    if (candidates.find(selected) < 0) {
        throw ModelNotInCandidateSet("ci_individual: " + selected.label());
    }
    if (!selected.contains(1)) {
        throw MissingForcedIndex("ci_individual: selected model does not contain index 1");
    }
    const LmFit fit = ols(x, selected, y);
    const int pos = selected.position_of(1);
    ConfidenceSet cs;
    cs.model = fit.model;
    cs.level = 1.0 - alpha;
    cs.constant_kind = ConstantKind::posi_xi;
    cs.constant = xi_const;
    Interval iv;
    iv.coef = pos + 1;
    iv.name = x.column_names[0];
    iv.estimate = fit.beta_hat[pos];
    iv.stderr_ = std::sqrt(fit.sigma2_hat * fit.gram_inverse(pos, pos));
    iv.constant = xi_const.value;
    iv.lower = iv.estimate - iv.stderr_ * xi_const.value;
    iv.upper = iv.estimate + iv.stderr_ * xi_const.value;
    cs.intervals.push_back(std::move(iv));
    return cs;
}

} // namespace posi::lm
