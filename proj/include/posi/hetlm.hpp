#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "posi/confidence.hpp"
#include "posi/lm.hpp"

// Eicker (HC0) sandwich variance estimator per model and the post-selection
// intervals for heteroskedastic linear models, which use the universal bound
// constant B_alpha(min(k,p), k) because the stacked correlation matrix is not
// observable here.

namespace posi::hetlm {

struct EickerFit {
    CandidateModel model;
    Eigen::VectorXd beta_hat;
    Eigen::MatrixXd sandwich;   // (X'X)^{-1} X' diag(u^2) X (X'X)^{-1}
    Eigen::VectorXd sigma2_diag;
};

inline EickerFit eicker_sandwich(const DesignMatrix& x, const CandidateModel& m,
                                 const Eigen::VectorXd& y) {
    if (y.size() != x.n()) throw DimensionMismatch("response length does not match design");
    const Eigen::MatrixXd xm = submatrix(x, m);
    EickerFit fit;
    fit.model = m;
    fit.beta_hat = lm::least_squares(xm, y);
    const Eigen::VectorXd u = y - xm * fit.beta_hat;
    const Eigen::MatrixXd ginv =
        lm::detail::inverse_spd(xm.transpose() * xm, "eicker_sandwich: singular Gram matrix");
    // assembled as A'A with A = diag(u) X[M] (X[M]'X[M])^{-1} so the result is
    // symmetric PSD by construction
    const Eigen::MatrixXd a = u.asDiagonal() * (xm * ginv);
    fit.sandwich = a.transpose() * a;
    fit.sigma2_diag = fit.sandwich.diagonal();
    return fit;
}

inline ConfidenceSet ci_hlm(const DesignMatrix& x, const Eigen::VectorXd& y,
                            const CandidateSet& candidates, double alpha,
                            const CandidateModel& selected) {
    if (candidates.find(selected) < 0) {
        throw ModelNotInCandidateSet("ci_hlm: " + selected.label());
    }
    const EickerFit fit = eicker_sandwich(x, selected, y);
    const long long k = candidates.k();
    const PosiConstant bound =
        b_alpha(std::min<long long>(k, x.p()), k, alpha);

    ConfidenceSet cs;
    cs.model = fit.model;
    cs.level = 1.0 - alpha;
    cs.constant_kind = ConstantKind::bound;
    cs.constant = bound;
    for (int j = 0; j < selected.size(); ++j) {
        Interval iv;
        iv.coef = j + 1;
        iv.name = x.column_names[static_cast<std::size_t>(
            selected.indices[static_cast<std::size_t>(j)] - 1)];
        iv.estimate = fit.beta_hat[j];
        iv.stderr_ = std::sqrt(fit.sigma2_diag[j]);
        iv.constant = bound.value;
        iv.lower = iv.estimate - iv.stderr_ * bound.value;
        iv.upper = iv.estimate + iv.stderr_ * bound.value;
        cs.intervals.push_back(std::move(iv));
    }
    return cs;
}

} // namespace posi::hetlm
