#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "posi/confidence.hpp"
#include "posi/design.hpp"
#include "posi/errors.hpp"
#include "posi/links.hpp"

// Quasi-maximum-likelihood binary regression: log-likelihood with score and
// Hessian, damped-Newton fitting with separation detection, the
// Kullback-Leibler pseudo-target oracle, the misspecification-robust
// sandwich, and the post-selection intervals with the canonical-link
// constant reduction.

namespace posi::bin {

struct LogLikEval {
    double value = 0.0;
    Eigen::VectorXd score;
    Eigen::MatrixXd hessian; // X'DX, the negative second derivative, PD
};

namespace detail {

// r may be a binary response or a vector of success probabilities: the
// expected log-likelihood has the same form with y replaced by p.
inline LogLikEval eval_loglik(const Eigen::VectorXd& r, const Eigen::MatrixXd& xm,
                              const LinkFunction& link, const Eigen::VectorXd& beta) {
    const Eigen::Index n = xm.rows();
    const Eigen::VectorXd gamma = xm * beta;
    LogLikEval out;
    Eigen::VectorXd c(n), d(n);
    double value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double g = gamma[i];
        const double ri = r[i];
        value += ri * link.phi1(g) + (1.0 - ri) * link.phi2(g);
        c[i] = ri * link.phi1_d(g) + (1.0 - ri) * link.phi2_d(g);
        d[i] = -(ri * link.phi1_dd(g) + (1.0 - ri) * link.phi2_dd(g));
    }
    out.value = value;
    out.score = xm.transpose() * c;
    out.hessian = xm.transpose() * d.asDiagonal() * xm;
    return out;
}

inline void check_binary(const Eigen::VectorXd& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) {
            throw NonBinaryResponse("response entries must be 0 or 1");
        }
    }
}

inline double operator_norm(const Eigen::MatrixXd& xm) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xm.transpose() * xm);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline void check_full_rank(const Eigen::MatrixXd& xm, const char* what) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xm);
    qr.setThreshold(1e-10);
    if (qr.rank() < xm.cols()) throw RankDeficient(what);
}

struct NewtonResult {
    Eigen::VectorXd beta;
    LogLikEval eval;
    bool converged = false;
    bool exists = true;
    int iterations = 0;
};

// Damped Newton ascent from beta = 0 on the strictly concave objective.
// Separation is flagged when the linear predictor runs away while the score
// has not met its tolerance.
inline NewtonResult newton_ascend(const Eigen::VectorXd& r, const Eigen::MatrixXd& xm,
                                  const LinkFunction& link, double tol, int max_iter,
                                  bool detect_separation) {
    NewtonResult res;
    res.beta = Eigen::VectorXd::Zero(xm.cols());
    const double score_tol = tol * (1.0 + operator_norm(xm));
    res.eval = eval_loglik(r, xm, link, res.beta);
    for (int it = 0; it < max_iter; ++it) {
        if (res.eval.score.norm() <= score_tol) {
            res.converged = true;
            res.iterations = it;
            return res;
        }
        if (detect_separation) {
            const double gmax = (xm * res.beta).cwiseAbs().maxCoeff();
            if (gmax > 30.0 || res.beta.norm() > 1e6) {
                res.exists = false;
                res.iterations = it;
                return res;
            }
        } else if (res.beta.norm() > 1e8) {
            throw NoConvergence("newton_ascend: iterates diverged");
        }
        Eigen::LLT<Eigen::MatrixXd> llt(res.eval.hessian);
        Eigen::VectorXd dir;
        if (llt.info() == Eigen::Success) {
            dir = llt.solve(res.eval.score);
        } else {
            Eigen::MatrixXd h = res.eval.hessian;
            h.diagonal().array() += 1e-10 * (1.0 + h.diagonal().maxCoeff());
            dir = h.llt().solve(res.eval.score);
        }
        double step = 1.0;
        LogLikEval next;
        bool improved = false;
        for (int half = 0; half < 60; ++half) {
            next = eval_loglik(r, xm, link, res.beta + step * dir);
            if (next.value > res.eval.value || (half > 0 && next.value == res.eval.value)) {
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            // stalled at numerical precision
            res.converged = res.eval.score.norm() <= score_tol;
            res.iterations = it + 1;
            return res;
        }
        res.beta += step * dir;
        res.eval = std::move(next);
        res.iterations = it + 1;
    }
    res.converged = res.eval.score.norm() <= score_tol;
    return res;
}

} // namespace detail

inline double loglik(const Eigen::VectorXd& y, const DesignMatrix& x, const CandidateModel& m,
                     const LinkFunction& link, const Eigen::VectorXd& beta) {
    detail::check_binary(y);
    return detail::eval_loglik(y, submatrix(x, m), link, beta).value;
}

inline Eigen::VectorXd score(const Eigen::VectorXd& y, const DesignMatrix& x,
                             const CandidateModel& m, const LinkFunction& link,
                             const Eigen::VectorXd& beta) {
    detail::check_binary(y);
    return detail::eval_loglik(y, submatrix(x, m), link, beta).score;
}

inline Eigen::MatrixXd hessian(const Eigen::VectorXd& y, const DesignMatrix& x,
                               const CandidateModel& m, const LinkFunction& link,
                               const Eigen::VectorXd& beta) {
    detail::check_binary(y);
    return detail::eval_loglik(y, submatrix(x, m), link, beta).hessian;
}

struct BinFit {
    CandidateModel model;
    Eigen::VectorXd beta_hat;
    bool converged = false;
    bool exists = true;
    double loglik = 0.0;
    Eigen::MatrixXd hessian_hat;
    int iterations = 0;
};

inline BinFit fit_mle(const Eigen::VectorXd& y, const DesignMatrix& x, const CandidateModel& m,
                      const LinkFunction& link, double tol = 1e-8, int max_iter = 100) {
    detail::check_binary(y);
    if (y.size() != x.n()) throw DimensionMismatch("response length does not match design");
    const Eigen::MatrixXd xm = submatrix(x, m);
    detail::check_full_rank(xm, "fit_mle: X[M] is rank deficient");
    const auto res = detail::newton_ascend(y, xm, link, tol, max_iter, true);
    BinFit fit;
    fit.model = m;
    fit.model.link = link.id();
    fit.beta_hat = res.beta;
    fit.converged = res.converged;
    fit.exists = res.exists;
    fit.loglik = res.eval.value;
    fit.hessian_hat = res.eval.hessian;
    fit.iterations = res.iterations;
    return fit;
}

// The unique maximizer of the expected log-likelihood under success
// probabilities p_vec: the simulation-side oracle for the model-specific
// pseudo-target.
inline Eigen::VectorXd pseudo_target(const Eigen::VectorXd& p_vec, const DesignMatrix& x,
                                     const CandidateModel& m, const LinkFunction& link,
                                     double tau = 0.01, double tol = 1e-10, int max_iter = 500) {
    if (p_vec.size() != x.n()) throw DimensionMismatch("probability vector length mismatch");
    for (Eigen::Index i = 0; i < p_vec.size(); ++i) {
        const double v = p_vec[i] * (1.0 - p_vec[i]);
        if (!(v >= tau)) {
            throw ProbOutOfRange("pseudo_target: success probability variance below tau");
        }
    }
    const Eigen::MatrixXd xm = submatrix(x, m);
    detail::check_full_rank(xm, "pseudo_target: X[M] is rank deficient");
    const auto res = detail::newton_ascend(p_vec, xm, link, tol, max_iter, false);
    if (!res.converged) throw NoConvergence("pseudo_target: Newton did not converge");
    return res.beta;
}

struct BinSandwich {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd sigma2_diag;
};

namespace detail {

inline BinSandwich sandwich_impl(const BinFit& fit, const Eigen::VectorXd& usq,
                                 const Eigen::MatrixXd& xm) {
    Eigen::LLT<Eigen::MatrixXd> llt(fit.hessian_hat);
    if (llt.info() != Eigen::Success) throw SingularHessian("sandwich: Hessian is singular");
    // A' A with A = diag(u) X[M] H^{-1} keeps the result PSD
    const Eigen::MatrixXd xh = llt.solve(xm.transpose()).transpose(); // X[M] H^{-1}
    const Eigen::MatrixXd a = usq.cwiseSqrt().asDiagonal() * xh;
    BinSandwich s;
    s.matrix = a.transpose() * a;
    s.sigma2_diag = s.matrix.diagonal();
    return s;
}

} // namespace detail

// Misspecification-robust sandwich H^{-1} X' diag(u^2) X H^{-1} with working
// residuals u_i = h_dot/(h(1-h)) (y_i - h); for the logit link u = y - h.
inline BinSandwich sandwich_bin(const BinFit& fit, const Eigen::VectorXd& y,
                                const DesignMatrix& x) {
    if (!fit.exists || !fit.converged) {
        throw MleNonexistent("sandwich_bin: fit did not converge or the MLE does not exist");
    }
    detail::check_binary(y);
    const LinkFunction link(fit.model.link);
    const Eigen::MatrixXd xm = submatrix(x, fit.model);
    const Eigen::VectorXd gamma = xm * fit.beta_hat;
    Eigen::VectorXd usq(gamma.size());
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
        const double u = link.weight(gamma[i]) * (y[i] - link.h(gamma[i]));
        usq[i] = u * u;
    }
    return detail::sandwich_impl(fit, usq, xm);
}

// Model-based variance: u^2 replaced by h(1-h) at the fitted values. For the
// canonical link this is the inverse Fisher information.
inline BinSandwich model_based_variance(const BinFit& fit, const DesignMatrix& x) {
    if (!fit.exists || !fit.converged) {
        throw MleNonexistent("model_based_variance: fit did not converge");
    }
    const LinkFunction link(fit.model.link);
    const Eigen::MatrixXd xm = submatrix(x, fit.model);
    const Eigen::VectorXd gamma = xm * fit.beta_hat;
    Eigen::VectorXd v(gamma.size());
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
        const double h = link.h(gamma[i]);
        v[i] = h * (1.0 - h);
    }
    return detail::sandwich_impl(fit, v, xm);
}

namespace detail {

inline ConfidenceSet assemble_bin(const DesignMatrix& x, const BinFit& fit,
                                  const Eigen::VectorXd& sigma2_diag, double alpha,
                                  const PosiConstant& constant, ConstantKind kind) {
    ConfidenceSet cs;
    cs.model = fit.model;
    cs.level = 1.0 - alpha;
    cs.constant_kind = kind;
    cs.constant = constant;
    for (int j = 0; j < fit.model.size(); ++j) {
        Interval iv;
        iv.coef = j + 1;
        iv.name = x.column_names[static_cast<std::size_t>(
            fit.model.indices[static_cast<std::size_t>(j)] - 1)];
        iv.estimate = fit.beta_hat[j];
        iv.stderr_ = std::sqrt(sigma2_diag[j]);
        iv.constant = constant.value;
        iv.lower = iv.estimate - iv.stderr_ * constant.value;
        iv.upper = iv.estimate + iv.stderr_ * constant.value;
        cs.intervals.push_back(std::move(iv));
    }
    return cs;
}

} // namespace detail

// POSI intervals with constant B_alpha(min(k,n), k), reduced to
// B_alpha(min(k,p), k) when every candidate uses the canonical (logit) link.
inline ConfidenceSet ci_bin(const DesignMatrix& x, const Eigen::VectorXd& y,
                            const CandidateSet& candidates, double alpha,
                            const CandidateModel& selected) {
    if (candidates.find(selected) < 0) {
        throw ModelNotInCandidateSet("ci_bin: " + selected.label());
    }
    const LinkFunction link(selected.link);
    const BinFit fit = fit_mle(y, x, selected, link);
    if (!fit.exists) throw MleNonexistent("ci_bin: the selected model's MLE does not exist");
    if (!fit.converged) throw NoConvergence("ci_bin: MLE fit did not converge");
    const BinSandwich s = sandwich_bin(fit, y, x);

    const long long k = candidates.k();
    const long long q = candidates.all_logit() ? std::min<long long>(k, x.p())
                                               : std::min<long long>(k, x.n());
    const PosiConstant bound = b_alpha(q, k, alpha);
    return detail::assemble_bin(x, fit, s.sigma2_diag, alpha, bound, ConstantKind::bound);
}

// Naive interval: normal quantile and the model-based plug-in variance,
// ignoring the selection step. Included as a comparator.
inline ConfidenceSet naive_ci_bin(const DesignMatrix& x, const Eigen::VectorXd& y,
                                  const CandidateSet& candidates, double alpha,
                                  const CandidateModel& selected) {
    if (candidates.find(selected) < 0) {
        throw ModelNotInCandidateSet("naive_ci_bin: " + selected.label());
    }
    const LinkFunction link(selected.link);
    const BinFit fit = fit_mle(y, x, selected, link);
    if (!fit.exists) throw MleNonexistent("naive_ci_bin: the selected model's MLE does not exist");
    if (!fit.converged) throw NoConvergence("naive_ci_bin: MLE fit did not converge");
    const BinSandwich s = model_based_variance(fit, x);

    PosiConstant z;
    z.value = math::norm_quantile(1.0 - alpha / 2.0);
    z.alpha = alpha;
    z.method = PosiConstant::Method::ClosedForm;
    return detail::assemble_bin(x, fit, s.sigma2_diag, alpha, z, ConstantKind::naive);
}

} // namespace posi::bin
