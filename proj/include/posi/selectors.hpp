#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "posi/binreg.hpp"
#include "posi/design.hpp"
#include "posi/errors.hpp"
#include "posi/lm.hpp"

// Data-driven model selection procedures used by the simulation studies:
// least-angle-regression steps, greedy forward stepwise, L1-penalized
// logistic regression, penalized-likelihood ranking and "significance
// hunting". All tie-breaks are deterministic (smallest column index, earlier
// rank), so identical inputs give identical selections.

namespace posi::sel {

enum class Family { lm, bin };

inline const char* family_name(Family f) { return f == Family::lm ? "lm" : "bin"; }

inline Family family_from_name(const std::string& s) {
    if (s == "lm") return Family::lm;
    if (s == "bin") return Family::bin;
    throw ConfigError("unknown family: " + s);
}

struct SelectionResult {
    CandidateModel selected;
    std::optional<int> focus_coef; // 1-based position within `selected`
    std::vector<std::pair<CandidateModel, double>> trace;
};

namespace detail {

// entry order of the first k LAR variables (0-based column indices)
inline std::vector<int> lar_entry_order(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        int k) {
    const Eigen::Index p = x.cols();
    if (k < 1 || k > p) throw KTooLarge("lar: need 1 <= k <= p");
    std::vector<int> active;
    std::vector<bool> in_active(static_cast<std::size_t>(p), false);

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(x.rows());
    {
        const Eigen::VectorXd c = x.transpose() * y;
        int best = 0;
        for (Eigen::Index j = 1; j < p; ++j) {
            if (std::fabs(c[j]) > std::fabs(c[best])) best = static_cast<int>(j);
        }
        active.push_back(best);
        in_active[static_cast<std::size_t>(best)] = true;
    }

    while (static_cast<int>(active.size()) < k) {
        const Eigen::VectorXd c = x.transpose() * (y - mu);
        const int na = static_cast<int>(active.size());
        Eigen::MatrixXd xa(x.rows(), na);
        for (int a = 0; a < na; ++a) {
            const int j = active[static_cast<std::size_t>(a)];
            xa.col(a) = (c[j] >= 0.0 ? 1.0 : -1.0) * x.col(j);
        }
        double cmax = 0.0;
        for (int j : active) cmax = std::max(cmax, std::fabs(c[j]));

        const Eigen::MatrixXd g = xa.transpose() * xa;
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() != Eigen::Success) throw RankDeficient("lar: active set is rank deficient");
        const Eigen::VectorXd ginv1 = llt.solve(Eigen::VectorXd::Ones(na));
        const double denom = ginv1.sum();
        if (!(denom > 0.0)) throw RankDeficient("lar: degenerate equiangular direction");
        const double aa = 1.0 / std::sqrt(denom);
        const Eigen::VectorXd u = xa * (aa * ginv1);
        const Eigen::VectorXd a = x.transpose() * u;

        double best_gamma = std::numeric_limits<double>::infinity();
        int best_j = -1;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (in_active[static_cast<std::size_t>(j)]) continue;
            const double cand1 = (cmax - c[j]) / (aa - a[j]);
            const double cand2 = (cmax + c[j]) / (aa + a[j]);
            for (double v : {cand1, cand2}) {
                if (v > 1e-12 && v < best_gamma) {
                    best_gamma = v;
                    best_j = static_cast<int>(j);
                }
            }
        }
        if (best_j < 0) throw RankDeficient("lar: no admissible entry point");
        mu += best_gamma * u;
        active.push_back(best_j);
        in_active[static_cast<std::size_t>(best_j)] = true;
    }
    return active;
}

inline SelectionResult result_from_entry_order(const std::vector<int>& order0) {
    std::vector<int> idx;
    idx.reserve(order0.size());
    for (int j : order0) idx.push_back(j + 1);
    std::sort(idx.begin(), idx.end());
    CandidateModel model(idx);
    SelectionResult res;
    res.focus_coef = model.position_of(order0.back() + 1) + 1;
    res.selected = std::move(model);
    return res;
}

} // namespace detail

// k steps of plain least angle regression; the focus coefficient is the
// variable entered at the final step.
inline SelectionResult lar_steps(const DesignMatrix& x, const Eigen::VectorXd& y, int k) {
    const auto order = detail::lar_entry_order(x.values, y, k);
    SelectionResult res = detail::result_from_entry_order(order);
    std::vector<int> sofar;
    for (int j : order) {
        sofar.push_back(j + 1);
        std::vector<int> sorted = sofar;
        std::sort(sorted.begin(), sorted.end());
        res.trace.emplace_back(CandidateModel(sorted), 0.0);
    }
    return res;
}

// Greedy RSS-reduction forward selection of k variables; ties go to the
// smallest column index.
inline SelectionResult forward_stepwise(const DesignMatrix& x, const Eigen::VectorXd& y, int k) {
    const Eigen::Index p = x.p();
    if (k < 1 || k > p) throw KTooLarge("forward_stepwise: need 1 <= k <= p");
    std::vector<int> active0;
    std::vector<bool> in_active(static_cast<std::size_t>(p), false);
    SelectionResult res;
    for (int step = 0; step < k; ++step) {
        double best_rss = std::numeric_limits<double>::infinity();
        int best_j = -1;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (in_active[static_cast<std::size_t>(j)]) continue;
            Eigen::MatrixXd xa(x.n(), active0.size() + 1);
            for (std::size_t a = 0; a < active0.size(); ++a) {
                xa.col(static_cast<Eigen::Index>(a)) = x.values.col(active0[a]);
            }
            xa.col(static_cast<Eigen::Index>(active0.size())) = x.values.col(j);
            const Eigen::VectorXd beta = lm::least_squares(xa, y);
            const double rss = (y - xa * beta).squaredNorm();
            if (rss < best_rss - 1e-12 * (1.0 + best_rss)) {
                best_rss = rss;
                best_j = static_cast<int>(j);
            }
        }
        if (best_j < 0) throw RankDeficient("forward_stepwise: no admissible column");
        active0.push_back(best_j);
        in_active[static_cast<std::size_t>(best_j)] = true;
        std::vector<int> sorted;
        for (int a : active0) sorted.push_back(a + 1);
        std::sort(sorted.begin(), sorted.end());
        res.trace.emplace_back(CandidateModel(sorted), best_rss);
    }
    res.selected = res.trace.back().first;
    res.focus_coef = res.selected.position_of(active0.back() + 1) + 1;
    return res;
}

// L1-penalized logistic regression: maximize loglik - lambda ||beta||_1 by
// cyclic coordinate descent on the IRLS quadratic approximation. The selected
// model is the support; an empty support falls back to an intercept column
// when the design has one.
inline SelectionResult lasso_logistic(const DesignMatrix& x, const Eigen::VectorXd& y,
                                      double lambda) {
    bin::detail::check_binary(y);
    if (lambda < 0.0) throw DomainError("lasso_logistic: lambda must be nonnegative");
    const Eigen::Index n = x.n();
    const Eigen::Index p = x.p();
    const LinkFunction link(Link::logit);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(n);
    for (int outer = 0; outer < 200; ++outer) {
        Eigen::VectorXd w(n), z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double h = link.h(gamma[i]);
            const double wi = std::max(h * (1.0 - h), 1e-10);
            w[i] = wi;
            z[i] = gamma[i] + (y[i] - h) / wi;
        }
        Eigen::VectorXd nu(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            nu[j] = x.values.col(j).cwiseAbs2().dot(w);
        }
        Eigen::VectorXd b = beta;
        Eigen::VectorXd r = z - x.values * b; // working residual
        for (int inner = 0; inner < 1000; ++inner) {
            double max_change = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                const double old = b[j];
                const double rho = (x.values.col(j).array() * w.array() * r.array()).sum() +
                                   nu[j] * old;
                double bj = 0.0;
                if (rho > lambda) bj = (rho - lambda) / nu[j];
                else if (rho < -lambda) bj = (rho + lambda) / nu[j];
                if (bj != old) {
                    r -= (bj - old) * x.values.col(j);
                    b[j] = bj;
                    max_change = std::max(max_change, std::fabs(bj - old));
                }
            }
            if (max_change <= 1e-9) break;
        }
        const double outer_change = (b - beta).cwiseAbs().maxCoeff();
        beta = b;
        gamma = x.values * beta;
        if (outer_change <= 1e-7) break;
    }

    std::vector<int> support;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (beta[j] != 0.0) support.push_back(static_cast<int>(j) + 1);
    }
    SelectionResult res;
    if (support.empty()) {
        int intercept = -1;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double v = x.values(0, j);
            if (v != 0.0 && (x.values.col(j).array() == v).all()) {
                intercept = static_cast<int>(j) + 1;
                break;
            }
        }
        if (intercept < 0) {
            throw SelectionFailed("lasso_logistic: empty support and no intercept column");
        }
        support.push_back(intercept);
    }
    res.selected = CandidateModel(support);
    res.selected.link = Link::logit;
    res.focus_coef = 1;
    res.trace.emplace_back(res.selected, 0.0);
    return res;
}

struct RankedModel {
    int index = -1;      // position in the candidate set
    double value = 0.0;  // penalized log-likelihood
    bool ok = false;     // fit succeeded (binary: MLE exists & converged)
};

// Penalized log-likelihood ranking of all candidates (Gaussian profile
// log-likelihood for lm, quasi-log-likelihood for bin), penalty lambda |M|.
// Failed fits sort last; ties keep candidate-set order.
inline std::vector<RankedModel> penalized_loglik_rank(const DesignMatrix& x,
                                                      const Eigen::VectorXd& y,
                                                      const CandidateSet& candidates,
                                                      double lambda, Family family) {
    const double n = static_cast<double>(x.n());
    std::vector<RankedModel> ranked;
    ranked.reserve(static_cast<std::size_t>(candidates.d()));
    for (int i = 0; i < candidates.d(); ++i) {
        const auto& m = candidates.models()[static_cast<std::size_t>(i)];
        RankedModel rm;
        rm.index = i;
        try {
            if (family == Family::lm) {
                const Eigen::MatrixXd xm = submatrix(x, m);
                const Eigen::VectorXd beta = lm::least_squares(xm, y);
                const double rss = std::max((y - xm * beta).squaredNorm(), 1e-300);
                const double loglik = -0.5 * n * (std::log(2.0 * M_PI * rss / n) + 1.0);
                rm.value = loglik - lambda * m.size();
                rm.ok = true;
            } else {
                const LinkFunction link(m.link);
                const bin::BinFit fit = bin::fit_mle(y, x, m, link);
                if (fit.exists && fit.converged) {
                    rm.value = fit.loglik - lambda * m.size();
                    rm.ok = true;
                }
            }
        } catch (const Error&) {
            rm.ok = false;
        }
        ranked.push_back(rm);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const RankedModel& a, const RankedModel& b) {
        if (a.ok != b.ok) return a.ok;
        return a.value > b.value;
    });
    return ranked;
}

enum class VarianceRule { classical, model_based };

// Rank candidates by penalized log-likelihood, then return the (model,
// coefficient) pair with the largest t-type statistic among the top n_best
// models. Binary statistics use the model-based standard error.
inline SelectionResult significance_hunting(const DesignMatrix& x, const Eigen::VectorXd& y,
                                            const CandidateSet& candidates, int n_best,
                                            double lambda, Family family,
                                            std::optional<VarianceRule> variance_rule = {}) {
    if (n_best < 1) throw DomainError("significance_hunting: n_best must be positive");
    const VarianceRule rule = variance_rule.value_or(
        family == Family::lm ? VarianceRule::classical : VarianceRule::model_based);
    const auto ranked = penalized_loglik_rank(x, y, candidates, lambda, family);

    SelectionResult res;
    double best_stat = -1.0;
    int best_rank = -1;
    int best_coef = -1;
    int examined = 0;
    for (std::size_t r = 0; r < ranked.size() && examined < n_best; ++r) {
        const auto& rm = ranked[r];
        const auto& m = candidates.models()[static_cast<std::size_t>(rm.index)];
        if (!rm.ok) {
            res.trace.emplace_back(m, std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        ++examined;
        res.trace.emplace_back(m, rm.value);
        try {
            Eigen::VectorXd est, var;
            if (family == Family::lm) {
                const lm::LmFit fit = lm::ols(x, m, y);
                est = fit.beta_hat;
                var = (fit.sigma2_hat * fit.gram_inverse.diagonal()).eval();
            } else {
                const LinkFunction link(m.link);
                const bin::BinFit fit = bin::fit_mle(y, x, m, link);
                if (!fit.exists || !fit.converged) continue;
                est = fit.beta_hat;
                var = rule == VarianceRule::model_based
                          ? bin::model_based_variance(fit, x).sigma2_diag
                          : bin::sandwich_bin(fit, y, x).sigma2_diag;
            }
            for (int j = 0; j < m.size(); ++j) {
                if (!(var[j] > 0.0)) continue;
                const double stat = std::fabs(est[j]) / std::sqrt(var[j]);
                if (stat > best_stat) {
                    best_stat = stat;
                    best_rank = static_cast<int>(r);
                    best_coef = j;
                    res.selected = m;
                }
            }
        } catch (const Error&) {
            continue;
        }
    }
    if (best_rank < 0) throw AllModelsFailed("significance_hunting: no candidate model could be fit");
    res.focus_coef = best_coef + 1;
    return res;
}

// The penalized-likelihood winner on its own (the ranking sub-step exposed as
// a selector).
inline SelectionResult penalized_loglik_select(const DesignMatrix& x, const Eigen::VectorXd& y,
                                               const CandidateSet& candidates, double lambda,
                                               Family family) {
    const auto ranked = penalized_loglik_rank(x, y, candidates, lambda, family);
    if (ranked.empty() || !ranked.front().ok) {
        throw AllModelsFailed("penalized_loglik: no candidate model could be fit");
    }
    SelectionResult res;
    res.selected = candidates.models()[static_cast<std::size_t>(ranked.front().index)];
    res.focus_coef = 1;
    for (const auto& rm : ranked) {
        res.trace.emplace_back(candidates.models()[static_cast<std::size_t>(rm.index)], rm.value);
    }
    return res;
}

// Declarative selector description used in scenario configs.
struct SelectorSpec {
    enum class Kind {
        forward_stepwise,
        lar_steps,
        lasso_logistic,
        significance_hunting,
        penalized_loglik,
        fixed
    };
    Kind kind = Kind::fixed;
    int k = 1;              // forward_stepwise / lar_steps
    double lambda = 0.0;    // lasso / penalized ranks
    int n_best = 1;         // significance hunting
    Family family = Family::lm;
    CandidateModel fixed_model;

    static const char* kind_name(Kind k) {
        switch (k) {
            case Kind::forward_stepwise: return "forward_stepwise";
            case Kind::lar_steps: return "lar_steps";
            case Kind::lasso_logistic: return "lasso_logistic";
            case Kind::significance_hunting: return "significance_hunting";
            case Kind::penalized_loglik: return "penalized_loglik";
            case Kind::fixed: return "fixed";
        }
        return "?";
    }
};

inline SelectionResult run_selector(const SelectorSpec& spec, const DesignMatrix& x,
                                    const Eigen::VectorXd& y, const CandidateSet& candidates) {
    switch (spec.kind) {
        case SelectorSpec::Kind::forward_stepwise:
            return forward_stepwise(x, y, spec.k);
        case SelectorSpec::Kind::lar_steps:
            return lar_steps(x, y, spec.k);
        case SelectorSpec::Kind::lasso_logistic:
            return lasso_logistic(x, y, spec.lambda);
        case SelectorSpec::Kind::significance_hunting:
            return significance_hunting(x, y, candidates, spec.n_best, spec.lambda, spec.family);
        case SelectorSpec::Kind::penalized_loglik:
            return penalized_loglik_select(x, y, candidates, spec.lambda, spec.family);
        case SelectorSpec::Kind::fixed: {
            if (candidates.find(spec.fixed_model) < 0) {
                throw ModelNotInCandidateSet("fixed selector: " + spec.fixed_model.label());
            }
            SelectionResult res;
            res.selected = spec.fixed_model;
            res.focus_coef = 1;
            res.trace.emplace_back(res.selected, 0.0);
            return res;
        }
    }
    throw ConfigError("unknown selector kind");
}

} // namespace posi::sel
