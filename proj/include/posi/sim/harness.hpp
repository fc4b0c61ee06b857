#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "posi/binreg.hpp"
#include "posi/confidence.hpp"
#include "posi/constants.hpp"
#include "posi/design.hpp"
#include "posi/hetlm.hpp"
#include "posi/io.hpp"
#include "posi/lm.hpp"
#include "posi/math/rng.hpp"
#include "posi/selectors.hpp"
#include "posi/sim/scenario.hpp"

// Scenario-driven replication engine: data generators, the per-replication
// select/fit/cover loop, and tabular reporting. Replications use substreams
// keyed by replication index, so reports are byte-identical for any worker
// count.

namespace posi::sim {

inline Eigen::VectorXd gen_errors(ErrorDist dist, Eigen::Index n, double shape, math::Rng& rng) {
    Eigen::VectorXd u(n);
    switch (dist) {
        case ErrorDist::normal:
            for (Eigen::Index i = 0; i < n; ++i) u[i] = rng.normal();
            break;
        case ErrorDist::laplace:
            for (Eigen::Index i = 0; i < n; ++i) u[i] = rng.laplace(1.0 / std::sqrt(2.0));
            break;
        case ErrorDist::uniform:
            for (Eigen::Index i = 0; i < n; ++i) {
                u[i] = rng.uniform(-std::sqrt(3.0), std::sqrt(3.0));
            }
            break;
        case ErrorDist::skew_normal: {
            // standardized to mean 0, variance 1
            const double delta = shape / std::sqrt(1.0 + shape * shape);
            const double omega = 1.0 / std::sqrt(1.0 - 2.0 * delta * delta / M_PI);
            const double xi = -omega * delta * std::sqrt(2.0 / M_PI);
            for (Eigen::Index i = 0; i < n; ++i) {
                u[i] = xi + omega * rng.skew_normal(shape);
            }
            break;
        }
    }
    return u;
}

namespace detail {

inline Eigen::MatrixXd gen_design_values(DesignKind kind, Eigen::Index n, Eigen::Index p,
                                         double rho, double shape, math::Rng& rng) {
    Eigen::MatrixXd x(n, p);
    switch (kind) {
        case DesignKind::independent: {
            for (Eigen::Index j = 0; j < p; ++j) {
                double norm = 0.0;
                do {
                    const double which = rng.uniform();
                    if (which < 1.0 / 3.0) {
                        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.normal();
                    } else if (which < 2.0 / 3.0) {
                        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
                    } else {
                        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.skew_normal(shape);
                    }
                    norm = x.col(j).norm();
                } while (!(norm > 0.0));
                x.col(j) /= norm;
            }
            break;
        }
        case DesignKind::correlated: {
            Eigen::MatrixXd cov(p, p);
            for (Eigen::Index a = 0; a < p; ++a) {
                for (Eigen::Index b = 0; b < p; ++b) {
                    cov(a, b) = std::exp(-0.1 * std::fabs(static_cast<double>(a - b)));
                }
            }
            const Eigen::MatrixXd l = cov.llt().matrixL();
            Eigen::VectorXd z(p);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < p; ++j) z[j] = rng.normal();
                x.row(i) = (l * z).transpose();
            }
            for (Eigen::Index j = 0; j < p; ++j) {
                const double norm = x.col(j).norm();
                if (norm > 0.0) x.col(j) /= norm;
            }
            break;
        }
        case DesignKind::gaussian_rows: {
            // unit variances, constant off-diagonal covariance rho; columns
            // are not normalized in this recipe
            const double a = std::sqrt(std::max(rho, 0.0));
            const double b = std::sqrt(1.0 - std::max(rho, 0.0));
            for (Eigen::Index i = 0; i < n; ++i) {
                const double common = rng.normal();
                for (Eigen::Index j = 0; j < p; ++j) {
                    x(i, j) = a * common + b * rng.normal();
                }
            }
            break;
        }
    }
    return x;
}

} // namespace detail

inline DesignMatrix gen_design(const ScenarioConfig& c, math::Rng& rng) {
    return DesignMatrix(
        detail::gen_design_values(c.design, c.n, c.p, c.rho, c.skew_shape, rng));
}

// Generic interval assembly of Theorem-style CIs from the stacked pieces:
// interval j of model M is theta[rho(M)+j] +/- sqrt(var[rho(M)+j]) * constant.
inline std::vector<ConfidenceSet> assemble_generic_ci(const CandidateSet& candidates,
                                                      const Eigen::VectorXd& theta_hat,
                                                      const Eigen::VectorXd& variances,
                                                      const PosiConstant& constant,
                                                      ConstantKind kind = ConstantKind::posi_gamma) {
    if (theta_hat.size() != candidates.k() || variances.size() != candidates.k()) {
        throw DimensionMismatch("assemble_generic_ci: stacked dimension mismatch");
    }
    for (Eigen::Index i = 0; i < variances.size(); ++i) {
        if (!(variances[i] >= 0.0)) throw DomainError("assemble_generic_ci: negative variance");
    }
    std::vector<ConfidenceSet> out;
    out.reserve(static_cast<std::size_t>(candidates.d()));
    for (int s = 0; s < candidates.d(); ++s) {
        const auto& m = candidates.models()[static_cast<std::size_t>(s)];
        const int off = candidates.offsets()[static_cast<std::size_t>(s)];
        ConfidenceSet cs;
        cs.model = m;
        cs.level = 1.0 - constant.alpha;
        cs.constant_kind = kind;
        cs.constant = constant;
        for (int j = 0; j < m.size(); ++j) {
            Interval iv;
            iv.coef = j + 1;
            iv.name = "x" + std::to_string(m.indices[static_cast<std::size_t>(j)]);
            iv.estimate = theta_hat[off + j];
            iv.stderr_ = std::sqrt(variances[off + j]);
            iv.constant = constant.value;
            iv.lower = iv.estimate - iv.stderr_ * constant.value;
            iv.upper = iv.estimate + iv.stderr_ * constant.value;
            cs.intervals.push_back(std::move(iv));
        }
        out.push_back(std::move(cs));
    }
    return out;
}

struct ProcedureRow {
    std::string procedure;
    double coverage = 0.0;
    double median_len = 0.0;
    double q90_len = 0.0;
    double simultaneous = 0.0;
    long long nonexistent = 0;
    long long reps = 0;
};

struct SimulationReport {
    std::string scenario_id;
    std::uint64_t seed = 0;
    std::vector<ProcedureRow> rows;
    double wall_seconds = 0.0;
    io::json config_echo;
};

using CustomSelector = std::function<sel::SelectionResult(
    const DesignMatrix&, const Eigen::VectorXd&, const CandidateSet&)>;

namespace detail {

struct RepOutcome {
    bool skipped = true;
    bool focus_covered = false;
    bool all_covered = false;
    double focus_length = 0.0;
};

// lower nearest-rank quantile of a sorted vector
inline double nearest_rank(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const auto m = static_cast<long long>(sorted.size());
    long long rank = static_cast<long long>(std::ceil(q * static_cast<double>(m)));
    rank = std::clamp<long long>(rank, 1, m);
    return sorted[static_cast<std::size_t>(rank - 1)];
}

inline std::vector<std::string> procedure_names(const ScenarioConfig& c) {
    std::vector<std::string> names;
    if (c.family == sel::Family::lm) {
        if (c.selector.kind == sel::SelectorSpec::Kind::lar_steps ||
            c.selector.kind == sel::SelectorSpec::Kind::forward_stepwise) {
            for (int s = 1; s <= c.selector.k; ++s) {
                names.push_back("posi_step" + std::to_string(s));
            }
        } else {
            names.push_back("posi");
        }
        if (c.individual) names.push_back("posi_xi");
    } else {
        names.push_back("posi");
        if (c.naive) names.push_back("naive");
    }
    return names;
}

struct StepSelection {
    CandidateModel model;
    int focus = 1; // 1-based position within the model
};

// entry order -> per-step models and focus positions
inline std::vector<StepSelection> step_selections(const sel::SelectionResult& res) {
    std::vector<StepSelection> steps;
    std::vector<int> entered; // 1-based column indices in entry order
    for (const auto& tr : res.trace) {
        for (int idx : tr.first.indices) {
            if (std::find(entered.begin(), entered.end(), idx) == entered.end()) {
                entered.push_back(idx);
            }
        }
        StepSelection st;
        st.model = tr.first;
        st.focus = tr.first.position_of(entered.back()) + 1;
        steps.push_back(std::move(st));
    }
    return steps;
}

inline RepOutcome score_set(const ConfidenceSet& cs, const Eigen::VectorXd& target, int focus) {
    RepOutcome out;
    out.skipped = false;
    out.all_covered = true;
    for (std::size_t j = 0; j < cs.intervals.size(); ++j) {
        if (!cs.intervals[j].covers(target[static_cast<Eigen::Index>(j)])) {
            out.all_covered = false;
        }
    }
    const auto& fiv = cs.intervals[static_cast<std::size_t>(focus - 1)];
    out.focus_covered = fiv.covers(target[focus - 1]);
    out.focus_length = fiv.width();
    return out;
}

} // namespace detail

inline SimulationReport run_scenario(const ScenarioConfig& config, int threads = 1,
                                     const CustomSelector& custom_selector = {}) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const int max_size = config.candidates.max_size == 0 ? config.p : config.candidates.max_size;
    CandidateSet candidates = enumerate_subsets(config.p, config.candidates.min_size, max_size,
                                                config.candidates.forced);
    if (config.family == sel::Family::bin) {
        candidates = candidates.with_link(Link::logit);
    }

    const auto names = detail::procedure_names(config);
    const std::size_t nproc = names.size();
    std::vector<std::vector<detail::RepOutcome>> outcomes(
        nproc, std::vector<detail::RepOutcome>(static_cast<std::size_t>(config.reps)));

    // constants that do not depend on the replication
    PosiConstant bin_bound;
    PosiConstant naive_z;
    if (config.family == sel::Family::bin) {
        const long long k = candidates.k();
        const long long q = candidates.all_logit() ? std::min<long long>(k, config.p)
                                                   : std::min<long long>(k, config.n);
        bin_bound = b_alpha(q, k, config.alpha);
        naive_z.value = math::norm_quantile(1.0 - config.alpha / 2.0);
        naive_z.alpha = config.alpha;
        naive_z.method = PosiConstant::Method::ClosedForm;
    }

    const bool lm_steps = config.family == sel::Family::lm &&
                          (config.selector.kind == sel::SelectorSpec::Kind::lar_steps ||
                           config.selector.kind == sel::SelectorSpec::Kind::forward_stepwise);

    auto run_rep = [&](long long rep) {
        math::Rng rng(math::mix_seed(config.seed, static_cast<std::uint64_t>(rep)));
        const std::uint64_t const_seed =
            math::mix_seed(math::mix_seed(config.seed, static_cast<std::uint64_t>(rep)),
                           0xC0157A57u);

        // design (and the wider misspecified design when configured)
        Eigen::MatrixXd xbar;
        Eigen::MatrixXd xvals;
        if (config.misspec) {
            xbar = detail::gen_design_values(config.design, config.n, config.misspec->p_bar,
                                             config.rho, config.skew_shape, rng);
            xvals = xbar.leftCols(config.p);
        } else {
            xvals = detail::gen_design_values(config.design, config.n, config.p, config.rho,
                                              config.skew_shape, rng);
        }
        const DesignMatrix x(std::move(xvals));

        Eigen::VectorXd linpred(config.n);
        if (config.misspec) {
            const Eigen::Map<const Eigen::VectorXd> bb(config.misspec->beta_bar.data(),
                                                       config.misspec->p_bar);
            linpred = xbar * bb;
        } else {
            const Eigen::Map<const Eigen::VectorXd> b(config.beta.data(), config.p);
            linpred = x.values * b;
        }

        if (config.family == sel::Family::lm) {
            const Eigen::VectorXd u = gen_errors(config.error_dist, config.n, config.skew_shape, rng);
            const Eigen::VectorXd y = linpred + u;

            sel::SelectionResult selres;
            try {
                selres = custom_selector ? custom_selector(x, y, candidates)
                                         : sel::run_selector(config.selector, x, y, candidates);
            } catch (const Error&) {
                return; // all rows stay skipped
            }

            PosiConstant kconst;
            try {
                const Eigen::MatrixXd w = lm::gamma_corr_factor(x, candidates);
                kconst = k_quantile_factor(w, config.alpha, config.draws, const_seed);
            } catch (const Error&) {
                return;
            }

            std::vector<detail::StepSelection> steps;
            if (lm_steps) {
                steps = detail::step_selections(selres);
            } else {
                detail::StepSelection st;
                st.model = selres.selected;
                st.focus = selres.focus_coef.value_or(1);
                steps.push_back(std::move(st));
            }

            for (std::size_t s = 0; s < steps.size() && s < nproc; ++s) {
                try {
                    const auto& st = steps[s];
                    const Eigen::VectorXd target = lm::target_lm(x, st.model, linpred);
                    const ConfidenceSet cs =
                        lm::ci_lm(x, y, candidates, config.alpha, st.model, kconst);
                    outcomes[s][static_cast<std::size_t>(rep)] =
                        detail::score_set(cs, target, st.focus);
                } catch (const Error&) {
                    // row stays skipped
                }
            }

            if (config.individual) {
                try {
                    const auto& st = steps.back();
                    const PosiConstant xiconst = k_quantile_factor(
                        lm::xi_corr_factor(x, candidates), config.alpha, config.draws,
                        math::mix_seed(const_seed, 0x71u));
                    const Eigen::VectorXd target = lm::target_lm(x, st.model, linpred);
                    const ConfidenceSet cs =
                        lm::ci_individual(x, y, candidates, config.alpha, st.model, xiconst);
                    detail::RepOutcome out;
                    out.skipped = false;
                    const int pos = st.model.position_of(1);
                    out.focus_covered = cs.intervals[0].covers(target[pos]);
                    out.all_covered = out.focus_covered;
                    out.focus_length = cs.intervals[0].width();
                    outcomes[nproc - 1][static_cast<std::size_t>(rep)] = out;
                } catch (const Error&) {
                }
            }
        } else {
            // binary family: canonical-response truth
            const LinkFunction truth(Link::logit);
            Eigen::VectorXd pvec(config.n);
            Eigen::VectorXd y(config.n);
            for (int i = 0; i < config.n; ++i) {
                pvec[i] = truth.h(linpred[i]);
                y[i] = rng.bernoulli(pvec[i]) ? 1.0 : 0.0;
            }

            sel::SelectionResult selres;
            try {
                selres = custom_selector ? custom_selector(x, y, candidates)
                                         : sel::run_selector(config.selector, x, y, candidates);
            } catch (const Error&) {
                return;
            }
            CandidateModel selected = selres.selected;
            if (selected.link == Link::none) selected.link = Link::logit;
            if (candidates.find(selected) < 0) return;

            const LinkFunction link(selected.link);
            bin::BinFit fit;
            try {
                fit = bin::fit_mle(y, x, selected, link);
            } catch (const Error&) {
                return;
            }
            if (!fit.exists || !fit.converged) return;

            Eigen::VectorXd target;
            try {
                target = bin::pseudo_target(pvec, x, selected, link, config.tau);
            } catch (const Error&) {
                return;
            }

            const int focus = selres.focus_coef.value_or(1);
            try {
                const bin::BinSandwich sw = bin::sandwich_bin(fit, y, x);
                const ConfidenceSet cs = bin::detail::assemble_bin(
                    x, fit, sw.sigma2_diag, config.alpha, bin_bound, ConstantKind::bound);
                outcomes[0][static_cast<std::size_t>(rep)] = detail::score_set(cs, target, focus);
            } catch (const Error&) {
            }
            if (config.naive && nproc > 1) {
                try {
                    const bin::BinSandwich sbar = bin::model_based_variance(fit, x);
                    const ConfidenceSet cs = bin::detail::assemble_bin(
                        x, fit, sbar.sigma2_diag, config.alpha, naive_z, ConstantKind::naive);
                    outcomes[1][static_cast<std::size_t>(rep)] =
                        detail::score_set(cs, target, focus);
                } catch (const Error&) {
                }
            }
        }
    };

    const int nthreads = std::max(1, threads);
    if (nthreads == 1) {
        for (long long rep = 0; rep < config.reps; ++rep) run_rep(rep);
    } else {
        std::atomic<long long> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&]() {
                try {
                    for (;;) {
                        const long long rep = next.fetch_add(1);
                        if (rep >= config.reps) break;
                        run_rep(rep);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    SimulationReport report;
    report.scenario_id = config.id;
    report.seed = config.seed;
    report.config_echo = scenario_to_json(config);
    for (std::size_t s = 0; s < nproc; ++s) {
        ProcedureRow row;
        row.procedure = names[s];
        row.reps = config.reps;
        long long covered = 0, allcov = 0, skipped = 0;
        std::vector<double> lengths;
        for (const auto& o : outcomes[s]) {
            if (o.skipped) {
                ++skipped;
                continue;
            }
            covered += o.focus_covered ? 1 : 0;
            allcov += o.all_covered ? 1 : 0;
            lengths.push_back(o.focus_length);
        }
        std::sort(lengths.begin(), lengths.end());
        const long long denom = config.reps - skipped;
        row.nonexistent = skipped;
        row.coverage = denom > 0 ? static_cast<double>(covered) / static_cast<double>(denom) : 0.0;
        row.simultaneous =
            denom > 0 ? static_cast<double>(allcov) / static_cast<double>(denom) : 0.0;
        row.median_len = detail::nearest_rank(lengths, 0.5);
        row.q90_len = detail::nearest_rank(lengths, 0.9);
        report.rows.push_back(std::move(row));
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

inline std::string report_csv(const SimulationReport& report) {
    std::string out =
        "scenario_id,procedure,coverage,median_len,q90_len,simultaneous,nonexistent,reps,seed\n";
    char buf[256];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6g,%.6g,%.6f,%lld,%lld,%llu\n",
                      report.scenario_id.c_str(), r.procedure.c_str(), r.coverage, r.median_len,
                      r.q90_len, r.simultaneous, r.nonexistent, r.reps,
                      static_cast<unsigned long long>(report.seed));
        out += buf;
    }
    return out;
}

} // namespace posi::sim
