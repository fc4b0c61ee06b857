#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "posi/correlation.hpp"
#include "posi/errors.hpp"
#include "posi/math/rng.hpp"
#include "posi/math/special.hpp"

namespace posi {

// A computed critical value together with how it was obtained.
struct PosiConstant {
    enum class Method { MonteCarlo, ClosedForm, Bound };

    double value = 0.0;
    double alpha = 0.0;
    Method method = Method::MonteCarlo;
    double mc_std_error = 0.0;
    long long draws = 0;
    std::uint64_t seed = 0;

    static const char* method_name(Method m) {
        switch (m) {
            case Method::MonteCarlo: return "monte-carlo";
            case Method::ClosedForm: return "closed-form";
            case Method::Bound: return "bound";
        }
        return "?";
    }
};

namespace detail {

// Empirical 1-alpha quantile of max_j |(B eta)_j| over `draws` samples
// eta ~ N(0, I_r), where B is a k x r factor of the target covariance.
// Draws are generated in fixed-size chunks with per-chunk substreams, so the
// result does not depend on how the chunks are scheduled.
inline PosiConstant max_abs_gaussian_quantile(const Eigen::MatrixXd& factor, double alpha,
                                              long long draws, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw BadLevel("alpha must lie in (0,1)");
    if (draws < 1000) throw DomainError("at least 1000 Monte-Carlo draws are required");

    const Eigen::Index k = factor.rows();
    const Eigen::Index r = factor.cols();
    std::vector<double> maxima(static_cast<std::size_t>(draws));

    constexpr long long kChunk = 8192;
    constexpr Eigen::Index kBlock = 256;
    const long long nchunks = (draws + kChunk - 1) / kChunk;
    Eigen::MatrixXd eta(r, kBlock);
    Eigen::MatrixXd z(k, kBlock);
    for (long long c = 0; c < nchunks; ++c) {
        math::Rng rng(math::mix_seed(seed, static_cast<std::uint64_t>(c)));
        const long long begin = c * kChunk;
        const long long end = std::min(draws, begin + kChunk);
        for (long long b = begin; b < end; b += kBlock) {
            const Eigen::Index nb = static_cast<Eigen::Index>(std::min<long long>(kBlock, end - b));
            for (Eigen::Index j = 0; j < nb; ++j) {
                for (Eigen::Index i = 0; i < r; ++i) eta(i, j) = rng.normal();
            }
            if (r > 0) {
                z.leftCols(nb).noalias() = factor * eta.leftCols(nb);
                for (Eigen::Index j = 0; j < nb; ++j) {
                    maxima[static_cast<std::size_t>(b + j)] =
                        k > 0 ? z.col(j).cwiseAbs().maxCoeff() : 0.0;
                }
            } else {
                for (Eigen::Index j = 0; j < nb; ++j) maxima[static_cast<std::size_t>(b + j)] = 0.0;
            }
        }
    }

    std::sort(maxima.begin(), maxima.end());
    const double p = 1.0 - alpha;
    long long idx1 = static_cast<long long>(std::ceil(p * static_cast<double>(draws)));
    idx1 = std::clamp<long long>(idx1, 1, draws);
    const std::size_t i = static_cast<std::size_t>(idx1 - 1);

    // order-statistic spacing estimate of the quantile standard error
    const long long w = static_cast<long long>(std::ceil(std::sqrt(static_cast<double>(draws))));
    const std::size_t lo = static_cast<std::size_t>(std::max<long long>(0, idx1 - 1 - w));
    const std::size_t hi = static_cast<std::size_t>(std::min<long long>(draws - 1, idx1 - 1 + w));
    double se = 0.0;
    if (hi > lo) {
        se = std::sqrt(p * (1.0 - p) * static_cast<double>(draws)) * (maxima[hi] - maxima[lo]) /
             static_cast<double>(hi - lo);
    }

    PosiConstant out;
    out.value = maxima[i];
    out.alpha = alpha;
    out.method = PosiConstant::Method::MonteCarlo;
    out.mc_std_error = se;
    out.draws = draws;
    out.seed = seed;
    return out;
}

} // namespace detail

// Simultaneous Gaussian quantile: the 1-alpha quantile of ||Z||_inf for
// Z ~ N(0, corr), estimated by Monte Carlo.
inline PosiConstant k_quantile(const CorrelationMatrix& corr, double alpha, long long draws,
                               std::uint64_t seed) {
    return detail::max_abs_gaussian_quantile(corr.factor(), alpha, draws, seed);
}

// Same estimator fed with a precomputed k x r factor whose rows span the
// standardized coordinates (row norms 1, or 0 for degenerate coordinates).
inline PosiConstant k_quantile_factor(const Eigen::MatrixXd& factor, double alpha, long long draws,
                                      std::uint64_t seed) {
    return detail::max_abs_gaussian_quantile(factor, alpha, draws, seed);
}

// Universal constant B_alpha(q, N): the smallest t > 0 such that
//   E_G[ min(1, N (1 - F_{Beta(1/2,(q-1)/2)}(t^2/G^2)) ) ] <= alpha,
// with G^2 ~ chi^2_q. The expectation is evaluated by fixed-node
// Gauss-Legendre quadrature after a probability-integral substitution, and
// the root is located by bisection; the result is deterministic.
inline PosiConstant b_alpha(long long q, long long big_n, double alpha, double tol = 1e-4,
                            int quad_nodes = 512) {
    if (q < 1 || big_n < 1) throw DomainError("b_alpha: q and N must be positive integers");
    if (!(alpha > 0.0 && alpha < 1.0)) throw BadLevel("alpha must lie in (0,1)");
    if (!(tol > 0.0)) throw DomainError("b_alpha: tol must be positive");

    PosiConstant out;
    out.alpha = alpha;
    out.mc_std_error = 0.0;

    if (q == 1) {
        // Beta(1/2, 0) is a point mass at 1, so the criterion reduces to
        // P(|Z| > t) <= alpha.
        out.value = math::norm_quantile(1.0 - alpha / 2.0);
        out.method = PosiConstant::Method::ClosedForm;
        return out;
    }

    std::vector<double> u, wts;
    math::gauss_legendre_01(quad_nodes, u, wts);
    std::vector<double> g2(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        g2[i] = math::chi2_quantile(static_cast<double>(q), u[i]);
    }

    const double a = 0.5;
    const double b = 0.5 * static_cast<double>(q - 1);
    const double nn = static_cast<double>(big_n);
    auto criterion = [&](double t) {
        const double t2 = t * t;
        double acc = 0.0;
        for (std::size_t i = 0; i < g2.size(); ++i) {
            const double x = t2 / g2[i];
            if (x >= 1.0) continue;
            const double tail = 1.0 - math::reg_inc_beta(a, b, x);
            acc += wts[i] * std::min(1.0, nn * tail);
        }
        return acc;
    };

    double lo = 0.0;
    double hi = 1.0;
    int expand = 0;
    while (criterion(hi) > alpha) {
        lo = hi;
        hi *= 2.0;
        if (++expand > 200) throw NoConvergence("b_alpha: failed to bracket the root");
    }
    int iters = 0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (criterion(mid) <= alpha) hi = mid; else lo = mid;
        if (++iters > 200) throw NoConvergence("b_alpha: bisection did not converge");
    }

    out.value = 0.5 * (lo + hi);
    out.method = PosiConstant::Method::Bound;
    return out;
}

// Rank-based upper bound B_alpha(rank(corr), k) >= K_{1-alpha}(corr).
inline PosiConstant upper_bound_k(const CorrelationMatrix& corr, double alpha) {
    PosiConstant out = b_alpha(corr.rank(), static_cast<long long>(corr.dim()), alpha);
    out.method = PosiConstant::Method::Bound;
    return out;
}

} // namespace posi
