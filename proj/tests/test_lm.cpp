#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "posi/constants.hpp"
#include "posi/lm.hpp"
#include "posi/math/rng.hpp"
#include "posi/math/special.hpp"

using namespace posi;
using Catch::Approx;

namespace {

DesignMatrix random_design(int n, int p, std::uint64_t seed) {
    math::Rng rng(seed);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    }
    return DesignMatrix(std::move(x));
}

Eigen::VectorXd random_normal(int n, math::Rng& rng) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

} // namespace

TEST_CASE("ols on the intercept design") {
    const DesignMatrix x(Eigen::MatrixXd::Ones(4, 1));
    Eigen::VectorXd y(4);
    y << 1.0, 2.0, 3.0, 4.0;
    const auto fit = lm::ols(x, CandidateModel({1}), y);
    CHECK(fit.beta_hat[0] == Approx(2.5).epsilon(1e-14));
    CHECK(fit.sigma2_hat == Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(fit.gram_inverse(0, 0) == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("ols degenerate cases") {
    const DesignMatrix eye(Eigen::MatrixXd::Identity(3, 3));
    Eigen::VectorXd y(3);
    y << 1.0, -1.0, 0.5;
    // n = |M|: the estimator is trivially y but sigma^2 is undefined
    CHECK_THROWS_AS(lm::ols(eye, CandidateModel({1, 2, 3}), y), DegenerateDof);

    // y in the span: zero residuals and zero variance estimate
    const DesignMatrix x = random_design(10, 2, 3);
    const Eigen::VectorXd yy = x.values * Eigen::Vector2d(1.5, -2.0);
    const auto fit = lm::ols(x, CandidateModel({1, 2}), yy);
    CHECK(fit.residuals.norm() < 1e-10);
    CHECK(fit.sigma2_hat < 1e-20);
}

TEST_CASE("ols residual orthogonality and variance identity") {
    math::Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const DesignMatrix x = random_design(25, 4, 100 + trial);
        const Eigen::VectorXd y = random_normal(25, rng);
        const CandidateModel m({1, 3});
        const auto fit = lm::ols(x, m, y);
        const Eigen::MatrixXd xm = submatrix(x, m);
        const double scale = xm.norm() * fit.residuals.norm();
        CHECK((xm.transpose() * fit.residuals).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + scale));
        CHECK(fit.sigma2_hat ==
              Approx(fit.residuals.squaredNorm() / (25.0 - 2.0)).epsilon(1e-14));
    }
}

TEST_CASE("target_lm projection oracle") {
    const DesignMatrix x = random_design(20, 3, 11);
    // well-specified mean
    const Eigen::Vector2d b0(2.0, -1.0);
    const Eigen::VectorXd mu = submatrix(x, CandidateModel({1, 2})) * b0;
    const Eigen::VectorXd t = lm::target_lm(x, CandidateModel({1, 2}), mu);
    CHECK((t - b0).cwiseAbs().maxCoeff() < 1e-12);

    // orthogonal mean projects to zero
    const Eigen::MatrixXd xm = submatrix(x, CandidateModel({1, 2}));
    math::Rng rng77(77);
    Eigen::VectorXd ortho = random_normal(20, rng77);
    ortho -= xm * lm::least_squares(xm, ortho);
    const Eigen::VectorXd t0 = lm::target_lm(x, CandidateModel({1, 2}), ortho);
    CHECK(t0.cwiseAbs().maxCoeff() < 1e-10);

    // omitted-variable bias against the normal-equations oracle
    const Eigen::Vector3d full(1.0, 2.0, -3.0);
    const Eigen::VectorXd mu_full = x.values * full;
    const CandidateModel sub({1, 2});
    const Eigen::MatrixXd xs = submatrix(x, sub);
    const Eigen::VectorXd oracle =
        (xs.transpose() * xs).ldlt().solve(xs.transpose() * mu_full);
    CHECK((lm::target_lm(x, sub, mu_full) - oracle).cwiseAbs().maxCoeff() < 1e-10);

    // idempotence under refit
    const Eigen::VectorXd t1 = lm::target_lm(x, sub, mu_full);
    const Eigen::VectorXd t2 = lm::target_lm(x, sub, xs * t1);
    CHECK((t1 - t2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sigma2_bias formula") {
    const DesignMatrix x = random_design(20, 3, 13);
    const CandidateModel m({1, 2});
    const Eigen::MatrixXd xm = submatrix(x, m);

    // correct model: no bias
    const Eigen::VectorXd mu_in = xm * Eigen::Vector2d(1.0, 1.0);
    CHECK(lm::sigma2_bias(x, m, mu_in, 2.5) == Approx(2.5).epsilon(1e-10));

    // orthogonal mean with squared norm n - |M| and sigma = 1 gives 2
    math::Rng rng(7);
    Eigen::VectorXd ortho = random_normal(20, rng);
    ortho -= xm * lm::least_squares(xm, ortho);
    ortho *= std::sqrt(18.0) / ortho.norm();
    CHECK(lm::sigma2_bias(x, m, ortho, 1.0) == Approx(2.0).epsilon(1e-10));
}

TEST_CASE("sigma2_bias Monte-Carlo oracle") {
    const DesignMatrix x = random_design(15, 3, 41);
    const CandidateModel m({2, 3});
    math::Rng rng(43);
    const Eigen::VectorXd mu = 0.8 * random_normal(15, rng);
    const double sigma = 0.7;
    const double predicted = lm::sigma2_bias(x, m, mu, sigma * sigma);
    const int reps = 100000;
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) {
        const Eigen::VectorXd y = mu + sigma * random_normal(15, rng);
        acc += lm::ols(x, m, y).sigma2_hat;
    }
    const double simulated = acc / reps;
    CHECK(std::fabs(simulated - predicted) / predicted < 0.02);
}

TEST_CASE("gamma blocks: structure and single-model case") {
    const DesignMatrix x = random_design(30, 3, 19);
    const CandidateSet single(std::vector<CandidateModel>{CandidateModel({1, 2})});
    const auto gb = lm::gamma_blocks(x, single);
    const Eigen::MatrixXd xm = submatrix(x, CandidateModel({1, 2}));
    const Eigen::MatrixXd ginv = (xm.transpose() * xm).inverse();
    CHECK((gb.block(0, 0) - ginv).cwiseAbs().maxCoeff() < 1e-10);
    const auto corr_direct = CorrelationMatrix::from_covariance(ginv);
    CHECK((gb.corr.entries() - corr_direct.entries()).cwiseAbs().maxCoeff() < 1e-12);

    const CandidateSet cands = enumerate_subsets(3, 1, 3);
    const auto full = lm::gamma_blocks(x, cands);
    for (int s = 0; s < cands.d(); ++s) {
        for (int t = 0; t < cands.d(); ++t) {
            CHECK((full.block(s, t) - full.block(t, s).transpose()).cwiseAbs().maxCoeff() <
                  1e-10);
        }
    }
}

TEST_CASE("gamma blocks on orthogonal designs") {
    // orthogonal columns: cross blocks between disjoint subsets vanish
    Eigen::MatrixXd x(4, 2);
    x << 1, 0, 1, 0, 0, 1, 0, -1;
    const DesignMatrix d(std::move(x));
    const CandidateSet cands = enumerate_subsets(2, 1, 2);
    const auto gb = lm::gamma_blocks(d, cands);
    // models {1} and {2} are disjoint and the columns are orthogonal
    CHECK(gb.block(0, 1).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("gamma blocks match the stacked OLS covariance (Monte Carlo)") {
    const DesignMatrix x = random_design(25, 3, 53);
    // nested pair M1 = {1} subset of M2 = {1,2}
    const CandidateSet cands(
        std::vector<CandidateModel>{CandidateModel({1}), CandidateModel({1, 2})});
    const auto gb = lm::gamma_blocks(x, cands);

    math::Rng rng(57);
    const int reps = 100000;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
    const Eigen::MatrixXd x1 = submatrix(x, cands.models()[0]);
    const Eigen::MatrixXd x2 = submatrix(x, cands.models()[1]);
    const Eigen::MatrixXd h1 = (x1.transpose() * x1).inverse() * x1.transpose();
    const Eigen::MatrixXd h2 = (x2.transpose() * x2).inverse() * x2.transpose();
    for (int r = 0; r < reps; ++r) {
        const Eigen::VectorXd y = random_normal(25, rng); // mean 0, sigma = 1
        Eigen::Vector3d stacked;
        stacked.head(1) = h1 * y;
        stacked.tail(2) = h2 * y;
        mean += stacked;
        second += stacked * stacked.transpose();
    }
    mean /= reps;
    const Eigen::Matrix3d cov = second / reps - mean * mean.transpose();
    // sigma^2 = 1, so the blocks are the covariance directly; MC se of a
    // covariance entry is about sqrt(v_ii v_jj / reps)
    Eigen::Matrix3d expected;
    expected.block(0, 0, 1, 1) = gb.block(0, 0);
    expected.block(0, 1, 1, 2) = gb.block(0, 1);
    expected.block(1, 0, 2, 1) = gb.block(1, 0);
    expected.block(1, 1, 2, 2) = gb.block(1, 1);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double se =
                std::sqrt(expected(i, i) * expected(j, j) / static_cast<double>(reps)) +
                std::fabs(expected(i, j)) / std::sqrt(static_cast<double>(reps));
            CHECK(std::fabs(cov(i, j) - expected(i, j)) < 5.0 * se + 1e-6);
        }
    }
}

TEST_CASE("gamma_corr_factor reproduces corr(Gamma)") {
    const DesignMatrix x = random_design(40, 4, 61);
    const CandidateSet cands = enumerate_subsets(4, 1, 4);
    const auto gb = lm::gamma_blocks(x, cands);
    const Eigen::MatrixXd w = lm::gamma_corr_factor(x, cands);
    CHECK(w.rows() == cands.k());
    CHECK(w.cols() == 4);
    CHECK((w * w.transpose() - gb.corr.entries()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("corr(Gamma) is invariant to rescaling X") {
    const DesignMatrix x = random_design(30, 3, 67);
    const CandidateSet cands = enumerate_subsets(3, 1, 3);
    const auto base = lm::gamma_blocks(x, cands);
    const DesignMatrix x2(3.7 * x.values);
    const auto scaled = lm::gamma_blocks(x2, cands);
    CHECK((base.corr.entries() - scaled.corr.entries()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ci_lm width identity and the no-selection case") {
    const DesignMatrix x = random_design(20, 1, 71);
    math::Rng rng(73);
    const Eigen::VectorXd y = random_normal(20, rng);
    const CandidateSet single(std::vector<CandidateModel>{CandidateModel({1})});
    const auto gb = lm::gamma_blocks(x, single);
    CHECK(gb.corr.dim() == 1);
    const auto kconst = k_quantile(gb.corr, 0.1, 200000, 5);
    // k = 1: the POSI constant is the plain normal quantile up to MC error
    CHECK(kconst.value == Approx(math::norm_quantile(0.95)).margin(0.01));

    const auto cs = lm::ci_lm(x, y, single, 0.1, CandidateModel({1}), kconst);
    REQUIRE(cs.intervals.size() == 1);
    const auto& iv = cs.intervals[0];
    CHECK(iv.width() == Approx(2.0 * iv.stderr_ * kconst.value).epsilon(1e-12));
    CHECK(iv.lower <= iv.estimate);
    CHECK(iv.estimate <= iv.upper);

    CHECK_THROWS_AS(lm::ci_lm(x, y, single, 0.1, CandidateModel({2}), kconst),
                    ModelNotInCandidateSet);
}

TEST_CASE("ci_lm zero-variance response gives point intervals") {
    const DesignMatrix x = random_design(12, 2, 79);
    const Eigen::VectorXd y = submatrix(x, CandidateModel({1, 2})) * Eigen::Vector2d(1.0, 2.0);
    const CandidateSet cands = enumerate_subsets(2, 1, 2);
    const auto gb = lm::gamma_blocks(x, cands);
    const auto kconst = k_quantile(gb.corr, 0.1, 10000, 5);
    const auto cs = lm::ci_lm(x, y, cands, 0.1, CandidateModel({1, 2}), kconst);
    for (const auto& iv : cs.intervals) {
        CHECK(iv.width() < 1e-8);
        CHECK(iv.covers(iv.estimate));
    }
}

TEST_CASE("xi matrix entries equal the forced-coordinate gamma entries") {
    const DesignMatrix x = random_design(25, 3, 83);
    const CandidateSet cands = enumerate_subsets(3, 1, 3, {1});
    const auto gb = lm::gamma_blocks(x, cands);
    const auto xi = lm::xi_matrix(x, cands);
    // reconstruct the covariance scale: corr was built from the (1,1) entries
    Eigen::MatrixXd raw(cands.d(), cands.d());
    for (int s = 0; s < cands.d(); ++s) {
        const int ps = cands.models()[static_cast<std::size_t>(s)].position_of(1);
        for (int t = 0; t < cands.d(); ++t) {
            const int pt = cands.models()[static_cast<std::size_t>(t)].position_of(1);
            raw(s, t) = gb.block(s, t)(ps, pt);
        }
    }
    const auto expected = CorrelationMatrix::from_covariance(raw);
    CHECK((xi.entries() - expected.entries()).cwiseAbs().maxCoeff() < 1e-12);

    // factor path agrees
    const Eigen::MatrixXd w = lm::xi_corr_factor(x, cands);
    CHECK((w * w.transpose() - xi.entries()).cwiseAbs().maxCoeff() < 1e-9);

    // missing forced index
    const CandidateSet bad = enumerate_subsets(3, 1, 3);
    CHECK_THROWS_AS(lm::xi_matrix(x, bad), MissingForcedIndex);
}

TEST_CASE("individual constant is no larger than the simultaneous one") {
    const DesignMatrix x = random_design(40, 4, 89);
    const CandidateSet cands = enumerate_subsets(4, 1, 4, {1});
    const auto gb = lm::gamma_blocks(x, cands);
    const auto xi = lm::xi_matrix(x, cands);
    const auto kg = k_quantile(gb.corr, 0.1, 100000, 6);
    const auto kx = k_quantile(xi, 0.1, 100000, 6);
    CHECK(kx.value <= kg.value + 3.0 * kg.mc_std_error);

    // d = 1: the Xi constant is the plain normal quantile
    const CandidateSet one(std::vector<CandidateModel>{CandidateModel({1, 2})});
    const auto xi1 = lm::xi_matrix(x, one);
    CHECK(xi1.dim() == 1);
    const auto k1 = k_quantile(xi1, 0.1, 200000, 6);
    CHECK(k1.value == Approx(math::norm_quantile(0.95)).margin(0.01));
}

TEST_CASE("ci_lm coverage of the projection target (Monte Carlo)") {
    // n=20, p=3, full enumeration; forward-stepwise-like selector: the model
    // with the best RSS among all candidates of size 2
    const int n = 20;
    const DesignMatrix x = random_design(n, 3, 97);
    const CandidateSet cands = enumerate_subsets(3, 1, 3);
    const Eigen::Vector3d beta(1.0, -0.5, 0.0);
    const Eigen::VectorXd mu = x.values * beta;
    const auto gb = lm::gamma_blocks(x, cands);
    const auto kconst = k_quantile(gb.corr, 0.1, 100000, 7);

    math::Rng rng(101);
    const int reps = 2000;
    int covered = 0;
    int valid = 0;
    for (int r = 0; r < reps; ++r) {
        const Eigen::VectorXd y = mu + random_normal(n, rng);
        // pick the size-2 model with the smallest RSS (a data-driven selector)
        double best = std::numeric_limits<double>::infinity();
        CandidateModel selected({1});
        for (const auto& m : cands.models()) {
            if (m.size() != 2) continue;
            const Eigen::MatrixXd xm = submatrix(x, m);
            const double rss = (y - xm * lm::least_squares(xm, y)).squaredNorm();
            if (rss < best) {
                best = rss;
                selected = m;
            }
        }
        const Eigen::VectorXd target = lm::target_lm(x, selected, mu);
        const auto cs = lm::ci_lm(x, y, cands, 0.1, selected, kconst);
        ++valid;
        bool all = true;
        for (std::size_t j = 0; j < cs.intervals.size(); ++j) {
            if (!cs.intervals[j].covers(target[static_cast<Eigen::Index>(j)])) all = false;
        }
        covered += all ? 1 : 0;
    }
    const double coverage = static_cast<double>(covered) / valid;
    CHECK(coverage >= 0.90 - 0.02);
}
