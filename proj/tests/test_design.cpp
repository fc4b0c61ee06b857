#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "posi/design.hpp"
#include "posi/math/rng.hpp"

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

} // namespace

TEST_CASE("candidate model validation") {
    CHECK_THROWS_AS(CandidateModel(std::vector<int>{}), DomainError);
    CHECK_THROWS_AS(CandidateModel({2, 1}), DomainError);
    CHECK_THROWS_AS(CandidateModel({1, 1}), DomainError);
    CHECK_THROWS_AS(CandidateModel({0, 1}), IndexOutOfRange);
    const CandidateModel m({1, 3, 7});
    CHECK(m.position_of(3) == 1);
    CHECK(m.contains(7));
    CHECK(!m.contains(2));
}

TEST_CASE("submatrix selects columns in index order") {
    const DesignMatrix x(Eigen::MatrixXd::Identity(3, 3));
    CHECK(submatrix(x, CandidateModel({2})) == Eigen::MatrixXd::Identity(3, 3).col(1));
    CHECK(submatrix(x, CandidateModel({1, 2, 3})) == x.values);

    const DesignMatrix r = random_design(4, 3, 17);
    const Eigen::MatrixXd sub = submatrix(r, CandidateModel({1, 3}));
    for (int i = 0; i < 4; ++i) {
        CHECK(sub(i, 0) == r.values(i, 0));
        CHECK(sub(i, 1) == r.values(i, 2));
    }
    CHECK_THROWS_AS(submatrix(r, CandidateModel({4})), IndexOutOfRange);
}

TEST_CASE("leverage_max on known designs") {
    // identity design: every row is a leverage-1 point
    const DesignMatrix eye(Eigen::MatrixXd::Identity(5, 5));
    CHECK(leverage_max(eye, CandidateModel({1, 2, 3, 4, 5})) == Approx(1.0).epsilon(1e-12));

    // balanced intercept: h_ii = 1/n
    const DesignMatrix ones(Eigen::MatrixXd::Ones(10, 1));
    CHECK(leverage_max(ones, CandidateModel({1})) == Approx(0.1).epsilon(1e-12));

    // random design vs the explicit hat matrix
    const DesignMatrix x = random_design(50, 3, 7);
    const Eigen::MatrixXd xm = x.values;
    const Eigen::MatrixXd h = xm * (xm.transpose() * xm).inverse() * xm.transpose();
    CHECK(leverage_max(x, CandidateModel({1, 2, 3})) ==
          Approx(h.diagonal().maxCoeff()).margin(1e-10));
}

TEST_CASE("leverage is invariant under right multiplication") {
    const DesignMatrix x = random_design(30, 3, 23);
    const double base = leverage_max(x, CandidateModel({1, 2, 3}));
    math::Rng rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd t(3, 3);
        do {
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) t(i, j) = rng.normal();
            }
        } while (std::fabs(t.determinant()) < 0.1);
        const DesignMatrix tx(x.values * t);
        CHECK(leverage_max(tx, CandidateModel({1, 2, 3})) == Approx(base).margin(1e-9));
    }
}

TEST_CASE("rank-deficient submatrix is detected") {
    Eigen::MatrixXd x(6, 2);
    x.col(0) = Eigen::VectorXd::Ones(6);
    x.col(1) = 2.0 * Eigen::VectorXd::Ones(6);
    const DesignMatrix d(std::move(x));
    CHECK_THROWS_AS(leverage_max(d, CandidateModel({1, 2})), RankDeficient);
}

TEST_CASE("condition_x2_report on orthonormal designs") {
    const DesignMatrix eye(Eigen::MatrixXd::Identity(4, 4));
    const CandidateSet cands = enumerate_subsets(4, 1, 4);
    const auto rep = condition_x2_report(eye, cands);
    CHECK(rep.rank == 4);
    CHECK(rep.eigen_ratio == Approx(1.0).epsilon(1e-10));
    CHECK(rep.n_max_leverage == Approx(4.0).epsilon(1e-10));

    const DesignMatrix x = random_design(100, 4, 5);
    const auto r2 = condition_x2_report(x, enumerate_subsets(4, 1, 4));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.values.transpose() * x.values);
    CHECK(r2.eigen_ratio ==
          Approx(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff()).epsilon(1e-8));
    CHECK(r2.rank == 4);
}

TEST_CASE("enumerate_subsets full enumeration") {
    const CandidateSet c = enumerate_subsets(2, 1, 2);
    REQUIRE(c.d() == 3);
    CHECK(c.models()[0].indices == std::vector<int>{1});
    CHECK(c.models()[1].indices == std::vector<int>{2});
    CHECK(c.models()[2].indices == std::vector<int>{1, 2});
    CHECK(c.k() == 4);
    CHECK(c.offsets() == std::vector<int>{0, 1, 2});
}

TEST_CASE("enumerate_subsets with forced indices") {
    const CandidateSet c = enumerate_subsets(3, 1, 3, {1});
    CHECK(c.d() == 4);
    for (const auto& m : c.models()) CHECK(m.contains(1));
}

TEST_CASE("enumerate_subsets combinatorial count") {
    const CandidateSet c = enumerate_subsets(5, 1, 5);
    CHECK(c.d() == 31);
    CHECK(c.k() == 80); // sum over m of m * C(5, m)
    // offsets strictly increasing, last offset + last size = k
    for (std::size_t i = 1; i < c.offsets().size(); ++i) {
        CHECK(c.offsets()[i] > c.offsets()[i - 1]);
    }
    CHECK(c.offsets().back() + c.models().back().size() == c.k());
}

TEST_CASE("enumerate_subsets caps") {
    CHECK_THROWS_AS(enumerate_subsets(25, 1, 25), TooLarge);
    CHECK_THROWS_AS(enumerate_subsets(21, 1, 21), TooLarge); // exceeds default 2^20 cap
    CHECK_NOTHROW(enumerate_subsets(21, 1, 21, {}, 1ull << 22));
    CHECK_THROWS_AS(enumerate_subsets(3, 2, 1), DomainError);
}

TEST_CASE("candidate set lookup and stacked offsets") {
    const CandidateSet c = enumerate_subsets(3, 1, 3);
    CHECK(c.find(CandidateModel({1, 3})) >= 0);
    CHECK(c.offset_of(CandidateModel({1, 3})) ==
          c.offsets()[static_cast<std::size_t>(c.find(CandidateModel({1, 3})))]);
    CHECK(c.find(CandidateModel({1, 2, 3}, Link::logit)) < 0); // link mismatch
    const CandidateSet lc = c.with_link(Link::logit);
    CHECK(lc.all_logit());
    CHECK(lc.find(CandidateModel({1, 2, 3}, Link::logit)) >= 0);
}
