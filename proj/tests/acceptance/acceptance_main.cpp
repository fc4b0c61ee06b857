#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "posi/binreg.hpp"
#include "posi/constants.hpp"
#include "posi/hetlm.hpp"
#include "posi/lm.hpp"
#include "posi/math/rng.hpp"
#include "posi/math/special.hpp"
#include "posi/selectors.hpp"
#include "posi/sim/harness.hpp"

// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are pinned here, not configurable.

namespace {

using namespace posi;

struct Check {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

DesignMatrix random_design(int n, int p, std::uint64_t seed) {
    math::Rng rng(seed);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    }
    return DesignMatrix(std::move(x));
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// --- criterion 1: closed-form constants ------------------------------------
Check criterion1() {
    Check c;
    const auto k1 = k_quantile(CorrelationMatrix::from_correlation(Eigen::MatrixXd::Identity(1, 1)),
                               0.10, 200000, 11);
    c.require(std::fabs(k1.value - 1.6449) <= 0.01,
              "k_quantile(I1) = " + fmt(k1.value) + " not within 0.01 of 1.6449");
    const auto k5 = k_quantile(CorrelationMatrix::from_correlation(Eigen::MatrixXd::Ones(5, 5)),
                               0.10, 200000, 11);
    c.require(std::fabs(k5.value - 1.6449) <= 0.01,
              "k_quantile(all-ones 5x5) = " + fmt(k5.value) + " not within 0.01 of 1.6449");
    const double z = math::norm_quantile(0.95);
    for (long long n : {1, 10, 100}) {
        const auto b = b_alpha(1, n, 0.10);
        c.require(b.value == z && b.method == PosiConstant::Method::ClosedForm,
                  "b_alpha(1," + std::to_string(n) + ",0.10) did not take the closed form");
    }
    c.note("K(I1)=" + fmt(k1.value) + " K(ones5)=" + fmt(k5.value) + " B(1,N)=" + fmt(z));
    return c;
}

// --- criterion 2: large-dimension asymptotics -------------------------------
Check criterion2() {
    Check c;
    const double target = std::sqrt(200.0 * (1.0 - std::pow(200.0, -2.0 / 199.0)));
    const auto b = b_alpha(200, 200, 0.05);
    const double rel = std::fabs(b.value - target) / target;
    c.require(rel < 0.05, "B_0.05(200,200) = " + fmt(b.value) + " deviates " + fmt(rel) +
                              " from " + fmt(target));
    c.note("B=" + fmt(b.value) + " target=" + fmt(target) + " rel=" + fmt(rel));
    return c;
}

// --- criterion 3: upper-bound dominance -------------------------------------
Check criterion3() {
    Check c;
    math::Rng rng(2027);
    int failures = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform() * 7.0); // 2..8
        Eigen::MatrixXd a(k, k + 2);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k + 2; ++j) a(i, j) = rng.normal();
        }
        const auto corr = CorrelationMatrix::from_covariance(a * a.transpose());
        const auto kq = k_quantile(corr, 0.10, 200000, 9000 + trial);
        const auto ub = upper_bound_k(corr, 0.10);
        if (!(ub.value >= kq.value - 3.0 * kq.mc_std_error)) ++failures;
    }
    c.require(failures == 0, std::to_string(failures) + "/50 dominance violations");
    c.note("0 violations over 50 random correlation matrices");
    return c;
}

// --- criterion 4: Table 1 desk replication ----------------------------------
Check criterion4() {
    Check c;
    const auto config = sim::preset("table1");
    const auto report = sim::run_scenario(config, 1); // single-threaded by design
    for (const auto& row : report.rows) {
        c.require(row.coverage >= 0.96,
                  row.procedure + " coverage " + fmt(row.coverage) + " < 0.96");
    }
    const auto& last = report.rows.back();
    c.require(last.simultaneous >= 0.91,
              "simultaneous coverage " + fmt(last.simultaneous) + " < 0.91");
    const double med1 = report.rows.front().median_len;
    c.require(med1 >= 5.9 && med1 <= 7.3,
              "step-1 median length " + fmt(med1) + " outside [5.9, 7.3]");
    c.note("cov=(" + fmt(report.rows[0].coverage) + "," + fmt(report.rows[1].coverage) + "," +
           fmt(report.rows[2].coverage) + ") simult=" + fmt(last.simultaneous) +
           " med1=" + fmt(med1));
    return c;
}

// --- criterion 5: Table 2 desk replication ----------------------------------
Check criterion5() {
    Check c;
    const auto zero = sim::run_scenario(sim::preset("table2-zero-nb20"), 1);
    const auto& zrow = zero.rows.front();
    c.require(zrow.coverage >= 0.84 && zrow.coverage <= 0.93,
              "zero/nb20 coverage " + fmt(zrow.coverage) + " outside [0.84, 0.93]");
    c.require(zrow.median_len >= 0.85 * 4.99 && zrow.median_len <= 1.15 * 4.99,
              "zero/nb20 median " + fmt(zrow.median_len) + " not within 15% of 4.99");

    const auto nz = sim::run_scenario(sim::preset("table2-nonzero-nb5"), 1);
    const auto& nrow = nz.rows.front();
    c.require(nrow.coverage >= 0.90, "nonzero/nb5 coverage " + fmt(nrow.coverage) + " < 0.90");
    c.require(nrow.median_len >= 0.85 * 4.94 && nrow.median_len <= 1.15 * 4.94,
              "nonzero/nb5 median " + fmt(nrow.median_len) + " not within 15% of 4.94");
    c.note("zero/nb20 cov=" + fmt(zrow.coverage) + " med=" + fmt(zrow.median_len) +
           "; nonzero/nb5 cov=" + fmt(nrow.coverage) + " med=" + fmt(nrow.median_len));
    return c;
}

// --- criterion 6: Table 3 orderings ------------------------------------------
Check criterion6() {
    Check c;
    const char* cells[3] = {"table3-zero-small", "table3-dense-small", "table3-dense-large"};
    for (int i = 0; i < 3; ++i) {
        const auto report = sim::run_scenario(sim::preset(cells[i]), 1);
        const auto& posi_row = report.rows[0];
        const auto& naive_row = report.rows[1];
        const long long used = posi_row.reps - posi_row.nonexistent;
        c.require(used >= 300, std::string(cells[i]) + " usable reps " + std::to_string(used) +
                                   " < 300");
        c.require(naive_row.coverage < posi_row.coverage,
                  std::string(cells[i]) + " naive " + fmt(naive_row.coverage) +
                      " not below POSI " + fmt(posi_row.coverage));
        if (i == 0) {
            c.require(posi_row.coverage >= 0.95, std::string(cells[i]) + " POSI coverage " +
                                                     fmt(posi_row.coverage) + " < 0.95");
        } else {
            c.require(posi_row.coverage >= 0.90, std::string(cells[i]) + " POSI coverage " +
                                                     fmt(posi_row.coverage) + " < 0.90");
        }
        c.note(std::string(cells[i]) + ": posi=" + fmt(posi_row.coverage) +
               " naive=" + fmt(naive_row.coverage) +
               " skipped=" + std::to_string(posi_row.nonexistent));
    }
    return c;
}

// --- criterion 7: variance-bias law ------------------------------------------
Check criterion7() {
    Check c;
    struct Case {
        int n;
        std::vector<int> model;
        double sigma;
        std::uint64_t seed;
    };
    const std::vector<Case> cases = {
        {15, {2, 3}, 0.7, 41}, {20, {1}, 1.0, 47}, {25, {1, 3, 4}, 1.5, 53}};
    for (const auto& cs : cases) {
        const DesignMatrix x = random_design(cs.n, 4, cs.seed);
        math::Rng rng(cs.seed + 1);
        Eigen::VectorXd mu(cs.n);
        for (int i = 0; i < cs.n; ++i) mu[i] = 0.9 * rng.normal();
        const CandidateModel m(cs.model);
        const double predicted = lm::sigma2_bias(x, m, mu, cs.sigma * cs.sigma);
        double acc = 0.0;
        const int reps = 100000;
        Eigen::VectorXd y(cs.n);
        for (int r = 0; r < reps; ++r) {
            for (int i = 0; i < cs.n; ++i) y[i] = mu[i] + cs.sigma * rng.normal();
            acc += lm::ols(x, m, y).sigma2_hat;
        }
        const double simulated = acc / reps;
        const double rel = std::fabs(simulated - predicted) / predicted;
        c.require(rel < 0.02, "case n=" + std::to_string(cs.n) + " relative gap " + fmt(rel));
        c.note("n=" + std::to_string(cs.n) + ": sim=" + fmt(simulated) +
               " formula=" + fmt(predicted));
    }
    return c;
}

// --- criterion 8: numerical-analysis properties -------------------------------
Check criterion8() {
    Check c;
    const std::vector<Link> links = {Link::logit, Link::probit, Link::cloglog, Link::loglog};

    // (a) score/Hessian vs central finite differences, 100 cases over 4 links
    math::Rng rng(60001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Link id = links[static_cast<std::size_t>(trial % 4)];
        const LinkFunction link(id);
        const DesignMatrix x = random_design(20, 3, 70000 + static_cast<std::uint64_t>(trial));
        Eigen::VectorXd y(20);
        for (int i = 0; i < 20; ++i) y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        Eigen::VectorXd beta(3);
        for (int j = 0; j < 3; ++j) beta[j] = 0.5 * rng.normal();
        const CandidateModel m({1, 2, 3});
        const Eigen::VectorXd s = bin::score(y, x, m, link, beta);
        const Eigen::MatrixXd h = bin::hessian(y, x, m, link, beta);
        const double eps = 1e-6;
        for (int j = 0; j < 3; ++j) {
            Eigen::VectorXd bp = beta, bm = beta;
            bp[j] += eps;
            bm[j] -= eps;
            const double fd =
                (bin::loglik(y, x, m, link, bp) - bin::loglik(y, x, m, link, bm)) / (2.0 * eps);
            worst = std::max(worst, std::fabs(fd - s[j]) / (1.0 + std::fabs(s[j])));
            const Eigen::VectorXd sfd =
                (bin::score(y, x, m, link, bp) - bin::score(y, x, m, link, bm)) / (2.0 * eps);
            for (int l = 0; l < 3; ++l) {
                worst = std::max(worst,
                                 std::fabs(sfd[l] + h(j, l)) / (1.0 + std::fabs(h(j, l))));
            }
        }
    }
    c.require(worst <= 1e-5, "finite-difference gap " + fmt(worst * 1e5) + "e-5 exceeds 1e-5");

    // (b) pseudo-target fixed point within 1e-6 when well specified
    double worst_fp = 0.0;
    for (Link id : links) {
        const LinkFunction link(id);
        const DesignMatrix x = random_design(30, 2, 81000 + static_cast<int>(id));
        const Eigen::Vector2d b0(0.6, -0.3);
        Eigen::VectorXd p(30);
        for (int i = 0; i < 30; ++i) p[i] = link.h(x.values.row(i).dot(b0));
        const Eigen::VectorXd t = bin::pseudo_target(p, x, CandidateModel({1, 2}), link, 1e-8);
        worst_fp = std::max(worst_fp, (t - b0).cwiseAbs().maxCoeff());
    }
    c.require(worst_fp <= 1e-6, "pseudo-target fixed-point gap exceeds 1e-6");

    // (c) Eicker sandwich equals the direct triple product to 1e-12 relative
    {
        const DesignMatrix x = random_design(30, 3, 90001);
        Eigen::VectorXd y(30);
        for (int i = 0; i < 30; ++i) y[i] = rng.normal() * (1.0 + 0.4 * std::fabs(x.values(i, 1)));
        const CandidateModel m({1, 2, 3});
        const auto fit = hetlm::eicker_sandwich(x, m, y);
        const Eigen::MatrixXd xm = submatrix(x, m);
        const Eigen::MatrixXd ginv = (xm.transpose() * xm).inverse();
        const Eigen::VectorXd u = y - xm * lm::least_squares(xm, y);
        const Eigen::MatrixXd direct =
            ginv * xm.transpose() * u.array().square().matrix().asDiagonal() * xm * ginv;
        const double rel = (fit.sandwich - direct).cwiseAbs().maxCoeff() /
                           direct.cwiseAbs().maxCoeff();
        c.require(rel <= 1e-12, "Eicker triple-product gap " + fmt(rel * 1e12) + "e-12");
    }

    // (d) canonical-link residual identity holds exactly
    {
        const LinkFunction logit(Link::logit);
        bool exact = true;
        for (double g = -30.0; g <= 30.0; g += 0.1) {
            if (logit.weight(g) != 1.0) exact = false;
            const double u1 = logit.weight(g) * (1.0 - logit.h(g));
            if (u1 != 1.0 - logit.h(g)) exact = false;
        }
        c.require(exact, "canonical residual identity is not exact");
    }
    return c;
}

// --- criterion 9: determinism and parallel invariance --------------------------
Check criterion9() {
    Check c;
    sim::ScenarioConfig lmc;
    lmc.id = "det-lm";
    lmc.n = 40;
    lmc.p = 3;
    lmc.reps = 80;
    lmc.design = sim::DesignKind::independent;
    lmc.family = sel::Family::lm;
    lmc.beta = {1.0, 0.0, 0.0};
    lmc.selector.kind = sel::SelectorSpec::Kind::lar_steps;
    lmc.selector.k = 2;
    lmc.alpha = 0.1;
    lmc.seed = 4242;
    lmc.draws = 5000;

    const std::string a = sim::report_csv(sim::run_scenario(lmc, 1));
    const std::string b = sim::report_csv(sim::run_scenario(lmc, 1));
    const std::string d = sim::report_csv(sim::run_scenario(lmc, 4));
    c.require(a == b, "identical seeds produced different lm reports");
    c.require(a == d, "worker count changed the lm report");

    sim::ScenarioConfig binc;
    binc.id = "det-bin";
    binc.n = 50;
    binc.p = 3;
    binc.reps = 80;
    binc.design = sim::DesignKind::gaussian_rows;
    binc.rho = 0.2;
    binc.family = sel::Family::bin;
    binc.beta = {1.0, 0.0, 0.0};
    binc.selector.kind = sel::SelectorSpec::Kind::lasso_logistic;
    binc.selector.lambda = 1.0;
    binc.alpha = 0.1;
    binc.seed = 999;

    const std::string ba = sim::report_csv(sim::run_scenario(binc, 1));
    const std::string bb = sim::report_csv(sim::run_scenario(binc, 3));
    c.require(ba == bb, "worker count changed the binary report");
    c.note("lm and binary reports byte-identical across reruns and worker counts");
    return c;
}

// --- stress: adversarial selector ---------------------------------------------
Check criterion10() {
    Check c;
    // hunt the (model, coefficient-1) pair with the largest t-statistic over
    // all candidates containing column 1
    sim::CustomSelector hunter = [](const DesignMatrix& x, const Eigen::VectorXd& y,
                                    const CandidateSet& cands) {
        sel::SelectionResult res;
        double best = -1.0;
        for (const auto& m : cands.models()) {
            const auto fit = lm::ols(x, m, y);
            const int pos = m.position_of(1);
            const double stat = std::fabs(fit.beta_hat[pos]) /
                                std::sqrt(fit.sigma2_hat * fit.gram_inverse(pos, pos));
            if (stat > best) {
                best = stat;
                res.selected = m;
                res.focus_coef = pos + 1;
            }
        }
        res.trace.emplace_back(res.selected, best);
        return res;
    };

    sim::ScenarioConfig c5;
    c5.id = "adversarial";
    c5.n = 100;
    c5.p = 5;
    c5.reps = 500;
    c5.design = sim::DesignKind::independent;
    c5.family = sel::Family::lm;
    c5.beta = {0.0, 0.0, 0.0, 0.0, 0.0};
    c5.selector.kind = sel::SelectorSpec::Kind::fixed; // unused: custom selector
    c5.selector.fixed_model = CandidateModel({1});
    c5.candidates.forced = {1};
    c5.alpha = 0.1;
    c5.seed = 51423;
    c5.draws = 100000;

    const auto report = sim::run_scenario(c5, 1, hunter);
    const double cov = report.rows.front().coverage;
    c.require(cov >= 1.0 - 0.1 - 0.03,
              "adversarial-selector coverage " + fmt(cov) + " < 0.87");
    c.note("coverage " + fmt(cov) + " under the hunt-the-largest-t selector");
    return c;
}

} // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        double budget_seconds;
        std::function<Check()> run;
    };
    const std::vector<Entry> entries = {
        {1, "constants closed forms", 5.0, criterion1},
        {2, "B asymptotics", 30.0, criterion2},
        {3, "upper-bound dominance", 120.0, criterion3},
        {4, "Table 1 desk replication", 600.0, criterion4},
        {5, "Table 2 desk replication", 600.0, criterion5},
        {6, "Table 3 orderings", 1200.0, criterion6},
        {7, "variance-bias law", 60.0, criterion7},
        {8, "numerical-analysis properties", 120.0, criterion8},
        {9, "determinism and parallel invariance", 300.0, criterion9},
        {10, "adversarial-selector stress", 600.0, criterion10},
    };

    bool all_pass = true;
    for (const auto& e : entries) {
        const auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = e.run();
        } catch (const std::exception& ex) {
            c.pass = false;
            c.detail = std::string("exception: ") + ex.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > e.budget_seconds) {
            c.pass = false;
            c.detail += (c.detail.empty() ? "" : "; ");
            c.detail += "runtime " + std::to_string(secs) + "s exceeds budget";
        }
        all_pass = all_pass && c.pass;
        std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", c.pass ? "PASS" : "FAIL", e.id,
                    e.name, secs, c.detail.empty() ? "" : " -- ", c.detail.c_str());
        std::fflush(stdout);
    }
    return all_pass ? 0 : 1;
}
