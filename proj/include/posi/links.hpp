#pragma once

#include <cmath>
#include <limits>

#include "posi/design.hpp"
#include "posi/errors.hpp"
#include "posi/math/special.hpp"

// Response functions h and the log-probability pieces phi1 = log h,
// phi2 = log(1-h) with first and second derivatives, for the four classical
// binary links. Probit quantities go through the scaled complementary error
// function (Mills-ratio form); cloglog/loglog quantities use expm1/log1p
// forms. Where a strictly-signed quantity underflows, it is clamped to the
// smallest representable magnitude so sign invariants survive in floating
// point.

namespace posi {

namespace link_detail {

inline constexpr double kTiny = std::numeric_limits<double>::denorm_min();

inline double clamp_pos(double v) { return v > 0.0 ? v : kTiny; }
inline double clamp_neg(double v) { return v < 0.0 ? v : -kTiny; }

// ---- logit ----
inline double logistic(double g) {
    if (g >= 0.0) return 1.0 / (1.0 + std::exp(-g));
    const double e = std::exp(g);
    return e / (1.0 + e);
}
inline double softplus(double g) { // log(1 + e^g)
    if (g > 30.0) return g + std::exp(-g);
    return std::log1p(std::exp(g));
}
inline double logit_var(double g) { // h(1-h)
    const double e = std::exp(-std::fabs(g));
    const double d = 1.0 + e;
    return e / (d * d);
}

// ---- cloglog building blocks, parametrized by t = e^gamma ----
// phi1 = log(1 - e^{-t}), phi1' (in gamma) = t/(e^t - 1),
// phi1'' (in gamma) = t (e^t - 1 - t e^t) / (e^t - 1)^2.
inline double cll_phi1(double t) {
    return std::log(-std::expm1(-t));
}
inline double cll_phi1_d(double t) {
    if (t < 1e-8) return 1.0 - 0.5 * t;
    if (t > 36.0) return clamp_pos(t * std::exp(-t));
    return t / std::expm1(t);
}
inline double cll_phi1_dd(double t) {
    if (t < 1e-6) return -0.5 * t * (1.0 - t / 3.0);
    if (t > 36.0) return clamp_neg(t * (1.0 - t) * std::exp(-t));
    const double em = std::expm1(t);
    return t * (em - t * (em + 1.0)) / (em * em);
}
// weight h_dot / (h (1-h)) = t / (1 - e^{-t})
inline double cll_weight(double t) {
    if (t < 1e-8) return 1.0 + 0.5 * t;
    return t / (-std::expm1(-t));
}

} // namespace link_detail

class LinkFunction {
public:
    explicit LinkFunction(Link id) : id_(id) {
        if (id == Link::none) throw ConfigError("binary regression requires a link function");
    }

    Link id() const { return id_; }

    double h(double g) const {
        switch (id_) {
            case Link::logit: return link_detail::logistic(g);
            case Link::probit: return math::norm_cdf(g);
            case Link::cloglog: return -std::expm1(-std::exp(g));
            case Link::loglog: return std::exp(-std::exp(-g));
            default: return 0.0;
        }
    }

    double h_dot(double g) const {
        using namespace link_detail;
        switch (id_) {
            case Link::logit: return clamp_pos(logit_var(g));
            case Link::probit: return clamp_pos(math::norm_pdf(g));
            case Link::cloglog: {
                const double t = std::exp(g);
                return clamp_pos(t * std::exp(-t));
            }
            case Link::loglog: {
                const double s = std::exp(-g);
                return clamp_pos(s * std::exp(-s));
            }
            default: return 0.0;
        }
    }

    double phi1(double g) const {
        using namespace link_detail;
        switch (id_) {
            case Link::logit: return -softplus(-g);
            case Link::probit: return math::norm_logcdf(g);
            case Link::cloglog: return cll_phi1(std::exp(g));
            case Link::loglog: return -std::exp(-g);
            default: return 0.0;
        }
    }

    double phi2(double g) const {
        using namespace link_detail;
        switch (id_) {
            case Link::logit: return -softplus(g);
            case Link::probit: return math::norm_logcdf(-g);
            case Link::cloglog: return -std::exp(g);
            case Link::loglog: return cll_phi1(std::exp(-g));
            default: return 0.0;
        }
    }

    double phi1_d(double g) const {
        using namespace link_detail;
        switch (id_) {
            case Link::logit: return clamp_pos(logistic(-g)); // 1 - h
            case Link::probit: return clamp_pos(math::inv_mills(g));
            case Link::cloglog: return clamp_pos(cll_phi1_d(std::exp(g)));
            case Link::loglog: return clamp_pos(std::exp(-g));
            default: return 0.0;
        }
    }

    double phi2_d(double g) const {
        using namespace link_detail;
        switch (id_) {
            case Link::logit: return clamp_neg(-logistic(g));
            case Link::probit: return clamp_neg(-math::inv_mills(-g));
            case Link::cloglog: return clamp_neg(-std::exp(g));
            case Link::loglog: return clamp_neg(-cll_phi1_d(std::exp(-g)));
            default: return 0.0;
        }
    }

    double phi1_dd(double g) const {
        using namespace link_detail;
        switch (id_) {
            case Link::logit: return clamp_neg(-logit_var(g));
            case Link::probit: {
                const double l = math::inv_mills(g);
                return clamp_neg(-l * (l + g));
            }
            case Link::cloglog: return cll_phi1_dd(std::exp(g));
            case Link::loglog: return clamp_neg(-std::exp(-g));
            default: return 0.0;
        }
    }

    double phi2_dd(double g) const {
        using namespace link_detail;
        switch (id_) {
            case Link::logit: return clamp_neg(-logit_var(g));
            case Link::probit: {
                const double l = math::inv_mills(-g);
                return clamp_neg(-l * (l - g));
            }
            case Link::cloglog: return clamp_neg(-std::exp(g));
            case Link::loglog: return cll_phi1_dd(std::exp(-g));
            default: return 0.0;
        }
    }

    // h_dot / (h(1-h)), the working-residual weight in the sandwich; exactly
    // 1 for the canonical (logit) link.
    double weight(double g) const {
        using namespace link_detail;
        switch (id_) {
            case Link::logit: return 1.0;
            case Link::probit: return math::inv_mills(g) + math::inv_mills(-g);
            case Link::cloglog: return cll_weight(std::exp(g));
            case Link::loglog: return cll_weight(std::exp(-g));
            default: return 0.0;
        }
    }

private:
    Link id_;
};

} // namespace posi
