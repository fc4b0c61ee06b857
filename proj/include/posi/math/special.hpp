#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "posi/errors.hpp"

// Scalar special functions shared by the critical-value and binary-regression
// code. Everything here is deterministic and thread-safe.

namespace posi::math {

inline constexpr double kSqrt2 = 1.4142135623730950488016887242097;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;

// Scaled complementary error function exp(z^2) erfc(z).
// For z >= 0 the direct product is fine until erfc underflows; beyond that we
// switch to the Laplace continued fraction. For z < 0 the reflection
// 2 exp(z^2) - erfcx(-z) may overflow to +inf, which callers treat as
// "erfc(z) ~ 2 up to full precision".
inline double erfcx(double z) {
    if (std::isnan(z)) return z;
    if (z < 0.0) {
        double e = std::exp(z * z);
        return 2.0 * e - erfcx(-z);
    }
    if (z < 12.0) {
        return std::exp(z * z) * std::erfc(z);
    }
    // erfcx(z) = 1/sqrt(pi) * 1/(z + 1/2/(z + 2/2/(z + 3/2/(z + ...))))
    double cf = 0.0;
    for (int k = 60; k >= 1; --k) {
        cf = 0.5 * k / (z + cf);
    }
    return (1.0 / std::sqrt(M_PI)) / (z + cf);
}

inline double norm_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / kSqrt2);
}

// log Phi(x), accurate in both tails (Mills-ratio form on the left).
inline double norm_logcdf(double x) {
    if (x > 0.0) {
        return std::log1p(-0.5 * std::erfc(x / kSqrt2));
    }
    double v = erfcx(-x / kSqrt2);
    if (std::isinf(v)) {
        // only reachable for x >> 0; keep symmetry with the branch above
        return std::log1p(-0.5 * std::erfc(x / kSqrt2));
    }
    return std::log(0.5 * v) - 0.5 * x * x;
}

// Inverse Mills ratio phi(x)/Phi(x); stays finite and monotone on the whole
// double range (→ -x as x → -inf, → 0 as x → +inf).
inline double inv_mills(double x) {
    if (x >= 0.0) {
        double cdf = norm_cdf(x); // >= 1/2
        return norm_pdf(x) / cdf;
    }
    double v = erfcx(-x / kSqrt2);
    return 2.0 * kInvSqrt2Pi / v;
}

// Wichura's AS 241 (PPND16): quantile of the standard normal distribution.
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw BadLevel("norm_quantile: p must lie in (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) return h;
    }
    throw NoConvergence("incomplete beta continued fraction did not converge");
}

// Regularized lower incomplete gamma P(a,x) by series (x < a+1).
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a,x) by continued fraction (x >= a+1).
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace detail

// Regularized incomplete beta I_x(a,b), absolute error <= 1e-10.
inline double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("reg_inc_beta: a,b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta: x must lie in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double lfront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(lfront);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::betacf(a, b, x) / a;
    }
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Regularized lower incomplete gamma P(a,x).
inline double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw DomainError("gamma_p: need a>0, x>=0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

// Inverse of P(a,.) via Wilson-Hilferty start and safeguarded Newton.
inline double gamma_p_inv(double a, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("gamma_p_inv: p must lie in (0,1)");
    double x;
    {
        const double z = norm_quantile(p);
        const double t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
        x = a * t * t * t;
        if (!(x > 0.0) || !std::isfinite(x)) x = a;
    }
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    const double lga = std::lgamma(a);
    for (int it = 0; it < 100; ++it) {
        const double f = gamma_p(a, x) - p;
        if (f > 0.0) hi = x; else lo = x;
        const double logpdf = -x + (a - 1.0) * std::log(x) - lga;
        double step = f / std::exp(logpdf);
        double xn = x - step;
        if (!(xn > lo) || !(xn < hi) || !std::isfinite(xn)) {
            xn = std::isfinite(hi) ? 0.5 * (lo + hi) : (lo > 0.0 ? 2.0 * lo : 1.0);
        }
        if (std::fabs(xn - x) <= 1e-14 * (1.0 + std::fabs(x))) { x = xn; break; }
        x = xn;
    }
    return x;
}

inline double chi2_cdf(double df, double x) { return gamma_p(0.5 * df, 0.5 * x); }

inline double chi2_quantile(double df, double p) { return 2.0 * gamma_p_inv(0.5 * df, p); }

// Gauss-Legendre nodes/weights on (0,1); nodes strictly inside the interval.
inline void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::fabs(z - z1) < 1e-15) break;
        }
        // map from (-1,1) to (0,1)
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        const double w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
}

} // namespace posi::math
