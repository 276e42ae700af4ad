#pragma once

// Student-t and Fisher F quantiles via the regularized incomplete beta
// function.  The forward direction uses the Lentz continued fraction; the
// inverse is a bisection-safeguarded Newton iteration driven to a forward
// residual below 1e-14, which keeps quantile round-trips well inside 1e-12.

#include <cmath>
#include <limits>

#include "nlreg/errors.hpp"

namespace nlreg {

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 400; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error("reg_inc_beta: a, b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw Error("reg_inc_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_cf(a, b, x) / a;
    return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Solve I_x(a, b) = p for x.  Newton on the forward function with the beta
// density as derivative, held inside a shrinking bisection bracket.
inline double inv_reg_inc_beta(double p, double a, double b) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("inv_reg_inc_beta: p must lie in [0, 1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    const double ln_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    double lo = 0.0, hi = 1.0;
    double x = a / (a + b);  // mean as a serviceable start
    for (int it = 0; it < 200; ++it) {
        const double f = reg_inc_beta(a, b, x) - p;
        if (f > 0.0) hi = x; else lo = x;
        if (std::abs(f) < 1e-15) break;
        const double ln_pdf = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - ln_beta;
        double step = f * std::exp(-ln_pdf);
        double xn = x - step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // fall back to bisection
        if (xn == x) break;
        x = xn;
    }
    return x;
}

// Upper-tail Student-t quantile: returns t with P(T > t) = upper_tail_prob
// for T ~ t(df).  upper_tail_prob below one half gives a positive t.
inline double t_quantile(double df, double upper_tail_prob) {
    if (!(df > 0.0)) throw Error("t_quantile: df must be positive");
    if (!(upper_tail_prob > 0.0 && upper_tail_prob < 1.0))
        throw Error("t_quantile: tail probability must lie in (0, 1)");
    if (upper_tail_prob == 0.5) return 0.0;
    if (upper_tail_prob > 0.5) return -t_quantile(df, 1.0 - upper_tail_prob);
    // For t >= 0: P(T > t) = I_{df/(df+t^2)}(df/2, 1/2) / 2.
    const double x = inv_reg_inc_beta(2.0 * upper_tail_prob, 0.5 * df, 0.5);
    return std::sqrt(df * (1.0 - x) / x);
}

// Lower-tail F quantile: returns f with P(F <= f) = prob for F ~ F(df1, df2).
inline double f_quantile(double prob, double df1, double df2) {
    if (!(df1 > 0.0 && df2 > 0.0)) throw Error("f_quantile: dfs must be positive");
    if (!(prob >= 0.0 && prob < 1.0)) throw Error("f_quantile: prob must lie in [0, 1)");
    if (prob == 0.0) return 0.0;
    // P(F <= f) = I_z(df1/2, df2/2) with z = df1 f / (df1 f + df2).
    const double z = inv_reg_inc_beta(prob, 0.5 * df1, 0.5 * df2);
    return df2 * z / (df1 * (1.0 - z));
}

}  // namespace nlreg
