#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mixtau/errors.hpp"

namespace mixtau::dist {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;

inline double norm_pdf(double z) {
    static const double inv_sqrt2pi = 0.39894228040143267794;
    return inv_sqrt2pi * std::exp(-0.5 * z * z);
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

/// Standard normal quantile, Wichura's algorithm AS 241 (PPND16).
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("norm_quantile requires p in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
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
    double r = (q < 0.0) ? p : 1.0 - p;
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

inline double logistic_cdf(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double logistic_pdf(double z) {
    const double e = std::exp(-std::abs(z));
    const double d = 1.0 + e;
    return e / (d * d);
}

inline double logistic_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("logistic_quantile requires p in (0,1)");
    return std::log(p) - std::log1p(-p);
}

// complementary log-log link: G(z) = 1 - exp(-exp(z)), the CDF of log E, E ~ Exp(1)
inline double cloglog_cdf(double z) { return -std::expm1(-std::exp(z)); }

inline double cloglog_pdf(double z) { return std::exp(z - std::exp(z)); }

inline double cloglog_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("cloglog_quantile requires p in (0,1)");
    return std::log(-std::log1p(-p));
}

// ---------------------------------------------------------------------------
// regularized incomplete gamma (series + continued fraction), for chi-square tails
// ---------------------------------------------------------------------------

namespace detail {

inline double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum;
    for (int k = 1; k < 500; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int k = 1; k < 500; ++k) {
        const double an = -k * (k - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// P(a, x) = lower regularized incomplete gamma.
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw DomainError("gamma_p requires x >= 0, a > 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_contfrac(a, x);
}

/// Upper tail P(chi^2_df > x).
inline double chisq_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    if (x < df + 1.0) return 1.0 - detail::gamma_p_series(0.5 * df, 0.5 * x);
    return detail::gamma_q_contfrac(0.5 * df, 0.5 * x);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov helpers
// ---------------------------------------------------------------------------

/// One-sample KS statistic against U(a, b); the sample is copied and sorted.
inline double ks_statistic_uniform(std::span<const double> sample, double a, double b) {
    if (sample.empty()) throw EmptyData("ks_statistic_uniform on empty sample");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = std::clamp((s[i] - a) / (b - a), 0.0, 1.0);
        d = std::max(d, std::max(f - i / n, (i + 1) / n - f));
    }
    return d;
}

/// Two-sample KS statistic, sup |F1 - F2| over the pooled sample.
inline double ks_statistic_two_sample(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw EmptyData("ks_statistic_two_sample on empty sample");
    std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= t) ++i;
        while (j < b.size() && b[j] <= t) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

/// Asymptotic KS critical value at level alpha for a one-sample test of size n.
inline double ks_critical_one_sample(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

/// Asymptotic KS critical value at level alpha for two samples of sizes n and m.
inline double ks_critical_two_sample(double alpha, std::size_t n, std::size_t m) {
    const double ne = static_cast<double>(n) * m / static_cast<double>(n + m);
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(ne);
}

}  // namespace mixtau::dist
