#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mixtau/errors.hpp"

namespace mixtau::lowess {

struct Curve {
    Eigen::VectorXd x;  // sorted ascending
    Eigen::VectorXd fitted;
};

namespace detail {

inline double tricube(double u) {
    const double t = 1.0 - u * u * u;
    return t * t * t;
}

inline double bisquare(double u) {
    const double t = 1.0 - u * u;
    return t * t;
}

}  // namespace detail

/// Locally weighted scatterplot smoothing: local linear fits with tricube weights
/// over the frac-nearest neighbours, plus `iters` bisquare robustness passes.
/// The curve is evaluated at the sorted x values.
inline Curve fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double frac = 2.0 / 3.0,
                 int iters = 3) {
    if (x.size() != y.size()) throw LengthMismatch("lowess: x and y lengths differ");
    const int n = static_cast<int>(x.size());
    if (n < 5) throw TooFewObservations("lowess requires n >= 5");
    if (!(frac > 0.0 && frac <= 1.0)) throw ConfigError("lowess frac must lie in (0, 1]");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return x[i] < x[j]; });
    Eigen::VectorXd xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = x[order[static_cast<std::size_t>(i)]];
        ys[i] = y[order[static_cast<std::size_t>(i)]];
    }

    const int window = std::max(2, static_cast<int>(std::ceil(frac * n)));
    Eigen::VectorXd fitted(n);
    Eigen::VectorXd robust = Eigen::VectorXd::Ones(n);

    for (int pass = 0; pass <= iters; ++pass) {
        for (int i = 0; i < n; ++i) {
            // nearest-neighbour window around xs[i]
            int lo = std::max(0, i - window + 1), hi = std::min(n - 1, i + window - 1);
            while (hi - lo + 1 > window) {
                if (xs[i] - xs[lo] > xs[hi] - xs[i])
                    ++lo;
                else
                    --hi;
            }
            const double dmax = std::max(xs[i] - xs[lo], xs[hi] - xs[i]);
            double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
            for (int k = lo; k <= hi; ++k) {
                const double dist = std::abs(xs[k] - xs[i]);
                double w = dmax > 0.0 ? detail::tricube(std::min(1.0, dist / dmax)) : 1.0;
                w *= robust[k];
                if (w <= 0.0) continue;
                sw += w;
                swx += w * xs[k];
                swy += w * ys[k];
                swxx += w * xs[k] * xs[k];
                swxy += w * xs[k] * ys[k];
            }
            if (sw <= 0.0) throw DegenerateWindow("all weights zero at x = " + std::to_string(xs[i]));
            const double det = sw * swxx - swx * swx;
            if (std::abs(det) > 1e-12 * std::max(1.0, sw * swxx)) {
                const double slope = (sw * swxy - swx * swy) / det;
                const double intercept = (swy - slope * swx) / sw;
                fitted[i] = intercept + slope * xs[i];
            } else {
                fitted[i] = swy / sw;  // x spread degenerate in the window: weighted mean
            }
        }
        if (pass == iters) break;
        // bisquare robustness weights from the residual MAD
        Eigen::VectorXd absres = (ys - fitted).cwiseAbs();
        std::vector<double> sorted(absres.data(), absres.data() + n);
        std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
        const double m1 = sorted[static_cast<std::size_t>(n / 2)];
        std::nth_element(sorted.begin(), sorted.begin() + (n - 1) / 2, sorted.end());
        const double mad6 = 3.0 * (m1 + sorted[static_cast<std::size_t>((n - 1) / 2)]);
        if (mad6 <= 0.0) {
            robust.setOnes();  // perfect fit, nothing to downweight
            continue;
        }
        for (int i = 0; i < n; ++i) {
            const double u = absres[i] / mad6;
            robust[i] = u >= 1.0 ? 0.0 : detail::bisquare(u);
        }
    }

    Curve c;
    c.x = std::move(xs);
    c.fitted = std::move(fitted);
    return c;
}

}  // namespace mixtau::lowess
