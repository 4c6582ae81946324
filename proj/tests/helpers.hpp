#pragma once

#include <Eigen/Dense>

#include "mixtau/models.hpp"
#include "mixtau/rng.hpp"

namespace mixtau::testhelp {

inline int sample_category(const Eigen::VectorXd& probs, double u) {
    double c = 0.0;
    for (int j = 0; j + 1 < probs.size(); ++j) {
        c += probs[j];
        if (u < c) return j + 1;
    }
    return static_cast<int>(probs.size());
}

/// Simulate a dataset from a discrete model with the given true parameters;
/// covariates are standard normal. Row i uses sub-stream (i).
inline Dataset simulate_discrete(const models::ModelSpec& spec, const models::Params& par, int n,
                                 int d, const RngStream& rng) {
    Dataset data;
    data.X.resize(n, d);
    data.y.resize(n);
    Eigen::VectorXd p(spec.J());
    for (int i = 0; i < n; ++i) {
        const RngStream row = rng.child(static_cast<std::uint64_t>(i));
        for (int k = 0; k < d; ++k) {
            RngStream cell = row.child(static_cast<std::uint64_t>(k));
            data.X(i, k) = cell.normal();
        }
        RngStream draw = row.child(static_cast<std::uint64_t>(d));
        models::detail::category_probs_eta(spec, par, d > 0 ? par.beta.dot(data.X.row(i)) : 0.0, p);
        data.y[i] = sample_category(p, draw.uniform01());
    }
    return data;
}

/// Simulate a linear-model dataset: y = beta[0] + x'beta[1:] + sigma * eps.
inline Dataset simulate_linear(const models::Params& par, int n, int d, const RngStream& rng) {
    Dataset data;
    data.X.resize(n, d);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const RngStream row = rng.child(static_cast<std::uint64_t>(i));
        for (int k = 0; k < d; ++k) {
            RngStream cell = row.child(static_cast<std::uint64_t>(k));
            data.X(i, k) = cell.normal();
        }
        RngStream eps = row.child(static_cast<std::uint64_t>(d));
        data.y[i] = par.beta[0] + par.beta.tail(d).dot(data.X.row(i)) + par.sigma * eps.normal();
    }
    return data;
}

}  // namespace mixtau::testhelp
