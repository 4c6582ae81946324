#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "mixtau/dist.hpp"
#include "mixtau/errors.hpp"
#include "mixtau/models.hpp"
#include "mixtau/rng.hpp"

namespace mixtau::surrogate {

using models::FittedModel;

/// n x M matrix of unified residuals, one column per surrogate simulation.
struct ResidualMatrix {
    Eigen::MatrixXd values;
    int M = 0;
    std::string seed_lineage;

    int n() const { return static_cast<int>(values.rows()); }
    Eigen::VectorXd column(int m) const { return values.col(m); }
};

/// Draw S ~ U(F(y-; x), F(y; x)). A degenerate interval (continuous outcome)
/// returns its endpoint without consuming randomness.
inline double surrogate_draw(const FittedModel& m, double y,
                             const Eigen::Ref<const Eigen::VectorXd>& x, RngStream& rng) {
    const auto [lo, hi] = models::cdf_interval(m, y, x);
    if (lo == hi) return hi;
    return lo + (hi - lo) * rng.uniform01();
}

/// Unified residual R = S - E(S | x). Under Model (1), S | x is uniform on (0,1),
/// so the centering constant is exactly 1/2.
inline double residual(const FittedModel& m, double y, const Eigen::Ref<const Eigen::VectorXd>& x,
                       RngStream& rng) {
    return surrogate_draw(m, y, x, rng) - 0.5;
}

/// Residuals for a whole dataset, M surrogate columns. Entry (i, m) draws from the
/// RNG sub-stream (m, i), so results do not depend on evaluation order.
inline ResidualMatrix residual_matrix(const FittedModel& m, const Dataset& data, int M,
                                      const RngStream& rng) {
    if (M < 1) throw ConfigError("residual_matrix requires M >= 1");
    const int n = data.n();
    if (n == 0) throw EmptyData("residual_matrix on empty dataset");
    ResidualMatrix out;
    out.M = M;
    out.seed_lineage = rng.lineage();
    out.values.resize(n, M);
    if (m.spec.family == models::Family::Linear) {
        // degenerate intervals: all columns identical, no randomness consumed
        for (int i = 0; i < n; ++i) {
            RngStream none = rng;
            out.values(i, 0) = residual(m, data.y[i], data.X.row(i), none);
        }
        for (int c = 1; c < M; ++c) out.values.col(c) = out.values.col(0);
        return out;
    }
    for (int c = 0; c < M; ++c) {
        const RngStream col = rng.child(static_cast<std::uint64_t>(c));
        for (int i = 0; i < n; ++i) {
            RngStream cell = col.child(static_cast<std::uint64_t>(i));
            out.values(i, c) = residual(m, data.y[i], data.X.row(i), cell);
        }
    }
    return out;
}

/// Visualization transform h(c) = Phi^{-1}(c + 1/2), strictly increasing on (-1/2, 1/2).
inline double normalize(double r) {
    if (!(std::abs(r) < 0.5)) throw DomainError("normalize requires |r| < 1/2");
    return dist::norm_quantile(r + 0.5);
}

inline Eigen::VectorXd normalize(const Eigen::VectorXd& r) {
    Eigen::VectorXd out(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) out[i] = normalize(r[i]);
    return out;
}

/// Liu-Zhang latent-truncation residual for a cumulative link model: draw the link
/// error truncated to (alpha_{y-1} - x'beta, alpha_y - x'beta) by inverse CDF and
/// subtract the link distribution's (conditional-on-x) mean.
inline double lz_residual(const FittedModel& m, double y, const Eigen::Ref<const Eigen::VectorXd>& x,
                          RngStream& rng) {
    const auto fam = m.spec.family;
    if (fam != models::Family::CumulativeLink && fam != models::Family::BinaryGLM)
        throw ConfigError("lz_residual requires a cumulative link model");
    const int J = m.spec.J();
    const int code = static_cast<int>(y);
    if (y != code || code < 1 || code > J) throw OutOfSupport("ordinal code outside 1..J");
    const double eta = m.beta.size() > 0 ? m.beta.dot(x) : 0.0;
    const double glo = (code == 1) ? 0.0 : models::detail::link_cdf(m.spec.link, m.intercepts[code - 2] - eta);
    const double ghi = (code == J) ? 1.0 : models::detail::link_cdf(m.spec.link, m.intercepts[code - 1] - eta);
    const double u = glo + (ghi - glo) * rng.uniform01();
    return models::detail::link_quantile(m.spec.link, u) - models::detail::link_mean(m.spec.link);
}

/// G(R_LZ) - 1/2 for a whole dataset, matching the layout of residual_matrix.
inline ResidualMatrix lz_residual_matrix(const FittedModel& m, const Dataset& data, int M,
                                         const RngStream& rng) {
    if (M < 1) throw ConfigError("lz_residual_matrix requires M >= 1");
    const int n = data.n();
    if (n == 0) throw EmptyData("lz_residual_matrix on empty dataset");
    ResidualMatrix out;
    out.M = M;
    out.seed_lineage = rng.lineage();
    out.values.resize(n, M);
    for (int c = 0; c < M; ++c) {
        const RngStream col = rng.child(static_cast<std::uint64_t>(c));
        for (int i = 0; i < n; ++i) {
            RngStream cell = col.child(static_cast<std::uint64_t>(i));
            const double rlz = lz_residual(m, data.y[i], data.X.row(i), cell);
            out.values(i, c) = models::detail::link_cdf(m.spec.link, rlz) - 0.5;
        }
    }
    return out;
}

/// Two-sample KS statistic between unified residuals and transformed Liu-Zhang
/// residuals on the same data (independent RNG sub-streams).
inline double lz_equivalence_stat(const FittedModel& m, const Dataset& data, const RngStream& rng) {
    if (data.n() == 0) throw EmptyData("lz_equivalence_stat on empty dataset");
    const ResidualMatrix a = residual_matrix(m, data, 1, rng.child(0));
    const ResidualMatrix b = lz_residual_matrix(m, data, 1, rng.child(1));
    const Eigen::VectorXd va = a.values.col(0), vb = b.values.col(0);
    return dist::ks_statistic_two_sample({va.data(), static_cast<std::size_t>(va.size())},
                                         {vb.data(), static_cast<std::size_t>(vb.size())});
}

}  // namespace mixtau::surrogate
