#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mixtau/dataset.hpp"
#include "mixtau/errors.hpp"
#include "mixtau/models.hpp"
#include "mixtau/rng.hpp"
#include "mixtau/surrogate.hpp"

namespace mixtau::assoc {

using models::FittedModel;
using models::ModelSpec;
using models::OutcomeKind;
using surrogate::ResidualMatrix;

namespace detail {

// merge-sort inversion count (strict b_i > b_j for i < j)
inline std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buf) {
    const std::size_t n = v.size();
    std::int64_t inv = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width, hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    inv += static_cast<std::int64_t>(mid - i);
                    buf[k++] = v[j++];
                } else {
                    buf[k++] = v[i++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
            std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                      buf.begin() + static_cast<std::ptrdiff_t>(hi),
                      v.begin() + static_cast<std::ptrdiff_t>(lo));
        }
    }
    return inv;
}

template <class Eq>
std::int64_t tied_pairs(const std::vector<double>& sorted_keys, Eq eq) {
    std::int64_t t = 0;
    std::size_t i = 0;
    while (i < sorted_keys.size()) {
        std::size_t j = i + 1;
        while (j < sorted_keys.size() && eq(sorted_keys[j - 1], sorted_keys[j])) ++j;
        const std::int64_t g = static_cast<std::int64_t>(j - i);
        t += g * (g - 1) / 2;
        i = j;
    }
    return t;
}

}  // namespace detail

/// Kendall's tau with the pair-sign convention: sum of sgn(a_i - a_j) sgn(b_i - b_j)
/// over i < j, divided by C(n, 2). Ties contribute zero; no tau-b rescaling. The
/// numerator is accumulated in exact integer arithmetic (Knight's O(n log n) method).
inline double kendall_tau(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw LengthMismatch("kendall_tau: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    const std::size_t n = a.size();
    if (n < 2) throw TooFewObservations("kendall_tau requires n >= 2");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
        return a[i] < a[j] || (a[i] == a[j] && b[i] < b[j]);
    });

    // tie corrections: n1 over a-groups, n3 over joint (a, b)-groups
    std::int64_t n1 = 0, n3 = 0;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i + 1;
            while (j < n && a[idx[j]] == a[idx[i]]) ++j;
            const std::int64_t g = static_cast<std::int64_t>(j - i);
            n1 += g * (g - 1) / 2;
            std::size_t k = i;
            while (k < j) {
                std::size_t l = k + 1;
                while (l < j && b[idx[l]] == b[idx[k]]) ++l;
                const std::int64_t h = static_cast<std::int64_t>(l - k);
                n3 += h * (h - 1) / 2;
                k = l;
            }
            i = j;
        }
    }

    std::vector<double> bs(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) bs[i] = b[idx[i]];
    const std::int64_t discordant = detail::count_inversions(bs, buf);  // bs ends up sorted

    const std::int64_t n2 = detail::tied_pairs(bs, [](double x, double y) { return x == y; });
    const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
    const std::int64_t numerator = (n0 - n1 - n2 + n3) - 2 * discordant;
    return static_cast<double>(numerator) / static_cast<double>(n0);
}

inline double kendall_tau(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return kendall_tau(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                       std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

enum class AssocKind { Marginal, Partial };

/// The T-measure estimate: the M-average of column-wise Kendall's tau between two
/// residual matrices.
struct AssocEstimate {
    double t_hat = 0.0;
    int M = 0;
    int n = 0;
    AssocKind kind = AssocKind::Partial;
    std::vector<double> per_column;
};

inline AssocEstimate t_measure(const ResidualMatrix& r1, const ResidualMatrix& r2) {
    if (r1.n() != r2.n() || r1.M != r2.M)
        throw ShapeMismatch("t_measure: residual matrices " + std::to_string(r1.n()) + "x" +
                            std::to_string(r1.M) + " vs " + std::to_string(r2.n()) + "x" +
                            std::to_string(r2.M));
    AssocEstimate est;
    est.M = r1.M;
    est.n = r1.n();
    est.per_column.resize(static_cast<std::size_t>(r1.M));
    for (int m = 0; m < r1.M; ++m) {
        const Eigen::VectorXd c1 = r1.values.col(m), c2 = r2.values.col(m);
        est.per_column[static_cast<std::size_t>(m)] = kendall_tau(c1, c2);
    }
    est.t_hat = std::accumulate(est.per_column.begin(), est.per_column.end(), 0.0) /
                static_cast<double>(est.M);
    return est;
}

/// Intercept-only model spec for an outcome kind. The family choice is immaterial
/// for discrete intercept-only fits (they all reduce to the observed frequencies);
/// cumulative logit is used.
inline ModelSpec marginal_spec(OutcomeKind kind, int J) {
    ModelSpec s;
    s.outcome = kind;
    switch (kind) {
        case OutcomeKind::Continuous: s.family = models::Family::Linear; break;
        case OutcomeKind::Binary:
            s.family = models::Family::BinaryGLM;
            s.n_categories = 2;
            break;
        case OutcomeKind::Ordinal:
            s.family = models::Family::CumulativeLink;
            s.n_categories = J;
            break;
    }
    s.link = models::Link::Logit;
    return s;
}

inline int infer_categories(const Eigen::VectorXd& y) {
    return static_cast<int>(y.maxCoeff());
}

/// Marginal T: intercept-only adjustment models, then t_measure (Proposition 1 path).
inline AssocEstimate marginal_t(const Eigen::VectorXd& y1, const Eigen::VectorXd& y2,
                                OutcomeKind kind1, OutcomeKind kind2, int M, const RngStream& rng) {
    if (y1.size() != y2.size()) throw LengthMismatch("marginal_t outcome lengths differ");
    Dataset d1{y1, Eigen::MatrixXd(y1.size(), 0)};
    Dataset d2{y2, Eigen::MatrixXd(y2.size(), 0)};
    const FittedModel m1 = models::fit(marginal_spec(kind1, infer_categories(y1)), d1);
    const FittedModel m2 = models::fit(marginal_spec(kind2, infer_categories(y2)), d2);
    const ResidualMatrix r1 = surrogate::residual_matrix(m1, d1, M, rng.child(0));
    const ResidualMatrix r2 = surrogate::residual_matrix(m2, d2, M, rng.child(1));
    AssocEstimate est = t_measure(r1, r2);
    est.kind = AssocKind::Marginal;
    return est;
}

/// Partial T: covariate-adjusted models for both outcomes, then t_measure.
inline AssocEstimate partial_t(const PairData& data, const ModelSpec& spec1, const ModelSpec& spec2,
                               int M, const RngStream& rng) {
    Dataset d1{data.y1, data.X};
    Dataset d2{data.y2, data.X};
    const FittedModel m1 = models::fit(spec1, d1);
    const FittedModel m2 = models::fit(spec2, d2);
    const ResidualMatrix r1 = surrogate::residual_matrix(m1, d1, M, rng.child(0));
    const ResidualMatrix r2 = surrogate::residual_matrix(m2, d2, M, rng.child(1));
    AssocEstimate est = t_measure(r1, r2);
    est.kind = AssocKind::Partial;
    return est;
}

/// Moderation effect: difference (and percentage change) between partial and
/// marginal association. pct_change is undefined when the marginal measure is
/// numerically zero.
struct ModerationResult {
    AssocEstimate t_partial;
    AssocEstimate t_marginal;
    double delta = 0.0;
    double pct_change = 0.0;
    bool defined = false;
};

inline ModerationResult moderation(const AssocEstimate& partial, const AssocEstimate& marginal) {
    if (partial.n != marginal.n) throw ShapeMismatch("moderation: estimates from different samples");
    ModerationResult r;
    r.t_partial = partial;
    r.t_marginal = marginal;
    r.delta = partial.t_hat - marginal.t_hat;
    r.defined = std::abs(marginal.t_hat) > 1e-8;
    r.pct_change = r.defined ? r.delta / marginal.t_hat * 100.0 : 0.0;
    return r;
}

}  // namespace mixtau::assoc
