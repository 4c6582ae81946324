#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixtau/assoc.hpp"
#include "mixtau/dataset.hpp"
#include "mixtau/errors.hpp"
#include "mixtau/models.hpp"
#include "mixtau/rng.hpp"

namespace mixtau::inference {

using assoc::AssocEstimate;
using models::ModelSpec;

struct BootstrapConfig {
    int B = 1000;              // bootstrap replicates
    int M = 30;                // surrogate simulations per estimate
    double alpha = 0.05;       // CI level complement
    std::uint64_t seed = 0;
    int max_refit_retries = 5;
};

/// Bootstrap distribution of an estimate: surviving replicates (in replicate-index
/// order), a sorted copy for quantile queries, and the count of dropped resamples.
struct BootstrapDistribution {
    std::vector<double> replicates;
    std::vector<double> sorted;
    int failures = 0;
    int B_requested = 0;
    std::string target;

    int B() const { return static_cast<int>(replicates.size()); }

    /// ECDF F*(t) = #{replicates <= t} / B.
    double ecdf(double t) const {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
        return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    }

    void finalize() {
        sorted = replicates;
        std::sort(sorted.begin(), sorted.end());
    }
};

namespace detail {

inline std::vector<int> resample_indices(int n, RngStream& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(n));
    return idx;
}

/// Runs one replicate body with retry-then-drop semantics. `body` receives the
/// per-attempt stream and must throw a mixtau::Error on a degenerate resample.
template <class Body>
std::optional<double> with_retries(const RngStream& rep_stream, int max_retries, Body&& body) {
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        try {
            return body(rep_stream.child(static_cast<std::uint64_t>(attempt)));
        } catch (const Error&) {
            continue;
        }
    }
    return std::nullopt;
}

template <class Replicate>
BootstrapDistribution run_bootstrap(const BootstrapConfig& cfg, const std::string& target,
                                    Replicate&& replicate) {
    BootstrapDistribution dist;
    dist.B_requested = cfg.B;
    dist.target = target;
    std::vector<std::optional<double>> slot(static_cast<std::size_t>(cfg.B));
    const RngStream root = RngStream::root(cfg.seed);
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < cfg.B; ++b)
        slot[static_cast<std::size_t>(b)] =
            with_retries(root.child(static_cast<std::uint64_t>(b)), cfg.max_refit_retries, replicate);
    for (const auto& s : slot) {
        if (s)
            dist.replicates.push_back(*s);
        else
            ++dist.failures;
    }
    if (dist.failures > 0.01 * cfg.B)
        throw TooManyFailures(std::to_string(dist.failures) + " of " + std::to_string(cfg.B) +
                              " resamples failed");
    dist.finalize();
    return dist;
}

}  // namespace detail

/// Percentile bootstrap of the T-measure (partial association): resample rows
/// jointly, refit both models, redraw surrogates, recompute T_M.
inline BootstrapDistribution bootstrap_t(const PairData& data, const ModelSpec& spec1,
                                         const ModelSpec& spec2, const BootstrapConfig& cfg) {
    data.validate();
    // fail fast if the full-sample fit is impossible
    assoc::partial_t(data, spec1, spec2, 1, RngStream::root(cfg.seed).child(~0ull));
    const int n = data.n();
    return detail::run_bootstrap(cfg, "partial T", [&](RngStream attempt) {
        RngStream ix = attempt.child(0);
        const PairData sample = data.rows(detail::resample_indices(n, ix));
        return assoc::partial_t(sample, spec1, spec2, cfg.M, attempt.child(1)).t_hat;
    });
}

/// Marginal-T bootstrap (no covariate adjustment).
inline BootstrapDistribution bootstrap_marginal_t(const PairData& data, models::OutcomeKind k1,
                                                  models::OutcomeKind k2, const BootstrapConfig& cfg) {
    data.validate();
    const int n = data.n();
    return detail::run_bootstrap(cfg, "marginal T", [&](RngStream attempt) {
        RngStream ix = attempt.child(0);
        const PairData sample = data.rows(detail::resample_indices(n, ix));
        return assoc::marginal_t(sample.y1, sample.y2, k1, k2, cfg.M, attempt.child(1)).t_hat;
    });
}

struct Summary {
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

/// Empirical quantile, inverse-ECDF with averaging at the discontinuities
/// (type-2): Q(p) = (x_(k) + x_(k+1))/2 when p*n lands on an integer k.
inline double empirical_quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    const double np = p * static_cast<double>(n);
    const auto k = static_cast<std::size_t>(std::ceil(np));
    if (k <= 0) return sorted.front();
    if (k >= n) return sorted.back();
    if (np == std::floor(np)) return 0.5 * (sorted[k - 1] + sorted[k]);
    return sorted[k - 1];
}

inline Summary summarize(const BootstrapDistribution& dist, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidAlpha("alpha must lie in (0, 1)");
    const int B = dist.B();
    if (B < 2) throw TooFewObservations("summarize requires at least 2 replicates");
    double mean = 0.0;
    for (double r : dist.replicates) mean += r;
    mean /= B;
    double ss = 0.0;
    for (double r : dist.replicates) ss += (r - mean) * (r - mean);
    Summary s;
    s.se = std::sqrt(ss / (B - 1));
    s.ci_lo = empirical_quantile(dist.sorted, alpha / 2.0);
    s.ci_hi = empirical_quantile(dist.sorted, 1.0 - alpha / 2.0);
    return s;
}

/// p-value for H0: T = 0, namely 2 min{F*(0), 1 - F*(0)}, clamped to [0, 1].
inline double p_value_simple(const BootstrapDistribution& dist) {
    if (dist.B() < 100) throw TooFewObservations("p_value_simple requires B >= 100");
    const double f0 = dist.ecdf(0.0);
    return std::clamp(2.0 * std::min(f0, 1.0 - f0), 0.0, 1.0);
}

/// p-value for the composite H0: |T| < delta, namely 2 min{F*(delta), F*(-delta)},
/// clamped to [0, 1]. At delta = 0 this is the formula's literal limit 2 F*(0),
/// which differs from p_value_simple when mass sits below zero.
inline double p_value_composite(const BootstrapDistribution& dist, double delta) {
    if (dist.B() < 100) throw TooFewObservations("p_value_composite requires B >= 100");
    if (delta < 0.0) throw ConfigError("composite threshold delta must be >= 0");
    return std::clamp(2.0 * std::min(dist.ecdf(delta), dist.ecdf(-delta)), 0.0, 1.0);
}

namespace detail {

inline double pct_change_replicate(const PairData& sample, const ModelSpec& spec1,
                                   const ModelSpec& spec2, int M, const RngStream& rng) {
    const AssocEstimate part = assoc::partial_t(sample, spec1, spec2, M, rng.child(0));
    const AssocEstimate marg =
        assoc::marginal_t(sample.y1, sample.y2, spec1.outcome, spec2.outcome, M, rng.child(1));
    if (std::abs(marg.t_hat) <= 1e-8)
        throw UndefinedModeration("marginal estimate numerically zero in resample");
    return (part.t_hat - marg.t_hat) / marg.t_hat * 100.0;
}

}  // namespace detail

/// Bootstrap the moderation percentage change: each replicate computes marginal and
/// partial T on the same resample. Replicates with a numerically zero marginal
/// estimate are dropped and counted.
inline BootstrapDistribution bootstrap_moderation(const PairData& data, const ModelSpec& spec1,
                                                  const ModelSpec& spec2, const BootstrapConfig& cfg) {
    data.validate();
    const int n = data.n();
    return detail::run_bootstrap(cfg, "moderation pct_change", [&](RngStream attempt) {
        RngStream ix = attempt.child(0);
        const PairData sample = data.rows(detail::resample_indices(n, ix));
        return detail::pct_change_replicate(sample, spec1, spec2, cfg.M, attempt.child(1));
    });
}

/// Two-sample variant for independent cohorts: bootstrap each cohort's pct_change
/// and difference the replicates pairwise (cohort2 - cohort1).
inline BootstrapDistribution bootstrap_moderation_diff(const PairData& cohort1, const PairData& cohort2,
                                                       const ModelSpec& spec1, const ModelSpec& spec2,
                                                       const BootstrapConfig& cfg) {
    BootstrapConfig c1 = cfg, c2 = cfg;
    c2.seed = mixtau::detail::mix64(cfg.seed ^ 0x636F686F72743232ull);  // independent stream for cohort 2
    const BootstrapDistribution d1 = bootstrap_moderation(cohort1, spec1, spec2, c1);
    const BootstrapDistribution d2 = bootstrap_moderation(cohort2, spec1, spec2, c2);
    BootstrapDistribution out;
    out.B_requested = cfg.B;
    out.failures = d1.failures + d2.failures;
    out.target = "cohort pct_change difference";
    const std::size_t k = std::min(d1.replicates.size(), d2.replicates.size());
    out.replicates.resize(k);
    for (std::size_t i = 0; i < k; ++i) out.replicates[i] = d2.replicates[i] - d1.replicates[i];
    out.finalize();
    return out;
}

}  // namespace mixtau::inference
