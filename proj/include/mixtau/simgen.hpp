#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mixtau/assoc.hpp"
#include "mixtau/dataset.hpp"
#include "mixtau/dist.hpp"
#include "mixtau/errors.hpp"
#include "mixtau/inference.hpp"
#include "mixtau/models.hpp"
#include "mixtau/rng.hpp"

namespace mixtau::simgen {

using models::ModelSpec;

/// A finite discrete distribution, sampled by inverse CDF.
struct DiscreteDist {
    std::string name;
    std::vector<double> values;
    std::vector<double> probs;

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
        return m;
    }

    double sample(RngStream& rng) const {
        const double u = rng.uniform01();
        double c = 0.0;
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            c += probs[i];
            if (u < c) return values[i];
        }
        return values.back();
    }
};

/// Synthetic well-being survey generator. Risk factors are independent draws from
/// the distributions below; anxiety (ordinal, J = 5) follows an adjacent-category
/// logit model in the risk factors; well-being is linear in anxiety dummies and the
/// risk factors with Gaussian noise. The coefficient defaults are calibrated so the
/// synthetic cohorts reproduce the qualitative moderation patterns of the survey
/// analysis (values documented in the README).
struct WellbeingScenario {
    int n = 1224;
    std::array<double, 4> beta_A{-2.180, -7.341, -15.526, -23.466};  // anxiety dummy effects, levels 2..5
    std::vector<DiscreteDist> covariate_gen = default_risk_factors();
    Eigen::VectorXd anxiety_slopes = make_vector({-0.225, 0.30, -0.30, -0.075, 0.015, -0.075});
    Eigen::VectorXd anxiety_intercepts = make_vector({-1.515, -0.91, 0.159, 1.365});
    double wellbeing_intercept = 70.0;
    Eigen::VectorXd wellbeing_slopes = make_vector({-4.4, 7.0, -5.6, -1.6, 0.4, -2.0});
    double sigma = 14.0;
    std::uint64_t seed = 0;

    static Eigen::VectorXd make_vector(std::initializer_list<double> v) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
        Eigen::Index i = 0;
        for (double x : v) out[i++] = x;
        return out;
    }

    static std::vector<DiscreteDist> default_risk_factors() {
        return {
            {"financial_strain", {1, 2, 3, 4, 5}, {0.30, 0.35, 0.18, 0.13, 0.04}},
            {"healthiness", {1, 2, 3, 4, 5}, {0.02, 0.06, 0.30, 0.47, 0.15}},
            {"loneliness", {1, 2, 3, 4, 5}, {0.28, 0.38, 0.18, 0.13, 0.03}},
            {"accommodation", {1, 2, 3}, {0.50, 0.30, 0.20}},
            {"age", {18, 19, 20, 21}, {0.45, 0.35, 0.12, 0.08}},
            {"gender", {0, 1}, {0.5, 0.5}},
        };
    }

    ModelSpec anxiety_spec() const {
        ModelSpec s;
        s.family = models::Family::AdjacentCategoryLogit;
        s.outcome = models::OutcomeKind::Ordinal;
        s.n_categories = 5;
        return s;
    }

    ModelSpec wellbeing_spec() const {
        ModelSpec s;
        s.family = models::Family::Linear;
        s.outcome = models::OutcomeKind::Continuous;
        return s;
    }
};

namespace detail {

inline int sample_category(const Eigen::VectorXd& probs, double u) {
    double c = 0.0;
    for (int j = 0; j + 1 < probs.size(); ++j) {
        c += probs[j];
        if (u < c) return j + 1;
    }
    return static_cast<int>(probs.size());
}

}  // namespace detail

/// Generate one synthetic well-being dataset: y1 = well-being (continuous),
/// y2 = anxiety (ordinal 1..5), X = risk factors. Row i draws only from sub-stream
/// (i), so a longer run extends a shorter one with the same seed.
inline PairData gen_wellbeing(const WellbeingScenario& sc, const RngStream& rng) {
    const int n = sc.n;
    const int d = static_cast<int>(sc.covariate_gen.size());
    PairData out;
    out.X.resize(n, d);
    out.y1.resize(n);
    out.y2.resize(n);
    models::Params anx;
    anx.intercepts = sc.anxiety_intercepts;
    anx.beta = sc.anxiety_slopes;
    const ModelSpec anx_spec = sc.anxiety_spec();
    Eigen::VectorXd p(anx_spec.J());
    for (int i = 0; i < n; ++i) {
        const RngStream row = rng.child(static_cast<std::uint64_t>(i));
        for (int k = 0; k < d; ++k) {
            RngStream cell = row.child(static_cast<std::uint64_t>(k));
            out.X(i, k) = sc.covariate_gen[static_cast<std::size_t>(k)].sample(cell);
        }
        RngStream acat = row.child(static_cast<std::uint64_t>(d));
        models::detail::category_probs_eta(anx_spec, anx, anx.beta.dot(out.X.row(i)), p);
        const int ya = detail::sample_category(p, acat.uniform01());
        out.y2[i] = ya;
        RngStream eps = row.child(static_cast<std::uint64_t>(d) + 1);
        double mu = sc.wellbeing_intercept + sc.wellbeing_slopes.dot(out.X.row(i));
        if (ya >= 2) mu += sc.beta_A[static_cast<std::size_t>(ya - 2)];
        out.y1[i] = mu + sc.sigma * eps.normal();
    }
    return out;
}

enum class EtaShape { LinearEta, QuadraticEta, ExponentialEta };

inline const char* shape_name(EtaShape s) {
    switch (s) {
        case EtaShape::LinearEta: return "linear";
        case EtaShape::QuadraticEta: return "quadratic";
        case EtaShape::ExponentialEta: return "exponential";
    }
    return "?";
}

/// The power-study generator: Y1 ordinal (J = 5) from an adjacent-category logit
/// model in X = (X1, X2), Y2 linear in the Y1 dummies and X with N(0, noise_sd^2)
/// errors. eta encodes the partial-association strength and shape.
struct PowerScenario {
    double lambda = 0.0;
    EtaShape shape = EtaShape::LinearEta;
    int n = 200;
    int reps = 1000;
    std::array<double, 4> alpha_cut{-3, -2, 0, 2};
    std::array<double, 2> beta1{-0.5, 1.5};
    std::array<double, 2> beta2{1, 1.5};
    double noise_sd = 1.0;
    std::uint64_t seed = 0;

    std::array<double, 5> eta() const {
        std::array<double, 5> e{};
        for (int j = 0; j < 5; ++j) {
            const double g = lambda * j;
            switch (shape) {
                case EtaShape::LinearEta: e[static_cast<std::size_t>(j)] = g; break;
                case EtaShape::QuadraticEta: e[static_cast<std::size_t>(j)] = g * g; break;
                case EtaShape::ExponentialEta: e[static_cast<std::size_t>(j)] = std::exp(g); break;
            }
        }
        return e;
    }

    ModelSpec y1_spec() const {
        ModelSpec s;
        s.family = models::Family::AdjacentCategoryLogit;
        s.outcome = models::OutcomeKind::Ordinal;
        s.n_categories = 5;
        return s;
    }

    ModelSpec y2_spec() const {
        ModelSpec s;
        s.family = models::Family::Linear;
        s.outcome = models::OutcomeKind::Continuous;
        return s;
    }
};

/// Generate one power-study dataset: y1 = ordinal outcome, y2 = continuous outcome.
inline PairData gen_power(const PowerScenario& sc, const RngStream& rng) {
    const int n = sc.n;
    PairData out;
    out.X.resize(n, 2);
    out.y1.resize(n);
    out.y2.resize(n);
    models::Params par;
    par.intercepts = Eigen::Map<const Eigen::Vector4d>(sc.alpha_cut.data());
    par.beta = Eigen::Map<const Eigen::Vector2d>(sc.beta1.data());
    const ModelSpec spec = sc.y1_spec();
    const std::array<double, 5> eta_j = sc.eta();
    Eigen::VectorXd p(5);
    for (int i = 0; i < n; ++i) {
        const RngStream row = rng.child(static_cast<std::uint64_t>(i));
        RngStream c0 = row.child(0), c1 = row.child(1), c2 = row.child(2), c3 = row.child(3);
        out.X(i, 0) = 2.0 * c0.normal();   // X1 ~ N(0, 2^2)
        out.X(i, 1) = c1.uniform01();      // X2 ~ U(0, 1)
        models::detail::category_probs_eta(spec, par, par.beta.dot(out.X.row(i)), p);
        const int y1 = detail::sample_category(p, c2.uniform01());
        out.y1[i] = y1;
        out.y2[i] = eta_j[static_cast<std::size_t>(y1 - 1)] + sc.beta2[0] * out.X(i, 0) +
                    sc.beta2[1] * out.X(i, 1) + sc.noise_sd * c3.normal();
    }
    return out;
}

// ---------------------------------------------------------------------------
// regression-coefficient baselines and the likelihood-ratio test
// ---------------------------------------------------------------------------

enum class CoefDirection { ContinuousAsResponse, OrdinalAsResponse };

namespace detail {

// dummy columns for the observed ordinal levels 2..J (level 1 is the baseline)
inline Eigen::MatrixXd dummy_columns(const Eigen::VectorXd& y_ord, int J, std::vector<int>* levels_out) {
    std::vector<int> present;
    std::vector<int> counts(static_cast<std::size_t>(J), 0);
    for (Eigen::Index i = 0; i < y_ord.size(); ++i) ++counts[static_cast<std::size_t>(y_ord[i]) - 1];
    for (int j = 2; j <= J; ++j)
        if (counts[static_cast<std::size_t>(j - 1)] > 0) present.push_back(j);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(y_ord.size(), static_cast<Eigen::Index>(present.size()));
    for (Eigen::Index i = 0; i < y_ord.size(); ++i)
        for (std::size_t k = 0; k < present.size(); ++k)
            if (static_cast<int>(y_ord[i]) == present[k]) D(i, static_cast<Eigen::Index>(k)) = 1.0;
    if (levels_out) *levels_out = present;
    return D;
}

inline Eigen::VectorXd ols(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
    return A.colPivHouseholderQr().solve(y);
}

inline Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

}  // namespace detail

/// The traditional regression-coefficient moderation baseline: fit the chosen
/// direction with and without the covariates and report the percentage change of
/// the outcome-pair coefficient(s); dummy coefficients are averaged.
/// PairData layout: y1 continuous, y2 ordinal.
inline double coef_change_baseline(const PairData& data, CoefDirection dir) {
    data.validate();
    const int n = data.n();
    const int J = assoc::infer_categories(data.y2);
    if (dir == CoefDirection::ContinuousAsResponse) {
        const Eigen::MatrixXd D = detail::dummy_columns(data.y2, J, nullptr);
        Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
        const Eigen::VectorXd b_marg = detail::ols(detail::hcat(ones, D), data.y1);
        const Eigen::VectorXd b_adj = detail::ols(detail::hcat(detail::hcat(ones, D), data.X), data.y1);
        double pct = 0.0;
        for (Eigen::Index k = 0; k < D.cols(); ++k)
            pct += (b_adj[1 + k] - b_marg[1 + k]) / b_marg[1 + k] * 100.0;
        return pct / static_cast<double>(D.cols());
    }
    ModelSpec spec;
    spec.family = models::Family::AdjacentCategoryLogit;
    spec.outcome = models::OutcomeKind::Ordinal;
    spec.n_categories = J;
    Eigen::MatrixXd yw(n, 1);
    yw.col(0) = data.y1;
    const models::FittedModel m_marg = models::fit(spec, Dataset{data.y2, yw});
    const models::FittedModel m_adj = models::fit(spec, Dataset{data.y2, detail::hcat(yw, data.X)});
    return (m_adj.beta[0] - m_marg.beta[0]) / m_marg.beta[0] * 100.0;
}

/// Gaussian-MLE likelihood ratio test of partial independence: Y2 ~ X against
/// Y2 ~ dummies(Y1) + X, chi-square with one degree of freedom per dummy.
inline double lrt_partial(const PairData& data) {
    data.validate();
    const int n = data.n();
    const int J = assoc::infer_categories(data.y1);
    std::vector<int> levels;
    const Eigen::MatrixXd D = detail::dummy_columns(data.y1, J, &levels);
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
    const Eigen::MatrixXd A0 = detail::hcat(ones, data.X);
    const Eigen::MatrixXd A1 = detail::hcat(detail::hcat(ones, D), data.X);
    const double rss0 = (data.y2 - A0 * detail::ols(A0, data.y2)).squaredNorm();
    const double rss1 = (data.y2 - A1 * detail::ols(A1, data.y2)).squaredNorm();
    const int df = static_cast<int>(D.cols());
    if (df == 0) return 1.0;
    const double stat = std::max(0.0, n * std::log(rss0 / rss1));  // 2 * delta loglik
    return dist::chisq_sf(stat, df);
}

// ---------------------------------------------------------------------------
// power study
// ---------------------------------------------------------------------------

struct PowerCell {
    std::string scenario_id;
    double lambda = 0.0;
    EtaShape shape = EtaShape::LinearEta;
    std::string method;
    double rejection_rate = 0.0;
    int reps = 0;
    std::uint64_t seed = 0;
};

/// Run the proposed bootstrap test and the LRT on identical datasets for every
/// scenario in the grid; rejection at the given level.
inline std::vector<PowerCell> run_power_study(const std::vector<PowerScenario>& grid,
                                              int bootstrap_B = 300, double level = 0.05) {
    std::vector<PowerCell> out;
    int cell_index = 0;
    for (const PowerScenario& sc : grid) {
        const RngStream root = RngStream::root(sc.seed).child(static_cast<std::uint64_t>(cell_index));
        std::vector<int> rej_prop(static_cast<std::size_t>(sc.reps), 0);
        std::vector<int> rej_lrt(static_cast<std::size_t>(sc.reps), 0);
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < sc.reps; ++r) {
            const RngStream rep = root.child(static_cast<std::uint64_t>(r));
            const PairData data = gen_power(sc, rep.child(0));
            rej_lrt[static_cast<std::size_t>(r)] = lrt_partial(data) < level ? 1 : 0;
            inference::BootstrapConfig cfg;
            cfg.B = bootstrap_B;
            cfg.M = 30;
            cfg.seed = rep.child(1).next_u64();
            try {
                const auto dist = inference::bootstrap_t(data, sc.y1_spec(), sc.y2_spec(), cfg);
                rej_prop[static_cast<std::size_t>(r)] =
                    inference::p_value_simple(dist) < level ? 1 : 0;
            } catch (const Error&) {
                rej_prop[static_cast<std::size_t>(r)] = 0;  // degenerate replicate counts as no rejection
            }
        }
        const std::string id = "cell" + std::to_string(cell_index);
        for (const char* method : {"proposed", "lrt"}) {
            PowerCell cell;
            cell.scenario_id = id;
            cell.lambda = sc.lambda;
            cell.shape = sc.shape;
            cell.method = method;
            cell.reps = sc.reps;
            cell.seed = sc.seed;
            int s = 0;
            const auto& v = std::string(method) == "proposed" ? rej_prop : rej_lrt;
            for (int b : v) s += b;
            cell.rejection_rate = static_cast<double>(s) / sc.reps;
            out.push_back(cell);
        }
        ++cell_index;
    }
    return out;
}

inline void write_power_csv(std::ostream& os, const std::vector<PowerCell>& cells) {
    os << "scenario_id,lambda,shape,method,rejection_rate,reps,seed\n";
    for (const PowerCell& c : cells)
        os << c.scenario_id << ',' << c.lambda << ',' << shape_name(c.shape) << ',' << c.method << ','
           << c.rejection_rate << ',' << c.reps << ',' << c.seed << '\n';
}

/// Exact marginal category probabilities of the wellbeing scenario's anxiety
/// outcome, by enumeration over the (finite) covariate support.
inline Eigen::VectorXd wellbeing_anxiety_marginal(const WellbeingScenario& sc) {
    const int d = static_cast<int>(sc.covariate_gen.size());
    models::Params anx;
    anx.intercepts = sc.anxiety_intercepts;
    anx.beta = sc.anxiety_slopes;
    const ModelSpec spec = sc.anxiety_spec();
    Eigen::VectorXd marginal = Eigen::VectorXd::Zero(spec.J());
    Eigen::VectorXd x(d), p(spec.J());
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    while (true) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            const auto& g = sc.covariate_gen[static_cast<std::size_t>(k)];
            x[k] = g.values[idx[static_cast<std::size_t>(k)]];
            w *= g.probs[idx[static_cast<std::size_t>(k)]];
        }
        models::detail::category_probs_eta(spec, anx, anx.beta.dot(x), p);
        marginal += w * p;
        int k = d - 1;
        while (k >= 0) {
            if (++idx[static_cast<std::size_t>(k)] < sc.covariate_gen[static_cast<std::size_t>(k)].values.size()) break;
            idx[static_cast<std::size_t>(k)] = 0;
            --k;
        }
        if (k < 0) break;
    }
    return marginal;
}

}  // namespace mixtau::simgen
