#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "helpers.hpp"
#include "mixtau/models.hpp"

using namespace mixtau;
using namespace mixtau::models;
using Catch::Approx;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ModelSpec linear_spec() {
    ModelSpec s;
    s.family = Family::Linear;
    s.outcome = OutcomeKind::Continuous;
    return s;
}

ModelSpec binary_spec(Link link = Link::Logit) {
    ModelSpec s;
    s.family = Family::BinaryGLM;
    s.outcome = OutcomeKind::Binary;
    s.link = link;
    s.n_categories = 2;
    return s;
}

ModelSpec ordinal_spec(Family fam, int J, Link link = Link::Logit) {
    ModelSpec s;
    s.family = fam;
    s.outcome = OutcomeKind::Ordinal;
    s.link = link;
    s.n_categories = J;
    return s;
}

// packing used by score_at, for finite-difference checks
VectorXd pack(const ModelSpec& spec, const Params& par) {
    if (spec.family == Family::Linear) {
        VectorXd th(par.beta.size() + 1);
        th << par.beta, par.sigma;
        return th;
    }
    if (spec.family == Family::OrderedStereotype) {
        VectorXd th(par.intercepts.size() + par.beta.size() + par.phi.size() - 2);
        th << par.intercepts, par.beta, par.phi.segment(1, par.phi.size() - 2);
        return th;
    }
    VectorXd th(par.intercepts.size() + par.beta.size());
    th << par.intercepts, par.beta;
    return th;
}

Params unpack(const ModelSpec& spec, const Params& shape, const VectorXd& th) {
    Params par = shape;
    if (spec.family == Family::Linear) {
        par.beta = th.head(th.size() - 1);
        par.sigma = th[th.size() - 1];
        return par;
    }
    const auto nInt = shape.intercepts.size();
    const auto d = shape.beta.size();
    par.intercepts = th.head(nInt);
    par.beta = th.segment(nInt, d);
    if (spec.family == Family::OrderedStereotype)
        par.phi.segment(1, shape.phi.size() - 2) = th.tail(shape.phi.size() - 2);
    return par;
}

VectorXd fd_score(const ModelSpec& spec, const Params& par, const Dataset& data, double h = 1e-5) {
    const VectorXd th0 = pack(spec, par);
    VectorXd g(th0.size());
    for (Eigen::Index k = 0; k < th0.size(); ++k) {
        VectorXd tp = th0, tm = th0;
        tp[k] += h;
        tm[k] -= h;
        g[k] = (loglik_at(spec, unpack(spec, par, tp), data) -
                loglik_at(spec, unpack(spec, par, tm), data)) /
               (2 * h);
    }
    return g;
}

MatrixXd fd_hessian_from_score(const ModelSpec& spec, const Params& par, const Dataset& data,
                               double h = 1e-5) {
    const VectorXd th0 = pack(spec, par);
    MatrixXd H(th0.size(), th0.size());
    for (Eigen::Index k = 0; k < th0.size(); ++k) {
        VectorXd tp = th0, tm = th0;
        tp[k] += h;
        tm[k] -= h;
        H.col(k) = (score_at(spec, unpack(spec, par, tp), data) -
                    score_at(spec, unpack(spec, par, tm), data)) /
                   (2 * h);
    }
    return 0.5 * (H + H.transpose());
}

}  // namespace

TEST_CASE("linear fit matches the closed-form OLS oracle", "[models]") {
    RngStream rng = RngStream::root(101);
    const int n = 10000;
    Dataset data;
    data.X.resize(n, 1);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        RngStream row = rng.child(i);
        data.X(i, 0) = row.child(0).normal();
        data.y[i] = 2.0 + 3.0 * data.X(i, 0) + row.child(1).normal();
    }
    const FittedModel m = fit(linear_spec(), data);

    // independent oracle: normal equations solved directly
    MatrixXd A(n, 2);
    A.col(0).setOnes();
    A.col(1) = data.X.col(0);
    const VectorXd oracle = (A.transpose() * A).ldlt().solve(A.transpose() * data.y);
    CHECK(std::abs(m.beta[0] - oracle[0]) < 1e-8);
    CHECK(std::abs(m.beta[1] - oracle[1]) < 1e-8);
    CHECK(m.beta[0] == Approx(2.0).margin(0.05));
    CHECK(m.beta[1] == Approx(3.0).margin(0.05));
    CHECK(m.converged);
    CHECK(m.sigma > 0.0);
    // self-consistency of the reported maximum
    CHECK(loglik_at(linear_spec(), m, data) == Approx(m.loglik).margin(1e-10));
}

TEST_CASE("intercept-only cumulative logit equals the saturated closed form", "[models]") {
    // frequencies (0.2, 0.3, 0.5) exactly
    const int n = 1000;
    Dataset data;
    data.X.resize(n, 0);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) data.y[i] = i < 200 ? 1 : (i < 500 ? 2 : 3);
    const FittedModel m = fit(ordinal_spec(Family::CumulativeLink, 3), data);
    CHECK(m.intercepts[0] == Approx(std::log(0.2 / 0.8)).margin(1e-9));
    CHECK(m.intercepts[1] == Approx(std::log(0.5 / 0.5)).margin(1e-9));
    CHECK(m.converged);
}

TEST_CASE("perfect separation is detected", "[models]") {
    // y jumps exactly where x crosses 0.3; the separating margin is one x-step,
    // so the diverging MLE pushes the linear predictor far past the guard
    const int n = 60;
    Dataset data;
    data.X.resize(n, 1);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        data.X(i, 0) = 0.01 * i;
        data.y[i] = data.X(i, 0) < 0.3 ? 1 : 2;
    }
    CHECK_THROWS_AS(fit(binary_spec(), data), SeparationDetected);
}

TEST_CASE("cdf_interval spec cases", "[models]") {
    SECTION("continuous: no jump, centered at the median") {
        FittedModel m;
        m.spec = linear_spec();
        m.beta = VectorXd::Zero(2);
        m.sigma = 1.0;
        const auto [lo, hi] = cdf_interval(m, 0.0, VectorXd::Constant(1, 0.7));
        CHECK(lo == 0.5);
        CHECK(hi == 0.5);
    }
    SECTION("binary logit at eta = 0") {
        FittedModel m;
        m.spec = binary_spec();
        m.intercepts = VectorXd::Zero(1);
        m.beta = VectorXd::Zero(1);
        const VectorXd x = VectorXd::Constant(1, 0.3);
        const auto [lo0, hi0] = cdf_interval(m, 1, x);  // y = 0 in {0,1} labels
        CHECK(lo0 == Approx(0.0));
        CHECK(hi0 == Approx(0.5));
        const auto [lo1, hi1] = cdf_interval(m, 2, x);
        CHECK(lo1 == Approx(0.5));
        CHECK(hi1 == Approx(1.0));
    }
    SECTION("adjacent-category logit, equal probabilities") {
        FittedModel m;
        m.spec = ordinal_spec(Family::AdjacentCategoryLogit, 5);
        m.intercepts = VectorXd::Zero(4);
        m.beta = VectorXd::Zero(1);
        const auto [lo, hi] = cdf_interval(m, 3, VectorXd::Zero(1));
        CHECK(lo == Approx(0.4).margin(1e-14));
        CHECK(hi == Approx(0.6).margin(1e-14));
    }
    SECTION("out-of-support ordinal code") {
        FittedModel m;
        m.spec = ordinal_spec(Family::AdjacentCategoryLogit, 5);
        m.intercepts = VectorXd::Zero(4);
        m.beta = VectorXd::Zero(1);
        CHECK_THROWS_AS(cdf_interval(m, 6, VectorXd::Zero(1)), OutOfSupport);
        CHECK_THROWS_AS(cdf_interval(m, 2.5, VectorXd::Zero(1)), OutOfSupport);
    }
}

TEST_CASE("category_probs spec cases and coherence", "[models]") {
    SECTION("ACL with alpha = (1, 0): proportional to (e, 1, 1)") {
        FittedModel m;
        m.spec = ordinal_spec(Family::AdjacentCategoryLogit, 3);
        m.intercepts = VectorXd::Zero(2);
        m.intercepts[0] = 1.0;
        m.beta = VectorXd::Zero(0);
        const VectorXd p = category_probs(m, VectorXd::Zero(0));
        const double e = std::exp(1.0);
        CHECK(p[0] == Approx(e / (e + 2)).margin(1e-14));
        CHECK(p[1] == Approx(1 / (e + 2)).margin(1e-14));
        CHECK(p[2] == Approx(1 / (e + 2)).margin(1e-14));
    }
    SECTION("cumulative logit J=3, alpha = (-1, 1)") {
        FittedModel m;
        m.spec = ordinal_spec(Family::CumulativeLink, 3);
        m.intercepts = VectorXd::Zero(2);
        m.intercepts << -1.0, 1.0;
        m.beta = VectorXd::Zero(1);
        const VectorXd x = VectorXd::Zero(1);
        const VectorXd p = category_probs(m, x);
        const double s1 = dist::logistic_cdf(-1.0), s2 = dist::logistic_cdf(1.0);
        CHECK(p[0] == Approx(s1).margin(1e-14));
        CHECK(p[1] == Approx(s2 - s1).margin(1e-14));
        CHECK(p[2] == Approx(1 - s2).margin(1e-14));
        // coherence: cdf_interval is the exact partial sum of category_probs
        double run = 0.0;
        for (int y = 1; y <= 3; ++y) {
            const auto [lo, hi] = cdf_interval(m, y, x);
            CHECK(lo == run);
            run += p[y - 1];
            CHECK(hi == run);
        }
    }
    SECTION("positivity and unit sum across random models") {
        RngStream rng = RngStream::root(77);
        for (int trial = 0; trial < 50; ++trial) {
            RngStream t = rng.child(trial);
            FittedModel m;
            const int J = 3 + static_cast<int>(t.child(0).uniform_index(4));
            const Family fam = trial % 3 == 0   ? Family::CumulativeLink
                               : trial % 3 == 1 ? Family::AdjacentCategoryLogit
                                                : Family::OrderedStereotype;
            m.spec = ordinal_spec(fam, J);
            m.intercepts.resize(J - 1);
            RngStream par = t.child(1);
            for (int j = 0; j < J - 1; ++j) m.intercepts[j] = 2.0 * par.normal();
            if (fam == Family::CumulativeLink) {
                std::sort(m.intercepts.data(), m.intercepts.data() + J - 1);
                for (int j = 1; j < J - 1; ++j)
                    if (m.intercepts[j] - m.intercepts[j - 1] < 0.05) m.intercepts[j] = m.intercepts[j - 1] + 0.05;
            }
            m.beta = VectorXd::Constant(2, 0.4);
            m.phi.resize(J);
            for (int j = 0; j < J; ++j) m.phi[j] = static_cast<double>(j) / (J - 1);
            RngStream xs = t.child(2);
            VectorXd x(2);
            x << xs.normal(), xs.normal();
            const VectorXd p = category_probs(m, x);
            CHECK(p.minCoeff() > 0.0);
            CHECK(std::abs(p.sum() - 1.0) < 1e-12);
            // monotonicity of the interval across the support
            double prev_hi = 0.0;
            for (int y = 1; y <= J; ++y) {
                const auto [lo, hi] = cdf_interval(m, y, x);
                CHECK(lo == Approx(prev_hi).margin(0));
                CHECK(hi >= lo);
                prev_hi = hi;
            }
            CHECK(std::abs(prev_hi - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("loglik_at spec cases", "[models]") {
    SECTION("equal-probability ordinal model") {
        ModelSpec spec = ordinal_spec(Family::AdjacentCategoryLogit, 5);
        Params par;
        par.intercepts = VectorXd::Zero(4);
        par.beta = VectorXd::Zero(0);
        Dataset data;
        data.X.resize(10, 0);
        data.y.resize(10);
        for (int i = 0; i < 10; ++i) data.y[i] = 1 + i % 5;
        CHECK(loglik_at(spec, par, data) == Approx(10.0 * std::log(0.2)).margin(1e-12));
    }
    SECTION("zero-probability event") {
        ModelSpec spec = ordinal_spec(Family::CumulativeLink, 3);
        Params par;
        par.intercepts = VectorXd::Zero(2);
        par.intercepts << 36.0, 37.0;  // category 3 has probability 0 in double precision
        par.beta = VectorXd::Zero(0);
        Dataset data;
        data.X.resize(1, 0);
        data.y.resize(1);
        data.y[0] = 3;
        CHECK_THROWS_AS(loglik_at(spec, par, data), NonFiniteLikelihood);
    }
}

TEST_CASE("score vanishes at the optimum and matches finite differences elsewhere", "[models]") {
    RngStream rng = RngStream::root(2024);

    auto run_family = [&](const ModelSpec& spec, const Params& truth, int n, int tag) {
        const Dataset data = spec.family == Family::Linear
                                 ? testhelp::simulate_linear(truth, n, static_cast<int>(truth.beta.size()) - 1,
                                                             rng.child(tag))
                                 : testhelp::simulate_discrete(spec, truth, n,
                                                               static_cast<int>(truth.beta.size()),
                                                               rng.child(tag));
        const FittedModel m = fit(spec, data);
        CHECK(m.converged);
        const VectorXd g_opt = score_at(spec, m, data);
        CHECK(g_opt.norm() < 1e-6);

        // away from the optimum the analytic score must agree with central
        // finite differences of loglik_at
        Params off = m;
        off.beta.array() += 0.05;
        if (spec.family == Family::Linear) off.sigma *= 1.1;
        const VectorXd ga = score_at(spec, off, data);
        const VectorXd gf = fd_score(spec, off, data);
        CHECK((ga - gf).norm() <= 1e-4 * std::max(1.0, gf.norm()));
    };

    SECTION("linear") {
        Params truth;
        truth.beta = VectorXd::Zero(3);
        truth.beta << 1.0, -0.5, 0.25;
        truth.sigma = 1.3;
        run_family(linear_spec(), truth, 4000, 1);
    }
    SECTION("binary probit") {
        Params truth;
        truth.intercepts = VectorXd::Constant(1, 0.3);
        truth.beta = VectorXd::Constant(2, 0.6);
        run_family(binary_spec(Link::Probit), truth, 4000, 2);
    }
    SECTION("cumulative logit") {
        Params truth;
        truth.intercepts = VectorXd::Zero(3);
        truth.intercepts << -1.0, 0.2, 1.4;
        truth.beta = VectorXd::Constant(2, 0.7);
        run_family(ordinal_spec(Family::CumulativeLink, 4), truth, 4000, 3);
    }
    SECTION("adjacent-category") {
        Params truth;
        truth.intercepts = VectorXd::Zero(3);
        truth.intercepts << 0.4, -0.2, 0.6;
        truth.beta = VectorXd::Constant(2, -0.5);
        run_family(ordinal_spec(Family::AdjacentCategoryLogit, 4), truth, 4000, 4);
    }
    SECTION("stereotype") {
        Params truth;
        truth.intercepts = VectorXd::Zero(3);
        truth.intercepts << 1.0, 0.8, 0.3;
        truth.beta = VectorXd::Constant(2, 1.2);
        truth.phi.resize(4);
        truth.phi << 0.0, 0.45, 0.7, 1.0;
        run_family(ordinal_spec(Family::OrderedStereotype, 4), truth, 4000, 5);
    }
}

TEST_CASE("refit on simulated data recovers parameters within 3 standard errors", "[models][slow]") {
    RngStream rng = RngStream::root(515);
    const int n = 50000;

    auto check_recovery = [&](const ModelSpec& spec, const Params& truth, int tag) {
        const int d = static_cast<int>(truth.beta.size()) - (spec.family == Family::Linear ? 1 : 0);
        const Dataset data = spec.family == Family::Linear
                                 ? testhelp::simulate_linear(truth, n, d, rng.child(tag))
                                 : testhelp::simulate_discrete(spec, truth, n, d, rng.child(tag));
        const FittedModel m = fit(spec, data);
        const MatrixXd H = fd_hessian_from_score(spec, m, data);
        const MatrixXd cov = (-H).inverse();
        const VectorXd se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
        const VectorXd est = pack(spec, m), tru = pack(spec, truth);
        for (Eigen::Index k = 0; k < est.size(); ++k) {
            INFO("family " << family_name(spec.family) << " parameter " << k);
            CHECK(std::abs(est[k] - tru[k]) < 3.0 * se[k] + 1e-9);
        }
    };

    {
        Params t;
        t.beta = VectorXd::Zero(3);
        t.beta << 2.0, -1.0, 0.5;
        t.sigma = 2.0;
        check_recovery(linear_spec(), t, 1);
    }
    {
        Params t;
        t.intercepts = VectorXd::Constant(1, -0.4);
        t.beta = VectorXd::Constant(2, 0.8);
        check_recovery(binary_spec(), t, 2);
    }
    {
        Params t;
        t.intercepts = VectorXd::Zero(4);
        t.intercepts << -1.6, -0.6, 0.5, 1.7;
        t.beta = VectorXd::Constant(2, 0.6);
        check_recovery(ordinal_spec(Family::CumulativeLink, 5), t, 3);
    }
    {
        Params t;
        t.intercepts = VectorXd::Zero(4);
        t.intercepts << -1.6, -0.6, 0.5, 1.7;
        t.beta = VectorXd::Constant(2, 0.6);
        check_recovery(ordinal_spec(Family::CumulativeLink, 5, Link::Probit), t, 4);
    }
    {
        Params t;
        t.intercepts = VectorXd::Zero(4);
        t.intercepts << -0.8, -0.3, 0.3, 0.9;
        t.beta = VectorXd::Constant(2, -0.4);
        check_recovery(ordinal_spec(Family::AdjacentCategoryLogit, 5), t, 5);
    }
    {
        Params t;
        t.intercepts = VectorXd::Zero(3);
        t.intercepts << 0.9, 0.7, 0.4;
        t.beta = VectorXd::Constant(2, 1.1);
        t.phi.resize(4);
        t.phi << 0.0, 0.35, 0.75, 1.0;
        check_recovery(ordinal_spec(Family::OrderedStereotype, 4), t, 6);
    }
}

TEST_CASE("stereotype identification pins phi ends and flags non-monotone scores", "[models]") {
    RngStream rng = RngStream::root(808);
    Params truth;
    truth.intercepts = VectorXd::Zero(3);
    truth.intercepts << 0.5, 0.6, 0.2;
    truth.beta = VectorXd::Constant(2, 1.0);
    truth.phi.resize(4);
    truth.phi << 0.0, 0.5, 0.8, 1.0;
    const ModelSpec spec = ordinal_spec(Family::OrderedStereotype, 4);
    const Dataset data = testhelp::simulate_discrete(spec, truth, 8000, 2, rng.child(0));
    const FittedModel m = fit(spec, data);
    CHECK(m.phi[0] == 0.0);
    CHECK(m.phi[3] == 1.0);
    CHECK(m.phi[1] == Approx(0.5).margin(0.1));
    CHECK(m.phi[2] == Approx(0.8).margin(0.1));
    CHECK_FALSE(m.phi_non_monotone);

    // non-monotone generating scores should raise the warning flag
    Params bumpy = truth;
    bumpy.phi << 0.0, 0.9, 0.2, 1.0;
    const Dataset data2 = testhelp::simulate_discrete(spec, bumpy, 8000, 2, rng.child(1));
    const FittedModel m2 = fit(spec, data2);
    CHECK(m2.phi_non_monotone);
}

TEST_CASE("design and data errors", "[models]") {
    SECTION("rank-deficient design") {
        Dataset data;
        data.X.resize(50, 2);
        data.y.resize(50);
        for (int i = 0; i < 50; ++i) {
            data.X(i, 0) = i;
            data.X(i, 1) = 2.0 * i;  // collinear
            data.y[i] = i % 3 + 1;
        }
        CHECK_THROWS_AS(fit(ordinal_spec(Family::CumulativeLink, 3), data), RankDeficientDesign);
    }
    SECTION("constant covariate is collinear with the intercepts") {
        Dataset data;
        data.X = MatrixXd::Ones(60, 1);
        data.y.resize(60);
        for (int i = 0; i < 60; ++i) data.y[i] = i % 3 + 1;
        CHECK_THROWS_AS(fit(ordinal_spec(Family::AdjacentCategoryLogit, 3), data), RankDeficientDesign);
    }
    SECTION("too few observations") {
        Dataset data;
        data.X.resize(3, 2);
        data.X.setRandom();
        data.y.resize(3);
        data.y << 1, 2, 3;
        CHECK_THROWS_AS(fit(ordinal_spec(Family::CumulativeLink, 3), data), TooFewObservations);
    }
    SECTION("unobserved category") {
        Dataset data;
        data.X.resize(40, 0);
        data.y.resize(40);
        for (int i = 0; i < 40; ++i) data.y[i] = i % 2 == 0 ? 1 : 3;  // category 2 missing
        CHECK_THROWS_AS(fit(ordinal_spec(Family::CumulativeLink, 3), data), EmptyCategory);
    }
    SECTION("invalid spec combinations") {
        ModelSpec s;
        s.family = Family::Linear;
        s.outcome = OutcomeKind::Ordinal;
        s.n_categories = 3;
        CHECK_THROWS_AS(s.validate(), ConfigError);
        ModelSpec b;
        b.family = Family::CumulativeLink;
        b.outcome = OutcomeKind::Ordinal;
        b.n_categories = 2;
        CHECK_THROWS_AS(b.validate(), ConfigError);
    }
}
