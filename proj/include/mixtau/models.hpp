#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "mixtau/dataset.hpp"
#include "mixtau/dist.hpp"
#include "mixtau/errors.hpp"

namespace mixtau::models {

enum class Family { Linear, BinaryGLM, CumulativeLink, AdjacentCategoryLogit, OrderedStereotype };
enum class Link { Logit, Probit, CLogLog };
enum class OutcomeKind { Continuous, Binary, Ordinal };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Linear: return "linear";
        case Family::BinaryGLM: return "binary_glm";
        case Family::CumulativeLink: return "cumulative_link";
        case Family::AdjacentCategoryLogit: return "adjacent_category_logit";
        case Family::OrderedStereotype: return "ordered_stereotype";
    }
    return "?";
}

inline const char* link_name(Link l) {
    switch (l) {
        case Link::Logit: return "logit";
        case Link::Probit: return "probit";
        case Link::CLogLog: return "cloglog";
    }
    return "?";
}

struct ModelSpec {
    Family family = Family::Linear;
    Link link = Link::Logit;  // used by BinaryGLM/CumulativeLink; the other families are logit-based
    OutcomeKind outcome = OutcomeKind::Continuous;
    int n_categories = 0;  // J; 2 for binary, >= 3 for ordinal, 0 for continuous

    int J() const { return n_categories; }
    bool discrete() const { return family != Family::Linear; }

    void validate() const {
        switch (family) {
            case Family::Linear:
                if (outcome != OutcomeKind::Continuous)
                    throw ConfigError("Linear family pairs only with a continuous outcome");
                break;
            case Family::BinaryGLM:
                if (outcome != OutcomeKind::Binary || n_categories != 2)
                    throw ConfigError("BinaryGLM requires exactly 2 categories");
                break;
            case Family::CumulativeLink:
            case Family::AdjacentCategoryLogit:
            case Family::OrderedStereotype:
                if (outcome != OutcomeKind::Ordinal || n_categories < 3)
                    throw ConfigError(std::string(family_name(family)) + " requires an ordinal outcome with J >= 3");
                break;
        }
    }
};

/// Model parameters. Packing convention (also the order used by score_at):
///   Linear:            beta = (intercept, slopes...), then sigma
///   BinaryGLM/CumulativeLink: intercepts = cut-points alpha_1 < ... < alpha_{J-1}, then beta
///   AdjacentCategoryLogit:    intercepts = alpha_1..alpha_{J-1}, then beta
///   OrderedStereotype: intercepts = alpha_1..alpha_{J-1} (alpha_J = 0), beta, then
///                      the free scores phi_2..phi_{J-1} (phi has length J with
///                      phi_1 = 0 and phi_J = 1 pinned)
struct Params {
    Eigen::VectorXd beta;
    Eigen::VectorXd intercepts;
    Eigen::VectorXd phi;
    double sigma = 0.0;
};

struct FittedModel : Params {
    ModelSpec spec;
    double loglik = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int n_iter = 0;
    bool phi_non_monotone = false;  // post-fit warning flag (stereotype only)
};

namespace detail {

inline double link_cdf(Link l, double z) {
    switch (l) {
        case Link::Logit: return dist::logistic_cdf(z);
        case Link::Probit: return dist::norm_cdf(z);
        case Link::CLogLog: return dist::cloglog_cdf(z);
    }
    return 0.0;
}

inline double link_pdf(Link l, double z) {
    switch (l) {
        case Link::Logit: return dist::logistic_pdf(z);
        case Link::Probit: return dist::norm_pdf(z);
        case Link::CLogLog: return dist::cloglog_pdf(z);
    }
    return 0.0;
}

inline double link_quantile(Link l, double p) {
    switch (l) {
        case Link::Logit: return dist::logistic_quantile(p);
        case Link::Probit: return dist::norm_quantile(p);
        case Link::CLogLog: return dist::cloglog_quantile(p);
    }
    return 0.0;
}

/// Mean of the link's latent error distribution (locates the Liu-Zhang latent draw).
inline double link_mean(Link l) { return l == Link::CLogLog ? -dist::kEulerGamma : 0.0; }

// category probabilities at linear predictor eta, written into p (length J)
inline void probs_cumulative(const ModelSpec& spec, const Params& par, double eta, Eigen::VectorXd& p) {
    const int J = spec.J();
    double prev = 0.0;
    for (int j = 0; j < J - 1; ++j) {
        const double g = link_cdf(spec.link, par.intercepts[j] - eta);
        p[j] = g - prev;
        prev = g;
    }
    p[J - 1] = 1.0 - prev;
}

inline void probs_softmax_from_u(Eigen::VectorXd& u, Eigen::VectorXd& p) {
    const double m = u.maxCoeff();
    p = (u.array() - m).exp();
    p /= p.sum();
}

inline void probs_acl(const ModelSpec& spec, const Params& par, double eta, Eigen::VectorXd& p) {
    const int J = spec.J();
    Eigen::VectorXd u(J);
    double acc = 0.0;
    u[J - 1] = 0.0;
    for (int j = J - 2; j >= 0; --j) {
        acc += par.intercepts[j];
        u[j] = acc + (J - 1 - j) * eta;
    }
    probs_softmax_from_u(u, p);
}

inline void probs_stereotype(const ModelSpec& spec, const Params& par, double eta, Eigen::VectorXd& p) {
    const int J = spec.J();
    Eigen::VectorXd u(J);
    for (int j = 0; j < J; ++j) {
        const double a = (j < J - 1) ? par.intercepts[j] : 0.0;
        u[j] = a + par.phi[j] * eta;
    }
    probs_softmax_from_u(u, p);
}

inline void category_probs_eta(const ModelSpec& spec, const Params& par, double eta, Eigen::VectorXd& p) {
    switch (spec.family) {
        case Family::BinaryGLM:
        case Family::CumulativeLink: probs_cumulative(spec, par, eta, p); return;
        case Family::AdjacentCategoryLogit: probs_acl(spec, par, eta, p); return;
        case Family::OrderedStereotype: probs_stereotype(spec, par, eta, p); return;
        case Family::Linear: break;
    }
    throw DomainError("category probabilities are undefined for a continuous family");
}

struct ScoringState {
    double loglik = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd score;
    Eigen::MatrixXd info;
};

/// One Fisher-scoring step with step-halving. `ll_at` evaluates the log-likelihood
/// (-inf if invalid). Returns the accepted parameter vector; `ll` is updated in place.
template <class LlFn>
Eigen::VectorXd scored_step(const Eigen::VectorXd& theta, double& ll, const ScoringState& st,
                            LlFn&& ll_at) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(st.info);
    if (qr.rank() < st.info.cols())
        throw NonConvergence("singular Fisher information (dim " + std::to_string(st.info.cols()) + ")");
    Eigen::VectorXd dir = qr.solve(st.score);
    double t = 1.0;
    for (int h = 0; h < 50; ++h) {
        Eigen::VectorXd cand = theta + t * dir;
        const double ll_cand = ll_at(cand);
        if (std::isfinite(ll_cand) && ll_cand >= ll - 1e-12 * (std::abs(ll) + 1.0)) {
            ll = ll_cand;
            return cand;
        }
        t *= 0.5;
    }
    return theta;  // no improving step found; caller decides based on the score norm
}

}  // namespace detail

/// Category probabilities P(Y = j | x), j = 1..J. Strictly positive, sums to 1.
inline Eigen::VectorXd category_probs(const ModelSpec& spec, const Params& par,
                                      const Eigen::Ref<const Eigen::VectorXd>& x) {
    Eigen::VectorXd p(spec.J());
    detail::category_probs_eta(spec, par, par.beta.size() > 0 ? par.beta.dot(x) : 0.0, p);
    return p;
}

inline Eigen::VectorXd category_probs(const FittedModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return category_probs(m.spec, m, x);
}

/// The CDF interval (F(y-; x), F(y; x)) of Model (1). Continuous outcomes return a
/// degenerate interval; discrete ones return prefix sums of category_probs so the
/// two operations are coherent by construction.
inline std::pair<double, double> cdf_interval(const FittedModel& m, double y,
                                              const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (m.spec.family == Family::Linear) {
        const double mu = m.beta[0] + m.beta.tail(m.beta.size() - 1).dot(x);
        const double p = dist::norm_cdf((y - mu) / m.sigma);
        return {p, p};
    }
    const int J = m.spec.J();
    const int code = static_cast<int>(y);
    if (y != code || code < 1 || code > J)
        throw OutOfSupport("outcome value " + std::to_string(y) + " outside 1.." + std::to_string(J));
    const Eigen::VectorXd p = category_probs(m, x);
    double lo = 0.0;
    for (int j = 0; j < code - 1; ++j) lo += p[j];
    return {lo, lo + p[code - 1]};
}

/// Sum of per-row log densities / log probabilities under the given parameters.
inline double loglik_at(const ModelSpec& spec, const Params& par, const Dataset& data) {
    data.validate();
    const int n = data.n();
    if (spec.family == Family::Linear) {
        if (par.beta.size() != data.d() + 1) throw ShapeMismatch("linear beta must have d+1 entries");
        if (!(par.sigma > 0.0)) throw NonFiniteLikelihood("sigma must be positive");
        double rss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = data.y[i] - par.beta[0] - par.beta.tail(data.d()).dot(data.X.row(i));
            rss += r * r;
        }
        return -0.5 * n * std::log(2.0 * M_PI * par.sigma * par.sigma) - 0.5 * rss / (par.sigma * par.sigma);
    }
    const int J = spec.J();
    if (par.intercepts.size() != J - 1) throw ShapeMismatch("intercepts must have J-1 entries");
    if (par.beta.size() != data.d()) throw ShapeMismatch("beta must have d entries");
    if (spec.family == Family::OrderedStereotype && par.phi.size() != J)
        throw ShapeMismatch("phi must have J entries");
    double ll = 0.0;
    Eigen::VectorXd p(J);
    for (int i = 0; i < n; ++i) {
        const int code = static_cast<int>(data.y[i]);
        if (data.y[i] != code || code < 1 || code > J)
            throw OutOfSupport("ordinal code outside 1.." + std::to_string(J) + " at row " + std::to_string(i));
        detail::category_probs_eta(spec, par, data.d() > 0 ? par.beta.dot(data.X.row(i)) : 0.0, p);
        const double pj = p[code - 1];
        if (!(pj > 0.0) || !std::isfinite(pj))
            throw NonFiniteLikelihood("zero-probability event at row " + std::to_string(i));
        ll += std::log(pj);
    }
    return ll;
}

namespace detail {

// du matrix for the softmax families: du(j, k) = d u_j / d theta_k at one observation.
// ACL:        theta = (alpha, beta); u_j = sum_{k>=j} alpha_k + (J-1-j)*eta   (0-based j)
// stereotype: blocks A = (alpha, beta) and B = phi_free, or the full packing.
inline void fill_du_acl(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                        Eigen::MatrixXd& du) {
    const int J = spec.J(), d = static_cast<int>(x.size());
    du.setZero();
    for (int j = 0; j < J; ++j) {
        for (int k = j; k < J - 1; ++k) du(j, k) = 1.0;
        du.block(j, J - 1, 1, d) = (J - 1 - j) * x.transpose();
    }
}

// expected information and score for one observation of a softmax family
inline void softmax_accumulate(const Eigen::VectorXd& p, const Eigen::MatrixXd& du, int code,
                               ScoringState& st) {
    const Eigen::RowVectorXd mean = p.transpose() * du;
    // score contribution: du_row(y) - mean
    st.score += (du.row(code - 1) - mean).transpose();
    // info contribution: sum_j p_j du_j' du_j - mean' mean
    st.info.noalias() += du.transpose() * p.asDiagonal() * du;
    st.info.noalias() -= mean.transpose() * mean;
}

}  // namespace detail

/// Analytic score (gradient of loglik_at) in the packing order documented on Params.
inline Eigen::VectorXd score_at(const ModelSpec& spec, const Params& par, const Dataset& data) {
    data.validate();
    const int n = data.n(), d = data.d();
    if (spec.family == Family::Linear) {
        Eigen::VectorXd g(d + 2);
        g.setZero();
        const double s2 = par.sigma * par.sigma;
        double rss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = data.y[i] - par.beta[0] - par.beta.tail(d).dot(data.X.row(i));
            g[0] += r / s2;
            g.segment(1, d) += (r / s2) * data.X.row(i).transpose();
            rss += r * r;
        }
        g[d + 1] = -n / par.sigma + rss / (s2 * par.sigma);
        return g;
    }
    const int J = spec.J();
    const bool stereo = spec.family == Family::OrderedStereotype;
    const int dim = (J - 1) + d + (stereo ? J - 2 : 0);
    detail::ScoringState st;
    st.score = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd p(J);
    Eigen::MatrixXd du(J, dim);
    for (int i = 0; i < n; ++i) {
        const int code = static_cast<int>(data.y[i]);
        const double eta = d > 0 ? par.beta.dot(data.X.row(i)) : 0.0;
        detail::category_probs_eta(spec, par, eta, p);
        if (spec.family == Family::AdjacentCategoryLogit) {
            detail::fill_du_acl(spec, data.X.row(i), du);
        } else if (stereo) {
            du.setZero();
            for (int j = 0; j < J; ++j) {
                if (j < J - 1) du(j, j) = 1.0;
                if (d > 0) du.block(j, J - 1, 1, d) = par.phi[j] * data.X.row(i);
                if (j >= 1 && j <= J - 2) du(j, (J - 1) + d + (j - 1)) = eta;
            }
        } else {  // cumulative / binary: dp rows computed directly from link densities
            du.setZero();
            double g_prev = 0.0;
            for (int j = 0; j < J; ++j) {
                const double g_cur =
                    (j < J - 1) ? detail::link_pdf(spec.link, par.intercepts[j] - eta) : 0.0;
                if (j < J - 1) du(j, j) += g_cur;
                if (j > 0) du(j, j - 1) -= g_prev;
                if (d > 0) du.block(j, J - 1, 1, d) = -(g_cur - g_prev) * data.X.row(i);
                g_prev = g_cur;
            }
            st.score += (du.row(code - 1) / p[code - 1]).transpose();
            continue;
        }
        // softmax families: d log p_y / d theta = du_y - sum_j p_j du_j
        st.score += (du.row(code - 1) - p.transpose() * du).transpose();
    }
    return st.score;
}

namespace detail {

inline void check_design(const ModelSpec& spec, const Dataset& data, int n_intercepts) {
    data.validate();
    const int n = data.n(), d = data.d();
    if (n <= d + n_intercepts)
        throw TooFewObservations("n = " + std::to_string(n) + " rows for " +
                                 std::to_string(d + n_intercepts) + " parameters");
    // intercept + covariates must be jointly full rank for every family here
    Eigen::MatrixXd A(n, d + 1);
    A.col(0).setOnes();
    if (d > 0) A.rightCols(d) = data.X;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < d + 1) throw RankDeficientDesign("design matrix rank " + std::to_string(qr.rank()) +
                                                     " < " + std::to_string(d + 1));
    (void)spec;
}

inline FittedModel fit_linear(const ModelSpec& spec, const Dataset& data) {
    const int n = data.n(), d = data.d();
    Eigen::MatrixXd A(n, d + 1);
    A.col(0).setOnes();
    if (d > 0) A.rightCols(d) = data.X;
    FittedModel m;
    m.spec = spec;
    m.beta = A.colPivHouseholderQr().solve(data.y);
    const double rss = (data.y - A * m.beta).squaredNorm();
    m.sigma = std::sqrt(rss / n);  // MLE scale
    if (!(m.sigma > 0.0)) throw NonFiniteLikelihood("degenerate outcome: zero residual variance");
    m.loglik = -0.5 * n * (std::log(2.0 * M_PI * m.sigma * m.sigma) + 1.0);
    m.converged = true;
    m.n_iter = 1;
    return m;
}

// Generic Fisher scoring for the discrete families. `pass` fills loglik/score/info
// at theta; `ll_at` evaluates loglik only; `sep_scale` reports the largest linear-
// predictor magnitude for the separation guard.
template <class PassFn, class LlFn, class SepFn>
std::tuple<Eigen::VectorXd, double, bool, int> fisher_scoring(Eigen::VectorXd theta, PassFn&& pass,
                                                              LlFn&& ll_at, SepFn&& sep_scale,
                                                              int max_iter = 100,
                                                              double rel_tol = 1e-8) {
    ScoringState st;
    double ll = ll_at(theta);
    if (!std::isfinite(ll)) throw NonConvergence("invalid starting values");
    bool converged = false;
    int it = 0;
    while (it < max_iter) {
        ++it;
        pass(theta, st);
        const double ll_prev = ll;
        theta = scored_step(theta, ll, st, ll_at);
        if (sep_scale(theta) > 30.0)
            throw SeparationDetected("linear predictor escaped past 30; MLE likely does not exist");
        if (std::abs(ll - ll_prev) < rel_tol * (std::abs(ll_prev) + 1.0)) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NonConvergence("no convergence in " + std::to_string(max_iter) + " iterations");
    // polish: a few extra Newton steps so the score vanishes at the reported optimum
    for (int extra = 0; extra < 8; ++extra) {
        pass(theta, st);
        if (st.score.norm() < 1e-7) break;
        theta = scored_step(theta, ll, st, ll_at);
        ++it;
    }
    return {theta, ll, converged, it};
}

inline FittedModel fit_cumulative(const ModelSpec& spec, const Dataset& data) {
    const int n = data.n(), d = data.d(), J = spec.J();
    const std::vector<int> counts = ordinal_counts(data.y, J);
    const int dim = (J - 1) + d;

    Eigen::VectorXd theta(dim);
    double cum = 0.0;
    for (int j = 0; j < J - 1; ++j) {
        cum += counts[static_cast<std::size_t>(j)];
        theta[j] = link_quantile(spec.link, cum / n);
    }
    theta.tail(d).setZero();

    auto unpack = [&](const Eigen::VectorXd& th, Params& par) {
        par.intercepts = th.head(J - 1);
        par.beta = th.tail(d);
    };
    auto ll_at = [&](const Eigen::VectorXd& th) {
        Params par;
        unpack(th, par);
        double ll = 0.0;
        Eigen::VectorXd p(J);
        for (int i = 0; i < n; ++i) {
            const double eta = d > 0 ? par.beta.dot(data.X.row(i)) : 0.0;
            probs_cumulative(spec, par, eta, p);
            const double pj = p[static_cast<int>(data.y[i]) - 1];
            if (!(pj > 0.0)) return -std::numeric_limits<double>::infinity();
            ll += std::log(pj);
        }
        return ll;
    };
    auto pass = [&](const Eigen::VectorXd& th, ScoringState& st) {
        Params par;
        unpack(th, par);
        st.loglik = 0.0;
        st.score = Eigen::VectorXd::Zero(dim);
        st.info = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd p(J);
        Eigen::MatrixXd D(J, dim);
        for (int i = 0; i < n; ++i) {
            const double eta = d > 0 ? par.beta.dot(data.X.row(i)) : 0.0;
            probs_cumulative(spec, par, eta, p);
            D.setZero();
            double g_prev = 0.0;
            for (int j = 0; j < J; ++j) {
                const double g_cur = (j < J - 1) ? link_pdf(spec.link, par.intercepts[j] - eta) : 0.0;
                if (j < J - 1) D(j, j) += g_cur;
                if (j > 0) D(j, j - 1) -= g_prev;
                if (d > 0) D.block(j, J - 1, 1, d) = -(g_cur - g_prev) * data.X.row(i);
                g_prev = g_cur;
            }
            const int code = static_cast<int>(data.y[i]);
            st.loglik += std::log(p[code - 1]);
            st.score += (D.row(code - 1) / p[code - 1]).transpose();
            st.info.noalias() += D.transpose() * p.cwiseInverse().asDiagonal() * D;
        }
    };
    auto sep = [&](const Eigen::VectorXd& th) {
        double s = th.head(J - 1).cwiseAbs().maxCoeff();
        if (d > 0) s = std::max(s, (data.X * th.tail(d)).cwiseAbs().maxCoeff());
        return s;
    };

    auto [th, ll, conv, iters] = fisher_scoring(theta, pass, ll_at, sep);
    FittedModel m;
    m.spec = spec;
    unpack(th, static_cast<Params&>(m));
    for (int j = 0; j + 1 < J - 1; ++j)
        if (!(m.intercepts[j] < m.intercepts[j + 1]))
            throw NonConvergence("cut-points not strictly increasing at the reported optimum");
    m.loglik = ll;
    m.converged = conv;
    m.n_iter = iters;
    return m;
}

inline FittedModel fit_acl(const ModelSpec& spec, const Dataset& data) {
    const int n = data.n(), d = data.d(), J = spec.J();
    const std::vector<int> counts = ordinal_counts(data.y, J);
    const int dim = (J - 1) + d;

    Eigen::VectorXd theta(dim);
    for (int j = 0; j < J - 1; ++j)
        theta[j] = std::log(static_cast<double>(counts[static_cast<std::size_t>(j)]) /
                            counts[static_cast<std::size_t>(j + 1)]);
    theta.tail(d).setZero();

    auto unpack = [&](const Eigen::VectorXd& th, Params& par) {
        par.intercepts = th.head(J - 1);
        par.beta = th.tail(d);
    };
    auto ll_at = [&](const Eigen::VectorXd& th) {
        Params par;
        unpack(th, par);
        double ll = 0.0;
        Eigen::VectorXd p(J);
        for (int i = 0; i < n; ++i) {
            probs_acl(spec, par, d > 0 ? par.beta.dot(data.X.row(i)) : 0.0, p);
            ll += std::log(p[static_cast<int>(data.y[i]) - 1]);
        }
        return ll;
    };
    auto pass = [&](const Eigen::VectorXd& th, ScoringState& st) {
        Params par;
        unpack(th, par);
        st.loglik = 0.0;
        st.score = Eigen::VectorXd::Zero(dim);
        st.info = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd p(J);
        Eigen::MatrixXd du(J, dim);
        for (int i = 0; i < n; ++i) {
            probs_acl(spec, par, d > 0 ? par.beta.dot(data.X.row(i)) : 0.0, p);
            fill_du_acl(spec, data.X.row(i), du);
            const int code = static_cast<int>(data.y[i]);
            st.loglik += std::log(p[code - 1]);
            softmax_accumulate(p, du, code, st);
        }
    };
    auto sep = [&](const Eigen::VectorXd& th) {
        double s = th.head(J - 1).cwiseAbs().maxCoeff();
        if (d > 0) s = std::max(s, (data.X * th.tail(d)).cwiseAbs().maxCoeff());
        return s;
    };

    auto [th, ll, conv, iters] = fisher_scoring(theta, pass, ll_at, sep);
    FittedModel m;
    m.spec = spec;
    unpack(th, static_cast<Params&>(m));
    m.loglik = ll;
    m.converged = conv;
    m.n_iter = iters;
    return m;
}

inline FittedModel fit_stereotype(const ModelSpec& spec, const Dataset& data) {
    const int n = data.n(), d = data.d(), J = spec.J();
    const std::vector<int> counts = ordinal_counts(data.y, J);

    Params par;
    par.intercepts.resize(J - 1);
    for (int j = 0; j < J - 1; ++j)
        par.intercepts[j] = std::log(static_cast<double>(counts[static_cast<std::size_t>(j)]) /
                                     counts[static_cast<std::size_t>(J - 1)]);
    par.beta = Eigen::VectorXd::Zero(d);
    par.phi.resize(J);
    for (int j = 0; j < J; ++j) par.phi[j] = static_cast<double>(j) / (J - 1);

    auto ll_of = [&](const Params& q) {
        double ll = 0.0;
        Eigen::VectorXd p(J);
        for (int i = 0; i < n; ++i) {
            probs_stereotype(spec, q, d > 0 ? q.beta.dot(data.X.row(i)) : 0.0, p);
            const double pj = p[static_cast<int>(data.y[i]) - 1];
            if (!(pj > 0.0)) return -std::numeric_limits<double>::infinity();
            ll += std::log(pj);
        }
        return ll;
    };

    // block A: (alpha, beta); block B: phi_2..phi_{J-1}
    const int dimA = (J - 1) + d, dimB = J - 2;
    auto passA = [&](const Params& q, ScoringState& st) {
        st.score = Eigen::VectorXd::Zero(dimA);
        st.info = Eigen::MatrixXd::Zero(dimA, dimA);
        Eigen::VectorXd p(J);
        Eigen::MatrixXd du(J, dimA);
        for (int i = 0; i < n; ++i) {
            const double eta = d > 0 ? q.beta.dot(data.X.row(i)) : 0.0;
            probs_stereotype(spec, q, eta, p);
            du.setZero();
            for (int j = 0; j < J; ++j) {
                if (j < J - 1) du(j, j) = 1.0;
                if (d > 0) du.block(j, J - 1, 1, d) = q.phi[j] * data.X.row(i);
            }
            softmax_accumulate(p, du, static_cast<int>(data.y[i]), st);
        }
    };
    auto passB = [&](const Params& q, ScoringState& st) {
        st.score = Eigen::VectorXd::Zero(dimB);
        st.info = Eigen::MatrixXd::Zero(dimB, dimB);
        Eigen::VectorXd p(J);
        Eigen::MatrixXd du = Eigen::MatrixXd::Zero(J, dimB);
        for (int i = 0; i < n; ++i) {
            const double eta = d > 0 ? q.beta.dot(data.X.row(i)) : 0.0;
            probs_stereotype(spec, q, eta, p);
            for (int j = 1; j <= J - 2; ++j) du(j, j - 1) = eta;
            softmax_accumulate(p, du, static_cast<int>(data.y[i]), st);
        }
    };
    auto step_block = [&](Params& q, auto&& pass_fn, auto&& write, int dim, double& ll) -> bool {
        ScoringState st;
        pass_fn(q, st);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(st.info);
        if (qr.rank() < dim) return false;  // unidentified block (e.g. phi with beta ~ 0); skip
        const Eigen::VectorXd dir = qr.solve(st.score);
        double t = 1.0;
        for (int h = 0; h < 50; ++h) {
            Params cand = q;
            write(cand, t * dir);
            const double ll_cand = ll_of(cand);
            if (std::isfinite(ll_cand) && ll_cand >= ll - 1e-12 * (std::abs(ll) + 1.0)) {
                q = cand;
                ll = ll_cand;
                return true;
            }
            t *= 0.5;
        }
        return false;
    };
    auto writeA = [&](Params& q, const Eigen::VectorXd& delta) {
        q.intercepts += delta.head(J - 1);
        q.beta += delta.tail(d);
    };
    auto writeB = [&](Params& q, const Eigen::VectorXd& delta) {
        for (int j = 1; j <= J - 2; ++j) q.phi[j] += delta[j - 1];
    };
    auto sep_scale = [&](const Params& q) {
        double s = q.intercepts.cwiseAbs().maxCoeff();
        if (d > 0) s = std::max(s, (data.X * q.beta).cwiseAbs().maxCoeff() * q.phi.cwiseAbs().maxCoeff());
        return s;
    };
    // joint pass over the full packing (alpha, beta, phi_free); used to polish the
    // optimum once the alternating loop has converged
    const int dimF = dimA + dimB;
    auto passFull = [&](const Params& q, ScoringState& st) {
        st.score = Eigen::VectorXd::Zero(dimF);
        st.info = Eigen::MatrixXd::Zero(dimF, dimF);
        Eigen::VectorXd p(J);
        Eigen::MatrixXd du(J, dimF);
        for (int i = 0; i < n; ++i) {
            const double eta = d > 0 ? q.beta.dot(data.X.row(i)) : 0.0;
            probs_stereotype(spec, q, eta, p);
            du.setZero();
            for (int j = 0; j < J; ++j) {
                if (j < J - 1) du(j, j) = 1.0;
                if (d > 0) du.block(j, J - 1, 1, d) = q.phi[j] * data.X.row(i);
                if (j >= 1 && j <= J - 2) du(j, dimA + j - 1) = eta;
            }
            softmax_accumulate(p, du, static_cast<int>(data.y[i]), st);
        }
    };
    auto writeFull = [&](Params& q, const Eigen::VectorXd& delta) {
        q.intercepts += delta.head(J - 1);
        q.beta += delta.segment(J - 1, d);
        for (int j = 1; j <= J - 2; ++j) q.phi[j] += delta[dimA + j - 1];
    };

    double ll = ll_of(par);
    if (!std::isfinite(ll)) throw NonConvergence("invalid starting values");
    bool converged = false;
    int it = 0;
    while (it < 100) {
        ++it;
        const double ll_prev = ll;
        step_block(par, passA, writeA, dimA, ll);
        step_block(par, passB, writeB, dimB, ll);
        if (sep_scale(par) > 30.0)
            throw SeparationDetected("linear predictor escaped past 30; MLE likely does not exist");
        if (std::abs(ll - ll_prev) < 1e-8 * (std::abs(ll_prev) + 1.0)) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NonConvergence("no convergence in 100 alternating iterations");
    for (int extra = 0; extra < 8; ++extra) {
        ScoringState st;
        passFull(par, st);
        if (st.score.norm() < 1e-8) break;
        if (!step_block(par, passFull, writeFull, dimF, ll)) break;  // phi unidentified: leave as is
        ++it;
    }

    FittedModel m;
    m.spec = spec;
    static_cast<Params&>(m) = par;
    m.loglik = ll;
    m.converged = converged;
    m.n_iter = it;
    for (int j = 0; j + 1 < J; ++j)
        if (m.phi[j] > m.phi[j + 1]) m.phi_non_monotone = true;
    return m;
}

}  // namespace detail

/// Maximum-likelihood fit of Model (1) for the requested family.
inline FittedModel fit(const ModelSpec& spec, const Dataset& data) {
    spec.validate();
    const int n_int = spec.family == Family::Linear ? 1 : spec.J() - 1;
    detail::check_design(spec, data, n_int);
    switch (spec.family) {
        case Family::Linear: return detail::fit_linear(spec, data);
        case Family::BinaryGLM:
        case Family::CumulativeLink: return detail::fit_cumulative(spec, data);
        case Family::AdjacentCategoryLogit: return detail::fit_acl(spec, data);
        case Family::OrderedStereotype: return detail::fit_stereotype(spec, data);
    }
    throw ConfigError("unknown family");
}

}  // namespace mixtau::models
