#pragma once

#include <Eigen/Dense>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixtau/assoc.hpp"
#include "mixtau/dataset.hpp"
#include "mixtau/errors.hpp"
#include "mixtau/inference.hpp"
#include "mixtau/lowess.hpp"
#include "mixtau/models.hpp"
#include "mixtau/surrogate.hpp"

namespace mixtau::io {

using json = nlohmann::ordered_json;
using models::Family;
using models::Link;
using models::ModelSpec;
using models::OutcomeKind;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // raw cells, quotes removed
    std::vector<int> line_numbers;               // 1-based file line of each row

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw MissingColumn("column '" + name + "' not found in header");
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else {
            cell += c;
        }
    }
    out.push_back(cell);
    return out;
}

inline bool missing_cell(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

inline std::optional<double> parse_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') continue;  // comment header lines (seed records etc.)
        auto cells = detail::split_csv_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
        } else {
            t.rows.push_back(std::move(cells));
            t.line_numbers.push_back(line_no);
        }
    }
    if (t.header.empty()) throw EmptyData("CSV stream had no header row");
    return t;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EmptyData("cannot open '" + path + "'");
    return read_csv(in);
}

// ---------------------------------------------------------------------------
// analysis configuration
// ---------------------------------------------------------------------------

struct OutcomeConfig {
    std::string column;
    OutcomeKind kind = OutcomeKind::Continuous;
    Family family = Family::Linear;
    Link link = Link::Logit;
    std::vector<std::string> categories;  // optional declared ordering for ordinal labels
};

struct AnalysisConfig {
    std::vector<OutcomeConfig> outcomes;
    std::vector<std::string> covariates;
    int M = 30;
    int B = 1000;
    double alpha = 0.05;
    std::optional<double> delta;
    std::uint64_t seed = 0;

    void validate() const {
        if (outcomes.size() < 1) throw ConfigError("at least one outcome is required");
        for (const auto& o : outcomes)
            for (const auto& c : covariates)
                if (o.column == c) throw ConfigError("column '" + c + "' is both outcome and covariate");
        if (M < 1) throw ConfigError("M must be >= 1");
        if (B < 2) throw ConfigError("B must be >= 2");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
        if (delta && *delta < 0.0) throw ConfigError("delta must be >= 0");
    }
};

namespace detail {

inline OutcomeKind parse_kind(const std::string& s) {
    if (s == "continuous") return OutcomeKind::Continuous;
    if (s == "binary") return OutcomeKind::Binary;
    if (s == "ordinal") return OutcomeKind::Ordinal;
    throw ConfigError("unknown outcome kind '" + s + "'");
}

inline Family parse_family(const std::string& s) {
    if (s == "linear") return Family::Linear;
    if (s == "binary_glm") return Family::BinaryGLM;
    if (s == "cumulative_link") return Family::CumulativeLink;
    if (s == "adjacent_category_logit") return Family::AdjacentCategoryLogit;
    if (s == "ordered_stereotype") return Family::OrderedStereotype;
    throw ConfigError("unknown family '" + s + "'");
}

inline Link parse_link(const std::string& s) {
    if (s == "logit") return Link::Logit;
    if (s == "probit") return Link::Probit;
    if (s == "cloglog") return Link::CLogLog;
    throw ConfigError("unknown link '" + s + "'");
}

inline Family default_family(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::Continuous: return Family::Linear;
        case OutcomeKind::Binary: return Family::BinaryGLM;
        case OutcomeKind::Ordinal: return Family::CumulativeLink;
    }
    return Family::Linear;
}

}  // namespace detail

inline AnalysisConfig config_from_json(const json& j) {
    AnalysisConfig cfg;
    if (!j.contains("outcomes")) throw ConfigError("config needs an 'outcomes' array");
    for (const auto& jo : j.at("outcomes")) {
        OutcomeConfig o;
        o.column = jo.at("column").get<std::string>();
        o.kind = detail::parse_kind(jo.value("kind", "continuous"));
        o.family = jo.contains("family") ? detail::parse_family(jo.at("family").get<std::string>())
                                         : detail::default_family(o.kind);
        o.link = detail::parse_link(jo.value("link", "logit"));
        if (jo.contains("categories"))
            for (const auto& c : jo.at("categories")) o.categories.push_back(c.get<std::string>());
        cfg.outcomes.push_back(std::move(o));
    }
    if (j.contains("covariates"))
        for (const auto& c : j.at("covariates")) cfg.covariates.push_back(c.get<std::string>());
    cfg.M = j.value("M", 30);
    cfg.B = j.value("B", 1000);
    cfg.alpha = j.value("alpha", 0.05);
    if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
    cfg.seed = j.value("seed", 0ull);
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// dataset loading
// ---------------------------------------------------------------------------

struct LoadedData {
    std::vector<Eigen::VectorXd> outcomes;  // encoded columns, one per configured outcome
    std::vector<int> outcome_categories;    // J per outcome (0 for continuous)
    Eigen::MatrixXd X;
    std::vector<int> dropped_lines;  // 1-based file lines rejected for missing cells
    int n = 0;
};

namespace detail {

inline Eigen::VectorXd encode_outcome(const OutcomeConfig& oc, const std::vector<std::string>& cells,
                                      int* J_out) {
    const auto n = static_cast<Eigen::Index>(cells.size());
    Eigen::VectorXd col(n);
    if (oc.kind == OutcomeKind::Continuous) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto v = parse_double(cells[static_cast<std::size_t>(i)]);
            if (!v) throw NonNumericCell("non-numeric value '" + cells[static_cast<std::size_t>(i)] +
                                         "' in column '" + oc.column + "'");
            col[i] = *v;
        }
        *J_out = 0;
        return col;
    }
    if (!oc.categories.empty()) {
        // declared ordering; every declared category must be observed
        std::map<std::string, int> code;
        for (std::size_t k = 0; k < oc.categories.size(); ++k)
            code[oc.categories[k]] = static_cast<int>(k) + 1;
        std::vector<int> counts(oc.categories.size(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto it = code.find(cells[static_cast<std::size_t>(i)]);
            if (it == code.end())
                throw OutOfSupport("value '" + cells[static_cast<std::size_t>(i)] +
                                   "' not among declared categories of '" + oc.column + "'");
            col[i] = it->second;
            ++counts[static_cast<std::size_t>(it->second - 1)];
        }
        for (std::size_t k = 0; k < counts.size(); ++k)
            if (counts[k] == 0)
                throw EmptyCategory("declared category '" + oc.categories[k] + "' of '" + oc.column +
                                    "' is unobserved");
        *J_out = static_cast<int>(oc.categories.size());
        return col;
    }
    // numeric ordinal column: encode 1..J by sorted unique values
    Eigen::VectorXd raw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto v = parse_double(cells[static_cast<std::size_t>(i)]);
        if (!v) throw NonNumericCell("non-numeric value '" + cells[static_cast<std::size_t>(i)] +
                                     "' in ordinal column '" + oc.column + "' (declare categories for labels)");
        raw[i] = *v;
    }
    const OrdinalEncoding enc = encode_ordinal(raw);
    *J_out = static_cast<int>(enc.levels.size());
    return enc.codes;
}

}  // namespace detail

/// Extract outcomes and covariates from a parsed CSV per the configuration. Rows
/// with missing cells in any used column are dropped (line numbers recorded);
/// ordinal encoding follows declared category order, or sorted unique values.
inline LoadedData load_dataset(const CsvTable& table, const AnalysisConfig& cfg) {
    cfg.validate();
    std::vector<int> out_cols, cov_cols;
    for (const auto& o : cfg.outcomes) out_cols.push_back(table.column(o.column));
    for (const auto& c : cfg.covariates) cov_cols.push_back(table.column(c));

    LoadedData ld;
    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        bool ok = true;
        for (int c : out_cols)
            if (static_cast<std::size_t>(c) >= table.rows[r].size() ||
                detail::missing_cell(table.rows[r][static_cast<std::size_t>(c)]))
                ok = false;
        for (int c : cov_cols)
            if (static_cast<std::size_t>(c) >= table.rows[r].size() ||
                detail::missing_cell(table.rows[r][static_cast<std::size_t>(c)]))
                ok = false;
        if (ok)
            kept.push_back(r);
        else
            ld.dropped_lines.push_back(table.line_numbers[r]);
    }
    if (kept.empty()) throw EmptyAfterFiltering("no complete rows left after filtering");
    ld.n = static_cast<int>(kept.size());

    for (std::size_t k = 0; k < cfg.outcomes.size(); ++k) {
        std::vector<std::string> cells;
        cells.reserve(kept.size());
        for (std::size_t r : kept) cells.push_back(table.rows[r][static_cast<std::size_t>(out_cols[k])]);
        int J = 0;
        ld.outcomes.push_back(detail::encode_outcome(cfg.outcomes[k], cells, &J));
        ld.outcome_categories.push_back(J);
    }

    ld.X.resize(ld.n, static_cast<Eigen::Index>(cov_cols.size()));
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
        for (std::size_t i = 0; i < kept.size(); ++i) {
            const std::string& cell = table.rows[kept[i]][static_cast<std::size_t>(cov_cols[c])];
            const auto v = detail::parse_double(cell);
            if (!v)
                throw NonNumericCell("non-numeric covariate value '" + cell + "' in column '" +
                                     cfg.covariates[c] + "' (line " +
                                     std::to_string(table.line_numbers[kept[i]]) + ")");
            ld.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = *v;
        }
    }
    return ld;
}

inline ModelSpec spec_for(const OutcomeConfig& oc, int J) {
    ModelSpec s;
    s.family = oc.family;
    s.link = oc.link;
    s.outcome = oc.kind;
    s.n_categories = J;
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

namespace detail {

inline json estimate_json(const assoc::AssocEstimate& est, const inference::BootstrapDistribution& dist,
                          double alpha, const std::optional<double>& delta) {
    const inference::Summary s = inference::summarize(dist, alpha);
    json j;
    j["t_hat"] = est.t_hat;
    j["M"] = est.M;
    j["n"] = est.n;
    j["se"] = s.se;
    j["ci"] = {s.ci_lo, s.ci_hi};
    j["p_simple"] = inference::p_value_simple(dist);
    if (delta) j["p_composite"] = inference::p_value_composite(dist, *delta);
    j["bootstrap_B"] = dist.B();
    j["bootstrap_failures"] = dist.failures;
    return j;
}

inline std::uint64_t pair_seed(std::uint64_t seed, std::size_t i, std::size_t j, std::uint64_t tag) {
    return mixtau::detail::mix64(seed ^ mixtau::detail::mix64((i << 24) ^ (j << 8) ^ tag));
}

}  // namespace detail

/// Marginal and partial association report for every outcome pair, with bootstrap
/// SEs, percentile CIs, p-values, and the moderation point estimates. Deterministic
/// for a fixed seed.
inline json cmd_assoc(const CsvTable& table, const AnalysisConfig& cfg) {
    if (cfg.outcomes.size() < 2) throw ConfigError("assoc needs at least two outcomes");
    const LoadedData ld = load_dataset(table, cfg);
    json report;
    report["command"] = "assoc";
    report["n"] = ld.n;
    report["dropped_lines"] = ld.dropped_lines;
    report["M"] = cfg.M;
    report["B"] = cfg.B;
    report["alpha"] = cfg.alpha;
    if (cfg.delta) report["delta"] = *cfg.delta;
    report["seed"] = cfg.seed;
    report["covariates"] = cfg.covariates;
    report["pairs"] = json::array();

    for (std::size_t i = 0; i < cfg.outcomes.size(); ++i) {
        for (std::size_t j = i + 1; j < cfg.outcomes.size(); ++j) {
            PairData pd{ld.outcomes[i], ld.outcomes[j], ld.X};
            const ModelSpec s1 = spec_for(cfg.outcomes[i], ld.outcome_categories[i]);
            const ModelSpec s2 = spec_for(cfg.outcomes[j], ld.outcome_categories[j]);

            inference::BootstrapConfig bc;
            bc.B = cfg.B;
            bc.M = cfg.M;
            bc.alpha = cfg.alpha;

            const RngStream est_rng = RngStream::root(detail::pair_seed(cfg.seed, i, j, 0xE57));
            const assoc::AssocEstimate marg =
                assoc::marginal_t(pd.y1, pd.y2, s1.outcome, s2.outcome, cfg.M, est_rng.child(0));
            const assoc::AssocEstimate part = assoc::partial_t(pd, s1, s2, cfg.M, est_rng.child(1));

            bc.seed = detail::pair_seed(cfg.seed, i, j, 0xB001);
            const auto marg_dist = inference::bootstrap_marginal_t(pd, s1.outcome, s2.outcome, bc);
            bc.seed = detail::pair_seed(cfg.seed, i, j, 0xB002);
            const auto part_dist = inference::bootstrap_t(pd, s1, s2, bc);

            const assoc::ModerationResult mod = assoc::moderation(part, marg);
            json pj;
            pj["y1"] = cfg.outcomes[i].column;
            pj["y2"] = cfg.outcomes[j].column;
            pj["marginal"] = detail::estimate_json(marg, marg_dist, cfg.alpha, cfg.delta);
            pj["partial"] = detail::estimate_json(part, part_dist, cfg.alpha, cfg.delta);
            pj["moderation"]["delta"] = mod.delta;
            if (mod.defined)
                pj["moderation"]["pct_change"] = mod.pct_change;
            else
                pj["moderation"]["pct_change"] = nullptr;
            report["pairs"].push_back(std::move(pj));
        }
    }
    return report;
}

/// Bootstrap moderation report (pct_change distribution) per outcome pair; with a
/// second cohort, reports the cohort difference of pct_change as well.
inline json cmd_moderation(const CsvTable& table, const AnalysisConfig& cfg,
                           const CsvTable* cohort2 = nullptr) {
    if (cfg.outcomes.size() < 2) throw ConfigError("moderation needs at least two outcomes");
    const LoadedData ld = load_dataset(table, cfg);
    std::optional<LoadedData> ld2;
    if (cohort2) ld2 = load_dataset(*cohort2, cfg);

    json report;
    report["command"] = "moderation";
    report["n"] = ld.n;
    if (ld2) report["n_cohort2"] = ld2->n;
    report["M"] = cfg.M;
    report["B"] = cfg.B;
    report["seed"] = cfg.seed;
    report["pairs"] = json::array();

    for (std::size_t i = 0; i < cfg.outcomes.size(); ++i) {
        for (std::size_t j = i + 1; j < cfg.outcomes.size(); ++j) {
            PairData pd{ld.outcomes[i], ld.outcomes[j], ld.X};
            const ModelSpec s1 = spec_for(cfg.outcomes[i], ld.outcome_categories[i]);
            const ModelSpec s2 = spec_for(cfg.outcomes[j], ld.outcome_categories[j]);
            inference::BootstrapConfig bc;
            bc.B = cfg.B;
            bc.M = cfg.M;
            bc.alpha = cfg.alpha;
            bc.seed = detail::pair_seed(cfg.seed, i, j, 0x30D);

            json pj;
            pj["y1"] = cfg.outcomes[i].column;
            pj["y2"] = cfg.outcomes[j].column;
            const auto dist = inference::bootstrap_moderation(pd, s1, s2, bc);
            const auto s = inference::summarize(dist, cfg.alpha);
            pj["pct_change"]["se"] = s.se;
            pj["pct_change"]["ci"] = {s.ci_lo, s.ci_hi};
            pj["pct_change"]["p_simple"] = inference::p_value_simple(dist);
            pj["pct_change"]["failures"] = dist.failures;
            {
                double mean = 0.0;
                for (double r : dist.replicates) mean += r;
                pj["pct_change"]["bootstrap_mean"] = mean / dist.B();
            }
            if (ld2) {
                PairData pd2{ld2->outcomes[i], ld2->outcomes[j], ld2->X};
                const auto diff = inference::bootstrap_moderation_diff(pd, pd2, s1, s2, bc);
                const auto sd = inference::summarize(diff, cfg.alpha);
                pj["cohort_difference"]["se"] = sd.se;
                pj["cohort_difference"]["ci"] = {sd.ci_lo, sd.ci_hi};
                pj["cohort_difference"]["p_simple"] = inference::p_value_simple(diff);
            }
            report["pairs"].push_back(std::move(pj));
        }
    }
    return report;
}

/// Single-model fit report.
inline json cmd_fit(const CsvTable& table, const AnalysisConfig& cfg, std::size_t outcome_index = 0) {
    const LoadedData ld = load_dataset(table, cfg);
    if (outcome_index >= cfg.outcomes.size()) throw ConfigError("outcome index out of range");
    const ModelSpec spec =
        spec_for(cfg.outcomes[outcome_index], ld.outcome_categories[outcome_index]);
    const Dataset data{ld.outcomes[outcome_index], ld.X};
    const models::FittedModel m = models::fit(spec, data);
    json j;
    j["command"] = "fit";
    j["outcome"] = cfg.outcomes[outcome_index].column;
    j["family"] = models::family_name(spec.family);
    if (spec.family == Family::BinaryGLM || spec.family == Family::CumulativeLink)
        j["link"] = models::link_name(spec.link);
    j["n"] = data.n();
    j["beta"] = std::vector<double>(m.beta.data(), m.beta.data() + m.beta.size());
    j["intercepts"] = std::vector<double>(m.intercepts.data(), m.intercepts.data() + m.intercepts.size());
    if (spec.family == Family::Linear) j["sigma"] = m.sigma;
    if (spec.family == Family::OrderedStereotype) {
        j["phi"] = std::vector<double>(m.phi.data(), m.phi.data() + m.phi.size());
        j["phi_non_monotone"] = m.phi_non_monotone;
    }
    j["loglik"] = m.loglik;
    j["converged"] = m.converged;
    j["n_iter"] = m.n_iter;
    return j;
}

// ---------------------------------------------------------------------------
// partial regression plot data
// ---------------------------------------------------------------------------

struct PlotData {
    Eigen::VectorXd h_r1, h_r2;       // transformed residual pairs, first surrogate column
    lowess::Curve curve;              // LOWESS of h_r2 on h_r1
    std::uint64_t seed = 0;
};

inline PlotData make_plotdata(const PairData& pd, const ModelSpec& s1, const ModelSpec& s2, int /*M*/,
                              std::uint64_t seed, double frac = 2.0 / 3.0, int iters = 3) {
    Dataset d1{pd.y1, pd.X}, d2{pd.y2, pd.X};
    const models::FittedModel m1 = models::fit(s1, d1);
    const models::FittedModel m2 = models::fit(s2, d2);
    const RngStream rng = RngStream::root(seed);
    const auto r1 = surrogate::residual_matrix(m1, d1, 1, rng.child(0));
    const auto r2 = surrogate::residual_matrix(m2, d2, 1, rng.child(1));
    PlotData out;
    out.seed = seed;
    out.h_r1 = surrogate::normalize(Eigen::VectorXd(r1.values.col(0)));
    out.h_r2 = surrogate::normalize(Eigen::VectorXd(r2.values.col(0)));
    out.curve = lowess::fit(out.h_r1, out.h_r2, frac, iters);
    return out;
}

inline PlotData cmd_plotdata(const CsvTable& table, const AnalysisConfig& cfg, std::size_t i,
                             std::size_t j, double frac = 2.0 / 3.0, int iters = 3) {
    if (i >= cfg.outcomes.size() || j >= cfg.outcomes.size() || i == j)
        throw ConfigError("plotdata needs two distinct configured outcomes");
    const LoadedData ld = load_dataset(table, cfg);
    PairData pd{ld.outcomes[i], ld.outcomes[j], ld.X};
    const ModelSpec s1 = spec_for(cfg.outcomes[i], ld.outcome_categories[i]);
    const ModelSpec s2 = spec_for(cfg.outcomes[j], ld.outcome_categories[j]);
    return make_plotdata(pd, s1, s2, cfg.M, cfg.seed, frac, iters);
}

inline void write_plot_points_csv(std::ostream& os, const PlotData& pd) {
    os << "# seed=" << pd.seed << "\nh_r1,h_r2\n";
    for (Eigen::Index i = 0; i < pd.h_r1.size(); ++i) os << pd.h_r1[i] << ',' << pd.h_r2[i] << '\n';
}

inline void write_plot_curve_csv(std::ostream& os, const PlotData& pd) {
    os << "# seed=" << pd.seed << "\nx,smooth\n";
    for (Eigen::Index i = 0; i < pd.curve.x.size(); ++i)
        os << pd.curve.x[i] << ',' << pd.curve.fitted[i] << '\n';
}

}  // namespace mixtau::io
