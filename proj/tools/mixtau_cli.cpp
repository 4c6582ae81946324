// Command-line front end: fit, assoc, moderation, plotdata, simulate, power.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixtau/mixtau.hpp"

namespace {

using namespace mixtau;

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw EmptyData("cannot open output file '" + path + "'");
    out << text;
}

io::AnalysisConfig load_config(const std::string& path, std::optional<int> M, std::optional<int> B,
                               std::optional<double> alpha, std::optional<double> delta,
                               std::optional<std::uint64_t> seed) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    io::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config JSON parse failure: ") + e.what());
    }
    io::AnalysisConfig cfg = io::config_from_json(j);
    if (M) cfg.M = *M;
    if (B) cfg.B = *B;
    if (alpha) cfg.alpha = *alpha;
    if (delta) cfg.delta = *delta;
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

simgen::EtaShape parse_shape(const std::string& s) {
    if (s == "linear") return simgen::EtaShape::LinearEta;
    if (s == "quadratic") return simgen::EtaShape::QuadraticEta;
    if (s == "exponential") return simgen::EtaShape::ExponentialEta;
    throw ConfigError("unknown shape '" + s + "'");
}

void write_wellbeing_csv(std::ostream& os, const simgen::WellbeingScenario& sc, const PairData& d) {
    os << "# seed=" << sc.seed << "\nwellbeing,anxiety";
    for (const auto& g : sc.covariate_gen) os << ',' << g.name;
    os << '\n';
    for (int i = 0; i < d.n(); ++i) {
        os << d.y1[i] << ',' << d.y2[i];
        for (int k = 0; k < d.X.cols(); ++k) os << ',' << d.X(i, k);
        os << '\n';
    }
}

void write_power_data_csv(std::ostream& os, std::uint64_t seed, const PairData& d) {
    os << "# seed=" << seed << "\ny1,y2,x1,x2\n";
    for (int i = 0; i < d.n(); ++i)
        os << d.y1[i] << ',' << d.y2[i] << ',' << d.X(i, 0) << ',' << d.X(i, 1) << '\n';
}

int run(int argc, char** argv) {
    CLI::App app{"partial association between mixed-type outcomes via surrogate residuals"};
    app.require_subcommand(1);

    std::string data_path, data2_path, config_path, out_path, points_path, curve_path;
    std::optional<int> M, B;
    std::optional<double> alpha, delta;
    std::optional<std::uint64_t> seed_opt;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--data", data_path, "input CSV file")->required();
        cmd->add_option("--config", config_path, "analysis config JSON")->required();
        cmd->add_option("--out", out_path, "output path ('-' for stdout)");
        cmd->add_option("--M", M, "surrogate simulations per estimate");
        cmd->add_option("--B", B, "bootstrap replicates");
        cmd->add_option("--alpha", alpha, "CI level complement");
        cmd->add_option("--delta", delta, "composite null threshold");
        cmd->add_option("--seed", seed_opt, "RNG seed");
    };

    auto* c_fit = app.add_subcommand("fit", "fit one covariate-adjustment model");
    int outcome_index = 0;
    add_common(c_fit);
    c_fit->add_option("--outcome", outcome_index, "index into the configured outcomes");

    auto* c_assoc = app.add_subcommand("assoc", "marginal/partial association report");
    add_common(c_assoc);

    auto* c_mod = app.add_subcommand("moderation", "bootstrap moderation report");
    add_common(c_mod);
    c_mod->add_option("--data2", data2_path, "second cohort CSV (difference report)");

    auto* c_plot = app.add_subcommand("plotdata", "partial regression plot data with LOWESS");
    add_common(c_plot);
    std::string pair_spec = "0,1";
    double frac = 2.0 / 3.0;
    int iters = 3;
    c_plot->add_option("--pair", pair_spec, "outcome indices, e.g. 0,1");
    c_plot->add_option("--frac", frac, "LOWESS bandwidth fraction");
    c_plot->add_option("--iters", iters, "LOWESS robustness iterations");
    c_plot->add_option("--points", points_path, "points CSV output")->required();
    c_plot->add_option("--curve", curve_path, "curve CSV output")->required();

    auto* c_sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    std::string scenario = "wellbeing", shape_name = "linear", beta_a_spec;
    std::uint64_t sim_seed = 0;
    int sim_n = 0;
    double lambda = 0.0, noise_sd = 1.0;
    bool double_beta = false;
    c_sim->add_option("--scenario", scenario, "wellbeing | power")->required();
    c_sim->add_option("--seed", sim_seed, "RNG seed")->required();
    c_sim->add_option("--n", sim_n, "sample size (scenario default if omitted)");
    c_sim->add_option("--beta-a", beta_a_spec, "wellbeing: anxiety dummy effects, e.g. -2,-3,10,-30");
    c_sim->add_flag("--double-beta", double_beta, "wellbeing: double the anxiety dummy effects");
    c_sim->add_option("--lambda", lambda, "power: association strength");
    c_sim->add_option("--shape", shape_name, "power: linear | quadratic | exponential");
    c_sim->add_option("--noise-sd", noise_sd, "power: error SD");
    c_sim->add_option("--out", out_path, "output path ('-' for stdout)");

    auto* c_pow = app.add_subcommand("power", "run the power study grid");
    std::uint64_t pow_seed = 0;
    std::string lambdas_spec = "0,0.05,0.1,0.15,0.2,0.3", shapes_spec = "linear,quadratic,exponential";
    int pow_reps = 1000, pow_n = 200, pow_B = 300;
    c_pow->add_option("--seed", pow_seed, "RNG seed")->required();
    c_pow->add_option("--lambdas", lambdas_spec, "comma-separated lambda grid");
    c_pow->add_option("--shapes", shapes_spec, "comma-separated shapes");
    c_pow->add_option("--reps", pow_reps, "datasets per cell");
    c_pow->add_option("--n", pow_n, "sample size per dataset");
    c_pow->add_option("--bootstrap-b", pow_B, "bootstrap replicates inside the proposed test");
    c_pow->add_option("--out", out_path, "output path ('-' for stdout)");

    CLI11_PARSE(app, argc, argv);

    if (c_fit->parsed() || c_assoc->parsed() || c_mod->parsed()) {
        const io::AnalysisConfig cfg = load_config(config_path, M, B, alpha, delta, seed_opt);
        const io::CsvTable table = io::read_csv_file(data_path);
        io::json report;
        if (c_fit->parsed())
            report = io::cmd_fit(table, cfg, static_cast<std::size_t>(outcome_index));
        else if (c_assoc->parsed())
            report = io::cmd_assoc(table, cfg);
        else {
            std::optional<io::CsvTable> t2;
            if (!data2_path.empty()) t2 = io::read_csv_file(data2_path);
            report = io::cmd_moderation(table, cfg, t2 ? &*t2 : nullptr);
        }
        write_text(out_path, report.dump(2) + "\n");
        return 0;
    }

    if (c_plot->parsed()) {
        const io::AnalysisConfig cfg = load_config(config_path, M, B, alpha, delta, seed_opt);
        const io::CsvTable table = io::read_csv_file(data_path);
        const auto pair = parse_list(pair_spec);
        if (pair.size() != 2) throw ConfigError("--pair expects two indices");
        const io::PlotData pd = io::cmd_plotdata(table, cfg, static_cast<std::size_t>(pair[0]),
                                                 static_cast<std::size_t>(pair[1]), frac, iters);
        std::ostringstream pts, crv;
        io::write_plot_points_csv(pts, pd);
        io::write_plot_curve_csv(crv, pd);
        write_text(points_path, pts.str());
        write_text(curve_path, crv.str());
        return 0;
    }

    if (c_sim->parsed()) {
        std::ostringstream os;
        if (scenario == "wellbeing") {
            simgen::WellbeingScenario sc;
            sc.seed = sim_seed;
            if (sim_n > 0) sc.n = sim_n;
            if (!beta_a_spec.empty()) {
                const auto v = parse_list(beta_a_spec);
                if (v.size() != 4) throw ConfigError("--beta-a expects four values");
                for (int k = 0; k < 4; ++k) sc.beta_A[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(k)];
            }
            if (double_beta)
                for (auto& b : sc.beta_A) b *= 2.0;
            const PairData d = simgen::gen_wellbeing(sc, RngStream::root(sc.seed));
            write_wellbeing_csv(os, sc, d);
        } else if (scenario == "power") {
            simgen::PowerScenario sc;
            sc.seed = sim_seed;
            sc.lambda = lambda;
            sc.shape = parse_shape(shape_name);
            sc.noise_sd = noise_sd;
            if (sim_n > 0) sc.n = sim_n;
            const PairData d = simgen::gen_power(sc, RngStream::root(sc.seed));
            write_power_data_csv(os, sc.seed, d);
        } else {
            throw ConfigError("unknown scenario '" + scenario + "'");
        }
        write_text(out_path, os.str());
        return 0;
    }

    if (c_pow->parsed()) {
        std::vector<simgen::PowerScenario> grid;
        std::stringstream ss(shapes_spec);
        std::string shape_tok;
        while (std::getline(ss, shape_tok, ',')) {
            for (double l : parse_list(lambdas_spec)) {
                simgen::PowerScenario sc;
                sc.lambda = l;
                sc.shape = parse_shape(shape_tok);
                sc.n = pow_n;
                sc.reps = pow_reps;
                sc.seed = pow_seed;
                grid.push_back(sc);
            }
        }
        const auto cells = simgen::run_power_study(grid, pow_B);
        std::ostringstream os;
        simgen::write_power_csv(os, cells);
        write_text(out_path, os.str());
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mixtau::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case mixtau::ErrorKind::Config: return 2;
            case mixtau::ErrorKind::Data: return 3;
            case mixtau::ErrorKind::Numeric: return 4;
        }
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
