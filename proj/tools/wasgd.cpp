// wasgd: weighted-averaged SGD simulations from the command line.
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wasgd/config.hpp"
#include "wasgd/error.hpp"
#include "wasgd/harness.hpp"

namespace {

using wasgd::ConfigError;
using wasgd::Experiment;
using wasgd::ExperimentConfig;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw ConfigError(std::string("cannot parse ") + flag + " value '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError(std::string(flag) + " needs at least one value");
    return out;
}

// Flag values; only the ones given on the command line override the config file.
struct Flags {
    std::string config;
    std::optional<std::string> model;
    std::optional<std::size_t> dim;
    std::optional<std::string> xstar;
    std::optional<double> alpha;
    std::optional<double> eta;
    std::optional<double> eta_first;
    std::optional<std::size_t> n;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> schemes;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    std::optional<double> sigma;
    std::optional<double> rho;
    std::optional<std::string> x0;
    std::optional<std::string> checkpoints;
    std::optional<double> level;
    std::optional<std::string> method;
    std::optional<std::string> critical_values;
    std::optional<std::size_t> grid;
    std::optional<std::size_t> paths;
    std::optional<double> lambda;
    std::optional<double> c_tilde;
    std::optional<std::size_t> sandwich_reps;
    bool print_config = false;
};

void add_flags(CLI::App& cmd, Flags& f) {
    cmd.add_option("--config", f.config, "JSON config file; flags override its fields")->check(CLI::ExistingFile);
    cmd.add_option("--model", f.model, "mean | linear | logistic | expectile");
    cmd.add_option("--dim", f.dim, "model dimension");
    cmd.add_option("--xstar", f.xstar, "true parameter, comma separated");
    cmd.add_option("--alpha", f.alpha, "step-size exponent, eta_i = eta * i^-alpha");
    cmd.add_option("--eta", f.eta, "step-size constant");
    cmd.add_option("--eta-first", f.eta_first, "override eta_1");
    cmd.add_option("--n", f.n, "horizon (number of SGD steps)");
    cmd.add_option("--reps", f.reps, "Monte-Carlo replications");
    cmd.add_option("--seed", f.seed, "base seed; replication r uses stream r");
    cmd.add_option("--scheme", f.schemes,
                   "averaging scheme (repeatable): uniform, poly:gamma=G, suffix:kappa=K, online-suffix, "
                   "adaptive[:alpha=A], last, optimal, explicit:@FILE");
    cmd.add_option("--out", f.out, "output file (CSV or JSON); stdout when omitted");
    cmd.add_option("--workers", f.workers, "worker threads, 0 = all cores");
    cmd.add_option("--sigma", f.sigma, "noise standard deviation (mean/linear)");
    cmd.add_option("--rho", f.rho, "expectile level");
    cmd.add_option("--x0", f.x0, "starting point: zero, xstar or comma-separated coordinates");
    cmd.add_option("--checkpoints", f.checkpoints, "MSE checkpoints, comma separated");
    cmd.add_option("--level", f.level, "two-sided confidence level");
    cmd.add_option("--method", f.method, "plugin | random_scaling");
    cmd.add_option("--critical-values", f.critical_values, "critical-value table CSV");
    cmd.add_option("--grid", f.grid, "Brownian grid size for critical values");
    cmd.add_option("--paths", f.paths, "simulated paths for critical values");
    cmd.add_option("--lambda", f.lambda, "lambda in the smoothness condition");
    cmd.add_option("--c-tilde", f.c_tilde, "constant of the adjacent-difference condition");
    cmd.add_option("--sandwich-reps", f.sandwich_reps, "Monte-Carlo draws for the logistic sandwich");
    cmd.add_flag("--print-config", f.print_config, "print the resolved config as JSON and exit");
}

ExperimentConfig build_config(const Flags& f, Experiment experiment) {
    ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : wasgd::load_config(f.config);
    cfg.experiment = experiment;
    if (f.model) cfg.model = *f.model;
    if (f.dim) cfg.dim = *f.dim;
    if (f.xstar) cfg.x_star = parse_list(*f.xstar, "--xstar");
    if (f.alpha) cfg.alpha = *f.alpha;
    if (f.eta) cfg.eta = *f.eta;
    if (f.eta_first) cfg.eta_first = *f.eta_first;
    if (f.n) cfg.n = *f.n;
    if (f.reps) cfg.reps = *f.reps;
    if (f.seed) cfg.seed = *f.seed;
    if (!f.schemes.empty()) cfg.schemes = f.schemes;
    if (f.out) cfg.output = *f.out;
    if (f.workers) cfg.workers = *f.workers;
    if (f.sigma) cfg.sigma = *f.sigma;
    if (f.rho) cfg.rho = *f.rho;
    if (f.x0) {
        if (*f.x0 == "zero" || *f.x0 == "xstar") {
            cfg.x0 = *f.x0;
        } else {
            cfg.x0 = parse_list(*f.x0, "--x0");
        }
    }
    if (f.checkpoints) {
        cfg.checkpoints.clear();
        for (double c : parse_list(*f.checkpoints, "--checkpoints")) {
            if (c < 1.0 || c != std::floor(c)) throw ConfigError("checkpoints must be positive integers");
            cfg.checkpoints.push_back(static_cast<std::size_t>(c));
        }
    }
    if (f.level) cfg.level = *f.level;
    if (f.method) cfg.method = wasgd::parse_ci_method(*f.method);
    if (f.critical_values) cfg.critical_values = *f.critical_values;
    if (f.grid) cfg.grid = *f.grid;
    if (f.paths) cfg.paths = *f.paths;
    if (f.lambda) cfg.lambda = *f.lambda;
    if (f.c_tilde) cfg.c_tilde = *f.c_tilde;
    if (f.sandwich_reps) cfg.sandwich_reps = *f.sandwich_reps;
    return wasgd::resolve(std::move(cfg));
}

// Writes the report to --out (summary on stdout) or to stdout (summary on stderr).
template <class Report>
void emit(const ExperimentConfig& cfg, const Report& report, std::ostream*& summary) {
    if (cfg.output.empty()) {
        wasgd::write_csv(std::cout, report);
        summary = &std::cerr;
        return;
    }
    std::ofstream out(cfg.output);
    if (!out) throw ConfigError("cannot write '" + cfg.output + "'");
    wasgd::write_csv(out, report);
    summary = &std::cout;
}

void run(Experiment experiment, const Flags& flags) {
    const ExperimentConfig cfg = build_config(flags, experiment);
    if (flags.print_config) {
        std::cout << wasgd::config_to_json(cfg).dump(2) << '\n';
        return;
    }
    std::ostream* summary = &std::cerr;
    std::ostream& log = std::cerr;
    log << std::setprecision(6);

    switch (experiment) {
        case Experiment::normality: {
            const auto report = wasgd::run_normality(cfg);
            emit(cfg, report, summary);
            *summary << std::setprecision(5) << "scheme coord prefactor  var_scaled var_unscaled ks_scaled\n";
            for (const auto& s : report.summaries) {
                *summary << s.scheme << ' ' << s.coord << ' ' << s.prefactor << ' ' << s.var_scaled << ' '
                         << s.var_unscaled << ' ' << s.ks_scaled << '\n';
            }
            break;
        }
        case Experiment::mse: {
            const auto report = wasgd::run_mse(cfg);
            emit(cfg, report, summary);
            *summary << std::setprecision(6) << "scheme n mse sd ratio_to_adaptive\n";
            for (const auto& r : report.rows) {
                *summary << r.scheme << ' ' << r.n << ' ' << r.mse << ' ' << r.sd << ' ' << r.ratio_to_adaptive
                         << '\n';
            }
            break;
        }
        case Experiment::coverage: {
            const auto report = wasgd::run_coverage(cfg);
            emit(cfg, report, summary);
            if (report.below_asymptotic) *summary << "warning: n is below the asymptotic regime\n";
            for (const auto& r : report.rows) {
                *summary << r.scheme << " coord " << r.coord << " coverage " << r.coverage << " mean_halfwidth "
                         << r.mean_halfwidth << '\n';
            }
            break;
        }
        case Experiment::weights_compare:
        case Experiment::oracle_weights: {
            const auto report = experiment == Experiment::oracle_weights ? wasgd::run_oracle_weights(cfg)
                                                                         : wasgd::run_weights_compare(cfg);
            emit(cfg, report, summary);
            *summary << "oracle predicted MSE " << report.oracle_predicted_mse << '\n';
            for (const auto& s : report.summaries) {
                *summary << s.scheme << " argmax " << s.argmax << " sup_distance_to_oracle "
                         << s.sup_distance_to_oracle << '\n';
            }
            break;
        }
        case Experiment::critical_values: {
            const auto table = wasgd::run_critical_values(cfg);
            const std::string header = wasgd::report_header(cfg, "");
            if (cfg.output.empty()) {
                std::cout << header << '\n';
                table.write_csv(std::cout);
            } else {
                std::ofstream out(cfg.output);
                if (!out) throw ConfigError("cannot write '" + cfg.output + "'");
                out << header << '\n';
                table.write_csv(out);
                summary = &std::cout;
            }
            for (std::size_t k = 0; k < table.levels.size(); ++k) {
                *summary << "q_" << table.levels[k] << " = " << table.quantiles[k] << '\n';
            }
            break;
        }
        case Experiment::check_scheme: {
            const auto report = wasgd::run_check_scheme(cfg);
            const std::string text = wasgd::to_json(report).dump(2);
            if (cfg.output.empty()) {
                std::cout << text << '\n';
            } else {
                std::ofstream out(cfg.output);
                if (!out) throw ConfigError("cannot write '" + cfg.output + "'");
                out << text << '\n';
            }
            for (const auto& c : report.checks) {
                for (const auto& w : c.warnings) log << "warning: " << c.scheme << ": " << w << '\n';
            }
            break;
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted-averaged SGD: simulations, optimal weights and online inference"};
    app.require_subcommand(1);

    Flags flags;
    std::optional<Experiment> chosen;

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo studies");
    simulate->require_subcommand(1);
    const std::pair<const char*, Experiment> studies[] = {{"normality", Experiment::normality},
                                                          {"mse", Experiment::mse},
                                                          {"coverage", Experiment::coverage},
                                                          {"weights-compare", Experiment::weights_compare}};
    for (const auto& [name, experiment] : studies) {
        auto* cmd = simulate->add_subcommand(name, std::string("simulate the ") + name + " study");
        add_flags(*cmd, flags);
        cmd->callback([&chosen, experiment = experiment] { chosen = experiment; });
    }
    const std::pair<const char*, Experiment> tools[] = {
        {"oracle-weights", Experiment::oracle_weights},
        {"critical-values", Experiment::critical_values},
        {"check-scheme", Experiment::check_scheme}};
    const char* descriptions[] = {"Monte-Carlo BLUE weights", "simulate random-scaling critical values",
                                  "validate averaging weights against the normality conditions"};
    for (std::size_t k = 0; k < 3; ++k) {
        auto* cmd = app.add_subcommand(tools[k].first, descriptions[k]);
        add_flags(*cmd, flags);
        cmd->callback([&chosen, experiment = tools[k].second] { chosen = experiment; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        run(*chosen, flags);
    } catch (const wasgd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const wasgd::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
