#include "wasgd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "wasgd/error.hpp"
#include "wasgd/optimal_weights.hpp"
#include "wasgd/parallel.hpp"
#include "wasgd/stats.hpp"

namespace wasgd {

namespace {

constexpr const char* kExpectileNote = "expectile response y ~ N(0,1) assumed";

// Collects every estimator's estimate whenever the stream reaches a checkpoint.
class CheckpointSink final : public StreamSink {
  public:
    CheckpointSink(std::span<const std::unique_ptr<Estimator>> estimators, std::span<const std::size_t> checkpoints,
                   const Vector& x_star)
        : estimators_(estimators),
          checkpoints_(checkpoints),
          x_star_(x_star),
          errors_(static_cast<Eigen::Index>(estimators.size()), static_cast<Eigen::Index>(checkpoints.size())) {}

    void push(const StepRecord& record) override {
        if (next_ >= checkpoints_.size() || record.index != checkpoints_[next_]) return;
        const double d = static_cast<double>(x_star_.size());
        for (std::size_t s = 0; s < estimators_.size(); ++s) {
            errors_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(next_)) =
                (estimators_[s]->estimate() - x_star_).squaredNorm() / d;
        }
        ++next_;
    }
    const DenseMatrix& errors() const { return errors_; }

  private:
    std::span<const std::unique_ptr<Estimator>> estimators_;
    std::span<const std::size_t> checkpoints_;
    const Vector& x_star_;
    DenseMatrix errors_;
    std::size_t next_ = 0;
};

std::vector<std::unique_ptr<Estimator>> make_estimators(std::span<const HarnessScheme> schemes, Eigen::Index dim,
                                                        std::size_t horizon, const StepSchedule& schedule) {
    std::vector<std::unique_ptr<Estimator>> out;
    out.reserve(schemes.size());
    for (const auto& s : schemes) out.push_back(make_estimator(s, dim, horizon, schedule));
    return out;
}

std::vector<StreamSink*> sink_list(std::span<const std::unique_ptr<Estimator>> estimators) {
    std::vector<StreamSink*> sinks;
    for (const auto& e : estimators) sinks.push_back(e.get());
    return sinks;
}

std::vector<std::string> model_notes(const ModelSpec& model) {
    if (model.kind == ModelKind::expectile) return {kExpectileNote};
    return {};
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

std::string table_provenance(const CriticalValueTable& table) {
    std::ostringstream os;
    os << (table.source.empty() ? "simulated" : table.source) << "(grid=" << table.grid << ",paths=" << table.paths
       << ",seed=" << table.seed << ")";
    return os.str();
}

CriticalValueTable load_table(const ExperimentConfig& cfg) {
    std::string path = cfg.critical_values.empty() ? default_critical_values_path() : cfg.critical_values;
    if (path.empty()) {
        throw ConfigError("no critical-value table found; run `wasgd critical-values` or pass --critical-values");
    }
    return CriticalValueTable::read_csv(path);
}

}  // namespace

std::vector<HarnessScheme> parse_harness_schemes(std::span<const std::string> texts, double schedule_alpha) {
    std::vector<HarnessScheme> out;
    for (const auto& text : texts) {
        if (text == "optimal") {
            out.push_back({text, std::nullopt});
        } else {
            SchemeConfig config = parse_scheme(text, schedule_alpha);
            out.push_back({scheme_name(config), std::move(config)});
        }
    }
    if (out.empty()) throw ConfigError("no averaging scheme given");
    return out;
}

double harness_prefactor(const HarnessScheme& scheme, std::size_t n) {
    if (!scheme.config) return 1.0;
    const SchemeConfig& config = *scheme.config;
    if (std::holds_alternative<OnlineSuffixScheme>(config) || std::holds_alternative<LastIterateScheme>(config) ||
        std::holds_alternative<ExplicitScheme>(config)) {
        return prefactor_numeric(config, n);
    }
    return prefactor(config);
}

std::unique_ptr<Estimator> make_estimator(const HarnessScheme& scheme, Eigen::Index dim, std::size_t horizon,
                                          const StepSchedule& schedule) {
    if (!scheme.config) return std::make_unique<ClosedFormAverager>(schedule);
    return std::make_unique<Averager>(*scheme.config, dim, horizon);
}

double default_lambda(const ModelSpec& model, const StepSchedule& schedule, std::size_t sandwich_reps,
                      std::uint64_t seed) {
    double lambda_min = 0.0;
    if (model.kind == ModelKind::expectile) {
        // F''(x) = 2 (rho P(y >= x) + (1 - rho) P(y < x)) for the normal response.
        const double p = normal_cdf((model.x_star(0) - model.response.location) / model.response.scale);
        lambda_min = 2.0 * (model.rho * (1.0 - p) + (1.0 - model.rho) * p);
    } else {
        RngStream rng(seed, kSandwichStream);
        const SandwichTruth truth = sandwich_truth(model, sandwich_reps, rng);
        lambda_min = Eigen::SelfAdjointEigenSolver<DenseMatrix>(truth.A, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    }
    return std::min(lambda_min, 1.0 / (2.0 * schedule.eta));
}

std::string report_header(const ExperimentConfig& cfg, const std::string& critical_values,
                          std::span<const std::string> notes) {
    std::ostringstream os;
    os << "# wasgd " << to_string(cfg.experiment) << " config_hash=" << config_hash(cfg) << " seed=" << cfg.seed
       << " critical_values=" << (critical_values.empty() ? "none" : critical_values);
    for (const auto& note : notes) os << "; " << note;
    return os.str();
}

NormalityReport run_normality(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    const ModelSpec model = build_model(cfg);
    const StepSchedule schedule = build_schedule(cfg);
    const Vector x0 = build_x0(cfg, model);
    const auto schemes = parse_harness_schemes(cfg.schemes, cfg.alpha);

    RngStream sandwich_rng(cfg.seed, kSandwichStream);
    const SandwichTruth truth = sandwich_truth(model, cfg.sandwich_reps, sandwich_rng);
    const Vector v_diag = truth.V.diagonal();
    const auto d = model.dim();
    const double root_n = std::sqrt(static_cast<double>(cfg.n));

    std::vector<double> prefactors;
    for (const auto& s : schemes) prefactors.push_back(harness_prefactor(s, cfg.n));

    NormalityReport report;
    report.header = report_header(cfg, "", model_notes(model));
    report.rows.reserve(cfg.reps * schemes.size() * static_cast<std::size_t>(d));

    ordered_map_reduce(
        cfg.reps, resolve_workers(cfg.workers),
        [&](std::size_t rep) {
            RngStream rng(cfg.seed, rep);
            auto estimators = make_estimators(schemes, d, cfg.n, schedule);
            const auto sinks = sink_list(estimators);
            run_trajectory(schedule, model, cfg.n, rng, sinks, x0);
            DenseMatrix errors(static_cast<Eigen::Index>(schemes.size()), d);
            for (std::size_t s = 0; s < schemes.size(); ++s) {
                errors.row(static_cast<Eigen::Index>(s)) = root_n * (estimators[s]->estimate() - model.x_star);
            }
            return errors;
        },
        [&](std::size_t rep, DenseMatrix errors) {
            for (std::size_t s = 0; s < schemes.size(); ++s) {
                for (Eigen::Index j = 0; j < d; ++j) {
                    const double unscaled = errors(static_cast<Eigen::Index>(s), j) / std::sqrt(v_diag(j));
                    report.rows.push_back({schemes[s].label, static_cast<std::size_t>(j) + 1, rep,
                                           unscaled / std::sqrt(prefactors[s]), unscaled});
                }
            }
        });

    // Rows are ordered rep-major; regroup per (scheme, coord).
    const std::size_t per_rep = schemes.size() * static_cast<std::size_t>(d);
    for (std::size_t s = 0; s < schemes.size(); ++s) {
        for (Eigen::Index j = 0; j < d; ++j) {
            std::vector<double> scaled;
            std::vector<double> unscaled;
            const std::size_t offset = s * static_cast<std::size_t>(d) + static_cast<std::size_t>(j);
            for (std::size_t r = 0; r < cfg.reps; ++r) {
                scaled.push_back(report.rows[r * per_rep + offset].scaled);
                unscaled.push_back(report.rows[r * per_rep + offset].unscaled);
            }
            NormalitySummary summary;
            summary.scheme = schemes[s].label;
            summary.coord = static_cast<std::size_t>(j) + 1;
            summary.prefactor = prefactors[s];
            const Moments ms = moments_of(scaled);
            const Moments mu = moments_of(unscaled);
            summary.mean_scaled = ms.mean;
            summary.var_scaled = ms.variance();
            summary.mean_unscaled = mu.mean;
            summary.var_unscaled = mu.variance();
            std::sort(scaled.begin(), scaled.end());
            std::sort(unscaled.begin(), unscaled.end());
            summary.ks_scaled = ks_distance(scaled);
            summary.ks_unscaled = ks_distance(unscaled);
            report.summaries.push_back(summary);
        }
    }
    return report;
}

MseReport run_mse(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    const ModelSpec model = build_model(cfg);
    if (model.kind != ModelKind::mean && model.kind != ModelKind::linear) {
        throw ConfigError("the MSE study supports the mean and linear models");
    }
    const StepSchedule schedule = build_schedule(cfg);
    const Vector x0 = build_x0(cfg, model);
    const auto schemes = parse_harness_schemes(cfg.schemes, cfg.alpha);
    const std::size_t horizon = cfg.checkpoints.back();

    std::vector<Moments> moments(schemes.size() * cfg.checkpoints.size());
    ordered_map_reduce(
        cfg.reps, resolve_workers(cfg.workers),
        [&](std::size_t rep) {
            RngStream rng(cfg.seed, rep);
            auto estimators = make_estimators(schemes, model.dim(), horizon, schedule);
            CheckpointSink checkpoints(estimators, cfg.checkpoints, model.x_star);
            auto sinks = sink_list(estimators);
            sinks.push_back(&checkpoints);
            run_trajectory(schedule, model, horizon, rng, sinks, x0);
            return checkpoints.errors();
        },
        [&](std::size_t, DenseMatrix errors) {
            for (std::size_t s = 0; s < schemes.size(); ++s) {
                for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
                    moments[s * cfg.checkpoints.size() + c].push(
                        errors(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)));
                }
            }
        });

    std::optional<std::size_t> adaptive;
    for (std::size_t s = 0; s < schemes.size(); ++s) {
        if (schemes[s].config && std::holds_alternative<AdaptiveScheme>(*schemes[s].config)) {
            adaptive = s;
            break;
        }
    }

    MseReport report;
    report.header = report_header(cfg, "", model_notes(model));
    report.reps = cfg.reps;
    for (std::size_t s = 0; s < schemes.size(); ++s) {
        for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
            const Moments& m = moments[s * cfg.checkpoints.size() + c];
            MseRow row{schemes[s].label, cfg.checkpoints[c], m.mean, std::sqrt(m.variance()),
                       std::numeric_limits<double>::quiet_NaN()};
            if (adaptive) row.ratio_to_adaptive = m.mean / moments[*adaptive * cfg.checkpoints.size() + c].mean;
            report.rows.push_back(row);
        }
    }
    return report;
}

CoverageReport run_coverage(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    if (cfg.method == CiMethod::random_scaling) return run_coverage(cfg, load_table(cfg));
    return run_coverage(cfg, CriticalValueTable{});
}

CoverageReport run_coverage(const ExperimentConfig& raw, const CriticalValueTable& table) {
    const ExperimentConfig cfg = resolve(raw);
    const ModelSpec model = build_model(cfg);
    const StepSchedule schedule = build_schedule(cfg);
    const Vector x0 = build_x0(cfg, model);
    const auto schemes = parse_harness_schemes(cfg.schemes, cfg.alpha);
    const auto d = model.dim();
    const bool plugin = cfg.method == CiMethod::plugin;
    if (!plugin) table.quantile_for(0.5 * (1.0 + cfg.level));
    if (plugin && model.kind == ModelKind::expectile) {
        throw Unsupported("the plug-in interval is not available for the expectile model");
    }

    std::vector<double> prefactors;
    for (const auto& s : schemes) prefactors.push_back(harness_prefactor(s, cfg.n));

    const auto rows = static_cast<Eigen::Index>(schemes.size());
    DenseMatrix hits = DenseMatrix::Zero(rows, d);
    DenseMatrix widths = DenseMatrix::Zero(rows, d);
    struct RepResult {
        DenseMatrix hit;
        DenseMatrix width;
    };
    ordered_map_reduce(
        cfg.reps, resolve_workers(cfg.workers),
        [&](std::size_t rep) {
            RngStream rng(cfg.seed, rep);
            auto estimators = make_estimators(schemes, d, cfg.n, schedule);
            auto sinks = sink_list(estimators);
            std::optional<PluginSink> plugin_sink;
            std::optional<RandomScalingState> rs_state;
            if (plugin) {
                plugin_sink.emplace(model);
                sinks.push_back(&*plugin_sink);
            } else {
                rs_state.emplace(d);
                sinks.push_back(&*rs_state);
            }
            run_trajectory(schedule, model, cfg.n, rng, sinks, x0);

            RepResult result{DenseMatrix::Zero(rows, d), DenseMatrix::Zero(rows, d)};
            for (std::size_t s = 0; s < schemes.size(); ++s) {
                const Vector estimate = estimators[s]->estimate();
                const auto intervals =
                    plugin ? plugin_interval(plugin_sink->state(), estimate, prefactors[s], cfg.level)
                           : rs_interval(*rs_state, estimate, prefactors[s], cfg.level, table);
                for (Eigen::Index j = 0; j < d; ++j) {
                    const Interval& iv = intervals[static_cast<std::size_t>(j)];
                    result.hit(static_cast<Eigen::Index>(s), j) = iv.contains(model.x_star(j)) ? 1.0 : 0.0;
                    result.width(static_cast<Eigen::Index>(s), j) = iv.half_width();
                }
            }
            return result;
        },
        [&](std::size_t, RepResult result) {
            hits += result.hit;
            widths += result.width;
        });

    CoverageReport report;
    report.method = cfg.method;
    report.level = cfg.level;
    report.below_asymptotic = cfg.n < kAsymptoticHorizon;
    std::vector<std::string> notes = model_notes(model);
    notes.push_back("method=" + to_string(cfg.method) + " level=" + format_double(cfg.level));
    if (report.below_asymptotic) notes.emplace_back("below-asymptotic-regime n<" + std::to_string(kAsymptoticHorizon));
    report.header = report_header(cfg, plugin ? "" : table_provenance(table), notes);
    const double reps = static_cast<double>(cfg.reps);
    for (std::size_t s = 0; s < schemes.size(); ++s) {
        for (Eigen::Index j = 0; j < d; ++j) {
            report.rows.push_back({schemes[s].label, static_cast<std::size_t>(j) + 1,
                                   hits(static_cast<Eigen::Index>(s), j) / reps,
                                   widths(static_cast<Eigen::Index>(s), j) / reps});
        }
    }
    return report;
}

WeightsReport run_oracle_weights(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    const ModelSpec model = build_model(cfg);
    const StepSchedule schedule = build_schedule(cfg);
    if (cfg.n > 200 && model.kind == ModelKind::expectile) throw ConfigError("oracle weights need n <= 200");
    const CovarianceEstimate sigma =
        estimate_sigma(model, schedule, cfg.n, cfg.reps, cfg.seed, resolve_workers(cfg.workers), build_x0(cfg, model));
    const WeightSolution oracle = blue_weights(sigma);

    WeightsReport report;
    report.header = report_header(cfg, "", model_notes(model));
    report.oracle_predicted_mse = oracle.predicted_mse;
    for (Eigen::Index i = 0; i < oracle.c.size(); ++i) {
        report.rows.push_back({"oracle", static_cast<std::size_t>(i) + 1, oracle.c(i)});
    }
    Eigen::Index argmax = 0;
    oracle.c.maxCoeff(&argmax);
    report.summaries.push_back({"oracle", static_cast<std::size_t>(argmax) + 1, 0.0});
    return report;
}

WeightsReport run_weights_compare(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    const ModelSpec model = build_model(cfg);
    if (model.kind != ModelKind::expectile) throw ConfigError("weights-compare runs on the expectile model");
    WeightsReport report = run_oracle_weights(cfg);
    Vector oracle(static_cast<Eigen::Index>(cfg.n));
    for (std::size_t i = 0; i < cfg.n; ++i) oracle(static_cast<Eigen::Index>(i)) = report.rows[i].weight;

    for (const auto& scheme : parse_harness_schemes(cfg.schemes, cfg.alpha)) {
        if (!scheme.config) throw Unsupported("closed-form optimal weights are not defined for the expectile model");
        const WeightVector w = materialize_weights(*scheme.config, cfg.n);
        double distance = 0.0;
        std::size_t argmax = 0;
        for (std::size_t i = 0; i < cfg.n; ++i) {
            report.rows.push_back({scheme.label, i + 1, w.w[i]});
            distance = std::max(distance, std::abs(w.w[i] - oracle(static_cast<Eigen::Index>(i))));
            if (w.w[i] > w.w[argmax]) argmax = i;
        }
        report.summaries.push_back({scheme.label, argmax + 1, distance});
    }
    return report;
}

CriticalValueTable run_critical_values(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    const auto levels = default_critical_levels();
    return simulate_critical_values(cfg.grid, cfg.paths, levels, cfg.seed, resolve_workers(cfg.workers));
}

CheckSchemeReport run_check_scheme(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    if (cfg.n < 2) throw ConfigError("check-scheme needs n >= 2");
    const ModelSpec model = build_model(cfg);
    const StepSchedule schedule = build_schedule(cfg);
    CheckSchemeReport report;
    report.lambda = cfg.lambda ? *cfg.lambda : default_lambda(model, schedule, cfg.sandwich_reps, cfg.seed);
    for (const auto& scheme : parse_harness_schemes(cfg.schemes, cfg.alpha)) {
        if (!scheme.config) throw Unsupported("check-scheme needs an explicit weight rule, not 'optimal'");
        SchemeCheck check;
        check.scheme = scheme.label;
        const std::size_t n = std::holds_alternative<ExplicitScheme>(*scheme.config)
                                  ? std::get<ExplicitScheme>(*scheme.config).weights.size()
                                  : cfg.n;
        check.report = check_conditions(*scheme.config, n, report.lambda, schedule, cfg.c_tilde);
        check.warnings = condition_warnings(check.report);
        report.checks.push_back(std::move(check));
    }
    return report;
}

void write_csv(std::ostream& out, const NormalityReport& report) {
    out << report.header << '\n' << "scheme,coord,rep,std_error_scaled,std_error_unscaled\n";
    out << std::setprecision(12);
    for (const auto& r : report.rows) {
        out << r.scheme << ',' << r.coord << ',' << r.rep << ',' << r.scaled << ',' << r.unscaled << '\n';
    }
}

void write_csv(std::ostream& out, const MseReport& report) {
    out << report.header << '\n' << "scheme,n,mse,sd\n";
    out << std::setprecision(12);
    for (const auto& r : report.rows) out << r.scheme << ',' << r.n << ',' << r.mse << ',' << r.sd << '\n';
}

void write_csv(std::ostream& out, const CoverageReport& report) {
    out << report.header << '\n' << "scheme,coord,coverage,mean_halfwidth\n";
    out << std::setprecision(12);
    for (const auto& r : report.rows) {
        out << r.scheme << ',' << r.coord << ',' << r.coverage << ',' << r.mean_halfwidth << '\n';
    }
}

void write_csv(std::ostream& out, const WeightsReport& report) {
    out << report.header << '\n' << "scheme,index,weight\n";
    out << std::setprecision(12);
    for (const auto& r : report.rows) out << r.scheme << ',' << r.index << ',' << r.weight << '\n';
}

nlohmann::json to_json(const CheckSchemeReport& report) {
    nlohmann::json j;
    j["lambda"] = report.lambda;
    j["schemes"] = nlohmann::json::array();
    for (const auto& c : report.checks) {
        const ConditionReport& r = c.report;
        j["schemes"].push_back({{"scheme", c.scheme},
                                {"n", r.n},
                                {"sum_error", r.sum_error},
                                {"max_scaled_weight", r.max_scaled_weight},
                                {"last_scaled_weight", r.last_scaled_weight},
                                {"last_weight_exempt", r.last_weight_exempt},
                                {"weight_energy", r.weight_energy},
                                {"prefactor_estimate", r.prefactor_estimate},
                                {"smoothness_sum", r.smoothness_sum},
                                {"max_scaled_adjacent_diff", r.max_scaled_adjacent_diff},
                                {"c_tilde", r.c_tilde},
                                {"adjacent_diff_condition", r.adjacent_diff_condition},
                                {"warnings", c.warnings}});
    }
    return j;
}

}  // namespace wasgd
