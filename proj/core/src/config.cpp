#include "wasgd/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "wasgd/error.hpp"

namespace wasgd {

namespace {

using nlohmann::json;

const std::vector<double> kDefaultXStar = {1.0, -2.0, 0.0, 0.0, 4.0};

template <class T>
void read_field(const json& j, const char* key, T& target) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& target) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T value{};
    read_field(j, key, value);
    target = value;
}

}  // namespace

std::string to_string(Experiment experiment) {
    switch (experiment) {
        case Experiment::normality: return "normality";
        case Experiment::mse: return "mse";
        case Experiment::coverage: return "coverage";
        case Experiment::weights_compare: return "weights-compare";
        case Experiment::oracle_weights: return "oracle-weights";
        case Experiment::critical_values: return "critical-values";
        case Experiment::check_scheme: return "check-scheme";
    }
    return "unknown";
}

Experiment parse_experiment(std::string_view name) {
    for (auto e : {Experiment::normality, Experiment::mse, Experiment::coverage, Experiment::weights_compare,
                   Experiment::oracle_weights, Experiment::critical_values, Experiment::check_scheme}) {
        if (name == to_string(e)) return e;
    }
    if (name == "weights_compare") return Experiment::weights_compare;
    if (name == "oracle_weights") return Experiment::oracle_weights;
    if (name == "critical_values") return Experiment::critical_values;
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string to_string(CiMethod method) { return method == CiMethod::plugin ? "plugin" : "random_scaling"; }

CiMethod parse_ci_method(std::string_view name) {
    if (name == "plugin") return CiMethod::plugin;
    if (name == "random_scaling" || name == "random-scaling") return CiMethod::random_scaling;
    throw ConfigError("unknown interval method '" + std::string(name) + "'");
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig cfg;
    std::string text;
    if (j.contains("experiment")) {
        read_field(j, "experiment", text);
        cfg.experiment = parse_experiment(text);
    }
    read_field(j, "model", cfg.model);
    read_optional(j, "dim", cfg.dim);
    read_field(j, "x_star", cfg.x_star);
    read_field(j, "sigma", cfg.sigma);
    read_field(j, "rho", cfg.rho);
    read_field(j, "eta", cfg.eta);
    read_field(j, "alpha", cfg.alpha);
    read_optional(j, "eta_first", cfg.eta_first);
    read_field(j, "schemes", cfg.schemes);
    read_field(j, "n", cfg.n);
    read_field(j, "reps", cfg.reps);
    read_field(j, "seed", cfg.seed);
    read_field(j, "workers", cfg.workers);
    read_field(j, "output", cfg.output);
    if (j.contains("x0")) cfg.x0 = j.at("x0");
    read_field(j, "checkpoints", cfg.checkpoints);
    read_field(j, "level", cfg.level);
    if (j.contains("method")) {
        read_field(j, "method", text);
        cfg.method = parse_ci_method(text);
    }
    read_field(j, "critical_values", cfg.critical_values);
    read_field(j, "sandwich_reps", cfg.sandwich_reps);
    read_field(j, "grid", cfg.grid);
    read_field(j, "paths", cfg.paths);
    read_optional(j, "lambda", cfg.lambda);
    read_field(j, "c_tilde", cfg.c_tilde);

    static const std::vector<std::string> known = {
        "experiment", "model", "dim", "x_star", "sigma", "rho", "eta", "alpha", "eta_first", "schemes",
        "n", "reps", "seed", "workers", "output", "x0", "checkpoints", "level", "method", "critical_values",
        "sandwich_reps", "grid", "paths", "lambda", "c_tilde"};
    for (const auto& item : j.items()) {
        if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
            throw ConfigError("unknown config field '" + item.key() + "'");
        }
    }
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["experiment"] = to_string(cfg.experiment);
    j["model"] = cfg.model;
    j["dim"] = cfg.dim ? json(*cfg.dim) : json(nullptr);
    j["x_star"] = cfg.x_star;
    j["sigma"] = cfg.sigma;
    j["rho"] = cfg.rho;
    j["eta"] = cfg.eta;
    j["alpha"] = cfg.alpha;
    j["eta_first"] = cfg.eta_first ? json(*cfg.eta_first) : json(nullptr);
    j["schemes"] = cfg.schemes;
    j["n"] = cfg.n;
    j["reps"] = cfg.reps;
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["output"] = cfg.output;
    j["x0"] = cfg.x0;
    j["checkpoints"] = cfg.checkpoints;
    j["level"] = cfg.level;
    j["method"] = to_string(cfg.method);
    j["critical_values"] = cfg.critical_values;
    j["sandwich_reps"] = cfg.sandwich_reps;
    j["grid"] = cfg.grid;
    j["paths"] = cfg.paths;
    j["lambda"] = cfg.lambda ? json(*cfg.lambda) : json(nullptr);
    j["c_tilde"] = cfg.c_tilde;
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

ExperimentConfig resolve(ExperimentConfig cfg) {
    const bool mean_model = cfg.model == "mean";
    switch (cfg.experiment) {
        case Experiment::normality:
            if (cfg.n == 0) cfg.n = 100'000;
            if (cfg.reps == 0) cfg.reps = 450;
            if (cfg.schemes.empty()) cfg.schemes = {"uniform", "poly:gamma=3", "suffix:kappa=0.5", "adaptive"};
            break;
        case Experiment::mse:
            if (cfg.checkpoints.empty()) cfg.checkpoints = {100, 400, 1600};
            if (cfg.n == 0) cfg.n = *std::max_element(cfg.checkpoints.begin(), cfg.checkpoints.end());
            if (cfg.reps == 0) cfg.reps = 400;
            if (cfg.schemes.empty()) {
                cfg.schemes = {"uniform", "poly:gamma=3", "suffix:kappa=0.5", "adaptive", "last"};
                if (mean_model) cfg.schemes.insert(cfg.schemes.begin(), "optimal");
            }
            break;
        case Experiment::coverage:
            if (cfg.n == 0) cfg.n = 20'000;
            if (cfg.reps == 0) cfg.reps = 500;
            if (cfg.schemes.empty()) cfg.schemes = {"uniform", "adaptive"};
            break;
        case Experiment::weights_compare:
        case Experiment::oracle_weights:
            if (cfg.n == 0) cfg.n = 50;
            if (cfg.reps == 0) cfg.reps = 50'000;
            if (cfg.schemes.empty() && cfg.experiment == Experiment::weights_compare) {
                cfg.schemes = {"adaptive", "uniform", "poly:gamma=3", "suffix:kappa=0.5"};
            }
            break;
        case Experiment::critical_values:
            break;
        case Experiment::check_scheme:
            if (cfg.n == 0) cfg.n = 10'000;
            if (cfg.schemes.empty()) cfg.schemes = {"uniform", "poly:gamma=3", "suffix:kappa=0.5", "adaptive"};
            break;
    }
    if (cfg.experiment != Experiment::critical_values) {
        if (cfg.n < 1) throw ConfigError("n must be at least 1");
        if (cfg.experiment != Experiment::check_scheme && cfg.reps < 1) throw ConfigError("reps must be at least 1");
        build_model(cfg);
        build_schedule(cfg);
    }
    if (cfg.experiment == Experiment::mse) {
        for (std::size_t c : cfg.checkpoints) {
            if (c < 1 || c > cfg.n) throw ConfigError("checkpoints must lie in [1, n]");
        }
        std::sort(cfg.checkpoints.begin(), cfg.checkpoints.end());
        cfg.checkpoints.erase(std::unique(cfg.checkpoints.begin(), cfg.checkpoints.end()), cfg.checkpoints.end());
    }
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ConfigError("level must lie in (0, 1)");
    if (cfg.lambda && !(*cfg.lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!(cfg.c_tilde > 0.0)) throw ConfigError("c_tilde must be positive");
    return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
    // Worker count and output path never change the results.
    nlohmann::json j = config_to_json(cfg);
    j.erase("workers");
    j.erase("output");
    const std::string text = j.dump();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

ModelSpec build_model(const ExperimentConfig& cfg) {
    const ModelKind kind = parse_model_kind(cfg.model);
    ModelSpec model;
    switch (kind) {
        case ModelKind::mean: {
            if (cfg.dim && *cfg.dim != 1) throw ConfigError("the mean model has d = 1");
            if (cfg.x_star.size() > 1) throw ConfigError("the mean model takes a single x*");
            model = ModelSpec::mean(cfg.x_star.empty() ? 0.0 : cfg.x_star.front(), cfg.sigma);
            break;
        }
        case ModelKind::linear:
        case ModelKind::logistic: {
            std::vector<double> x = cfg.x_star;
            if (x.empty()) {
                x = kDefaultXStar;
                if (cfg.dim) x.resize(*cfg.dim, 0.0);
            }
            if (cfg.dim && x.size() != *cfg.dim) throw ConfigError("x* length does not match dim");
            const Vector v = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
            model = kind == ModelKind::linear ? ModelSpec::linear(v, cfg.sigma) : ModelSpec::logistic(v);
            break;
        }
        case ModelKind::expectile: {
            if (cfg.dim && *cfg.dim != 1) throw ConfigError("the expectile model has d = 1");
            if (!cfg.x_star.empty()) throw ConfigError("the expectile x* is derived from rho, not configurable");
            model = ModelSpec::expectile(cfg.rho);
            break;
        }
    }
    model.validate();
    return model;
}

StepSchedule build_schedule(const ExperimentConfig& cfg) {
    StepSchedule s{cfg.eta, cfg.alpha, cfg.eta_first};
    s.validate();
    if (!(cfg.alpha > 0.5 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0.5, 1)");
    return s;
}

Vector build_x0(const ExperimentConfig& cfg, const ModelSpec& model) {
    if (cfg.x0.is_string()) {
        const auto text = cfg.x0.get<std::string>();
        if (text == "zero") return Vector::Zero(model.dim());
        if (text == "xstar") return model.x_star;
        throw ConfigError("x0 must be \"zero\", \"xstar\" or an array");
    }
    if (cfg.x0.is_number()) return Vector::Constant(model.dim(), cfg.x0.get<double>());
    if (cfg.x0.is_array()) {
        std::vector<double> x;
        try {
            x = cfg.x0.get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("x0 array must hold numbers");
        }
        if (static_cast<Eigen::Index>(x.size()) != model.dim()) throw ConfigError("x0 has the wrong dimension");
        return Eigen::Map<const Vector>(x.data(), model.dim());
    }
    throw ConfigError("x0 must be \"zero\", \"xstar\" or an array");
}

}  // namespace wasgd
