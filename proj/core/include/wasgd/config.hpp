#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wasgd/models.hpp"
#include "wasgd/sgd.hpp"

namespace wasgd {

enum class Experiment { normality, mse, coverage, weights_compare, oracle_weights, critical_values, check_scheme };

std::string to_string(Experiment experiment);
Experiment parse_experiment(std::string_view name);

enum class CiMethod { plugin, random_scaling };

std::string to_string(CiMethod method);
CiMethod parse_ci_method(std::string_view name);

/// Flat description of one run. Zero / empty fields take the experiment's
/// default when resolved.
struct ExperimentConfig {
    Experiment experiment = Experiment::normality;

    std::string model = "linear";
    std::optional<std::size_t> dim;
    std::vector<double> x_star;
    double sigma = 1.0;
    double rho = 0.8;

    double eta = 1.0;
    double alpha = 0.505;
    std::optional<double> eta_first;

    std::vector<std::string> schemes;
    std::size_t n = 0;
    std::size_t reps = 0;
    std::uint64_t seed = 1;
    std::size_t workers = 0;
    std::string output;
    // "zero", "xstar", or a JSON array of coordinates.
    nlohmann::json x0 = "zero";
    std::vector<std::size_t> checkpoints;

    double level = 0.95;
    CiMethod method = CiMethod::plugin;
    std::string critical_values;
    std::size_t sandwich_reps = 1'000'000;

    std::size_t grid = 10'000;
    std::size_t paths = 1'000'000;

    std::optional<double> lambda;
    double c_tilde = 1.0;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

/// Fills experiment-dependent defaults (n, reps, schemes, checkpoints) and
/// validates every field. Throws ConfigError.
ExperimentConfig resolve(ExperimentConfig cfg);

/// 64-bit FNV-1a of the canonical JSON form without `workers` and
/// `output`, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

ModelSpec build_model(const ExperimentConfig& cfg);
StepSchedule build_schedule(const ExperimentConfig& cfg);
/// Starting point: zeros, x*, or the explicit coordinates.
Vector build_x0(const ExperimentConfig& cfg, const ModelSpec& model);

}  // namespace wasgd
