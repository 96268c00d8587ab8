#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wasgd/averaging.hpp"
#include "wasgd/config.hpp"
#include "wasgd/inference.hpp"
#include "wasgd/models.hpp"
#include "wasgd/sgd.hpp"

namespace wasgd {

/// A scheme as named on the command line. `config` is empty for
/// "optimal", the streaming closed-form weights of scalar models.
struct HarnessScheme {
    std::string label;
    std::optional<SchemeConfig> config;
};

std::vector<HarnessScheme> parse_harness_schemes(std::span<const std::string> texts, double schedule_alpha);

/// Closed-form prefactor where one exists, n * sum w^2 at horizon n otherwise.
double harness_prefactor(const HarnessScheme& scheme, std::size_t n);

std::unique_ptr<Estimator> make_estimator(const HarnessScheme& scheme, Eigen::Index dim, std::size_t horizon,
                                          const StepSchedule& schedule);

/// lambda = min(lambda_min(A), 1 / (2 eta)) for the model's Hessian A at x*.
double default_lambda(const ModelSpec& model, const StepSchedule& schedule, std::size_t sandwich_reps,
                      std::uint64_t seed);

// Stream ids reserved for draws that are not tied to a replication.
inline constexpr std::uint64_t kSandwichStream = 0xFFFF'FFFF'FFFF'FF01ULL;

struct NormalityRow {
    std::string scheme;
    std::size_t coord = 0;
    std::size_t rep = 0;
    double scaled = 0.0;
    double unscaled = 0.0;
};

struct NormalitySummary {
    std::string scheme;
    std::size_t coord = 0;
    double prefactor = 0.0;
    double ks_scaled = 0.0;
    double mean_scaled = 0.0;
    double var_scaled = 0.0;
    double ks_unscaled = 0.0;
    double mean_unscaled = 0.0;
    double var_unscaled = 0.0;
};

struct NormalityReport {
    std::string header;
    std::vector<NormalityRow> rows;
    std::vector<NormalitySummary> summaries;
};

struct MseRow {
    std::string scheme;
    std::size_t n = 0;
    double mse = 0.0;
    double sd = 0.0;
    // MSE divided by the adaptive scheme's MSE at the same n (NaN without one).
    double ratio_to_adaptive = 0.0;
};

struct MseReport {
    std::string header;
    std::size_t reps = 0;
    std::vector<MseRow> rows;
};

struct CoverageRow {
    std::string scheme;
    std::size_t coord = 0;
    double coverage = 0.0;
    double mean_halfwidth = 0.0;
};

struct CoverageReport {
    std::string header;
    CiMethod method = CiMethod::plugin;
    double level = 0.95;
    bool below_asymptotic = false;
    std::vector<CoverageRow> rows;
};

struct WeightRow {
    std::string scheme;
    std::size_t index = 0;
    double weight = 0.0;
};

struct WeightSummary {
    std::string scheme;
    std::size_t argmax = 0;          // 1-based
    double sup_distance_to_oracle = 0.0;
};

struct WeightsReport {
    std::string header;
    double oracle_predicted_mse = 0.0;
    std::vector<WeightRow> rows;
    std::vector<WeightSummary> summaries;
};

struct SchemeCheck {
    std::string scheme;
    ConditionReport report;
    std::vector<std::string> warnings;
};

struct CheckSchemeReport {
    double lambda = 0.0;
    std::vector<SchemeCheck> checks;
};

// Below this horizon coverage results are flagged as outside the
// asymptotic regime.
inline constexpr std::size_t kAsymptoticHorizon = 1000;

NormalityReport run_normality(const ExperimentConfig& cfg);
MseReport run_mse(const ExperimentConfig& cfg);
CoverageReport run_coverage(const ExperimentConfig& cfg);
CoverageReport run_coverage(const ExperimentConfig& cfg, const CriticalValueTable& table);
WeightsReport run_weights_compare(const ExperimentConfig& cfg);
WeightsReport run_oracle_weights(const ExperimentConfig& cfg);
CriticalValueTable run_critical_values(const ExperimentConfig& cfg);
CheckSchemeReport run_check_scheme(const ExperimentConfig& cfg);

/// "# wasgd <experiment> config_hash=... seed=... critical_values=..." plus notes.
std::string report_header(const ExperimentConfig& cfg, const std::string& critical_values,
                          std::span<const std::string> notes = {});

void write_csv(std::ostream& out, const NormalityReport& report);
void write_csv(std::ostream& out, const MseReport& report);
void write_csv(std::ostream& out, const CoverageReport& report);
void write_csv(std::ostream& out, const WeightsReport& report);

nlohmann::json to_json(const CheckSchemeReport& report);

}  // namespace wasgd
