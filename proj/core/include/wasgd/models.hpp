#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "wasgd/linalg.hpp"
#include "wasgd/rng.hpp"

namespace wasgd {

enum class ModelKind { mean, linear, logistic, expectile };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Normal law of the expectile response y. The expectile study draws
// y ~ N(location, scale^2); N(0, 1) is the default.
struct ResponseDistribution {
    double location = 0.0;
    double scale = 1.0;
};

/// One of the four losses used in the experiments.
///
///   mean       b = x* + N(0, sigma^2), regressor fixed at a = 1 (d = 1)
///   linear     a ~ N(0, I_d), b = a'x* + N(0, sigma^2), loss (a'x - b)^2 / 2
///   logistic   a ~ N(0, I_d), b = +-1 with P(b | a) = 1 / (1 + exp(-b a'x*))
///   expectile  y ~ response, loss |rho - 1{y < x}| (y - x)^2, d = 1
///
/// For the expectile model x_star is the rho-expectile of the response law
/// and is computed on construction.
struct ModelSpec {
    ModelKind kind = ModelKind::linear;
    Vector x_star;
    double noise_sigma = 1.0;
    double rho = 0.5;
    ResponseDistribution response;

    Eigen::Index dim() const { return x_star.size(); }

    static ModelSpec mean(double x_star, double noise_sigma = 1.0);
    static ModelSpec linear(Vector x_star, double noise_sigma = 1.0);
    static ModelSpec logistic(Vector x_star);
    static ModelSpec expectile(double rho, ResponseDistribution response = {});

    // Throws ConfigError when a field is out of range.
    void validate() const;
};

/// One observation xi_i = (a_i, b_i). For the expectile model a is the
/// constant 1 and b holds the response y.
struct Observation {
    Vector a;
    double b = 0.0;
};

Observation draw(const ModelSpec& model, RngStream& rng);

/// Draws the response for a given regressor (mean/linear/logistic only).
/// Used to hold the regressor sequence fixed across replications.
Observation draw_given(const ModelSpec& model, const Vector& a, RngStream& rng);

/// Gradient of the per-observation loss at x.
///
/// Expectile: 2 |rho - 1{y < x}| (x - y), with the indicator evaluated
/// strictly so that y == x falls on the rho branch (the gradient is zero
/// there either way).
Vector gradient(const ModelSpec& model, const Vector& x, const Observation& obs);

/// Per-observation Hessian at x; throws Unsupported for the expectile loss.
DenseMatrix hessian(const ModelSpec& model, const Vector& x, const Observation& obs);

/// The rho-expectile of N(location, scale^2).
double normal_expectile(double rho, ResponseDistribution response = {});

struct SandwichTruth {
    enum class Source { analytic, monte_carlo };

    DenseMatrix A;
    DenseMatrix S;
    DenseMatrix V;
    Source source = Source::analytic;
    std::size_t reps = 0;
};

/// Hessian A, score covariance S and V = A^-1 S A^-T at x*. Mean and linear
/// models are closed form; logistic averages `reps` Monte-Carlo draws from
/// `rng`. The expectile model has no sandwich here (NotAvailable).
SandwichTruth sandwich_truth(const ModelSpec& model, std::size_t reps, RngStream& rng);

}  // namespace wasgd
