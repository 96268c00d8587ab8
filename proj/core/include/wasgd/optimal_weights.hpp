#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "wasgd/linalg.hpp"
#include "wasgd/models.hpp"
#include "wasgd/sgd.hpp"

namespace wasgd {

/// Monte-Carlo estimate of Sigma_{ij} = E (x_i - x*)'(x_j - x*), i, j = 1..n.
struct CovarianceEstimate {
    std::size_t n = 0;
    DenseMatrix sigma_hat;
    std::size_t reps = 0;
    // Squared regressors a_i^2 held fixed across replications (scalar
    // mean/linear models); empty when regressors were redrawn per rep.
    Vector a_sq;
};

struct WeightSolution {
    // Weights on x_1..x_n, or on x_0..x_n when includes_initial is set.
    Vector c;
    double predicted_mse = 0.0;
    bool includes_initial = false;
};

/// c = Sigma^-1 1 / (1' Sigma^-1 1) and predicted MSE 1 / (1' Sigma^-1 1).
/// The default ridge is 1e-10 * trace(Sigma) / n, applied under the
/// invert_spd policy.
WeightSolution blue_weights(const CovarianceEstimate& sigma, std::optional<double> ridge = std::nullopt);
WeightSolution blue_weights(const DenseMatrix& sigma, std::optional<double> ridge = std::nullopt);

/// Closed-form optimal weights of the scalar linear model given the
/// realized a_i^2, valid when eta_1 = a_1^-2:
///   c_i = (a_{i+1}^2 + 1/eta_i - 1/eta_{i+1}) / S_n  (i < n),
///   c_n = 1 / (eta_n S_n),  S_n = sum_i a_i^2,
/// with predicted MSE noise_sigma^2 / S_n. Throws ZeroRegressor for a
/// non-positive a_i^2 and ConfigError when eta_1 a_1^2 != 1.
WeightSolution closed_form_weights(std::span<const double> a_sq, const StepSchedule& schedule,
                                   double noise_sigma = 1.0);

/// Variant with a weight c_0 on the initial point x_0 and any eta_1:
///   c_0 = ((sigma / e)^2 + a_1^2 - 1/eta_1) / S_n,  S_n = (sigma / e)^2 + sum a_i^2,
/// where e = x_0 - x*. Other weights as in closed_form_weights with the
/// enlarged S_n. Throws ZeroInitError when e = 0.
WeightSolution closed_form_weights_with_init(std::span<const double> a_sq, const StepSchedule& schedule,
                                             double sigma, double init_error);

/// Two-step version of closed_form_weights_with_init for a scalar model:
/// x* is estimated by the uniform average of the first floor(n/10)
/// iterates and sigma by the residual RMS of the matching observations.
struct TwoStepWeights {
    WeightSolution weights;
    double sigma_hat = 0.0;
    double x_star_hat = 0.0;
    std::size_t split = 0;
};

TwoStepWeights two_step_init_weights(std::span<const Observation> observations, std::span<const double> iterates,
                                     double x0, const StepSchedule& schedule);

/// Estimates Sigma over `reps` trajectories of length n; replication r uses
/// RngStream(seed, r). For the mean and linear models one regressor
/// sequence, drawn from a reserved stream, is shared by every replication;
/// other models redraw everything. For d > 1 the entries are inner products
/// of the error vectors. The result does not depend on `workers`.
CovarianceEstimate estimate_sigma(const ModelSpec& model, const StepSchedule& schedule, std::size_t n,
                                  std::size_t reps, std::uint64_t seed, std::size_t workers = 1,
                                  Vector x0 = {});

/// Stream id reserved for the shared regressor sequence.
inline constexpr std::uint64_t kRegressorStream = 0xFFFF'FFFF'FFFF'FF00ULL;

/// Builds the lower bidiagonal Theta (Theta_ii = 1, Theta_{i,i-1} =
/// eta_i a_i^2 - 1) and D = diag(sigma^2 a_i^2 eta_i^2), and returns the
/// largest off-diagonal |(Theta Sigma Theta')_ij| divided by min_i D_ii.
double theta_diag_check(std::span<const double> a_sq, const StepSchedule& schedule, const CovarianceEstimate& sigma,
                        double noise_sigma);

/// Monte-Carlo BLUE weights for the expectile model (n <= 200).
WeightSolution oracle_weights_expectile(double rho, const StepSchedule& schedule, std::size_t n, std::size_t reps,
                                        std::uint64_t seed, std::size_t workers = 1,
                                        ResponseDistribution response = {});

/// Streaming closed-form optimal estimate for scalar models: O(1) state,
/// reads a_i from each observation. Requires eta_1 a_1^2 = 1.
class ClosedFormAverager final : public Estimator {
  public:
    explicit ClosedFormAverager(StepSchedule schedule);

    void push(const StepRecord& record) override;
    Vector estimate() const override;

  private:
    StepSchedule schedule_;
    std::size_t t_ = 0;
    double weighted_ = 0.0;   // sum_{i<t} (a_{i+1}^2 + 1/eta_i - 1/eta_{i+1}) x_i
    double s_ = 0.0;          // S_t
    double last_ = 0.0;       // x_t
};

}  // namespace wasgd
