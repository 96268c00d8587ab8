#include "wasgd/optimal_weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "wasgd/error.hpp"
#include "wasgd/parallel.hpp"

namespace wasgd {

namespace {

constexpr std::size_t kRepsPerBlock = 128;
constexpr std::size_t kMaxSigmaHorizon = 500;

// 1/eta_i - 1/eta_{i+1}, using expm1 for the (i+1)^alpha - i^alpha part.
double inverse_step_gap(const StepSchedule& schedule, std::size_t i) {
    if (i == 1 && schedule.override_first) return 1.0 / *schedule.override_first - 1.0 / schedule.step(2);
    const double x = static_cast<double>(i);
    const double increment = std::pow(x, schedule.alpha) * std::expm1(schedule.alpha * std::log1p(1.0 / x));
    return -increment / schedule.eta;
}

void check_regressors(std::span<const double> a_sq) {
    if (a_sq.empty()) throw ConfigError("optimal weights need at least one observation");
    for (std::size_t i = 0; i < a_sq.size(); ++i) {
        if (!(a_sq[i] > 0.0)) throw ZeroRegressor("a_" + std::to_string(i + 1) + "^2 must be positive");
    }
}

// Fills c[offset + i - 1] for i = 1..n with the shared numerators of both
// closed forms and returns their sum.
double closed_form_numerators(std::span<const double> a_sq, const StepSchedule& schedule, Vector& c,
                              Eigen::Index offset) {
    const std::size_t n = a_sq.size();
    double sum = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double value = a_sq[i] + inverse_step_gap(schedule, i);
        c(offset + static_cast<Eigen::Index>(i) - 1) = value;
        sum += value;
    }
    const double last = 1.0 / schedule.step(n);
    c(offset + static_cast<Eigen::Index>(n) - 1) = last;
    return sum + last;
}

class ErrorRecorder final : public StreamSink {
  public:
    ErrorRecorder(const Vector& x_star, std::size_t n) : x_star_(x_star), errors_(x_star.size(), n) {}

    void push(const StepRecord& record) override {
        errors_.col(static_cast<Eigen::Index>(record.index) - 1) = record.current - x_star_;
    }
    const DenseMatrix& errors() const { return errors_; }

  private:
    const Vector& x_star_;
    DenseMatrix errors_;
};

// Pairwise summation driven by a binary counter: partial sums of equal
// size are merged as soon as both exist.
class PairwiseSum {
  public:
    void add(DenseMatrix value) {
        std::size_t level = 0;
        while (!stack_.empty() && stack_.back().first == level) {
            value += stack_.back().second;
            stack_.pop_back();
            ++level;
        }
        stack_.emplace_back(level, std::move(value));
    }

    DenseMatrix total() const {
        DenseMatrix sum = stack_.back().second;
        for (std::size_t k = stack_.size() - 1; k-- > 0;) sum += stack_[k].second;
        return sum;
    }

  private:
    std::vector<std::pair<std::size_t, DenseMatrix>> stack_;
};

}  // namespace

WeightSolution blue_weights(const DenseMatrix& sigma, std::optional<double> ridge) {
    if (sigma.rows() < 1 || sigma.rows() != sigma.cols()) throw ConfigError("Sigma must be a non-empty square matrix");
    const auto n = sigma.rows();
    const double r = ridge.value_or(1e-10 * sigma.trace() / static_cast<double>(n));
    const Vector solved = solve_spd(sigma, Vector::Ones(n), r);
    const double total = solved.sum();
    if (!(total > 0.0) || !std::isfinite(total)) throw NotSpd("1' Sigma^-1 1 is not positive");
    WeightSolution out;
    out.c = solved / total;
    out.predicted_mse = 1.0 / total;
    return out;
}

WeightSolution blue_weights(const CovarianceEstimate& sigma, std::optional<double> ridge) {
    return blue_weights(sigma.sigma_hat, ridge);
}

WeightSolution closed_form_weights(std::span<const double> a_sq, const StepSchedule& schedule, double noise_sigma) {
    check_regressors(a_sq);
    schedule.validate();
    const double product = schedule.step(1) * a_sq[0];
    if (std::abs(product - 1.0) > 1e-12) {
        throw ConfigError("closed-form weights need eta_1 = a_1^-2 (eta_1 a_1^2 = " + std::to_string(product) + ")");
    }
    WeightSolution out;
    out.c.resize(static_cast<Eigen::Index>(a_sq.size()));
    const double s_n = closed_form_numerators(a_sq, schedule, out.c, 0);
    out.c /= s_n;
    out.predicted_mse = noise_sigma * noise_sigma / s_n;
    return out;
}

WeightSolution closed_form_weights_with_init(std::span<const double> a_sq, const StepSchedule& schedule, double sigma,
                                             double init_error) {
    check_regressors(a_sq);
    schedule.validate();
    if (init_error == 0.0 || !std::isfinite(init_error)) {
        throw ZeroInitError("the initialization weight needs x0 != x*");
    }
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
    const double ratio = sigma / init_error;
    WeightSolution out;
    out.includes_initial = true;
    out.c.resize(static_cast<Eigen::Index>(a_sq.size()) + 1);
    out.c(0) = ratio * ratio + a_sq[0] - 1.0 / schedule.step(1);
    const double s_n = out.c(0) + closed_form_numerators(a_sq, schedule, out.c, 1);
    out.c /= s_n;
    out.predicted_mse = sigma * sigma / s_n;
    return out;
}

TwoStepWeights two_step_init_weights(std::span<const Observation> observations, std::span<const double> iterates,
                                     double x0, const StepSchedule& schedule) {
    const std::size_t n = observations.size();
    if (iterates.size() != n) throw ConfigError("two-step weights need one iterate per observation");
    TwoStepWeights out;
    out.split = n / 10;
    if (out.split < 1) throw ConfigError("two-step weights need n >= 10");

    double x_hat = 0.0;
    for (std::size_t i = 0; i < out.split; ++i) x_hat += iterates[i];
    x_hat /= static_cast<double>(out.split);

    std::vector<double> a_sq(n);
    double residual_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (observations[i].a.size() != 1) throw Unsupported("two-step weights are defined for scalar models only");
        const double a = observations[i].a(0);
        a_sq[i] = a * a;
        if (i < out.split) residual_sq += (observations[i].b - a * x_hat) * (observations[i].b - a * x_hat);
    }
    out.x_star_hat = x_hat;
    out.sigma_hat = std::sqrt(residual_sq / static_cast<double>(out.split));
    out.weights = closed_form_weights_with_init(a_sq, schedule, out.sigma_hat, x0 - x_hat);
    return out;
}

CovarianceEstimate estimate_sigma(const ModelSpec& model, const StepSchedule& schedule, std::size_t n,
                                  std::size_t reps, std::uint64_t seed, std::size_t workers, Vector x0) {
    model.validate();
    schedule.validate();
    if (n < 1 || n > kMaxSigmaHorizon) throw ConfigError("estimate_sigma needs 1 <= n <= 500");
    if (reps < 2) throw ConfigError("estimate_sigma needs at least 2 replications");
    if (x0.size() == 0) x0 = Vector::Zero(model.dim());

    CovarianceEstimate out;
    out.n = n;
    out.reps = reps;

    const bool fixed_regressors = model.kind == ModelKind::mean || model.kind == ModelKind::linear;
    std::vector<Vector> regressors;
    if (fixed_regressors) {
        RngStream regressor_rng(seed, kRegressorStream);
        regressors.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            regressors.push_back(model.kind == ModelKind::mean ? Vector::Ones(1)
                                                               : gaussian_vector(regressor_rng, model.dim()));
        }
        if (model.dim() == 1) {
            out.a_sq.resize(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) out.a_sq(static_cast<Eigen::Index>(i)) = regressors[i](0) * regressors[i](0);
        }
    }

    const ObservationSource source = [&](std::size_t i, RngStream& rng) {
        return fixed_regressors ? draw_given(model, regressors[i - 1], rng) : draw(model, rng);
    };

    const std::size_t blocks = (reps + kRepsPerBlock - 1) / kRepsPerBlock;
    const std::size_t threads = resolve_workers(workers);
    PairwiseSum sum;
    ordered_map_reduce(
        blocks, threads,
        [&](std::size_t block) {
            const auto dim = static_cast<Eigen::Index>(n);
            DenseMatrix partial = DenseMatrix::Zero(dim, dim);
            const std::size_t end = std::min(reps, (block + 1) * kRepsPerBlock);
            for (std::size_t r = block * kRepsPerBlock; r < end; ++r) {
                RngStream rng(seed, r);
                ErrorRecorder recorder(model.x_star, n);
                StreamSink* sinks[] = {&recorder};
                run_trajectory(schedule, model, n, rng, sinks, x0, source);
                partial.noalias() += recorder.errors().transpose() * recorder.errors();
            }
            return partial;
        },
        [&](std::size_t, DenseMatrix partial) { sum.add(std::move(partial)); }, 2 * threads);

    out.sigma_hat = symmetrize(sum.total() / static_cast<double>(reps));
    return out;
}

double theta_diag_check(std::span<const double> a_sq, const StepSchedule& schedule, const CovarianceEstimate& sigma,
                        double noise_sigma) {
    const std::size_t n = a_sq.size();
    if (sigma.n != n || static_cast<std::size_t>(sigma.sigma_hat.rows()) != n) {
        throw ConfigError("Sigma and a^2 have different horizons");
    }
    if (n <= 1) return 0.0;
    if (!(noise_sigma > 0.0)) throw ConfigError("the diagonalization check needs sigma > 0");

    const auto dim = static_cast<Eigen::Index>(n);
    DenseMatrix theta = DenseMatrix::Identity(dim, dim);
    double min_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i <= n; ++i) {
        const double eta = schedule.step(i);
        if (i >= 2) theta(static_cast<Eigen::Index>(i) - 1, static_cast<Eigen::Index>(i) - 2) = eta * a_sq[i - 1] - 1.0;
        min_d = std::min(min_d, noise_sigma * noise_sigma * a_sq[i - 1] * eta * eta);
    }
    const DenseMatrix product = theta * sigma.sigma_hat * theta.transpose();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (i != j) worst = std::max(worst, std::abs(product(i, j)));
        }
    }
    return worst / min_d;
}

WeightSolution oracle_weights_expectile(double rho, const StepSchedule& schedule, std::size_t n, std::size_t reps,
                                        std::uint64_t seed, std::size_t workers, ResponseDistribution response) {
    if (n < 1 || n > 200) throw ConfigError("oracle weights need 1 <= n <= 200");
    const ModelSpec model = ModelSpec::expectile(rho, response);
    return blue_weights(estimate_sigma(model, schedule, n, reps, seed, workers));
}

ClosedFormAverager::ClosedFormAverager(StepSchedule schedule) : schedule_(std::move(schedule)) {
    schedule_.validate();
}

void ClosedFormAverager::push(const StepRecord& record) {
    if (record.index != t_ + 1) {
        throw OutOfOrder("closed-form averager expected iterate " + std::to_string(t_ + 1) + ", got " +
                         std::to_string(record.index));
    }
    if (record.current.size() != 1 || record.observation.a.size() != 1) {
        throw Unsupported("closed-form optimal weights are defined for scalar models only");
    }
    const double a_sq = record.observation.a(0) * record.observation.a(0);
    if (!(a_sq > 0.0)) throw ZeroRegressor("a_" + std::to_string(record.index) + "^2 must be positive");
    if (record.index == 1) {
        const double product = schedule_.step(1) * a_sq;
        if (std::abs(product - 1.0) > 1e-12) {
            throw ConfigError("closed-form weights need eta_1 = a_1^-2 (eta_1 a_1^2 = " + std::to_string(product) + ")");
        }
    } else {
        weighted_ += (a_sq + inverse_step_gap(schedule_, t_)) * last_;
    }
    s_ += a_sq;
    last_ = record.current(0);
    t_ = record.index;
}

Vector ClosedFormAverager::estimate() const {
    if (t_ == 0) throw ConfigError("closed-form averager has not seen any iterate");
    return Vector::Constant(1, (weighted_ + last_ / schedule_.step(t_)) / s_);
}

}  // namespace wasgd
