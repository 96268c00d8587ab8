#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wasgd/linalg.hpp"
#include "wasgd/sgd.hpp"

namespace wasgd {

// Averaging schemes. Each maps a horizon n to weights w_{n,1..n}.

struct UniformScheme {};

// x~_n = (1 - r_n) x~_{n-1} + r_n x_n with r_n = (gamma + 1) / (gamma + n).
struct PolyDecayScheme {
    double gamma = 3.0;
};

// Equal weights on the last ceil(kappa * n) iterates.
struct SuffixScheme {
    double kappa = 0.5;
};

// Average of the last two dyadic blocks [2^(m-2) + 1, t], m = ceil(log2 t).
struct OnlineSuffixScheme {};

// c_{n,i} = (1 + i^alpha - (i+1)^alpha) / n for i < n, c_{n,n} = n^(alpha-1).
struct AdaptiveScheme {
    double alpha = 0.505;
};

struct LastIterateScheme {};

// A fixed weight vector for one horizon, usually loaded from a file.
struct ExplicitScheme {
    std::vector<double> weights;
    std::string source;
};

using SchemeConfig = std::variant<UniformScheme, PolyDecayScheme, SuffixScheme, OnlineSuffixScheme,
                                  AdaptiveScheme, LastIterateScheme, ExplicitScheme>;

/// Parses `uniform`, `poly:gamma=3`, `suffix:kappa=0.5`, `online-suffix`,
/// `adaptive` (alpha taken from `schedule_alpha`), `adaptive:alpha=0.8`,
/// `last` and `explicit:@weights.csv` (one weight per line). Throws
/// ConfigError on anything else.
SchemeConfig parse_scheme(std::string_view text, double schedule_alpha);

/// Canonical label, e.g. "poly:gamma=3".
std::string scheme_name(const SchemeConfig& scheme);

void validate(const SchemeConfig& scheme);

std::vector<double> read_weight_file(const std::string& path);

/// Number of trailing iterates in the kappa-suffix at horizon n, i.e.
/// ceil(kappa * n) clamped to [1, n]. Products that land within rounding
/// of an integer are treated as that integer.
std::size_t suffix_length(double kappa, std::size_t n);

/// First index of the last two dyadic blocks at time t, i.e.
/// floor(2^(ceil(log2 t) - 2)). Integer arithmetic only.
std::size_t online_suffix_offset(std::size_t t);

struct WeightVector {
    std::vector<double> w;

    std::size_t n() const { return w.size(); }
    double sum() const;
};

WeightVector materialize_weights(const SchemeConfig& scheme, std::size_t n);

/// Limit prefactor w = lim n * sum_i w_{n,i}^2: 1 for uniform and adaptive,
/// (gamma+1)^2 / (2 gamma + 1) for polynomial decay, 1 / kappa for suffix.
/// Throws Unsupported for schemes without a closed form.
double prefactor(const SchemeConfig& scheme);

/// n * sum_i w_{n,i}^2 at a finite horizon. For the adaptive scheme the
/// terminal weight n^(alpha-1) is excluded: it is not O(1/n), its
/// contribution to sqrt(n)(x~_n - x*) vanishes, and including it makes the
/// sum diverge like n^(2 alpha - 1).
double prefactor_numeric(const SchemeConfig& scheme, std::size_t n);

/// Validation of a weight sequence at horizon n against the asymptotic
/// normality conditions.
struct ConditionReport {
    std::size_t n = 0;
    double lambda = 0.0;
    double sum_error = 0.0;                 // |sum_i w_{n,i} - 1|
    double max_scaled_weight = 0.0;         // max_{i<n} n |w_{n,i}|
    double last_scaled_weight = 0.0;        // n |w_{n,n}|
    bool last_weight_exempt = false;        // adaptive: terminal weight is allowed to be large
    double weight_energy = 0.0;             // n * sum_i w_{n,i}^2 over all weights
    double prefactor_estimate = 0.0;        // prefactor_numeric
    double smoothness_sum = 0.0;            // sum_i sum_{k>i} |w_k - w_i| eta_i exp(-lambda sum_{t=i+1}^k eta_t)
    double max_scaled_adjacent_diff = 0.0;  // n^2 max_i |w_{n,i+1} - w_{n,i}|
    double c_tilde = 0.0;
    bool adjacent_diff_condition = false;   // max |w_{i+1} - w_i| <= c_tilde / n^2
};

ConditionReport check_conditions(const SchemeConfig& scheme, std::size_t n, double lambda,
                               const StepSchedule& schedule, double c_tilde = 1.0);

/// Same checks for an already materialized weight vector.
ConditionReport check_weights(std::span<const double> w, double lambda, const StepSchedule& schedule,
                              double c_tilde = 1.0, bool last_weight_exempt = false);

/// Smoothness double sum of a weight vector. O(n) work per i through a
/// running product of exp(-lambda eta_t); the inner loop stops once the
/// remaining tail cannot change the sum at double precision.
double smoothness_sum(std::span<const double> w, double lambda, const StepSchedule& schedule);

/// Human-readable warnings for a weight vector that fails the conditions;
/// empty when every check passes.
std::vector<std::string> condition_warnings(const ConditionReport& report);

/// Ring buffer of the most recent iterates (offline suffix averaging).
class IterateBuffer {
  public:
    IterateBuffer(Eigen::Index dim, std::size_t capacity);

    void push(const Vector& x);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return static_cast<std::size_t>(store_.cols()); }
    // Sum of the k most recent iterates.
    Vector sum_recent(std::size_t k) const;

  private:
    DenseMatrix store_;
    std::size_t next_ = 0;
    std::size_t size_ = 0;
};

/// Equal-weight mean of the last suffix_length(kappa, n) iterates held in
/// `buffer`, whose newest entry must be x_n. Throws InsufficientBuffer when
/// the buffer holds fewer iterates than that.
Vector finalize_suffix(const IterateBuffer& buffer, std::size_t n, double kappa);

/// Streaming weighted average for one scheme.
///
/// Every scheme except suffix keeps O(d) state. Suffix averaging keeps a
/// buffer of ceil(kappa * horizon) iterates and can report its estimate at
/// any t <= horizon. Explicit weights accumulate sum_i w_i x_i and are
/// meaningful once all of them are consumed.
class Averager final : public Estimator {
  public:
    Averager(SchemeConfig scheme, Eigen::Index dim, std::size_t horizon = 0);

    /// Feeds x_i; i must equal count() + 1 (OutOfOrder otherwise).
    void update(std::size_t i, const Vector& x);
    void push(const StepRecord& record) override { update(record.index, record.current); }

    Vector estimate() const override;
    std::size_t count() const { return t_; }
    const SchemeConfig& scheme() const { return scheme_; }

  private:
    SchemeConfig scheme_;
    Eigen::Index dim_;
    std::size_t t_ = 0;
    Vector estimate_;
    Vector previous_;
    // Online suffix: S0 holds the completed previous block, S1 the current one.
    Vector block_prev_;
    Vector block_cur_;
    unsigned block_ = 0;
    std::optional<IterateBuffer> buffer_;
};

}  // namespace wasgd
