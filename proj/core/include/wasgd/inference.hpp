#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wasgd/linalg.hpp"
#include "wasgd/models.hpp"
#include "wasgd/sgd.hpp"

namespace wasgd {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double half_width() const { return 0.5 * (hi - lo); }
    bool contains(double v) const { return lo <= v && v <= hi; }
};

/// Running sums of per-observation Hessians and gradient outer products,
/// both evaluated at the pre-step iterate x_{i-1}.
struct PluginState {
    DenseMatrix a_acc;
    DenseMatrix s_acc;
    std::size_t n = 0;

    explicit PluginState(Eigen::Index dim = 0);

    /// Throws Unsupported for the expectile model.
    void update(const ModelSpec& model, const Vector& x, const Observation& obs);

    /// V = A^-1 S A^-T from A = a_acc / n, S = s_acc / n.
    DenseMatrix covariance(double ridge = kDefaultRidge) const;
};

class PluginSink final : public StreamSink {
  public:
    explicit PluginSink(const ModelSpec& model);

    void push(const StepRecord& record) override { state_.update(model_, record.previous, record.observation); }
    const PluginState& state() const { return state_; }

  private:
    const ModelSpec& model_;
    PluginState state_;
};

/// estimate_j -+ z_{(1+level)/2} sqrt(w V_jj / n). Requires n >= d.
std::vector<Interval> plugin_interval(const PluginState& state, const Vector& estimate, double prefactor_w,
                                      double level, double ridge = kDefaultRidge);

/// Streaming random-scaling covariance
///   V_rs,n = n^-2 sum_{s<=n} C_s C_s',  C_s = sum_{i<=s} (x_i - xbar_n).
///
/// Rather than raw moments of the partial sums, the state keeps the
/// centered quantities Q = sum_s C_s C_s', G = sum_s s C_s and M = sum_s s^2
/// and updates them when the mean moves. This gives the same matrix without
/// the cancellation between sum S_s S_s' and n^2 xbar xbar' terms.
class RandomScalingState final : public StreamSink {
  public:
    explicit RandomScalingState(Eigen::Index dim);

    void update(const Vector& x);
    void push(const StepRecord& record) override { update(record.current); }

    std::size_t count() const { return t_; }
    const Vector& mean() const { return mean_; }
    DenseMatrix covariance() const;

  private:
    std::size_t t_ = 0;
    Vector mean_;
    DenseMatrix q_;
    Vector g_;
    double m_ = 0.0;
};

/// Upper percentiles of the random-scaling pivot W(1) / sqrt(int_0^1 (W(r) - r W(1))^2 dr).
/// `levels[k]` is a probability p and `quantiles[k]` the p-quantile of the
/// (symmetric) pivot, so p = 0.975 serves two-sided 95% intervals.
struct CriticalValueTable {
    std::vector<double> levels;
    std::vector<double> quantiles;
    std::size_t grid = 0;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    std::string source;

    /// Throws LevelNotTabulated if p is not in the table.
    double quantile_for(double p) const;

    void validate() const;
    void write_csv(std::ostream& out) const;
    static CriticalValueTable read_csv(const std::string& path);
};

/// Default upper percentiles written by simulate_critical_values.
std::vector<double> default_critical_levels();

/// Location of the shipped table: $WASGD_CRITICAL_VALUES if set, then the
/// source tree, then the install prefix. Empty if none exists.
std::string default_critical_values_path();

/// estimate_j -+ q_{(1+level)/2} sqrt(w (V_rs)_jj / n).
std::vector<Interval> rs_interval(const RandomScalingState& state, const Vector& estimate, double prefactor_w,
                                  double level, const CriticalValueTable& table);

/// Pivot of one discretized Brownian path given its m standard normal
/// increments: W_k = sum_{j<=k} z_j / sqrt(m), integral ~ (1/m) sum_k (W_k - (k/m) W_m)^2.
double rs_pivot(std::span<const double> increments);

/// `paths` pivots on a grid of `grid` steps. Paths are simulated in fixed
/// chunks, chunk c using RngStream(seed, c), so the output does not depend
/// on `workers`.
std::vector<double> simulate_pivots(std::size_t grid, std::size_t paths, std::uint64_t seed, std::size_t workers = 1);

/// Table from simulated pivots: the p-quantile of the pivot is the
/// (2p - 1)-quantile of |pivot| by symmetry.
CriticalValueTable critical_values_from_pivots(std::vector<double> pivots, std::span<const double> levels,
                                               std::size_t grid, std::uint64_t seed);

/// Requires grid >= 1000 and paths >= 100000.
CriticalValueTable simulate_critical_values(std::size_t grid, std::size_t paths, std::span<const double> levels,
                                            std::uint64_t seed, std::size_t workers = 1);

}  // namespace wasgd
