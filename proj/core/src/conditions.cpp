#include <algorithm>
#include <cmath>
#include <sstream>

#include "wasgd/averaging.hpp"
#include "wasgd/error.hpp"

namespace wasgd {

double smoothness_sum(std::span<const double> w, double lambda, const StepSchedule& schedule) {
    if (!(lambda > 0.0)) throw ConfigError("smoothness sum needs lambda > 0");
    const std::size_t n = w.size();
    if (n < 2) return 0.0;

    // decay[t] = exp(-lambda * eta_{t+1}); the step sizes are indexed from 1.
    std::vector<double> eta(n);
    std::vector<double> decay(n);
    double worst_decay = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        eta[t] = schedule.step(t + 1);
        decay[t] = std::exp(-lambda * eta[t]);
        worst_decay = std::max(worst_decay, decay[t]);
    }
    const double tail_factor = worst_decay / (1.0 - worst_decay);

    // Largest |w_k - w_i| over k > i is bounded through suffix extrema.
    std::vector<double> suffix_max(n);
    std::vector<double> suffix_min(n);
    suffix_max[n - 1] = suffix_min[n - 1] = w[n - 1];
    double scale = std::abs(w[n - 1]);
    for (std::size_t k = n - 1; k-- > 0;) {
        suffix_max[k] = std::max(suffix_max[k + 1], w[k]);
        suffix_min[k] = std::min(suffix_min[k + 1], w[k]);
        scale = std::max(scale, std::abs(w[k]));
    }
    const double floor = 1e-30 * scale;

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double wi = w[i];
        const double range = std::max(suffix_max[i + 1] - wi, wi - suffix_min[i + 1]);
        if (range <= 0.0) continue;
        double inner = 0.0;
        double product = 1.0;
        for (std::size_t k = i + 1; k < n; ++k) {
            product *= decay[k];
            inner += std::abs(w[k] - wi) * product;
            if ((k - i) % 64 == 0) {
                const double tail = eta[i] * range * product * tail_factor;
                if (tail <= 1e-16 * (total + eta[i] * inner) + floor) break;
            }
        }
        total += eta[i] * inner;
    }
    return total;
}

ConditionReport check_weights(std::span<const double> w, double lambda, const StepSchedule& schedule,
                              double c_tilde, bool last_weight_exempt) {
    const std::size_t n = w.size();
    if (n < 2) throw ConfigError("weight checks need n >= 2");
    if (!(lambda > 0.0)) throw ConfigError("weight checks need lambda > 0");
    schedule.validate();

    const double nd = static_cast<double>(n);
    ConditionReport report;
    report.n = n;
    report.lambda = lambda;
    report.c_tilde = c_tilde;
    report.last_weight_exempt = last_weight_exempt;

    double sum = 0.0;
    double energy = 0.0;
    double max_diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += w[i];
        energy += w[i] * w[i];
        if (i + 1 < n) {
            report.max_scaled_weight = std::max(report.max_scaled_weight, nd * std::abs(w[i]));
            // The exempt terminal weight's jump is excluded with it.
            if (!last_weight_exempt || i + 2 < n) max_diff = std::max(max_diff, std::abs(w[i + 1] - w[i]));
        }
    }
    const double last_sq = w[n - 1] * w[n - 1];
    report.sum_error = std::abs(sum - 1.0);
    report.last_scaled_weight = nd * std::abs(w[n - 1]);
    report.weight_energy = nd * energy;
    report.prefactor_estimate = nd * (last_weight_exempt ? energy - last_sq : energy);
    report.smoothness_sum = smoothness_sum(w, lambda, schedule);
    report.max_scaled_adjacent_diff = nd * nd * max_diff;
    report.adjacent_diff_condition = report.max_scaled_adjacent_diff <= c_tilde;
    return report;
}

ConditionReport check_conditions(const SchemeConfig& scheme, std::size_t n, double lambda,
                               const StepSchedule& schedule, double c_tilde) {
    const WeightVector weights = materialize_weights(scheme, n);
    return check_weights(weights.w, lambda, schedule, c_tilde, std::holds_alternative<AdaptiveScheme>(scheme));
}

std::vector<std::string> condition_warnings(const ConditionReport& report) {
    std::vector<std::string> warnings;
    const double root_n = std::sqrt(static_cast<double>(report.n));
    auto add = [&](auto&&... parts) {
        std::ostringstream os;
        (os << ... << parts);
        warnings.push_back(os.str());
    };
    if (report.sum_error > 1e-8) {
        add("weights sum to 1 +- ", report.sum_error, ", not 1");
    }
    // At a single horizon a weight of size n^(-1/2) or larger cannot be O(1/n)
    // with a moderate constant.
    if (report.max_scaled_weight > root_n) {
        add("max n|w_i| over i < n is ", report.max_scaled_weight, ", weights are not O(1/n)");
    }
    if (!report.last_weight_exempt && report.last_scaled_weight > root_n) {
        add("n|w_n| is ", report.last_scaled_weight, ", the last weight is not O(1/n)");
    }
    if (!report.adjacent_diff_condition) {
        add("max |w_{i+1} - w_i| = ", report.max_scaled_adjacent_diff, " / n^2 exceeds ", report.c_tilde,
            " / n^2; the smoothness sum (", report.smoothness_sum, ") must tend to 0 instead");
    }
    return warnings;
}

}  // namespace wasgd
