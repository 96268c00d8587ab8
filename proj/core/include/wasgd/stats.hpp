#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wasgd {

double normal_cdf(double x);
double normal_quantile(double p);

/// Kolmogorov-Smirnov distance sup |F_n - Phi| between the empirical CDF of
/// an ascending sample and the standard normal CDF.
double ks_distance(std::span<const double> sorted_sample);

/// Linear-interpolation (type 7) empirical quantile of an ascending sample.
double empirical_quantile(std::span<const double> sorted_sample, double p);

// Welford mean/variance accumulator.
struct Moments {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }
    // Unbiased (n - 1) sample variance.
    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
};

Moments moments_of(std::span<const double> xs);

}  // namespace wasgd
