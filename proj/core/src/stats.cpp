#include "wasgd/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "wasgd/error.hpp"

namespace wasgd {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double ks_distance(std::span<const double> sorted_sample) {
    if (sorted_sample.empty()) throw ConfigError("ks_distance needs a nonempty sample");
    const double n = static_cast<double>(sorted_sample.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < sorted_sample.size(); ++i) {
        const double phi = normal_cdf(sorted_sample[i]);
        const double below = static_cast<double>(i) / n;
        const double above = static_cast<double>(i + 1) / n;
        sup = std::max({sup, phi - below, above - phi});
    }
    return sup;
}

double empirical_quantile(std::span<const double> sorted_sample, double p) {
    if (sorted_sample.empty()) throw ConfigError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
    const double h = p * static_cast<double>(sorted_sample.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted_sample.size() - 1);
    return sorted_sample[lo] + (h - static_cast<double>(lo)) * (sorted_sample[hi] - sorted_sample[lo]);
}

Moments moments_of(std::span<const double> xs) {
    Moments m;
    for (double x : xs) m.push(x);
    return m;
}

}  // namespace wasgd
