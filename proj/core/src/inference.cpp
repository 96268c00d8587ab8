#include "wasgd/inference.hpp"

#include <cmath>
#include <string>

#include "wasgd/error.hpp"
#include "wasgd/stats.hpp"

namespace wasgd {

namespace {

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
}

void check_estimate(const Vector& estimate, Eigen::Index dim) {
    if (estimate.size() != dim) throw ConfigError("estimate has the wrong dimension");
}

std::vector<Interval> symmetric_intervals(const Vector& estimate, const Vector& half_widths) {
    std::vector<Interval> out(static_cast<std::size_t>(estimate.size()));
    for (Eigen::Index j = 0; j < estimate.size(); ++j) {
        out[static_cast<std::size_t>(j)] = {estimate(j) - half_widths(j), estimate(j) + half_widths(j)};
    }
    return out;
}

}  // namespace

PluginState::PluginState(Eigen::Index dim)
    : a_acc(DenseMatrix::Zero(dim, dim)), s_acc(DenseMatrix::Zero(dim, dim)) {}

void PluginState::update(const ModelSpec& model, const Vector& x, const Observation& obs) {
    if (model.kind == ModelKind::expectile) {
        throw Unsupported("the plug-in interval is not available for the expectile model");
    }
    if (a_acc.rows() == 0) {
        a_acc = DenseMatrix::Zero(x.size(), x.size());
        s_acc = DenseMatrix::Zero(x.size(), x.size());
    }
    a_acc += hessian(model, x, obs);
    const Vector g = gradient(model, x, obs);
    s_acc.selfadjointView<Eigen::Lower>().rankUpdate(g);
    s_acc.triangularView<Eigen::StrictlyUpper>() = s_acc.transpose();
    ++n;
}

DenseMatrix PluginState::covariance(double ridge) const {
    if (n == 0) throw ConfigError("plug-in state has no observations");
    const double nd = static_cast<double>(n);
    const DenseMatrix a_inv = invert_spd(a_acc / nd, ridge);
    return symmetrize(a_inv * (s_acc / nd) * a_inv.transpose());
}

PluginSink::PluginSink(const ModelSpec& model) : model_(model), state_(model.dim()) {}

std::vector<Interval> plugin_interval(const PluginState& state, const Vector& estimate, double prefactor_w,
                                      double level, double ridge) {
    check_level(level);
    check_estimate(estimate, state.a_acc.rows());
    if (!(prefactor_w > 0.0)) throw ConfigError("prefactor must be positive");
    if (state.n < static_cast<std::size_t>(estimate.size())) {
        throw ConfigError("plug-in interval needs at least d observations");
    }
    const DenseMatrix v = state.covariance(ridge);
    const double z = normal_quantile(0.5 * (1.0 + level));
    const Vector half = (z * (prefactor_w * v.diagonal().array().max(0.0) / static_cast<double>(state.n)).sqrt()).matrix();
    return symmetric_intervals(estimate, half);
}

RandomScalingState::RandomScalingState(Eigen::Index dim)
    : mean_(Vector::Zero(dim)), q_(DenseMatrix::Zero(dim, dim)), g_(Vector::Zero(dim)) {
    if (dim < 1) throw ConfigError("random scaling needs dimension >= 1");
}

void RandomScalingState::update(const Vector& x) {
    if (x.size() != mean_.size()) throw ConfigError("iterate has the wrong dimension");
    const double next = static_cast<double>(t_ + 1);
    const Vector delta = (x - mean_) / next;
    // Every existing centered partial sum C_s moves by -s * delta; the new
    // one, C_{t+1}, is zero.
    q_.noalias() -= delta * g_.transpose();
    q_.noalias() -= g_ * delta.transpose();
    q_.noalias() += m_ * delta * delta.transpose();
    g_ -= m_ * delta;
    m_ += next * next;
    mean_ += delta;
    ++t_;
}

DenseMatrix RandomScalingState::covariance() const {
    if (t_ == 0) throw ConfigError("random scaling state has no iterates");
    const double n = static_cast<double>(t_);
    return symmetrize(q_ / (n * n));
}

std::vector<Interval> rs_interval(const RandomScalingState& state, const Vector& estimate, double prefactor_w,
                                  double level, const CriticalValueTable& table) {
    check_level(level);
    check_estimate(estimate, state.mean().size());
    if (!(prefactor_w > 0.0)) throw ConfigError("prefactor must be positive");
    const double q = table.quantile_for(0.5 * (1.0 + level));
    const DenseMatrix v = state.covariance();
    const double n = static_cast<double>(state.count());
    const Vector half = (q * (prefactor_w * v.diagonal().array().max(0.0) / n).sqrt()).matrix();
    return symmetric_intervals(estimate, half);
}

}  // namespace wasgd
