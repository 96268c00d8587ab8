#include "wasgd/sgd.hpp"

#include <cmath>
#include <string>

#include "wasgd/error.hpp"

namespace wasgd {

double StepSchedule::step(std::size_t i) const {
    if (i == 0) throw ConfigError("step sizes are indexed from 1");
    if (i == 1 && override_first) return *override_first;
    return eta * std::pow(static_cast<double>(i), -alpha);
}

void StepSchedule::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive and finite");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (override_first && !(*override_first > 0.0 && std::isfinite(*override_first))) {
        throw ConfigError("override_first must be positive and finite");
    }
}

SgdState SgdState::start(Vector x0) {
    SgdState s;
    s.x_prev = x0;
    s.x = std::move(x0);
    return s;
}

SgdState sgd_step(SgdState state, const StepSchedule& schedule, const ModelSpec& model,
                  const Observation& obs) {
    const double eta = schedule.step(state.i + 1);
    Vector next = state.x - eta * gradient(model, state.x, obs);
    if (!next.allFinite()) {
        throw NonFinite("SGD iterate became non-finite at step " + std::to_string(state.i + 1) +
                        " (eta_i = " + std::to_string(eta) + ")");
    }
    state.x_prev = std::move(state.x);
    state.x = std::move(next);
    ++state.i;
    return state;
}

SgdState run_trajectory(const StepSchedule& schedule, const ModelSpec& model, std::size_t n,
                        RngStream& rng, std::span<StreamSink* const> sinks, Vector x0,
                        const ObservationSource& source) {
    if (n < 1) throw ConfigError("a trajectory needs at least one step");
    if (x0.size() == 0) x0 = Vector::Zero(model.dim());
    if (x0.size() != model.dim()) throw ConfigError("x0 has the wrong dimension");

    SgdState state = SgdState::start(std::move(x0));
    for (std::size_t i = 1; i <= n; ++i) {
        const Observation obs = source(i, rng);
        state = sgd_step(std::move(state), schedule, model, obs);
        const StepRecord record{i, state.x_prev, state.x, obs};
        for (StreamSink* sink : sinks) sink->push(record);
    }
    return state;
}

SgdState run_trajectory(const StepSchedule& schedule, const ModelSpec& model, std::size_t n,
                        RngStream& rng, std::span<StreamSink* const> sinks, Vector x0) {
    return run_trajectory(schedule, model, n, rng, sinks, std::move(x0),
                          [&model](std::size_t, RngStream& r) { return draw(model, r); });
}

}  // namespace wasgd
