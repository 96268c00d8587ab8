#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>

#include "wasgd/linalg.hpp"
#include "wasgd/models.hpp"
#include "wasgd/rng.hpp"

namespace wasgd {

/// Step size eta_i = eta * i^-alpha, i >= 1. `override_first` replaces
/// eta_1 only; the closed-form optimal weights need eta_1 = a_1^-2.
struct StepSchedule {
    double eta = 1.0;
    double alpha = 0.505;
    std::optional<double> override_first;

    double step(std::size_t i) const;
    void validate() const;
};

struct SgdState {
    Vector x;
    Vector x_prev;
    std::size_t i = 0;

    static SgdState start(Vector x0);
};

/// What a sink sees after step `index`: the iterate before the step, the
/// observation used, and the new iterate.
struct StepRecord {
    std::size_t index;
    const Vector& previous;
    const Vector& current;
    const Observation& observation;
};

class StreamSink {
  public:
    virtual ~StreamSink() = default;
    virtual void push(const StepRecord& record) = 0;
};

// A sink that maintains a running point estimate.
class Estimator : public StreamSink {
  public:
    virtual Vector estimate() const = 0;
};

/// One SGD update x_{i+1} = x_i - eta_{i+1} * grad f(x_i, obs).
/// Throws NonFinite if the new iterate has a NaN or infinite coordinate.
SgdState sgd_step(SgdState state, const StepSchedule& schedule, const ModelSpec& model,
                  const Observation& obs);

using ObservationSource = std::function<Observation(std::size_t index, RngStream& rng)>;

/// Runs n steps from x0 (zeros when empty), pushing every iterate to each
/// sink in order. Keeps O(d) state; the trajectory itself is never stored.
SgdState run_trajectory(const StepSchedule& schedule, const ModelSpec& model, std::size_t n,
                        RngStream& rng, std::span<StreamSink* const> sinks, Vector x0 = {});

/// Same as run_trajectory with observations supplied by `source` (for
/// example a regressor sequence held fixed across replications).
SgdState run_trajectory(const StepSchedule& schedule, const ModelSpec& model, std::size_t n,
                        RngStream& rng, std::span<StreamSink* const> sinks, Vector x0,
                        const ObservationSource& source);

}  // namespace wasgd
