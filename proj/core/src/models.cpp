#include "wasgd/models.hpp"

#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "wasgd/error.hpp"
#include "wasgd/stats.hpp"

namespace wasgd {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::mean: return "mean";
        case ModelKind::linear: return "linear";
        case ModelKind::logistic: return "logistic";
        case ModelKind::expectile: return "expectile";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "mean") return ModelKind::mean;
    if (name == "linear") return ModelKind::linear;
    if (name == "logistic") return ModelKind::logistic;
    if (name == "expectile") return ModelKind::expectile;
    throw ConfigError("unknown model '" + std::string(name) + "'");
}

ModelSpec ModelSpec::mean(double x_star, double noise_sigma) {
    ModelSpec m;
    m.kind = ModelKind::mean;
    m.x_star = Vector::Constant(1, x_star);
    m.noise_sigma = noise_sigma;
    return m;
}

ModelSpec ModelSpec::linear(Vector x_star, double noise_sigma) {
    ModelSpec m;
    m.kind = ModelKind::linear;
    m.x_star = std::move(x_star);
    m.noise_sigma = noise_sigma;
    return m;
}

ModelSpec ModelSpec::logistic(Vector x_star) {
    ModelSpec m;
    m.kind = ModelKind::logistic;
    m.x_star = std::move(x_star);
    return m;
}

ModelSpec ModelSpec::expectile(double rho, ResponseDistribution response) {
    ModelSpec m;
    m.kind = ModelKind::expectile;
    m.rho = rho;
    m.response = response;
    m.validate();
    m.x_star = Vector::Constant(1, normal_expectile(rho, response));
    return m;
}

void ModelSpec::validate() const {
    if (kind != ModelKind::expectile) {
        if (x_star.size() < 1) throw ConfigError("model dimension must be at least 1");
        if (x_star.size() > kMaxDimension) {
            throw ConfigError("model dimension " + std::to_string(x_star.size()) +
                              " exceeds the supported maximum " + std::to_string(kMaxDimension));
        }
        if (!x_star.allFinite()) throw ConfigError("x_star must be finite");
    }
    switch (kind) {
        case ModelKind::mean:
            if (x_star.size() != 1) throw ConfigError("the mean model has dimension 1");
            [[fallthrough]];
        case ModelKind::linear:
            if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
                throw ConfigError("noise_sigma must be finite and non-negative");
            }
            break;
        case ModelKind::logistic: break;
        case ModelKind::expectile:
            if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("expectile rho must lie in (0, 1)");
            if (!(response.scale > 0.0) || !std::isfinite(response.location)) {
                throw ConfigError("expectile response needs finite location and positive scale");
            }
            if (x_star.size() > 1) throw ConfigError("the expectile model has dimension 1");
            break;
    }
}

namespace {

double sigmoid(double t) {
    return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace

Observation draw_given(const ModelSpec& model, const Vector& a, RngStream& rng) {
    Observation obs{a, 0.0};
    switch (model.kind) {
        case ModelKind::mean:
        case ModelKind::linear:
            obs.b = a.dot(model.x_star) + model.noise_sigma * rng.normal();
            break;
        case ModelKind::logistic:
            obs.b = rng.uniform() < sigmoid(a.dot(model.x_star)) ? 1.0 : -1.0;
            break;
        case ModelKind::expectile:
            throw Unsupported("the expectile model has no regressor");
    }
    return obs;
}

Observation draw(const ModelSpec& model, RngStream& rng) {
    switch (model.kind) {
        case ModelKind::mean:
            return draw_given(model, Vector::Ones(1), rng);
        case ModelKind::linear:
        case ModelKind::logistic:
            return draw_given(model, gaussian_vector(rng, model.dim()), rng);
        case ModelKind::expectile:
            return Observation{Vector::Ones(1),
                               model.response.location + model.response.scale * rng.normal()};
    }
    throw Unsupported("unknown model kind");
}

Vector gradient(const ModelSpec& model, const Vector& x, const Observation& obs) {
    switch (model.kind) {
        case ModelKind::mean:
        case ModelKind::linear:
            return obs.a * (obs.a.dot(x) - obs.b);
        case ModelKind::logistic:
            // d/dx log(1 + exp(-b a'x)) = -b a / (1 + exp(b a'x))
            return -obs.b * sigmoid(-obs.b * obs.a.dot(x)) * obs.a;
        case ModelKind::expectile: {
            const double y = obs.b;
            const double weight = y < x[0] ? 1.0 - model.rho : model.rho;
            return Vector::Constant(1, 2.0 * weight * (x[0] - y));
        }
    }
    throw Unsupported("unknown model kind");
}

DenseMatrix hessian(const ModelSpec& model, const Vector& x, const Observation& obs) {
    switch (model.kind) {
        case ModelKind::mean:
        case ModelKind::linear:
            return obs.a * obs.a.transpose();
        case ModelKind::logistic: {
            const double p = sigmoid(obs.a.dot(x));
            return p * (1.0 - p) * (obs.a * obs.a.transpose());
        }
        case ModelKind::expectile:
            throw Unsupported("the expectile loss has no Hessian at its kink; plug-in is disabled");
    }
    throw Unsupported("unknown model kind");
}

double normal_expectile(double rho, ResponseDistribution response) {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("expectile rho must lie in (0, 1)");
    // Standardized expectile e solves
    //   rho * E(y - e)_+ = (1 - rho) * E(e - y)_+,  y ~ N(0, 1),
    // with E(y - e)_+ = phi(e) - e (1 - Phi(e)) and E(e - y)_+ = phi(e) + e Phi(e).
    auto balance = [rho](double e) {
        const double phi = std::exp(-0.5 * e * e) / std::sqrt(2.0 * M_PI);
        const double cdf = normal_cdf(e);
        return rho * (phi - e * (1.0 - cdf)) - (1.0 - rho) * (phi + e * cdf);
    };
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iterations = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(balance, -40.0, 40.0, tol, iterations);
    return response.location + response.scale * 0.5 * (lo + hi);
}

SandwichTruth sandwich_truth(const ModelSpec& model, std::size_t reps, RngStream& rng) {
    model.validate();
    const Eigen::Index d = model.dim();
    SandwichTruth truth;
    switch (model.kind) {
        case ModelKind::mean:
        case ModelKind::linear: {
            const double s2 = model.noise_sigma * model.noise_sigma;
            truth.A = DenseMatrix::Identity(d, d);
            truth.S = s2 * DenseMatrix::Identity(d, d);
            truth.V = s2 * DenseMatrix::Identity(d, d);
            return truth;
        }
        case ModelKind::logistic: {
            if (reps < 10000) throw ConfigError("Monte-Carlo sandwich needs at least 1e4 draws");
            DenseMatrix a_sum = DenseMatrix::Zero(d, d);
            DenseMatrix s_sum = DenseMatrix::Zero(d, d);
            for (std::size_t r = 0; r < reps; ++r) {
                const Observation obs = draw(model, rng);
                const Vector g = gradient(model, model.x_star, obs);
                const double p = sigmoid(obs.a.dot(model.x_star));
                a_sum.selfadjointView<Eigen::Lower>().rankUpdate(obs.a, p * (1.0 - p));
                s_sum.selfadjointView<Eigen::Lower>().rankUpdate(g);
            }
            const double inv = 1.0 / static_cast<double>(reps);
            truth.A = symmetrize(DenseMatrix(a_sum.selfadjointView<Eigen::Lower>()) * inv);
            truth.S = symmetrize(DenseMatrix(s_sum.selfadjointView<Eigen::Lower>()) * inv);
            const DenseMatrix a_inv = invert_spd(truth.A, 0.0);
            truth.V = symmetrize(a_inv * truth.S * a_inv.transpose());
            truth.source = SandwichTruth::Source::monte_carlo;
            truth.reps = reps;
            return truth;
        }
        case ModelKind::expectile:
            throw NotAvailable("no sandwich matrices for the expectile model; use oracle weights");
    }
    throw Unsupported("unknown model kind");
}

}  // namespace wasgd
