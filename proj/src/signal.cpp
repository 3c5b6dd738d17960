#include "enkbf/signal.hpp"

#include "enkbf/errors.hpp"

#include <Eigen/LU>

#include <cmath>

namespace enkbf {

int IntegratorConfig::steps() const {
    if (!(dt > 0.0)) throw invalid_argument_error("IntegratorConfig: dt must be > 0");
    if (T < 0.0) throw invalid_argument_error("IntegratorConfig: T must be >= 0");
    const long long n = std::llround(T / dt);
    if (std::abs(double(n) * dt - T) > 1e-12 * std::max(T, 1.0))
        throw invalid_argument_error(
            "IntegratorConfig: horizon must be an integer multiple of dt");
    return static_cast<int>(n);
}

namespace {

// Reaction part of the Allen-Cahn drift, evaluated pseudo-spectrally,
// optionally tamed by 1/(1 + dt ||F||_H).
SpectralField allen_cahn_reaction(const ModelSpec& model,
                                  const SpectralField& u, double dt,
                                  bool tame) {
    const auto& p = model.drift.ac;
    Eigen::VectorXd v = to_physical(model.basis, u);
    Eigen::VectorXd w(v.size());
    for (int j = 0; j < v.size(); ++j)
        w[j] = -p.a * v[j] * v[j] * v[j] + p.b * v[j] + p.c;
    SpectralField F = to_spectral(model.basis, w);
    if (tame) F /= 1.0 + dt * h_norm(F);
    return F;
}

} // namespace

SpectralField step_signal(const SpectralField& state, const ModelSpec& model,
                          double dt, const SpectralField& dW,
                          bool tame_nonlinearity) {
    if (!(dt > 0.0)) throw invalid_argument_error("step_signal: dt must be > 0");
    if (state.size() != model.basis.M)
        throw invalid_argument_error("step_signal: state size mismatch");
    if (dW.size() != model.basis.M)
        throw invalid_argument_error("step_signal: noise size mismatch");
    const SpectralField BdW = model.diffusion.apply(dW);
    switch (model.drift.family) {
        case DriftFamily::Heat:
            return ((state + BdW).array() / (1.0 + dt * model.basis.mu.array()))
                .matrix();
        case DriftFamily::AllenCahn: {
            const SpectralField F =
                allen_cahn_reaction(model, state, dt, tame_nonlinearity);
            return ((state + dt * F + BdW).array() /
                    (1.0 + dt * model.basis.mu.array()))
                .matrix();
        }
        case DriftFamily::LinearOperator: {
            const int M = model.basis.M;
            const Eigen::MatrixXd lhs =
                Eigen::MatrixXd::Identity(M, M) - dt * model.drift.A;
            return lhs.partialPivLu().solve(state + BdW);
        }
    }
    throw invalid_argument_error("step_signal: unknown drift family");
}

SignalPath simulate_signal_path(const SpectralField& u0, const ModelSpec& model,
                                const IntegratorConfig& config,
                                const StreamKey& key) {
    const int steps = config.steps();
    SignalPath path;
    path.times.resize(steps + 1);
    path.states.resize(steps + 1);
    path.times[0] = 0.0;
    path.states[0] = u0;
    for (int n = 0; n < steps; ++n) {
        const SpectralField dW = sample_wiener_increment(
            key, std::uint32_t(n), config.dt, model.q);
        path.states[n + 1] = step_signal(path.states[n], model, config.dt, dW,
                                         config.tame_nonlinearity);
        path.times[n + 1] = config.time(n + 1);
        if (!path.states[n + 1].allFinite())
            throw divergence_error("simulate_signal_path: non-finite state");
    }
    return path;
}

Eigen::MatrixXd implicit_resolvent(const ModelSpec& model, double dt) {
    const int M = model.basis.M;
    switch (model.drift.family) {
        case DriftFamily::Heat:
        case DriftFamily::AllenCahn:
            return Eigen::MatrixXd(
                (1.0 / (1.0 + dt * model.basis.mu.array())).matrix().asDiagonal());
        case DriftFamily::LinearOperator: {
            const Eigen::MatrixXd lhs =
                Eigen::MatrixXd::Identity(M, M) - dt * model.drift.A;
            return lhs.partialPivLu().inverse();
        }
    }
    throw invalid_argument_error("implicit_resolvent: unknown drift family");
}

MomentPath evolve_signal_covariance(const ModelSpec& model,
                                    const IntegratorConfig& config,
                                    const Eigen::VectorXd& m0,
                                    const Eigen::MatrixXd& P0) {
    const int M = model.basis.M;
    if (model.drift.family == DriftFamily::AllenCahn)
        throw invalid_argument_error(
            "evolve_signal_covariance: drift must be linear");
    if (m0.size() != M || P0.rows() != M || P0.cols() != M)
        throw invalid_argument_error("evolve_signal_covariance: size mismatch");
    const int steps = config.steps();
    const Eigen::MatrixXd R = implicit_resolvent(model, config.dt);
    Eigen::MatrixXd BQBt;
    if (model.diffusion.is_identity()) {
        BQBt = Eigen::MatrixXd(model.q.q.asDiagonal());
    } else {
        BQBt = model.diffusion.B * model.q.q.asDiagonal() *
               model.diffusion.B.transpose();
    }
    MomentPath path;
    path.times.resize(steps + 1);
    path.means.resize(steps + 1);
    path.covs.resize(steps + 1);
    path.times[0] = 0.0;
    path.means[0] = m0;
    path.covs[0] = (P0 + P0.transpose()) / 2.0;
    for (int n = 0; n < steps; ++n) {
        path.means[n + 1] = R * path.means[n];
        Eigen::MatrixXd P = R * (path.covs[n] + config.dt * BQBt) * R.transpose();
        path.covs[n + 1] = (P + P.transpose()) / 2.0;
        path.times[n + 1] = config.time(n + 1);
    }
    return path;
}

double signal_variance_bound(double beta, double lambda, double t) {
    if (beta < 0.0)
        throw invalid_argument_error("signal_variance_bound: beta must be >= 0");
    return beta * std::exp(lambda * t);
}

} // namespace enkbf
