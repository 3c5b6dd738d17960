#include "enkbf/linear_gauss.hpp"

#include "enkbf/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>

namespace enkbf {

LinearGaussSpec LinearGaussSpec::from_models(const ModelSpec& model,
                                             const ObservationModel& obs,
                                             const Eigen::VectorXd& m0,
                                             const Eigen::MatrixXd& P0) {
    const int M = model.basis.M;
    LinearGaussSpec spec;
    switch (model.drift.family) {
        case DriftFamily::Heat:
            spec.A = Eigen::MatrixXd((-model.basis.mu).asDiagonal());
            break;
        case DriftFamily::LinearOperator:
            spec.A = model.drift.A;
            break;
        case DriftFamily::AllenCahn:
            throw invalid_argument_error(
                "LinearGaussSpec: drift must be linear");
    }
    if (obs.kind != ObservationKind::Linear)
        throw invalid_argument_error(
            "LinearGaussSpec: observations must be linear");
    if (obs.R_inv.size() == 0)
        throw invalid_argument_error(
            "LinearGaussSpec: observation noise must be invertible");
    spec.H = observation_matrix(obs, M);
    if (model.diffusion.is_identity()) {
        spec.BQBt = Eigen::MatrixXd(model.q.q.asDiagonal());
    } else {
        spec.BQBt = model.diffusion.B * model.q.q.asDiagonal() *
                    model.diffusion.B.transpose();
    }
    spec.R = obs.R;
    spec.R_inv = obs.R_inv;
    if (m0.size() != M || P0.rows() != M || P0.cols() != M)
        throw invalid_argument_error("LinearGaussSpec: init size mismatch");
    spec.m0 = m0;
    spec.P0 = P0;
    return spec;
}

namespace {

// Symmetrize, then clamp any (numerically) negative eigenvalue to zero.
// The eigen-decomposition is only rebuilt when a negative mode actually
// appears, so the common path adds no floating-point churn.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& P) {
    Eigen::MatrixXd S = (P + P.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.eigenvalues().minCoeff() >= 0.0) return S;
    Eigen::VectorXd floored = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * floored.asDiagonal() *
           es.eigenvectors().transpose();
}

} // namespace

RiccatiState kalman_bucy_step(const RiccatiState& state,
                              const LinearGaussSpec& spec,
                              const Eigen::VectorXd& dY, double dt) {
    if (!(dt > 0.0))
        throw invalid_argument_error("kalman_bucy_step: dt must be > 0");
    const int M = spec.M();
    if (state.m.size() != M || state.P.rows() != M || state.P.cols() != M ||
        dY.size() != spec.d_y())
        throw invalid_argument_error("kalman_bucy_step: size mismatch");
    const Eigen::MatrixXd& P = state.P;
    const Eigen::MatrixXd gain = P * spec.H.transpose() * spec.R_inv;
    RiccatiState next;
    // Mean: fully explicit, driven by the pre-step covariance.
    next.m = state.m + dt * (spec.A * state.m) + gain * (dY - spec.H * state.m * dt);
    // Covariance: implicit on the linear flow, explicit on the source and
    // the quadratic information term, then projected back to PSD.
    const Eigen::MatrixXd lhs =
        Eigen::MatrixXd::Identity(M, M) - dt * spec.A;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    const Eigen::MatrixXd inner =
        P + dt * (spec.BQBt - gain * spec.R * gain.transpose());
    const Eigen::MatrixXd resolved = lu.solve(lu.solve(inner).transpose());
    next.P = project_psd(resolved);
    return next;
}

Eigen::VectorXd linear_meanfield_enkbf_step(const Eigen::VectorXd& particle,
                                            const RiccatiState& filter,
                                            const LinearGaussSpec& spec,
                                            const Eigen::VectorXd& dY,
                                            const Eigen::VectorXd& BdW,
                                            double dt) {
    const int M = spec.M();
    if (particle.size() != M || BdW.size() != M || dY.size() != spec.d_y())
        throw invalid_argument_error(
            "linear_meanfield_enkbf_step: size mismatch");
    const Eigen::MatrixXd lhs =
        Eigen::MatrixXd::Identity(M, M) - dt * spec.A;
    const Eigen::VectorXd stepped = lhs.partialPivLu().solve(particle + BdW);
    const Eigen::MatrixXd gain = filter.P * spec.H.transpose() * spec.R_inv;
    return stepped +
           gain * (dY - 0.5 * dt * (spec.H * (particle + filter.m)));
}

TotalVarianceReport posterior_total_variance_check(
    const LinearGaussSpec& spec, const IntegratorConfig& config, double beta,
    double lambda) {
    const int steps = config.steps();
    const int M = spec.M();
    const Eigen::MatrixXd lhs =
        Eigen::MatrixXd::Identity(M, M) - config.dt * spec.A;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    TotalVarianceReport report;
    RiccatiState filt{spec.m0, project_psd(spec.P0)};
    Eigen::MatrixXd sig = project_psd(spec.P0);
    const Eigen::VectorXd dY0 = Eigen::VectorXd::Zero(spec.d_y());
    for (int n = 0; n <= steps; ++n) {
        const double t = config.time(n);
        report.times.push_back(t);
        report.tr_posterior.push_back(filt.P.trace());
        report.tr_signal.push_back(sig.trace());
        report.bound.push_back(signal_variance_bound(beta, lambda, t));
        const double violation =
            std::max(report.tr_posterior.back() - report.tr_signal.back(),
                     report.tr_signal.back() - report.bound.back());
        report.max_violation = std::max(report.max_violation, violation);
        if (n == steps) break;
        filt = kalman_bucy_step(filt, spec, dY0, config.dt);
        // Same scheme (including the PSD projection) as the filter update,
        // so with H = 0 the two sequences coincide bit for bit.
        sig = project_psd(
            lu.solve(lu.solve(sig + config.dt * spec.BQBt).transpose()));
    }
    return report;
}

} // namespace enkbf
