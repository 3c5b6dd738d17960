#include "enkbf/models.hpp"

#include "enkbf/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace enkbf {

DriftModel DriftModel::heat() {
    DriftModel m;
    m.family = DriftFamily::Heat;
    m.declared_lambda = 0.0;  // conservative; the true constant is -2 pi^2
    return m;
}

DriftModel DriftModel::allen_cahn(double a, double b, double c) {
    if (a < 0.0)
        throw invalid_argument_error(
            "allen_cahn: cubic coefficient must be >= 0 (dissipative)");
    DriftModel m;
    m.family = DriftFamily::AllenCahn;
    m.ac = {a, b, c};
    m.declared_lambda = std::max(0.0, 2.0 * b);
    return m;
}

DriftModel DriftModel::linear(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols() || A.rows() == 0)
        throw invalid_argument_error("linear: A must be square and nonempty");
    DriftModel m;
    m.family = DriftFamily::LinearOperator;
    m.A = A;
    const Eigen::MatrixXd sym = A + A.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    m.declared_lambda = es.eigenvalues().maxCoeff();
    return m;
}

double QSpectrum::trace() const {
    double acc = 0.0;
    for (int k = 0; k < q.size(); ++k) acc += q[k];
    return acc;
}

QSpectrum make_q_spectrum(int M, double alpha, double tau) {
    if (M < 1) throw invalid_argument_error("make_q_spectrum: M must be >= 1");
    if (!(alpha > 0.5))
        throw invalid_argument_error(
            "make_q_spectrum: decay exponent must exceed 1/2 (finite trace)");
    if (!(tau > 0.0))
        throw invalid_argument_error("make_q_spectrum: trace must be positive");
    QSpectrum spec;
    spec.alpha = alpha;
    spec.tau = tau;
    spec.q.resize(M);
    double raw_sum = 0.0;
    for (int k = 0; k < M; ++k) {
        spec.q[k] = std::pow(double(k + 1), -2.0 * alpha);
        raw_sum += spec.q[k];
    }
    spec.q *= tau / raw_sum;
    return spec;
}

DiffusionModel DiffusionModel::matrix(const Eigen::MatrixXd& B) {
    if (B.rows() != B.cols() || B.rows() == 0)
        throw invalid_argument_error(
            "DiffusionModel: B must be square and nonempty");
    DiffusionModel d;
    d.B = B;
    return d;
}

SpectralField DiffusionModel::apply(const SpectralField& dW) const {
    if (is_identity()) return dW;
    if (B.cols() != dW.size())
        throw invalid_argument_error("DiffusionModel::apply: size mismatch");
    return B * dW;
}

double DiffusionModel::trace_bound(const QSpectrum& Q) const {
    if (is_identity()) return Q.trace();
    if (B.cols() != Q.q.size())
        throw invalid_argument_error("trace_bound: spectrum size mismatch");
    // tr(B Q B^T) = sum_k q_k ||B e_k||^2, sequential for reproducibility.
    double acc = 0.0;
    for (int k = 0; k < Q.q.size(); ++k) {
        double col = 0.0;
        for (int j = 0; j < B.rows(); ++j) col += B(j, k) * B(j, k);
        acc += Q.q[k] * col;
    }
    return acc;
}

SpectralField apply_drift(const DriftModel& model, const BasisSpec& basis,
                          const SpectralField& u) {
    if (u.size() != basis.M)
        throw invalid_argument_error("apply_drift: state size mismatch");
    switch (model.family) {
        case DriftFamily::Heat:
            return (-basis.mu.array() * u.array()).matrix();
        case DriftFamily::AllenCahn: {
            const auto& p = model.ac;
            Eigen::VectorXd v = to_physical(basis, u);
            Eigen::VectorXd w(v.size());
            for (int j = 0; j < v.size(); ++j)
                w[j] = -p.a * v[j] * v[j] * v[j] + p.b * v[j] + p.c;
            SpectralField reaction = to_spectral(basis, w);
            return (-basis.mu.array() * u.array()).matrix() + reaction;
        }
        case DriftFamily::LinearOperator:
            if (model.A.cols() != u.size())
                throw invalid_argument_error("apply_drift: A size mismatch");
            return model.A * u;
    }
    throw invalid_argument_error("apply_drift: unknown drift family");
}

double one_sided_lipschitz_check(
    const DriftModel& model, const DiffusionModel& diffusion,
    const BasisSpec& basis,
    const std::vector<std::pair<SpectralField, SpectralField>>& pairs) {
    (void)diffusion;  // additive: the Hilbert-Schmidt difference term is 0
    if (pairs.empty())
        throw invalid_argument_error("one_sided_lipschitz_check: no pairs");
    bool any = false;
    double worst = 0.0;
    for (const auto& [u, v] : pairs) {
        SpectralField w = u - v;
        const double n2 = h_norm2(w);
        if (n2 == 0.0) continue;  // identical pair carries no information
        SpectralField dA = apply_drift(model, basis, u) -
                           apply_drift(model, basis, v);
        const double ratio = 2.0 * h_dot(dA, w) / n2;
        if (!any || ratio > worst) worst = ratio;
        any = true;
    }
    if (!any)
        throw invalid_argument_error(
            "one_sided_lipschitz_check: all pairs identical");
    return worst;
}

} // namespace enkbf
