#include "enkbf/basis.hpp"

#include "enkbf/errors.hpp"

#include <cmath>
#include <numbers>

namespace enkbf {

BasisSpec make_basis(int M) {
    if (M < 1) throw invalid_argument_error("make_basis: M must be >= 1");
    BasisSpec basis;
    basis.M = M;
    basis.mu.resize(M);
    for (int k = 0; k < M; ++k) {
        const double kpi = (k + 1) * std::numbers::pi;
        basis.mu[k] = kpi * kpi;
    }
    // 2M+1 uniform interior nodes: enough oversampling that the first M
    // modes of a cubic of an M-mode field are alias-free.
    const int n = 2 * M + 1;
    basis.nodes.resize(n);
    for (int j = 0; j < n; ++j) basis.nodes[j] = double(j + 1) / double(n + 1);
    basis.synth.resize(n, M);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < M; ++k) {
            basis.synth(j, k) =
                std::numbers::sqrt2 *
                std::sin((k + 1) * std::numbers::pi * basis.nodes[j]);
        }
    }
    // Discrete orthogonality of the sine modes on the uniform grid makes
    // (1/(n+1)) synth^T a left inverse of synth.
    basis.analyze = basis.synth.transpose() / double(n + 1);
    return basis;
}

Eigen::VectorXd to_physical(const BasisSpec& basis, const SpectralField& u) {
    if (u.size() != basis.M)
        throw invalid_argument_error("to_physical: coefficient size mismatch");
    return basis.synth * u;
}

SpectralField to_spectral(const BasisSpec& basis, const Eigen::VectorXd& values) {
    if (values.size() != basis.grid_size())
        throw invalid_argument_error("to_spectral: grid size mismatch");
    return basis.analyze * values;
}

double evaluate_field(const SpectralField& u, double x) {
    double acc = 0.0;
    for (int k = 0; k < u.size(); ++k)
        acc += u[k] * std::numbers::sqrt2 *
               std::sin((k + 1) * std::numbers::pi * x);
    return acc;
}

double h_norm2(const SpectralField& u) {
    double acc = 0.0;
    for (int k = 0; k < u.size(); ++k) acc += u[k] * u[k];
    return acc;
}

double v_norm2(const BasisSpec& basis, const SpectralField& u) {
    if (u.size() != basis.M)
        throw invalid_argument_error("v_norm2: coefficient size mismatch");
    double acc = 0.0;
    for (int k = 0; k < u.size(); ++k) acc += basis.mu[k] * u[k] * u[k];
    return acc;
}

double h_dot(const SpectralField& u, const SpectralField& v) {
    if (u.size() != v.size())
        throw invalid_argument_error("h_dot: size mismatch");
    double acc = 0.0;
    for (int k = 0; k < u.size(); ++k) acc += u[k] * v[k];
    return acc;
}

} // namespace enkbf
