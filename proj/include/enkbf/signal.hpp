#pragma once

// Time integration of the signal SPDE and of the linear mean/covariance
// ODEs.  Scheme: semi-implicit Euler-Maruyama — the stiff linear part of
// the drift is implicit, the nonlinearity, noise and (downstream) gain
// terms are explicit:
//   (I - dt L) u+ = u + dt F(u) + B dW.
// For Heat/AllenCahn L is the diagonal Laplacian; for a dense linear drift
// L = A and F = 0.

#include "enkbf/basis.hpp"
#include "enkbf/models.hpp"
#include "enkbf/rng.hpp"

#include <vector>

namespace enkbf {

struct IntegratorConfig {
    double dt = 1e-3;
    double T = 1.0;
    bool tame_nonlinearity = false;  // F <- F / (1 + dt ||F||_H), off by default

    int steps() const;               // T/dt, validated to be integral
    double time(int n) const { return n * dt; }
};

struct SignalPath {
    std::vector<double> times;          // grid 0..T
    std::vector<SpectralField> states;  // u at each grid time
};

// One semi-implicit step.  dW is the (pre-diffusion) Q-Wiener increment
// sampled with the same dt; pass a zero field for noise-free evolution.
SpectralField step_signal(const SpectralField& state, const ModelSpec& model,
                          double dt, const SpectralField& dW,
                          bool tame_nonlinearity = false);

// Integrate from u0 over the config grid, drawing increments from the
// signal-noise stream of `key`.  Deterministic per key.
SignalPath simulate_signal_path(const SpectralField& u0, const ModelSpec& model,
                                const IntegratorConfig& config,
                                const StreamKey& key);

struct MomentPath {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;  // symmetric PSD at every step
};

// Mean/covariance ODEs dm/dt = A m, dP/dt = A P + P A^T + B Q B^T for a
// linear drift (Heat counts as linear), same semi-implicit splitting,
// P symmetrized each step.  Nonlinear drift throws invalid_argument_error.
MomentPath evolve_signal_covariance(const ModelSpec& model,
                                    const IntegratorConfig& config,
                                    const Eigen::VectorXd& m0,
                                    const Eigen::MatrixXd& P0);

// The a-priori trace bound beta * e^{lambda t}.
double signal_variance_bound(double beta, double lambda, double t);

// Dense (I - dt A)^{-1} for the linear families; diagonal fast path is
// used internally, this exists for reuse by the filter steps.
Eigen::MatrixXd implicit_resolvent(const ModelSpec& model, double dt);

} // namespace enkbf
