#pragma once

// Synchronous-coupling harness: the EnKBF ensemble and N mean-field copies
// share initial states and per-particle Wiener increments, so the gap
// r_i = u_i - ubar_i isolates the interaction error.  The mean-field law
// is exact (Riccati moments) in the linear-Gaussian case and otherwise
// approximated by a large auxiliary "oracle" ensemble of M_ref particles
// driven by independent noise but the same observation path.

#include "enkbf/ensemble.hpp"
#include "enkbf/linear_gauss.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace enkbf {

enum class CouplingMode { ExactLinearGauss, Oracle };

struct CouplingConfig {
    CouplingMode mode = CouplingMode::Oracle;
    int M_ref = 4096;              // oracle ensemble size (oracle mode)
    GainPolicy policy;             // applied to the particle system's gain
};

struct CouplingSeries {
    std::vector<double> times;
    std::vector<double> coupling_error;  // (1/N) sum ||u_i - ubar_i||_H^2
    std::vector<double> lln_increment;   // integrand of the LLN error
    double sup_coupling_error = 0.0;
    double lln_error = 0.0;              // left Riemann sum over [0, T]
    DiagnosticSeries particle_diagnostics;
};

struct CoupledRun {
    ModelSpec model;
    ObservationModel obs;
    IntegratorConfig config;
    CouplingConfig coupling;
    int N = 0;
    std::uint64_t seed = 0;
    std::uint32_t replicate_id = 0;
    SpectralField u0;
    std::optional<LinearGaussSpec> lin;  // exact mode only
};

// Validates and assembles a coupled run.  In oracle mode M_ref must exceed
// 4N (the oracle has to dominate the systems it calibrates); otherwise
// invalid_argument_error is thrown.  Exact mode requires linear drift and
// linear observations.
CoupledRun build_coupled_run(int N, const ModelSpec& model,
                             const ObservationModel& obs,
                             const IntegratorConfig& config,
                             const CouplingConfig& coupling,
                             const SpectralField& u0, std::uint64_t seed,
                             std::uint32_t replicate_id);

// Simulate the reference signal + observations, then step the particle
// system, the mean-field copies, and (oracle mode) the oracle ensemble
// over the grid.  Deterministic per (seed, replicate).
CouplingSeries execute_coupled_run(const CoupledRun& run);

// (1/N) sum_i ||u_i - ubar_i||_H^2 with fixed summation order.
double coupling_error(const Ensemble& particles, const Ensemble& copies);

// || C^N_H[copies] - C_exact ||_F^2 + | Eh^N[copies] - Eh_exact |^2 :
// one integrand sample of the law-of-large-numbers error.
double lln_increment(const Ensemble& copies, const ObservationModel& obs,
                     const Eigen::MatrixXd& exact_cross_cov,
                     const Eigen::VectorXd& exact_obs_mean);

struct ConvergenceReport {
    std::vector<int> N_values;
    int replicates = 0;
    double p = 1.0;
    // errors[i][r]: sup_t coupling error for N_values[i], replicate r.
    std::vector<std::vector<double>> errors;
    double slope = 0.0;
    std::array<double, 2> slope_ci{0.0, 0.0};  // bootstrap 95% interval
    double dt = 0.0;
    std::string model_hash;
    bool degenerate = false;  // all errors exactly 0 (gain disabled)
};

// For each N: `replicates` independent coupled runs; record sup_t coupling
// error, fit log E[(sup err)^p] against log N by ordinary least squares
// with a 200-resample replicate bootstrap for the slope CI.  Fewer than
// 3 N-values throw invalid_argument_error.
ConvergenceReport convergence_sweep(const std::vector<int>& N_list,
                                    int replicates, const ModelSpec& model,
                                    const ObservationModel& obs,
                                    const IntegratorConfig& config,
                                    const CouplingConfig& coupling,
                                    const SpectralField& u0,
                                    std::uint64_t seed, double p,
                                    const std::string& model_hash);

struct ExponentialMomentReport {
    double estimate = 0.0;    // MC mean of sup_t exp(q sigma_t)
    double std_error = 0.0;   // standard error of that mean
    double bound = 0.0;       // (pi+1) exp(q (e^{(2l+1)T} - 1) / (2(2l+1)))
    double threshold = 0.0;   // admissibility: N > 2 beta q e^{(2l+1)T}
    bool admissible = false;
    int N = 0;
    double q = 0.0;
    int replicates = 0;
};

// Deterministic-init ensembles only (the initial-moment factor is then 1).
ExponentialMomentReport exponential_moment_report(
    double q, int N, int replicates, const ModelSpec& model,
    const ObservationModel& obs, const IntegratorConfig& config,
    const SpectralField& u0, std::uint64_t seed, double lambda,
    const GainPolicy& policy);

} // namespace enkbf
