#pragma once

// Optimal-filter reference for linear drift, linear observations and
// Gaussian initial law: Kalman-Bucy mean + Riccati covariance, the exact
// mean-field ensemble step driven by the Riccati covariance, and the
// law-of-total-variance check against the unconditional signal covariance.

#include "enkbf/basis.hpp"
#include "enkbf/models.hpp"
#include "enkbf/observation.hpp"
#include "enkbf/signal.hpp"

#include <vector>

namespace enkbf {

struct RiccatiState {
    Eigen::VectorXd m;  // conditional mean
    Eigen::MatrixXd P;  // conditional covariance, symmetric PSD
};

struct LinearGaussSpec {
    Eigen::MatrixXd A;      // M x M drift
    Eigen::MatrixXd H;      // d_y x M observation rows h_j^T
    Eigen::MatrixXd BQBt;   // M x M process-noise covariance rate
    Eigen::MatrixXd R;      // d_y x d_y observation-noise covariance
    Eigen::MatrixXd R_inv;
    Eigen::VectorXd m0;
    Eigen::MatrixXd P0;

    int M() const { return static_cast<int>(A.rows()); }
    int d_y() const { return static_cast<int>(H.rows()); }

    // Assemble from a (linear-drift) model + linear observation model.
    static LinearGaussSpec from_models(const ModelSpec& model,
                                       const ObservationModel& obs,
                                       const Eigen::VectorXd& m0,
                                       const Eigen::MatrixXd& P0);
};

// One filter step:
//   P+ = (I - dt A)^{-1} (P + dt (BQB^T - P H^T R^{-1} H P)) (I - dt A)^{-T},
//        then symmetrized and eigenvalue-floored at 0;
//   m+ = m + dt A m + P H^T R^{-1} (dY - H m dt)   (pre-step P).
RiccatiState kalman_bucy_step(const RiccatiState& state,
                              const LinearGaussSpec& spec,
                              const Eigen::VectorXd& dY, double dt);

// One step of the mean-field ensemble member driven by the exact Riccati
// covariance P and filter mean m (both pre-step):
//   u+ = (I - dt A)^{-1} (u + B dW) + P H^T R^{-1} (dY - H (u + m)/2 dt).
Eigen::VectorXd linear_meanfield_enkbf_step(const Eigen::VectorXd& particle,
                                            const RiccatiState& filter,
                                            const LinearGaussSpec& spec,
                                            const Eigen::VectorXd& dY,
                                            const Eigen::VectorXd& BdW,
                                            double dt);

struct TotalVarianceReport {
    std::vector<double> times;
    std::vector<double> tr_posterior;   // tr P_t (Riccati)
    std::vector<double> tr_signal;      // tr Cov[u_t] (no observations)
    std::vector<double> bound;          // beta e^{lambda t}
    double max_violation = 0.0;         // max over grid of both orderings
};

// Verifies tr P_t <= tr Cov[u_t] <= beta e^{lambda t} on the grid.
TotalVarianceReport posterior_total_variance_check(const LinearGaussSpec& spec,
                                                  const IntegratorConfig& config,
                                                  double beta, double lambda);

} // namespace enkbf
