#pragma once

// Observation process dY = H(u) dt + Gamma dV.  H is either linear,
// H(v)_j = <h_j, v>_H, or its bounded saturation s * tanh(<h_j, v>/s).
// Observation noise is isotropic by default (Gamma = gamma I) with an
// optional piecewise-constant schedule of Gamma over time.

#include "enkbf/basis.hpp"
#include "enkbf/rng.hpp"
#include "enkbf/signal.hpp"

#include <vector>

namespace enkbf {

enum class ObservationKind { Linear, BoundedTanh };

struct ObservationModel {
    ObservationKind kind = ObservationKind::Linear;
    int d_y = 1;
    std::vector<SpectralField> functionals;  // d_y fields h_j
    double saturation = 1.0;                 // s (BoundedTanh only)
    Eigen::MatrixXd Gamma;                   // d_y x d_v noise shape
    Eigen::MatrixXd R;                       // Gamma Gamma^T
    Eigen::MatrixXd R_inv;
    // Piecewise-constant schedule: Gamma_t = entries.back such that t >= t_i.
    // Empty means the single Gamma above for all t.
    std::vector<std::pair<double, Eigen::MatrixXd>> schedule;

    int d_v() const { return static_cast<int>(Gamma.cols()); }
    const Eigen::MatrixXd& gamma_at(double t) const;

    // Build with h_j = e_{indices[j]} (1-based mode indices) and
    // Gamma = gamma * I.
    static ObservationModel make(ObservationKind kind, const BasisSpec& basis,
                                 const std::vector<int>& indices, double s,
                                 double gamma);
    static ObservationModel make_general(ObservationKind kind,
                                         std::vector<SpectralField> functionals,
                                         double s, const Eigen::MatrixXd& Gamma);
};

struct ObservationPath {
    std::vector<double> times;              // grid 0..T (size steps+1)
    std::vector<Eigen::VectorXd> increments;  // dY_n over [t_n, t_{n+1})
};

// H(v) in R^{d_y}.  Dimension mismatch throws invalid_argument_error.
Eigen::VectorXd observe(const ObservationModel& model, const SpectralField& v);

// dY_n = H(u_{t_n}) dt + Gamma_{t_n} sqrt(dt) xi_n with xi_n standard
// normal in R^{d_v} drawn from the obs-noise stream of `key` at step n.
ObservationPath generate_observation_path(const SignalPath& signal,
                                          const ObservationModel& model,
                                          const StreamKey& key);

// dense d_y x M matrix with rows h_j^T (for the linear-Gaussian reference).
Eigen::MatrixXd observation_matrix(const ObservationModel& model, int M);

} // namespace enkbf
