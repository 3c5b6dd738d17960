#pragma once

// The interacting ensemble Kalman-Bucy particle system (deterministic
// transport form) and its empirical statistics.
//
// Per step, with stats frozen from the pre-step ensemble:
//   u_i+ = semi-implicit signal step of u_i with its own dW_i
//        + ramp(||C||_F^2) * C R^{-1} (dY - (H(u_i) + Eh)/2 dt)
// where C is the 1/N-normalized cross-covariance between states and
// observations, Eh the empirical observation mean, and ramp the gain
// policy (1 for the untamed default).
//
// Every reduction over particles uses a fixed pairwise tree in ascending
// particle order; diagnostics are therefore bit-identical for any thread
// count.

#include "enkbf/basis.hpp"
#include "enkbf/models.hpp"
#include "enkbf/observation.hpp"
#include "enkbf/rng.hpp"
#include "enkbf/signal.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace enkbf {

struct Ensemble {
    // Column i is particle i's coefficient vector; particle ids are the
    // column indices offset by `particle_id_base`.
    Eigen::MatrixXd members;   // M x N
    std::uint32_t replicate_id = 0;
    std::uint32_t particle_id_base = 0;

    int N() const { return static_cast<int>(members.cols()); }
    int M() const { return static_cast<int>(members.rows()); }

    static Ensemble constant(const SpectralField& u0, int N,
                             std::uint32_t replicate_id,
                             std::uint32_t particle_id_base = 0);
    // Independent Gaussian init: particle i gets mean + sqrt(var_k) xi_k
    // from its init-role stream.
    static Ensemble gaussian(const SpectralField& mean,
                             const Eigen::VectorXd& var, int N,
                             std::uint64_t seed, std::uint32_t replicate_id,
                             std::uint32_t particle_id_base = 0);
};

struct EmpiricalStats {
    SpectralField mean;        // E^N
    Eigen::VectorXd obs_mean;  // Eh in R^{d_y}
    Eigen::MatrixXd cross_cov; // C: M x d_y, 1/N normalization
    double sigma = 0.0;        // (1/N) sum ||u_i - E^N||_H^2
    double sigma_H = 0.0;      // (1/N) sum |H(u_i) - Eh|^2
};

struct GainPolicy {
    // Untamed: ramp == 1.  Clipped(k): C^1 cubic ramp in ||C||_F^2 equal to
    // 1 on [0, k], 0 on [k+1, inf).
    std::optional<double> clip_threshold;

    static GainPolicy untamed() { return {}; }
    static GainPolicy clipped(double k) { return GainPolicy{k}; }

    // The smoothed indicator evaluated at x = ||C||_F^2.
    double ramp(double x) const;
};

// Empirical moments with ascending-id pairwise summation.  Empty ensemble
// throws invalid_argument_error.
EmpiricalStats compute_stats(const Ensemble& ensemble,
                             const ObservationModel& obs);

// Context needed to regenerate particle noise (counter-based streams).
struct NoiseContext {
    std::uint64_t seed = 0;
    std::uint32_t replicate_id = 0;
};

// One EnKBF step; stats and gain from the pre-step ensemble.  Returns the
// post-step ensemble.  If dW_out is non-null it receives the per-particle
// Q-Wiener increments that were consumed (column i for particle i), which
// the coupling harness feeds to the synchronized mean-field copies.
Ensemble enkbf_step(const Ensemble& ensemble, const ModelSpec& model,
                    const ObservationModel& obs, const Eigen::VectorXd& dY,
                    double dt, const NoiseContext& noise,
                    std::uint32_t step_index, const GainPolicy& policy,
                    Eigen::MatrixXd* dW_out = nullptr);

// Shared particle transport used by both the EnKBF and the mean-field
// copies: semi-implicit signal step plus the explicit gain increment built
// from the supplied moments (cross_cov, obs_mean).  dW columns must match
// the ensemble.
Ensemble transport_step(const Ensemble& ensemble, const ModelSpec& model,
                        const ObservationModel& obs,
                        const Eigen::MatrixXd& cross_cov,
                        const Eigen::VectorXd& obs_mean,
                        const Eigen::VectorXd& dY, double dt,
                        const Eigen::MatrixXd& dW, const GainPolicy& policy);

struct DiagnosticSeries {
    std::vector<double> times;
    std::vector<double> sigma;        // empirical variance at each grid time
    std::vector<double> sigma_H;
    std::vector<double> gain_norm;    // Frobenius norm of ramp * C R^{-1}
    std::vector<Eigen::VectorXd> mean_coeffs;  // first min(M,8) mean coords
    std::vector<double> qv_realized;  // cumulative realized QV of m^N
    std::vector<double> qv_cap;       // cumulative (2 beta / N) sigma dt
    double sup_sigma = 0.0;           // running sup over the grid
};

// Iterate enkbf_step over the observation grid.  Throws divergence_error
// if any state becomes non-finite.
DiagnosticSeries run_enkbf(const Ensemble& init, const ModelSpec& model,
                           const ObservationModel& obs,
                           const ObservationPath& path,
                           const IntegratorConfig& config,
                           const NoiseContext& noise, const GainPolicy& policy);

// (1/N) sum_i | H(u_ref) - (H(u_i) + Eh)/2 |^2.
double empirical_accuracy(const Ensemble& ensemble, const SpectralField& u_ref,
                          const ObservationModel& obs);

// Realized quadratic-variation increment of
//   m^N = (2/N) sum_i <u_i - E^N, B dW_i>
// for one step (the squared discrete increment), plus the theoretical cap
// (2 beta / N) sigma dt.
struct QvIncrement {
    double realized = 0.0;
    double cap = 0.0;
};
QvIncrement martingale_qv_accumulate(const Ensemble& pre_step,
                                     const EmpiricalStats& stats,
                                     const ModelSpec& model,
                                     const Eigen::MatrixXd& dW, double dt);

} // namespace enkbf
