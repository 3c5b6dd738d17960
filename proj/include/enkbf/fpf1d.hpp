#pragma once

// Feedback particle filter for a scalar SDE signal
//   dx = f(x) dt + b dW,    dY = H(x) dt + gamma dV.
// The gain solves the weak Poisson-type gain equation; in one dimension
// the canonical solution has the closed integral form
//   K(x) = R^{-1} (1/rho(x)) int_{-inf}^x (E[H] - H(y)) rho(y) dy,
// approximated on the particle cloud by a Gaussian-KDE density (Silverman
// bandwidth) and a sorted half-atom cumulative sum for the integral.  The
// correction drift is xi = K R K' with K' from centered finite differences
// over sorted neighbors.  A bootstrap particle filter serves as the
// posterior oracle for moment checks.

#include "enkbf/rng.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace enkbf {

using ScalarFn = std::function<double(double)>;

struct ScalarCloud {
    std::vector<double> particles;
    std::vector<double> weights;  // empty => uniform (FPF); else normalized

    int P() const { return static_cast<int>(particles.size()); }
    double mean() const;
    double variance() const;
};

struct GainField {
    // Entries are aligned with the *sorted* particle order; `order[j]`
    // is the original index of the j-th sorted particle.
    std::vector<int> order;
    std::vector<double> sorted_x;
    std::vector<double> K;    // gain at sorted particles
    std::vector<double> xi;   // correction K R K' at sorted particles
    std::vector<double> rho;  // KDE density at sorted particles
    std::vector<double> flux; // int_{-inf}^x (E[H] - H) rho dy at sorted particles
    double obs_mean = 0.0;    // empirical mean of H over the cloud
};

// Solve the gain on the cloud.  P < 10 or a zero-spread cloud throw
// invalid_argument_error.
GainField fpf_gain_solve(const ScalarCloud& cloud, const ScalarFn& H,
                         double R);

// Gaussian KDE with Silverman bandwidth, evaluated by binning the cloud on
// a uniform grid and convolving with the kernel.  `at` interpolates
// linearly on the grid and floors the result at a tiny positive value.
struct DensityEstimate {
    double bandwidth = 0.0;
    std::vector<double> grid;  // uniform, spans the cloud plus 6 bandwidths
    std::vector<double> rho;   // density at grid points

    double at(double x) const;
};

// Density estimate for a sorted cloud (the one fpf_gain_solve uses
// internally, exposed so quadrature cross-checks see the same density).
DensityEstimate fpf_density_estimate(const std::vector<double>& sorted_x);

struct NoiseIds {
    std::uint64_t seed = 0;
    std::uint32_t replicate_id = 0;
    std::uint32_t particle_base = 0;
    std::uint32_t step = 0;
};

// One FPF step (gain solved on the pre-step cloud):
//   x_i+ = x_i + f(x_i) dt + b dW_i
//        + K(x_i)(dY - (H(x_i) + E[H])/2 dt) + xi(x_i)/2 dt.
ScalarCloud fpf_step(const ScalarCloud& cloud, const GainField& gain,
                     const ScalarFn& f, double b, const ScalarFn& H,
                     double dY, double dt, const NoiseIds& noise);

struct ConstantGainCheck {
    double mean_gain = 0.0;   // particle average of K
    double cov_gain = 0.0;    // empirical Cov(x, H(x)) R^{-1}
    double discrepancy = 0.0; // |mean_gain - cov_gain|
};
ConstantGainCheck constant_gain_check(const ScalarCloud& cloud,
                                      const GainField& gain, const ScalarFn& H,
                                      double R);

struct MomentSeries {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> variance;
};

// Bootstrap particle filter: propagate, reweight with
//   exp(H(x) R^{-1} dY - H(x)^2 R^{-1} dt / 2),
// systematic resampling when ESS < P/2.  Throws divergence_error if the
// weights collapse to zero.
MomentSeries bootstrap_pf(const ScalarFn& f, double b, const ScalarFn& H,
                          double R, const std::vector<double>& init,
                          const std::vector<Eigen::VectorXd>& dY_increments,
                          double dt, const NoiseIds& noise);

struct KseMomentReport {
    double max_mean_deviation = 0.0;
    double max_var_deviation = 0.0;
};

// Max absolute deviation of first/second posterior moments between two
// moment series on the same grid.
KseMomentReport kse_moment_check(const MomentSeries& fpf,
                                 const MomentSeries& oracle);

} // namespace enkbf
