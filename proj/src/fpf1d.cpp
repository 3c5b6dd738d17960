#include "enkbf/fpf1d.hpp"

#include "enkbf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace enkbf {

namespace {

constexpr double kDensityFloor = 1e-300;
constexpr int kGridBins = 4096;

double require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw invalid_argument_error(std::string(what) + " must be > 0");
    return v;
}

void require_unweighted(const ScalarCloud& cloud, const char* where) {
    if (!cloud.weights.empty())
        throw invalid_argument_error(std::string(where) +
                                     ": weighted clouds are not supported");
}

// Linear-interpolated percentile (q in [0,100]) of an ascending array.
double percentile_sorted(const std::vector<double>& x, double q) {
    const int P = static_cast<int>(x.size());
    const double rank = q / 100.0 * double(P - 1);
    const int lo = std::min(P - 1, static_cast<int>(std::floor(rank)));
    const int hi = std::min(P - 1, lo + 1);
    const double frac = rank - double(lo);
    return x[lo] + frac * (x[hi] - x[lo]);
}

// Silverman's rule on the robust spread min(sd, IQR/1.349).
double silverman_bandwidth(const std::vector<double>& sorted_x) {
    const int P = static_cast<int>(sorted_x.size());
    double mean = 0.0;
    for (double v : sorted_x) mean += v;
    mean /= double(P);
    double ss = 0.0;
    for (double v : sorted_x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / double(P - 1));
    const double iqr =
        percentile_sorted(sorted_x, 75.0) - percentile_sorted(sorted_x, 25.0);
    const double sigma = iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;
    return 0.9 * sigma * std::pow(double(P), -0.2);
}

} // namespace

double ScalarCloud::mean() const {
    if (particles.empty()) throw invalid_argument_error("ScalarCloud: empty cloud");
    double acc = 0.0;
    if (weights.empty()) {
        for (double x : particles) acc += x;
        return acc / double(P());
    }
    for (int i = 0; i < P(); ++i) acc += weights[i] * particles[i];
    return acc;
}

double ScalarCloud::variance() const {
    const double m = mean();
    double acc = 0.0;
    if (weights.empty()) {
        for (double x : particles) acc += (x - m) * (x - m);
        return acc / double(P());
    }
    for (int i = 0; i < P(); ++i)
        acc += weights[i] * (particles[i] - m) * (particles[i] - m);
    return acc;
}

double DensityEstimate::at(double x) const {
    const int n = static_cast<int>(grid.size());
    double val;
    if (x <= grid.front()) {
        val = rho.front();
    } else if (x >= grid.back()) {
        val = rho.back();
    } else {
        const double w = grid[1] - grid[0];
        int j = std::min(n - 2, static_cast<int>((x - grid.front()) / w));
        if (x < grid[j]) --j;  // guard against rounding at cell boundaries
        const double t = (x - grid[j]) / w;
        val = rho[j] * (1.0 - t) + rho[j + 1] * t;
    }
    return std::max(val, kDensityFloor);
}

DensityEstimate fpf_density_estimate(const std::vector<double>& sorted_x) {
    const int P = static_cast<int>(sorted_x.size());
    if (P < 2)
        throw invalid_argument_error("fpf_density_estimate: need at least 2 points");
    DensityEstimate est;
    est.bandwidth = silverman_bandwidth(sorted_x);
    if (!(est.bandwidth > 0.0))
        throw invalid_argument_error(
            "fpf_density_estimate: zero-spread cloud has no bandwidth");
    const double h = est.bandwidth;
    const double lo = sorted_x.front() - 6.0 * h;
    const double hi = sorted_x.back() + 6.0 * h;
    const double w = (hi - lo) / double(kGridBins);

    std::vector<double> counts(kGridBins, 0.0);
    for (double x : sorted_x) {
        const int b = std::clamp(static_cast<int>((x - lo) / w), 0, kGridBins - 1);
        counts[b] += 1.0;
    }

    const int klen = static_cast<int>(std::ceil(6.0 * h / w));
    std::vector<double> kernel(2 * klen + 1);
    const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    for (int j = -klen; j <= klen; ++j) {
        const double z = double(j) * w / h;
        kernel[j + klen] = norm * std::exp(-0.5 * z * z);
    }

    est.grid.resize(kGridBins);
    est.rho.resize(kGridBins);
    for (int m = 0; m < kGridBins; ++m)
        est.grid[m] = lo + (double(m) + 0.5) * w;
    for (int m = 0; m < kGridBins; ++m) {
        double acc = 0.0;
        const int j0 = std::max(-klen, -m);
        const int j1 = std::min(klen, kGridBins - 1 - m);
        for (int j = j0; j <= j1; ++j) acc += counts[m + j] * kernel[j + klen];
        est.rho[m] = acc / double(P);
    }
    return est;
}

GainField fpf_gain_solve(const ScalarCloud& cloud, const ScalarFn& H, double R) {
    require_unweighted(cloud, "fpf_gain_solve");
    require_positive(R, "fpf_gain_solve: R");
    const int P = cloud.P();
    if (P < 10)
        throw invalid_argument_error("fpf_gain_solve: need at least 10 particles");

    GainField gain;
    gain.order.resize(P);
    std::iota(gain.order.begin(), gain.order.end(), 0);
    std::stable_sort(gain.order.begin(), gain.order.end(), [&](int a, int b) {
        return cloud.particles[a] < cloud.particles[b];
    });
    gain.sorted_x.resize(P);
    for (int j = 0; j < P; ++j) gain.sorted_x[j] = cloud.particles[gain.order[j]];
    if (gain.sorted_x.front() == gain.sorted_x.back())
        throw invalid_argument_error("fpf_gain_solve: zero-spread cloud");

    std::vector<double> hvals(P);
    double hbar = 0.0;
    for (int j = 0; j < P; ++j) {
        hvals[j] = H(gain.sorted_x[j]);
        hbar += hvals[j];
    }
    hbar /= double(P);
    gain.obs_mean = hbar;

    // Half-atom cumulative sum; particles sharing one location form a single
    // atom and all receive the flux at that atom's midpoint.
    gain.flux.resize(P);
    double cum = 0.0;
    for (int j = 0; j < P;) {
        int k = j;
        double group = 0.0;
        while (k < P && gain.sorted_x[k] == gain.sorted_x[j]) {
            group += (hbar - hvals[k]) / double(P);
            ++k;
        }
        const double mid = cum + 0.5 * group;
        for (int l = j; l < k; ++l) gain.flux[l] = mid;
        cum += group;
        j = k;
    }

    const DensityEstimate density = fpf_density_estimate(gain.sorted_x);
    gain.rho.resize(P);
    gain.K.resize(P);
    const double R_inv = 1.0 / R;
    for (int j = 0; j < P; ++j) {
        gain.rho[j] = density.at(gain.sorted_x[j]);
        gain.K[j] = R_inv * gain.flux[j] / gain.rho[j];
    }

    // xi = K R K' with K' from centered differences over sorted neighbors
    // (one-sided at the ends, zero across a zero gap).
    gain.xi.resize(P);
    auto slope = [&](int a, int b) {
        const double gap = gain.sorted_x[b] - gain.sorted_x[a];
        return gap > 0.0 ? (gain.K[b] - gain.K[a]) / gap : 0.0;
    };
    for (int j = 0; j < P; ++j) {
        const int a = j == 0 ? 0 : j - 1;
        const int b = j == P - 1 ? P - 1 : j + 1;
        gain.xi[j] = gain.K[j] * R * slope(a, b);
    }
    return gain;
}

ScalarCloud fpf_step(const ScalarCloud& cloud, const GainField& gain,
                     const ScalarFn& f, double b, const ScalarFn& H, double dY,
                     double dt, const NoiseIds& noise) {
    require_unweighted(cloud, "fpf_step");
    require_positive(dt, "fpf_step: dt");
    if (b < 0.0)
        throw invalid_argument_error("fpf_step: diffusion must be >= 0");
    const int P = cloud.P();
    if (static_cast<int>(gain.order.size()) != P)
        throw invalid_argument_error("fpf_step: gain/cloud size mismatch");

    std::vector<double> K(P), xi(P);
    for (int j = 0; j < P; ++j) {
        K[gain.order[j]] = gain.K[j];
        xi[gain.order[j]] = gain.xi[j];
    }

    const double sq = std::sqrt(dt);
    ScalarCloud out;
    out.particles.resize(P);
    for (int i = 0; i < P; ++i) {
        const double x = cloud.particles[i];
        const Stream stream(StreamKey{noise.seed, noise.replicate_id,
                                      noise.particle_base + std::uint32_t(i),
                                      StreamRole::SignalNoise});
        const double dW = sq * stream.normal(noise.step, 0);
        const double innovation = dY - 0.5 * (H(x) + gain.obs_mean) * dt;
        out.particles[i] =
            x + f(x) * dt + b * dW + K[i] * innovation + 0.5 * xi[i] * dt;
        if (!std::isfinite(out.particles[i]))
            throw divergence_error("fpf_step: non-finite particle");
    }
    return out;
}

ConstantGainCheck constant_gain_check(const ScalarCloud& cloud,
                                      const GainField& gain, const ScalarFn& H,
                                      double R) {
    require_unweighted(cloud, "constant_gain_check");
    const int P = cloud.P();
    if (static_cast<int>(gain.K.size()) != P)
        throw invalid_argument_error("constant_gain_check: size mismatch");
    ConstantGainCheck check;
    for (double k : gain.K) check.mean_gain += k;
    check.mean_gain /= double(P);
    const double xbar = cloud.mean();
    double hbar = 0.0;
    for (double x : cloud.particles) hbar += H(x);
    hbar /= double(P);
    double cov = 0.0;
    for (double x : cloud.particles) cov += (x - xbar) * (H(x) - hbar);
    cov /= double(P);
    check.cov_gain = cov / R;
    check.discrepancy = std::abs(check.mean_gain - check.cov_gain);
    return check;
}

MomentSeries bootstrap_pf(const ScalarFn& f, double b, const ScalarFn& H,
                          double R, const std::vector<double>& init,
                          const std::vector<Eigen::VectorXd>& dY_increments,
                          double dt, const NoiseIds& noise) {
    const int P = static_cast<int>(init.size());
    if (P < 2) throw invalid_argument_error("bootstrap_pf: need at least 2 particles");
    require_positive(dt, "bootstrap_pf: dt");
    require_positive(R, "bootstrap_pf: R");
    if (b < 0.0)
        throw invalid_argument_error("bootstrap_pf: diffusion must be >= 0");
    const double R_inv = 1.0 / R;
    const int steps = static_cast<int>(dY_increments.size());

    std::vector<double> x = init;
    std::vector<double> w(P, 1.0 / double(P));
    std::vector<double> logw(P), cum(P);
    std::vector<double> x_next(P);

    MomentSeries series;
    auto record = [&](double t) {
        double m = 0.0;
        for (int i = 0; i < P; ++i) m += w[i] * x[i];
        double v = 0.0;
        for (int i = 0; i < P; ++i) v += w[i] * (x[i] - m) * (x[i] - m);
        series.times.push_back(t);
        series.mean.push_back(m);
        series.variance.push_back(v);
    };
    record(0.0);

    const Stream resample_stream(
        StreamKey{noise.seed, noise.replicate_id,
                  noise.particle_base + 0x08000000u, StreamRole::ObsNoise});
    const double sq = std::sqrt(dt);
    for (int n = 0; n < steps; ++n) {
        if (dY_increments[n].size() != 1)
            throw invalid_argument_error("bootstrap_pf: dY must be scalar");
        const double dY = dY_increments[n](0);

        for (int i = 0; i < P; ++i) {
            const Stream stream(StreamKey{noise.seed, noise.replicate_id,
                                          noise.particle_base + std::uint32_t(i),
                                          StreamRole::SignalNoise});
            x[i] += f(x[i]) * dt + b * sq * stream.normal(std::uint32_t(n), 0);
        }
        double max_lw = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < P; ++i) {
            const double h = H(x[i]);
            logw[i] = std::log(w[i]) + h * R_inv * dY - 0.5 * h * h * R_inv * dt;
            max_lw = std::max(max_lw, logw[i]);
        }
        if (!std::isfinite(max_lw))
            throw divergence_error("bootstrap_pf: weights degenerated");
        double sum_w = 0.0;
        for (int i = 0; i < P; ++i) {
            w[i] = std::exp(logw[i] - max_lw);
            sum_w += w[i];
        }
        if (!(sum_w > 0.0) || !std::isfinite(sum_w))
            throw divergence_error("bootstrap_pf: weights degenerated");
        double ess_denom = 0.0;
        for (int i = 0; i < P; ++i) {
            w[i] /= sum_w;
            ess_denom += w[i] * w[i];
        }
        if (1.0 / ess_denom < double(P) / 2.0) {
            std::partial_sum(w.begin(), w.end(), cum.begin());
            const double u = resample_stream.uniform(std::uint32_t(n), 0);
            for (int i = 0; i < P; ++i) {
                const double pos = (u + double(i)) / double(P);
                const auto it = std::lower_bound(cum.begin(), cum.end(), pos);
                const int idx =
                    std::min(P - 1, static_cast<int>(it - cum.begin()));
                x_next[i] = x[idx];
            }
            x.swap(x_next);
            std::fill(w.begin(), w.end(), 1.0 / double(P));
        }
        record(double(n + 1) * dt);
    }
    return series;
}

KseMomentReport kse_moment_check(const MomentSeries& fpf,
                                 const MomentSeries& oracle) {
    const int n = static_cast<int>(fpf.times.size());
    if (static_cast<int>(oracle.times.size()) != n || n == 0)
        throw invalid_argument_error("kse_moment_check: grid mismatch");
    KseMomentReport report;
    for (int i = 0; i < n; ++i) {
        if (std::abs(fpf.times[i] - oracle.times[i]) > 1e-12)
            throw invalid_argument_error("kse_moment_check: grid mismatch");
        report.max_mean_deviation = std::max(
            report.max_mean_deviation, std::abs(fpf.mean[i] - oracle.mean[i]));
        report.max_var_deviation =
            std::max(report.max_var_deviation,
                     std::abs(fpf.variance[i] - oracle.variance[i]));
    }
    return report;
}

} // namespace enkbf
