#include "enkbf/coupling.hpp"

#include "enkbf/errors.hpp"
#include "enkbf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace enkbf {

CoupledRun build_coupled_run(int N, const ModelSpec& model,
                             const ObservationModel& obs,
                             const IntegratorConfig& config,
                             const CouplingConfig& coupling,
                             const SpectralField& u0, std::uint64_t seed,
                             std::uint32_t replicate_id) {
    if (N < 2) throw invalid_argument_error("build_coupled_run: N must be >= 2");
    if (u0.size() != model.basis.M)
        throw invalid_argument_error("build_coupled_run: u0 size mismatch");
    CoupledRun run;
    run.model = model;
    run.obs = obs;
    run.config = config;
    run.coupling = coupling;
    run.N = N;
    run.seed = seed;
    run.replicate_id = replicate_id;
    run.u0 = u0;
    if (coupling.mode == CouplingMode::Oracle) {
        if (coupling.M_ref <= 4 * N)
            throw invalid_argument_error(
                "build_coupled_run: oracle size must exceed 4N");
    } else {
        // Exact mean-field moments exist only in the linear-Gaussian case.
        // Shared deterministic init u0 means (m0, P0) = (u0, 0).
        run.lin = LinearGaussSpec::from_models(
            model, obs, u0, Eigen::MatrixXd::Zero(model.basis.M, model.basis.M));
    }
    return run;
}

double coupling_error(const Ensemble& particles, const Ensemble& copies) {
    const int N = particles.N();
    if (copies.N() != N || copies.M() != particles.M())
        throw invalid_argument_error("coupling_error: ensemble shape mismatch");
    return pairwise_sum<double>(0, N,
                                [&](int i) {
                                    return (particles.members.col(i) -
                                            copies.members.col(i))
                                        .squaredNorm();
                                }) /
           double(N);
}

double lln_increment(const Ensemble& copies, const ObservationModel& obs,
                     const Eigen::MatrixXd& exact_cross_cov,
                     const Eigen::VectorXd& exact_obs_mean) {
    const EmpiricalStats stats = compute_stats(copies, obs);
    return (stats.cross_cov - exact_cross_cov).squaredNorm() +
           (stats.obs_mean - exact_obs_mean).squaredNorm();
}

CouplingSeries execute_coupled_run(const CoupledRun& run) {
    const int steps = run.config.steps();
    const double dt = run.config.dt;
    const int M = run.model.basis.M;
    const int n_coeffs = std::min(M, 8);

    const SignalPath signal = simulate_signal_path(
        run.u0, run.model, run.config,
        StreamKey{run.seed, run.replicate_id, kReferenceParticleId,
                  StreamRole::SignalNoise});
    const ObservationPath path = generate_observation_path(
        signal, run.obs,
        StreamKey{run.seed, run.replicate_id, kReferenceParticleId,
                  StreamRole::ObsNoise});

    Ensemble particles = Ensemble::constant(run.u0, run.N, run.replicate_id, 0);
    Ensemble copies = particles;
    const bool oracle_mode = run.coupling.mode == CouplingMode::Oracle;
    Ensemble oracle;
    RiccatiState filt;
    if (oracle_mode) {
        oracle = Ensemble::constant(run.u0, run.coupling.M_ref,
                                    run.replicate_id, kOracleParticleBase);
    } else {
        filt = RiccatiState{run.lin->m0, run.lin->P0};
    }

    CouplingSeries series;
    DiagnosticSeries& diag = series.particle_diagnostics;
    double qv_realized = 0.0;
    double qv_cap = 0.0;
    for (int n = 0; n <= steps; ++n) {
        const EmpiricalStats stats_p = compute_stats(particles, run.obs);
        const double t = run.config.time(n);
        diag.times.push_back(t);
        diag.sigma.push_back(stats_p.sigma);
        diag.sigma_H.push_back(stats_p.sigma_H);
        diag.gain_norm.push_back(
            run.coupling.policy.ramp(stats_p.cross_cov.squaredNorm()) *
            (stats_p.cross_cov * run.obs.R_inv).norm());
        diag.mean_coeffs.push_back(stats_p.mean.head(n_coeffs));
        diag.qv_realized.push_back(qv_realized);
        diag.qv_cap.push_back(qv_cap);
        diag.sup_sigma = std::max(diag.sup_sigma, stats_p.sigma);

        // Mean-field moments for this grid time.
        Eigen::MatrixXd mf_cross;
        Eigen::VectorXd mf_obs_mean;
        EmpiricalStats stats_o;
        if (oracle_mode) {
            stats_o = compute_stats(oracle, run.obs);
            mf_cross = stats_o.cross_cov;
            mf_obs_mean = stats_o.obs_mean;
        } else {
            mf_cross = filt.P * run.lin->H.transpose();
            mf_obs_mean = run.lin->H * filt.m;
        }

        series.times.push_back(t);
        series.coupling_error.push_back(coupling_error(particles, copies));
        series.lln_increment.push_back(
            lln_increment(copies, run.obs, mf_cross, mf_obs_mean));
        series.sup_coupling_error =
            std::max(series.sup_coupling_error, series.coupling_error.back());
        if (n == steps) break;
        series.lln_error += series.lln_increment.back() * dt;

        const Eigen::VectorXd& dY = path.increments[n];
        Eigen::MatrixXd dW(M, run.N);
        parallel_for(run.N, [&](int i) {
            dW.col(i) = sample_wiener_increment(
                StreamKey{run.seed, run.replicate_id, std::uint32_t(i),
                          StreamRole::SignalNoise},
                std::uint32_t(n), dt, run.model.q);
        });
        const QvIncrement qv =
            martingale_qv_accumulate(particles, stats_p, run.model, dW, dt);
        qv_realized += qv.realized;
        qv_cap += qv.cap;

        particles = transport_step(particles, run.model, run.obs,
                                   stats_p.cross_cov, stats_p.obs_mean, dY, dt,
                                   dW, run.coupling.policy);
        // Synchronous coupling: the copies consume the particles' dW but the
        // mean-field (oracle / Riccati) moments in their gain.
        copies = transport_step(copies, run.model, run.obs, mf_cross,
                                mf_obs_mean, dY, dt, dW, run.coupling.policy);
        if (oracle_mode) {
            Eigen::MatrixXd dW_o(M, run.coupling.M_ref);
            parallel_for(run.coupling.M_ref, [&](int i) {
                dW_o.col(i) = sample_wiener_increment(
                    StreamKey{run.seed, run.replicate_id,
                              kOracleParticleBase + std::uint32_t(i),
                              StreamRole::SignalNoise},
                    std::uint32_t(n), dt, run.model.q);
            });
            oracle = transport_step(oracle, run.model, run.obs,
                                    stats_o.cross_cov, stats_o.obs_mean, dY, dt,
                                    dW_o, run.coupling.policy);
            if (!oracle.members.allFinite())
                throw divergence_error("execute_coupled_run: oracle diverged");
        } else {
            filt = kalman_bucy_step(filt, *run.lin, dY, dt);
        }
        if (!particles.members.allFinite() || !copies.members.allFinite())
            throw divergence_error("execute_coupled_run: non-finite state");
    }
    return series;
}

namespace {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
};

SlopeFit ols_loglog(const std::vector<double>& log_n,
                    const std::vector<double>& log_e) {
    const int n = static_cast<int>(log_n.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sx += log_n[i];
        sy += log_e[i];
        sxx += log_n[i] * log_n[i];
        sxy += log_n[i] * log_e[i];
    }
    SlopeFit fit;
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

} // namespace

ConvergenceReport convergence_sweep(const std::vector<int>& N_list,
                                    int replicates, const ModelSpec& model,
                                    const ObservationModel& obs,
                                    const IntegratorConfig& config,
                                    const CouplingConfig& coupling,
                                    const SpectralField& u0,
                                    std::uint64_t seed, double p,
                                    const std::string& model_hash) {
    if (N_list.size() < 3)
        throw invalid_argument_error(
            "convergence_sweep: insufficient design, need at least 3 ensemble "
            "sizes");
    for (int n : N_list)
        if (n < 2)
            throw invalid_argument_error(
                "convergence_sweep: every ensemble size must be >= 2");
    if (replicates < 1)
        throw invalid_argument_error("convergence_sweep: replicates must be >= 1");
    if (!(p > 0.0))
        throw invalid_argument_error("convergence_sweep: p must be > 0");
    const int n_sizes = static_cast<int>(N_list.size());
    ConvergenceReport report;
    report.N_values = N_list;
    report.replicates = replicates;
    report.p = p;
    report.dt = config.dt;
    report.model_hash = model_hash;
    report.errors.assign(n_sizes, std::vector<double>(replicates, 0.0));
    // Replicate r is paired across N (same reference signal and observation
    // path, shared particle streams), which cancels most of the
    // common-noise variability out of the fitted slope.
    parallel_for(n_sizes * replicates, [&](int idx) {
        const int i = idx / replicates;
        const int r = idx % replicates;
        const CoupledRun run =
            build_coupled_run(N_list[i], model, obs, config, coupling, u0, seed,
                              std::uint32_t(r));
        report.errors[i][r] = execute_coupled_run(run).sup_coupling_error;
    });

    bool all_zero = true;
    for (const auto& row : report.errors)
        for (double e : row)
            if (e != 0.0) all_zero = false;
    if (all_zero) {
        report.degenerate = true;
        return report;
    }

    std::vector<double> log_n(n_sizes), log_mean(n_sizes);
    auto mean_pow = [&](int i, const std::vector<int>& pick) {
        double acc = 0.0;
        for (int r : pick) acc += std::pow(report.errors[i][r], p);
        return acc / double(pick.size());
    };
    std::vector<int> all(replicates);
    for (int r = 0; r < replicates; ++r) all[r] = r;
    for (int i = 0; i < n_sizes; ++i) {
        log_n[i] = std::log(double(N_list[i]));
        log_mean[i] = std::log(mean_pow(i, all));
    }
    report.slope = ols_loglog(log_n, log_mean).slope;

    // Replicate bootstrap (resampling whole paired replicates keeps the
    // pairing structure intact).
    constexpr int kResamples = 200;
    std::vector<double> slopes(kResamples);
    const Stream boot(StreamKey{seed, 0xFFFFFFFFu, kAuxParticleBase,
                                StreamRole::Init});
    std::vector<int> pick(replicates);
    std::vector<double> log_mean_b(n_sizes);
    for (int b = 0; b < kResamples; ++b) {
        for (int r = 0; r < replicates; ++r) {
            const double u = boot.uniform(std::uint32_t(b), std::uint32_t(r));
            pick[r] = std::min(replicates - 1, int(u * replicates));
        }
        for (int i = 0; i < n_sizes; ++i)
            log_mean_b[i] = std::log(std::max(mean_pow(i, pick), 1e-300));
        slopes[b] = ols_loglog(log_n, log_mean_b).slope;
    }
    std::sort(slopes.begin(), slopes.end());
    report.slope_ci = {slopes[int(0.025 * kResamples)],
                       slopes[int(0.975 * kResamples) - 1]};
    return report;
}

ExponentialMomentReport exponential_moment_report(
    double q, int N, int replicates, const ModelSpec& model,
    const ObservationModel& obs, const IntegratorConfig& config,
    const SpectralField& u0, std::uint64_t seed, double lambda,
    const GainPolicy& policy) {
    if (q < 0.0)
        throw invalid_argument_error("exponential_moment_report: q must be >= 0");
    if (replicates < 2)
        throw invalid_argument_error(
            "exponential_moment_report: need at least 2 replicates");
    ExponentialMomentReport report;
    report.N = N;
    report.q = q;
    report.replicates = replicates;
    const double T = config.T;
    const double rate = 2.0 * lambda + 1.0;
    const double growth = std::abs(rate) < 1e-12
                              ? T
                              : (std::exp(rate * T) - 1.0) / rate;
    report.bound = (std::numbers::pi + 1.0) * std::exp(q * growth / 2.0);
    report.threshold = 2.0 * model.beta() * q * std::exp(rate * T);
    report.admissible = double(N) > report.threshold;

    std::vector<double> values(replicates);
    parallel_for(replicates, [&](int r) {
        const std::uint32_t rep = std::uint32_t(r);
        const SignalPath signal = simulate_signal_path(
            u0, model, config,
            StreamKey{seed, rep, kReferenceParticleId, StreamRole::SignalNoise});
        const ObservationPath path = generate_observation_path(
            signal, obs,
            StreamKey{seed, rep, kReferenceParticleId, StreamRole::ObsNoise});
        const Ensemble init = Ensemble::constant(u0, N, rep, 0);
        const DiagnosticSeries diag =
            run_enkbf(init, model, obs, path, config, NoiseContext{seed, rep},
                      policy);
        values[r] = std::exp(q * diag.sup_sigma);
    });
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= double(replicates);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= double(replicates - 1);
    report.estimate = mean;
    report.std_error = std::sqrt(var / double(replicates));
    return report;
}

} // namespace enkbf
