#include "enkbf/experiment.hpp"

#include "enkbf/coupling.hpp"
#include "enkbf/csv.hpp"
#include "enkbf/errors.hpp"
#include "enkbf/fpf1d.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>

namespace enkbf {

namespace {

using json = nlohmann::json;

std::string csv_header(const ExperimentConfig& cfg) {
    return "config=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed);
}

// Initial signal state: configured mean plus an optional Gaussian draw from
// the reference entity's init stream.
SpectralField initial_state(const ExperimentConfig& cfg) {
    SpectralField u0 = build_init_mean(cfg);
    if (cfg.init.var > 0.0) {
        const Stream stream(StreamKey{cfg.seed, 0, kReferenceParticleId,
                                      StreamRole::Init});
        const double sd = std::sqrt(cfg.init.var);
        for (int k = 0; k < u0.size(); ++k)
            u0(k) += sd * stream.normal(0, std::uint32_t(k));
    }
    return u0;
}

Artifact signal_csv(const ExperimentConfig& cfg, const SignalPath& path) {
    io::CsvTable t;
    t.comments = {csv_header(cfg)};
    t.columns = {"time"};
    const int M = static_cast<int>(path.states.front().size());
    for (int k = 1; k <= M; ++k) t.columns.push_back("u" + std::to_string(k));
    for (std::size_t n = 0; n < path.times.size(); ++n) {
        std::vector<double> row{path.times[n]};
        for (int k = 0; k < M; ++k) row.push_back(path.states[n](k));
        t.add_row(std::move(row));
    }
    return {"signal.csv", t.to_text()};
}

Artifact observations_csv(const ExperimentConfig& cfg,
                          const ObservationPath& path) {
    io::CsvTable t;
    t.comments = {csv_header(cfg)};
    t.columns = {"time"};
    const int d_y = static_cast<int>(path.increments.front().size());
    for (int j = 1; j <= d_y; ++j) t.columns.push_back("dY" + std::to_string(j));
    for (std::size_t n = 0; n < path.increments.size(); ++n) {
        std::vector<double> row{path.times[n]};
        for (int j = 0; j < d_y; ++j) row.push_back(path.increments[n](j));
        t.add_row(std::move(row));
    }
    return {"observations.csv", t.to_text()};
}

void diagnostic_columns(io::CsvTable& t, const DiagnosticSeries& diag) {
    t.columns.insert(t.columns.end(), {"sigma", "sigma_h", "gain_norm",
                                       "qv_realized", "qv_cap"});
    const int k = static_cast<int>(diag.mean_coeffs.front().size());
    for (int j = 1; j <= k; ++j)
        t.columns.push_back("mean" + std::to_string(j));
}

void diagnostic_row(std::vector<double>& row, const DiagnosticSeries& diag,
                    std::size_t n) {
    row.push_back(diag.sigma[n]);
    row.push_back(diag.sigma_H[n]);
    row.push_back(diag.gain_norm[n]);
    row.push_back(diag.qv_realized[n]);
    row.push_back(diag.qv_cap[n]);
    for (int j = 0; j < diag.mean_coeffs[n].size(); ++j)
        row.push_back(diag.mean_coeffs[n](j));
}

ExperimentResult run_signal(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const IntegratorConfig integ = build_integrator(cfg);
    const SignalPath path = simulate_signal_path(
        initial_state(cfg), model, integ,
        StreamKey{cfg.seed, 0, kReferenceParticleId, StreamRole::SignalNoise});
    ExperimentResult result;
    result.message = "signal path complete";
    result.artifacts.push_back(signal_csv(cfg, path));
    return result;
}

ExperimentResult run_enkbf_kind(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const ObservationModel obs = build_observation(cfg, model.basis);
    const IntegratorConfig integ = build_integrator(cfg);
    const SignalPath signal = simulate_signal_path(
        initial_state(cfg), model, integ,
        StreamKey{cfg.seed, 0, kReferenceParticleId, StreamRole::SignalNoise});
    const ObservationPath path = generate_observation_path(
        signal, obs,
        StreamKey{cfg.seed, 0, kReferenceParticleId, StreamRole::ObsNoise});

    const SpectralField mean = build_init_mean(cfg);
    const Ensemble init =
        cfg.init.var > 0.0
            ? Ensemble::gaussian(
                  mean, Eigen::VectorXd::Constant(mean.size(), cfg.init.var),
                  cfg.ensemble.particles, cfg.seed, 0)
            : Ensemble::constant(mean, cfg.ensemble.particles, 0);
    const DiagnosticSeries diag =
        run_enkbf(init, model, obs, path, integ, NoiseContext{cfg.seed, 0},
                  build_gain_policy(cfg));

    io::CsvTable t;
    t.comments = {csv_header(cfg)};
    t.columns = {"time"};
    diagnostic_columns(t, diag);
    for (std::size_t n = 0; n < diag.times.size(); ++n) {
        std::vector<double> row{diag.times[n]};
        diagnostic_row(row, diag, n);
        t.add_row(std::move(row));
    }

    ExperimentResult result;
    result.message = "enkbf run complete";
    result.artifacts.push_back({"diagnostics.csv", t.to_text()});
    result.artifacts.push_back(signal_csv(cfg, signal));
    result.artifacts.push_back(observations_csv(cfg, path));
    return result;
}

ExperimentResult run_kalman_bucy(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const ObservationModel obs = build_observation(cfg, model.basis);
    const IntegratorConfig integ = build_integrator(cfg);
    const int M = model.basis.M;
    const Eigen::VectorXd m0 = build_init_mean(cfg);
    const Eigen::MatrixXd P0 =
        cfg.init.var * Eigen::MatrixXd::Identity(M, M);
    const LinearGaussSpec spec = LinearGaussSpec::from_models(model, obs, m0, P0);

    const SignalPath signal = simulate_signal_path(
        initial_state(cfg), model, integ,
        StreamKey{cfg.seed, 0, kReferenceParticleId, StreamRole::SignalNoise});
    const ObservationPath path = generate_observation_path(
        signal, obs,
        StreamKey{cfg.seed, 0, kReferenceParticleId, StreamRole::ObsNoise});

    const int head = std::min(M, 8);
    io::CsvTable t;
    t.comments = {csv_header(cfg)};
    t.columns = {"time", "trace_p"};
    for (int j = 1; j <= head; ++j) t.columns.push_back("m" + std::to_string(j));
    for (int j = 1; j <= head; ++j) t.columns.push_back("p" + std::to_string(j));

    RiccatiState state{spec.m0, spec.P0};
    auto record = [&](double time) {
        std::vector<double> row{time, state.P.trace()};
        for (int j = 0; j < head; ++j) row.push_back(state.m(j));
        for (int j = 0; j < head; ++j) row.push_back(state.P(j, j));
        t.add_row(std::move(row));
    };
    record(0.0);
    const int steps = integ.steps();
    for (int n = 0; n < steps; ++n) {
        state = kalman_bucy_step(state, spec, path.increments[n], integ.dt);
        record(integ.time(n + 1));
    }

    ExperimentResult result;
    result.message = "kalman-bucy run complete";
    result.artifacts.push_back({"kalman_bucy.csv", t.to_text()});
    return result;
}

CouplingConfig build_coupling_config(const ExperimentConfig& cfg) {
    CouplingConfig cc;
    cc.mode = resolved_coupling_mode(cfg) == "oracle" ? CouplingMode::Oracle
                                                      : CouplingMode::ExactLinearGauss;
    cc.M_ref = cfg.ensemble.oracle_particles;
    cc.policy = build_gain_policy(cfg);
    return cc;
}

ExperimentResult run_coupling(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const ObservationModel obs = build_observation(cfg, model.basis);
    const IntegratorConfig integ = build_integrator(cfg);
    const CouplingConfig cc = build_coupling_config(cfg);
    const SpectralField u0 = build_init_mean(cfg);

    const int reps = cfg.ensemble.replicates;
    std::vector<CouplingSeries> series(reps);
    for (int r = 0; r < reps; ++r) {
        const CoupledRun run =
            build_coupled_run(cfg.ensemble.particles, model, obs, integ, cc, u0,
                              cfg.seed, std::uint32_t(r));
        series[r] = execute_coupled_run(run);
    }

    json report;
    report["config_hash"] = config_hash(cfg);
    report["kind"] = to_string(cfg.kind);
    report["seed"] = cfg.seed;
    report["mode"] = resolved_coupling_mode(cfg);
    report["particles"] = cfg.ensemble.particles;
    if (cc.mode == CouplingMode::Oracle)
        report["oracle_particles"] = cc.M_ref;
    report["replicates"] = reps;
    report["dt"] = integ.dt;
    report["horizon"] = integ.T;
    double mean_sup = 0.0, mean_lln = 0.0;
    std::vector<double> sups, llns;
    for (const CouplingSeries& s : series) {
        sups.push_back(s.sup_coupling_error);
        llns.push_back(s.lln_error);
        mean_sup += s.sup_coupling_error;
        mean_lln += s.lln_error;
    }
    report["sup_coupling_error"] = sups;
    report["lln_error"] = llns;
    report["mean_sup_coupling_error"] = mean_sup / double(reps);
    report["mean_lln_error"] = mean_lln / double(reps);

    const CouplingSeries& s0 = series.front();
    io::CsvTable t;
    t.comments = {csv_header(cfg)};
    t.columns = {"time", "coupling_error", "lln_increment"};
    diagnostic_columns(t, s0.particle_diagnostics);
    for (std::size_t n = 0; n < s0.times.size(); ++n) {
        std::vector<double> row{s0.times[n], s0.coupling_error[n],
                                s0.lln_increment[n]};
        diagnostic_row(row, s0.particle_diagnostics, n);
        t.add_row(std::move(row));
    }

    ExperimentResult result;
    result.message = "coupling run complete";
    result.artifacts.push_back({"coupling.json", report.dump(2) + "\n"});
    result.artifacts.push_back({"diagnostics_rep0.csv", t.to_text()});
    return result;
}

ExperimentResult run_sweep(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const ObservationModel obs = build_observation(cfg, model.basis);
    const IntegratorConfig integ = build_integrator(cfg);
    const CouplingConfig cc = build_coupling_config(cfg);
    const ConvergenceReport report = convergence_sweep(
        cfg.ensemble.n_list, cfg.ensemble.replicates, model, obs, integ, cc,
        build_init_mean(cfg), cfg.seed, cfg.ensemble.p, model_hash(cfg));

    json j;
    j["config_hash"] = config_hash(cfg);
    j["model_hash"] = report.model_hash;
    j["kind"] = to_string(cfg.kind);
    j["seed"] = cfg.seed;
    j["mode"] = resolved_coupling_mode(cfg);
    j["n_values"] = report.N_values;
    j["replicates"] = report.replicates;
    j["p"] = report.p;
    j["dt"] = report.dt;
    j["errors"] = report.errors;
    j["slope"] = report.slope;
    j["slope_ci"] = report.slope_ci;
    j["degenerate"] = report.degenerate;

    ExperimentResult result;
    result.message = "sweep complete";
    result.artifacts.push_back({"report.json", j.dump(2) + "\n"});
    return result;
}

ExperimentResult run_expmoment(const ExperimentConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const ObservationModel obs = build_observation(cfg, model.basis);
    const IntegratorConfig integ = build_integrator(cfg);
    const ExponentialMomentReport report = exponential_moment_report(
        cfg.ensemble.q, cfg.ensemble.particles, cfg.ensemble.replicates, model,
        obs, integ, build_init_mean(cfg), cfg.seed,
        model.drift.declared_lambda, build_gain_policy(cfg));

    json j;
    j["config_hash"] = config_hash(cfg);
    j["kind"] = to_string(cfg.kind);
    j["seed"] = cfg.seed;
    j["particles"] = report.N;
    j["q"] = report.q;
    j["replicates"] = report.replicates;
    j["lambda"] = model.drift.declared_lambda;
    j["estimate"] = report.estimate;
    j["std_error"] = report.std_error;
    j["bound"] = report.bound;
    j["threshold"] = report.threshold;
    j["admissible"] = report.admissible;

    ExperimentResult result;
    result.message = "exponential-moment study complete";
    result.artifacts.push_back({"expmoment.json", j.dump(2) + "\n"});
    return result;
}

ExperimentResult run_fpf(const ExperimentConfig& cfg) {
    const FpfBlock& fp = cfg.fpf;
    const IntegratorConfig integ = build_integrator(cfg);
    const int steps = integ.steps();
    const double dt = integ.dt;
    const double R = fp.gamma * fp.gamma;

    const ScalarFn f = fp.f == "double-well"
                           ? ScalarFn([](double x) { return x - x * x * x; })
                           : ScalarFn([a = fp.f_a](double x) { return a * x; });
    const ScalarFn H = fp.h == "tanh"
                           ? ScalarFn([](double x) { return std::tanh(x); })
                           : ScalarFn([s = fp.h_scale](double x) { return s * x; });

    // Reference signal and observation increments; the truth starts from a
    // draw of the same prior the clouds are initialized with.
    const double sd0 = std::sqrt(fp.init_var);
    const Stream truth_init(StreamKey{cfg.seed, 0, kReferenceParticleId,
                                      StreamRole::Init});
    const Stream truth_noise(StreamKey{cfg.seed, 0, kReferenceParticleId,
                                       StreamRole::SignalNoise});
    const Stream obs_noise(StreamKey{cfg.seed, 0, kReferenceParticleId,
                                     StreamRole::ObsNoise});
    std::vector<double> truth(steps + 1);
    truth[0] = fp.init_mean + sd0 * truth_init.normal(0, 0);
    const double sq = std::sqrt(dt);
    std::vector<Eigen::VectorXd> dYs(steps);
    for (int n = 0; n < steps; ++n) {
        dYs[n] = Eigen::VectorXd::Constant(
            1, H(truth[n]) * dt +
                   fp.gamma * sq * obs_noise.normal(std::uint32_t(n), 0));
        truth[n + 1] = truth[n] + f(truth[n]) * dt +
                       fp.b * sq * truth_noise.normal(std::uint32_t(n), 0);
    }

    ScalarCloud cloud;
    cloud.particles.resize(fp.particles);
    for (int i = 0; i < fp.particles; ++i) {
        const Stream s(StreamKey{cfg.seed, 0, std::uint32_t(i), StreamRole::Init});
        cloud.particles[i] = fp.init_mean + sd0 * s.normal(0, 0);
    }
    MomentSeries fpf_series;
    fpf_series.times.push_back(0.0);
    fpf_series.mean.push_back(cloud.mean());
    fpf_series.variance.push_back(cloud.variance());
    for (int n = 0; n < steps; ++n) {
        const GainField gain = fpf_gain_solve(cloud, H, R);
        cloud = fpf_step(cloud, gain, f, fp.b, H, dYs[n](0), dt,
                         NoiseIds{cfg.seed, 0, 0, std::uint32_t(n)});
        fpf_series.times.push_back(integ.time(n + 1));
        fpf_series.mean.push_back(cloud.mean());
        fpf_series.variance.push_back(cloud.variance());
    }

    const int Pb = fp.bpf_particles == 0 ? fp.particles : fp.bpf_particles;
    std::vector<double> init_b(Pb);
    for (int i = 0; i < Pb; ++i) {
        const Stream s(StreamKey{cfg.seed, 0, kAuxParticleBase + std::uint32_t(i),
                                 StreamRole::Init});
        init_b[i] = fp.init_mean + sd0 * s.normal(0, 0);
    }
    const MomentSeries bpf_series =
        bootstrap_pf(f, fp.b, H, R, init_b, dYs, dt,
                     NoiseIds{cfg.seed, 0, kAuxParticleBase, 0});

    io::CsvTable t;
    t.comments = {csv_header(cfg)};
    t.columns = {"time", "fpf_mean", "fpf_var", "bpf_mean", "bpf_var", "truth"};
    for (int n = 0; n <= steps; ++n) {
        t.add_row({fpf_series.times[n], fpf_series.mean[n],
                   fpf_series.variance[n], bpf_series.mean[n],
                   bpf_series.variance[n], truth[n]});
    }

    ExperimentResult result;
    result.message = "fpf run complete";
    result.artifacts.push_back({"fpf.csv", t.to_text()});
    return result;
}

} // namespace

const char* library_version() { return "0.1.0"; }

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult result;
    try {
        const std::vector<std::string> errs = validate_config(cfg);
        if (!errs.empty()) {
            result.exit_code = 2;
            std::string msg;
            for (std::size_t i = 0; i < errs.size(); ++i) {
                if (i) msg += '\n';
                msg += errs[i];
            }
            result.message = msg;
            return result;
        }
        switch (cfg.kind) {
            case ExperimentKind::Signal: return run_signal(cfg);
            case ExperimentKind::Enkbf: return run_enkbf_kind(cfg);
            case ExperimentKind::KalmanBucy: return run_kalman_bucy(cfg);
            case ExperimentKind::Coupling: return run_coupling(cfg);
            case ExperimentKind::Sweep: return run_sweep(cfg);
            case ExperimentKind::ExpMoment: return run_expmoment(cfg);
            case ExperimentKind::Fpf: return run_fpf(cfg);
            case ExperimentKind::Unset: break;
        }
        result.exit_code = 2;
        result.message = "kind: required";
    } catch (const divergence_error& e) {
        result.exit_code = 3;
        result.message = e.what();
        result.artifacts.clear();
    } catch (const std::exception& e) {
        result.exit_code = 2;
        result.message = e.what();
        result.artifacts.clear();
    }
    return result;
}

void write_artifacts(const ExperimentResult& result, const std::string& out_dir,
                     const ExperimentConfig& cfg, double wall_seconds) {
    if (result.exit_code != 0) return;  // failures leave no output behind
    const std::filesystem::path base(out_dir);
    json manifest;
    manifest["config_hash"] = config_hash(cfg);
    manifest["kind"] = to_string(cfg.kind);
    manifest["seed"] = cfg.seed;
    manifest["exit_code"] = result.exit_code;
    manifest["versions"] = {
        {"library", library_version()},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                      std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)}};
    json files = json::array();
    for (const Artifact& a : result.artifacts) {
        io::write_text_file((base / a.path).string(), a.text);
        files.push_back({{"path", a.path},
                         {"bytes", a.text.size()},
                         {"hash", io::hash_hex(io::fnv1a64(a.text))}});
    }
    manifest["artifacts"] = files;
    manifest["wall_seconds"] = wall_seconds;
    // The manifest is written last: its presence marks a complete output set.
    io::write_text_file((base / "manifest.json").string(),
                        manifest.dump(2) + "\n");
}

int run_and_write(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentResult result = run_experiment(cfg);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_artifacts(result, cfg.out, cfg, wall);
    return result.exit_code;
}

} // namespace enkbf
