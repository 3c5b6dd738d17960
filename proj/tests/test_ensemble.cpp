#include <doctest.h>

#include "enkbf/ensemble.hpp"
#include "enkbf/errors.hpp"
#include "enkbf/linear_gauss.hpp"
#include "enkbf/parallel.hpp"

#include <cmath>
#include <vector>

using namespace enkbf;

namespace {
ModelSpec heat_model(int M, double alpha = 1.0, double tau = 1.0) {
    ModelSpec m;
    m.basis = make_basis(M);
    m.drift = DriftModel::heat();
    m.diffusion = DiffusionModel::identity();
    m.q = make_q_spectrum(M, alpha, tau);
    return m;
}

ModelSpec scalar_ou_model() {
    ModelSpec m;
    m.basis = make_basis(1);
    m.drift = DriftModel::linear(-Eigen::MatrixXd::Identity(1, 1));
    m.diffusion = DiffusionModel::identity();
    m.q = make_q_spectrum(1, 1.0, 1.0);
    return m;
}

Ensemble two_particle_scalar() {
    Ensemble e;
    e.members = Eigen::MatrixXd(1, 2);
    e.members << 1.0, 3.0;
    return e;
}

ObservationModel scalar_obs(double gamma = 1.0) {
    return ObservationModel::make(ObservationKind::Linear, make_basis(1), {1},
                                  1.0, gamma);
}

bool series_equal(const DiagnosticSeries& a, const DiagnosticSeries& b) {
    if (a.times != b.times || a.sigma != b.sigma || a.sigma_H != b.sigma_H ||
        a.gain_norm != b.gain_norm || a.qv_realized != b.qv_realized ||
        a.qv_cap != b.qv_cap || a.sup_sigma != b.sup_sigma)
        return false;
    if (a.mean_coeffs.size() != b.mean_coeffs.size()) return false;
    for (std::size_t n = 0; n < a.mean_coeffs.size(); ++n)
        if ((a.mean_coeffs[n] - b.mean_coeffs[n]).cwiseAbs().maxCoeff() != 0.0)
            return false;
    return true;
}
} // namespace

TEST_CASE("empirical statistics: two-particle hand computation") {
    const Ensemble e = two_particle_scalar();
    const EmpiricalStats s = compute_stats(e, scalar_obs());
    CHECK(s.mean(0) == 2.0);
    CHECK(s.obs_mean(0) == 2.0);
    CHECK(s.sigma == 1.0);    // 1/N normalization: ((1-2)^2 + (3-2)^2)/2
    CHECK(s.sigma_H == 1.0);
    REQUIRE(s.cross_cov.rows() == 1);
    REQUIRE(s.cross_cov.cols() == 1);
    CHECK(s.cross_cov(0, 0) == 1.0);
}

TEST_CASE("empirical statistics: degenerate ensembles") {
    SpectralField u0(3);
    u0 << 0.4, -0.2, 1.0;
    const Ensemble e = Ensemble::constant(u0, 5, 0);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, make_basis(3), {2}, 1.0,
                               1.0);
    const EmpiricalStats s = compute_stats(e, obs);
    CHECK(s.sigma == 0.0);
    CHECK(s.sigma_H == 0.0);
    CHECK(s.cross_cov.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.obs_mean(0) == -0.2);

    // A constant observation functional kills the cross-covariance even for
    // a spread-out ensemble.
    Ensemble spread;
    spread.members = Eigen::MatrixXd::Random(3, 8);
    const ObservationModel zero_h = ObservationModel::make_general(
        ObservationKind::Linear, {SpectralField::Zero(3)}, 1.0,
        Eigen::MatrixXd::Identity(1, 1));
    const EmpiricalStats sz = compute_stats(spread, zero_h);
    CHECK(sz.cross_cov.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sz.sigma_H == 0.0);
    CHECK(sz.sigma > 0.0);

    Ensemble empty;
    empty.members = Eigen::MatrixXd(3, 0);
    CHECK_THROWS_AS(compute_stats(empty, obs), invalid_argument_error);
}

TEST_CASE("statistics are invariant under a common shift") {
    const ModelSpec model = heat_model(3);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, model.basis, {1}, 1.0,
                               1.0);
    Ensemble e;
    e.members = Eigen::MatrixXd::Random(3, 16);
    SpectralField w(3);
    w << 0.5, -1.5, 2.0;

    Ensemble shifted = e;
    shifted.members.colwise() += w;

    const EmpiricalStats a = compute_stats(e, obs);
    const EmpiricalStats b = compute_stats(shifted, obs);
    CHECK(std::abs(a.sigma - b.sigma) < 1e-12);
    CHECK(std::abs(a.sigma_H - b.sigma_H) < 1e-12);
    CHECK((a.cross_cov - b.cross_cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((b.mean - (a.mean + w)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transport is equivariant under particle permutation") {
    const ModelSpec model = heat_model(2);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, model.basis, {1}, 1.0,
                               1.0);
    Ensemble e;
    e.members = Eigen::MatrixXd::Random(2, 4);
    const EmpiricalStats s = compute_stats(e, obs);
    const Eigen::MatrixXd dW = 0.01 * Eigen::MatrixXd::Random(2, 4);
    Eigen::VectorXd dY(1);
    dY << 0.02;

    const Ensemble out = transport_step(e, model, obs, s.cross_cov, s.obs_mean,
                                        dY, 0.01, dW, GainPolicy::untamed());

    // Reverse the particle order (and the matching noise columns): the
    // transported states must be the same states, reversed, bit-for-bit.
    Ensemble rev = e;
    rev.members = e.members.rowwise().reverse();
    const Eigen::MatrixXd dW_rev = dW.rowwise().reverse();
    const Ensemble out_rev =
        transport_step(rev, model, obs, s.cross_cov, s.obs_mean, dY, 0.01,
                       dW_rev, GainPolicy::untamed());
    CHECK((out_rev.members.rowwise().reverse() - out.members)
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("ensemble mean follows the closed-form filter update") {
    // For linear observations, averaging the per-particle transport gives
    //   mean+ = resolvent (mean + mean BdW) + C R^{-1} (dY - H mean dt).
    const ModelSpec model = heat_model(3);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, model.basis, {2}, 1.0,
                               0.5);
    Ensemble e;
    e.members = Eigen::MatrixXd::Random(3, 32);
    const EmpiricalStats s = compute_stats(e, obs);
    const double dt = 0.01;
    const Eigen::MatrixXd dW = 0.1 * Eigen::MatrixXd::Random(3, 32);
    Eigen::VectorXd dY(1);
    dY << -0.03;

    const Ensemble out = transport_step(e, model, obs, s.cross_cov, s.obs_mean,
                                        dY, dt, dW, GainPolicy::untamed());

    const Eigen::MatrixXd Rm = implicit_resolvent(model, dt);
    const Eigen::VectorXd mean_dW = dW.rowwise().mean();
    const Eigen::VectorXd gain_term =
        s.cross_cov * obs.R_inv * (dY - observe(obs, s.mean) * dt);
    const Eigen::VectorXd expect = Rm * (s.mean + mean_dW) + gain_term;

    const Eigen::VectorXd got = out.members.rowwise().mean();
    CHECK((got - expect).cwiseAbs().maxCoeff() <
          1e-12 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
}

TEST_CASE("zero step size transports to the identical ensemble") {
    const ModelSpec model = heat_model(2);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, model.basis, {1}, 1.0,
                               1.0);
    Ensemble e;
    e.members = Eigen::MatrixXd::Random(2, 6);
    e.replicate_id = 1;
    const EmpiricalStats s = compute_stats(e, obs);
    Eigen::VectorXd dY = Eigen::VectorXd::Zero(1);

    const Ensemble out =
        transport_step(e, model, obs, s.cross_cov, s.obs_mean, dY, 0.0,
                       Eigen::MatrixXd::Zero(2, 6), GainPolicy::untamed());
    CHECK((out.members - e.members).cwiseAbs().maxCoeff() == 0.0);

    NoiseContext noise{2024, 1};
    const Ensemble out2 = enkbf_step(e, model, obs, dY, 0.0, noise, 0,
                                     GainPolicy::untamed());
    CHECK((out2.members - e.members).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gain ramp: smooth clip between the threshold and threshold + 1") {
    const GainPolicy untamed = GainPolicy::untamed();
    CHECK(untamed.ramp(0.0) == 1.0);
    CHECK(untamed.ramp(1e12) == 1.0);

    const GainPolicy clip = GainPolicy::clipped(2.0);
    CHECK(clip.ramp(0.0) == 1.0);
    CHECK(clip.ramp(2.0) == 1.0);
    CHECK(clip.ramp(3.0) == 0.0);
    CHECK(clip.ramp(10.0) == 0.0);
    CHECK(clip.ramp(2.5) == doctest::Approx(0.5).epsilon(1e-14));

    // Monotone decreasing across the ramp...
    double prev = 1.0;
    for (int i = 1; i <= 100; ++i) {
        const double v = clip.ramp(2.0 + i / 100.0);
        CHECK(v <= prev + 1e-15);
        prev = v;
    }
    // ... with flat (C^1) junctions at both ends.
    CHECK(std::abs(1.0 - clip.ramp(2.0 + 1e-5)) < 1e-9);
    CHECK(std::abs(clip.ramp(3.0 - 1e-5)) < 1e-9);
}

TEST_CASE("inactive clipping is bit-identical to the untamed policy") {
    const ModelSpec model = heat_model(3);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, model.basis, {1}, 1.0,
                               1.0);
    IntegratorConfig cfg;
    cfg.dt = 0.01;
    cfg.T = 0.2;

    StreamKey key;
    key.experiment_seed = 5;
    key.particle_id = kReferenceParticleId;
    const SignalPath truth =
        simulate_signal_path(SpectralField::Zero(3), model, cfg, key);
    StreamKey okey = key;
    okey.role = StreamRole::ObsNoise;
    const ObservationPath path = generate_observation_path(truth, obs, okey);

    const Ensemble init = Ensemble::constant(SpectralField::Zero(3), 8, 0);
    const NoiseContext noise{5, 0};
    const DiagnosticSeries a =
        run_enkbf(init, model, obs, path, cfg, noise, GainPolicy::untamed());
    const DiagnosticSeries b =
        run_enkbf(init, model, obs, path, cfg, noise, GainPolicy::clipped(1e9));
    CHECK(series_equal(a, b));

    // An active clip (threshold below the running ||C||_F^2) changes the
    // run and caps the recorded gain.
    const DiagnosticSeries c =
        run_enkbf(init, model, obs, path, cfg, noise, GainPolicy::clipped(0.0));
    CHECK_FALSE(series_equal(a, c));
}

TEST_CASE("diagnostics are independent of the thread count") {
    const ModelSpec model = heat_model(4);
    const ObservationModel obs = ObservationModel::make(
        ObservationKind::BoundedTanh, model.basis, {1, 2}, 1.0, 1.0);
    IntegratorConfig cfg;
    cfg.dt = 0.01;
    cfg.T = 0.1;

    StreamKey key;
    key.experiment_seed = 9;
    key.particle_id = kReferenceParticleId;
    const SignalPath truth =
        simulate_signal_path(SpectralField::Zero(4), model, cfg, key);
    StreamKey okey = key;
    okey.role = StreamRole::ObsNoise;
    const ObservationPath path = generate_observation_path(truth, obs, okey);

    const Ensemble init = Ensemble::gaussian(
        SpectralField::Zero(4), Eigen::VectorXd::Constant(4, 0.1), 64, 9, 0);
    const NoiseContext noise{9, 0};

    set_thread_count(1);
    const DiagnosticSeries serial =
        run_enkbf(init, model, obs, path, cfg, noise, GainPolicy::untamed());
    set_thread_count(8);
    const DiagnosticSeries parallel =
        run_enkbf(init, model, obs, path, cfg, noise, GainPolicy::untamed());
    set_thread_count(0);  // restore default
    CHECK(series_equal(serial, parallel));
    CHECK(serial.sup_sigma > 0.0);
}

TEST_CASE("a large ensemble tracks the exact scalar filter") {
    const ModelSpec model = scalar_ou_model();
    const ObservationModel obs = scalar_obs();
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 0.5;

    StreamKey key;
    key.experiment_seed = 31;
    key.particle_id = kReferenceParticleId;
    const SignalPath truth =
        simulate_signal_path(SpectralField::Zero(1), model, cfg, key);
    StreamKey okey = key;
    okey.role = StreamRole::ObsNoise;
    const ObservationPath path = generate_observation_path(truth, obs, okey);

    const int N = 4096;
    const Ensemble init = Ensemble::constant(SpectralField::Zero(1), N, 0);
    const NoiseContext noise{31, 0};
    const DiagnosticSeries series =
        run_enkbf(init, model, obs, path, cfg, noise, GainPolicy::untamed());

    const LinearGaussSpec spec = LinearGaussSpec::from_models(
        model, obs, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1));
    RiccatiState kb{spec.m0, spec.P0};
    for (int n = 0; n < cfg.steps(); ++n)
        kb = kalman_bucy_step(kb, spec, path.increments[n], cfg.dt);

    const double err =
        std::abs(series.mean_coeffs.back()(0) - kb.m(0));
    CHECK(err <= 5.0 / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("empirical accuracy functional: hand computation") {
    const Ensemble e = two_particle_scalar();
    SpectralField ref(1);
    ref << 2.0;
    // Eh = 2; terms |2 - (1+2)/2|^2 = 0.25 and |2 - (3+2)/2|^2 = 0.25.
    CHECK(empirical_accuracy(e, ref, scalar_obs()) ==
          doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("martingale quadratic-variation increment: hand computation") {
    const ModelSpec model = scalar_ou_model();
    const Ensemble e = two_particle_scalar();
    const EmpiricalStats s = compute_stats(e, scalar_obs());
    Eigen::MatrixXd dW(1, 2);
    dW << 0.1, -0.2;
    const double dt = 0.01;
    const QvIncrement qv = martingale_qv_accumulate(e, s, model, dW, dt);
    // m-increment = (2/2)((1-2)*0.1 + (3-2)*(-0.2)) = -0.3.
    CHECK(qv.realized == doctest::Approx(0.09).epsilon(1e-14));
    // cap = (2 beta / N) sigma dt = (2*1/2)*1*0.01.
    CHECK(qv.cap == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("gaussian initialization: reproducible with the stated moments") {
    SpectralField mean(2);
    mean << 1.0, -1.0;
    Eigen::VectorXd var(2);
    var << 0.25, 4.0;
    const int N = 4000;
    const Ensemble a = Ensemble::gaussian(mean, var, N, 123, 7);
    const Ensemble b = Ensemble::gaussian(mean, var, N, 123, 7);
    CHECK((a.members - b.members).cwiseAbs().maxCoeff() == 0.0);

    const Ensemble c = Ensemble::gaussian(mean, var, N, 123, 8);
    CHECK((a.members - c.members).cwiseAbs().maxCoeff() != 0.0);

    for (int k = 0; k < 2; ++k) {
        const auto row = a.members.row(k);
        const double m = row.mean();
        const double v = row.array().square().mean() - m * m;
        const double se_m = std::sqrt(var(k) / N);
        const double se_v = var(k) * std::sqrt(2.0 / N);
        CHECK(std::abs(m - mean(k)) < 3.0 * se_m);
        CHECK(std::abs(v - var(k)) < 3.0 * se_v);
    }

    const Ensemble fixed = Ensemble::constant(mean, 3, 0);
    for (int i = 0; i < 3; ++i)
        CHECK((fixed.members.col(i) - mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("explosive ensembles raise divergence errors") {
    ModelSpec model;
    model.basis = make_basis(2);
    model.drift = DriftModel::allen_cahn(0.0, 1e4, 0.0);
    model.diffusion = DiffusionModel::identity();
    model.q = make_q_spectrum(2, 1.0, 1.0);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, model.basis, {1}, 1.0,
                               1.0);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 1.0;

    SpectralField u0 = SpectralField::Zero(2);
    u0(0) = 1.0;
    ObservationPath path;
    for (int n = 0; n <= cfg.steps(); ++n) path.times.push_back(cfg.time(n));
    for (int n = 0; n < cfg.steps(); ++n)
        path.increments.push_back(Eigen::VectorXd::Zero(1));

    const Ensemble init = Ensemble::constant(u0, 4, 0);
    CHECK_THROWS_AS(run_enkbf(init, model, obs, path, cfg, NoiseContext{1, 0},
                              GainPolicy::untamed()),
                    divergence_error);
}
