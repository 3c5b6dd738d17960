#include <doctest.h>

#include "enkbf/errors.hpp"
#include "enkbf/observation.hpp"

#include <cmath>

using namespace enkbf;

namespace {
StreamKey obs_key(std::uint32_t replicate = 0) {
    StreamKey key;
    key.experiment_seed = 77;
    key.replicate_id = replicate;
    key.particle_id = kReferenceParticleId;
    key.role = StreamRole::ObsNoise;
    return key;
}

SignalPath flat_path(int M, int steps, double dt) {
    SignalPath path;
    for (int n = 0; n <= steps; ++n) {
        path.times.push_back(n * dt);
        path.states.push_back(SpectralField::Zero(M));
    }
    return path;
}
} // namespace

TEST_CASE("linear observation reads the selected coefficients") {
    const BasisSpec basis = make_basis(4);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, basis, {1}, 1.0, 1.0);
    CHECK(obs.d_y == 1);

    SpectralField u = SpectralField::Zero(4);
    u(0) = 3.0;
    const Eigen::VectorXd y = observe(obs, u);
    REQUIRE(y.size() == 1);
    CHECK(y(0) == 3.0);

    const ObservationModel obs2 =
        ObservationModel::make(ObservationKind::Linear, basis, {2, 4}, 1.0, 0.5);
    SpectralField v(4);
    v << 1.0, -2.0, 3.0, 4.0;
    const Eigen::VectorXd y2 = observe(obs2, v);
    CHECK(y2(0) == -2.0);
    CHECK(y2(1) == 4.0);
}

TEST_CASE("bounded observation saturates at the configured level") {
    const BasisSpec basis = make_basis(2);
    const ObservationModel obs = ObservationModel::make(
        ObservationKind::BoundedTanh, basis, {1}, 1.0, 1.0);

    SpectralField u = SpectralField::Zero(2);
    CHECK(observe(obs, u)(0) == 0.0);

    u(0) = 10.0;
    const double y = observe(obs, u)(0);
    CHECK(y == doctest::Approx(std::tanh(10.0)).epsilon(1e-15));
    CHECK(y < 1.0);
    u(0) = -1000.0;
    CHECK(observe(obs, u)(0) >= -1.0);

    const ObservationModel wide = ObservationModel::make(
        ObservationKind::BoundedTanh, basis, {1}, 2.0, 1.0);
    u(0) = 3.0;
    CHECK(observe(wide, u)(0) ==
          doctest::Approx(2.0 * std::tanh(1.5)).epsilon(1e-15));
}

TEST_CASE("constructor guards") {
    const BasisSpec basis = make_basis(3);
    CHECK_THROWS_AS(
        ObservationModel::make(ObservationKind::Linear, basis, {0}, 1.0, 1.0),
        invalid_argument_error);
    CHECK_THROWS_AS(
        ObservationModel::make(ObservationKind::Linear, basis, {4}, 1.0, 1.0),
        invalid_argument_error);
    CHECK_THROWS_AS(
        ObservationModel::make(ObservationKind::Linear, basis, {}, 1.0, 1.0),
        invalid_argument_error);
    CHECK_THROWS_AS(
        ObservationModel::make(ObservationKind::Linear, basis, {1}, 1.0, -0.5),
        invalid_argument_error);
    CHECK_THROWS_AS(
        ObservationModel::make(ObservationKind::BoundedTanh, basis, {1}, 0.0, 1.0),
        invalid_argument_error);
    CHECK_THROWS_AS(observe(ObservationModel::make(ObservationKind::Linear,
                                                   basis, {1}, 1.0, 1.0),
                            SpectralField::Zero(5)),
                    invalid_argument_error);
}

TEST_CASE("noise-free observation increments are exact") {
    const BasisSpec basis = make_basis(2);
    ObservationModel obs = ObservationModel::make_general(
        ObservationKind::Linear,
        {SpectralField::Unit(2, 0)}, 1.0, Eigen::MatrixXd::Zero(1, 1));

    const double dt = 0.05;
    SignalPath path = flat_path(2, 10, dt);
    for (int n = 0; n <= 10; ++n) path.states[n](0) = 1.0 + n;

    const ObservationPath y = generate_observation_path(path, obs, obs_key());
    REQUIRE(y.increments.size() == 10);
    for (int n = 0; n < 10; ++n) {
        // Step length comes from the recorded grid, exactly as the generator
        // computes it; with zero noise the increment is bit-exact.
        const double step = path.times[n + 1] - path.times[n];
        CHECK(y.increments[n](0) == (1.0 + n) * step);
    }
}

TEST_CASE("observation path is deterministic per key") {
    const BasisSpec basis = make_basis(2);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, basis, {1}, 1.0, 1.0);
    const SignalPath path = flat_path(2, 50, 0.01);

    const ObservationPath a = generate_observation_path(path, obs, obs_key(0));
    const ObservationPath b = generate_observation_path(path, obs, obs_key(0));
    const ObservationPath c = generate_observation_path(path, obs, obs_key(1));
    REQUIRE(a.increments.size() == b.increments.size());
    bool any_diff = false;
    for (std::size_t n = 0; n < a.increments.size(); ++n) {
        CHECK(a.increments[n](0) == b.increments[n](0));
        any_diff = any_diff || a.increments[n](0) != c.increments[n](0);
    }
    CHECK(any_diff);
}

TEST_CASE("pure-noise increments have variance gamma^2 dt") {
    const BasisSpec basis = make_basis(2);
    const double gamma = 0.7;
    const double dt = 0.01;
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, basis, {1}, 1.0, gamma);
    const SignalPath path = flat_path(2, 20000, dt);
    const ObservationPath y = generate_observation_path(path, obs, obs_key());

    const int n = static_cast<int>(y.increments.size());
    double sum = 0.0, sum2 = 0.0;
    for (const auto& inc : y.increments) {
        sum += inc(0);
        sum2 += inc(0) * inc(0);
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double expect = gamma * gamma * dt;
    CHECK(std::abs(var - expect) < 3.0 * expect * std::sqrt(2.0 / n));
    CHECK(std::abs(mean) < 3.0 * std::sqrt(expect / n));
}

TEST_CASE("piecewise-constant noise schedule") {
    const BasisSpec basis = make_basis(2);
    ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, basis, {1}, 1.0, 1.0);
    const Eigen::MatrixXd G0 = Eigen::MatrixXd::Identity(1, 1);
    const Eigen::MatrixXd G1 = 2.0 * Eigen::MatrixXd::Identity(1, 1);
    obs.schedule = {{0.0, G0}, {0.5, G1}};

    CHECK(obs.gamma_at(0.0)(0, 0) == 1.0);
    CHECK(obs.gamma_at(0.3)(0, 0) == 1.0);
    CHECK(obs.gamma_at(0.5)(0, 0) == 2.0);
    CHECK(obs.gamma_at(0.7)(0, 0) == 2.0);

    ObservationModel plain =
        ObservationModel::make(ObservationKind::Linear, basis, {1}, 1.0, 3.0);
    CHECK(plain.gamma_at(0.9)(0, 0) == 3.0);
}

TEST_CASE("observation matrix stacks the functionals as rows") {
    const BasisSpec basis = make_basis(4);
    const ObservationModel obs =
        ObservationModel::make(ObservationKind::Linear, basis, {1, 3}, 1.0, 1.0);
    const Eigen::MatrixXd H = observation_matrix(obs, 4);
    REQUIRE(H.rows() == 2);
    REQUIRE(H.cols() == 4);
    CHECK(H(0, 0) == 1.0);
    CHECK(H(0, 1) == 0.0);
    CHECK(H(1, 2) == 1.0);
    CHECK(H(1, 3) == 0.0);
}
