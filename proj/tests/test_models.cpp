#include <doctest.h>

#include "enkbf/errors.hpp"
#include "enkbf/models.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

using namespace enkbf;

namespace {
constexpr double kPi = std::numbers::pi;

SpectralField random_field(int M, std::mt19937& gen, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    SpectralField u(M);
    for (int k = 0; k < M; ++k) u(k) = dist(gen);
    return u;
}

// Independent projection of the cubed field onto the first M modes using a
// four-times-denser collocation grid and the discrete sine orthogonality.
SpectralField cube_on_fine_grid(const BasisSpec& basis, const SpectralField& u) {
    const int m = 4 * basis.grid_size() + 3;
    SpectralField out = SpectralField::Zero(basis.M);
    for (int j = 1; j <= m; ++j) {
        const double x = static_cast<double>(j) / (m + 1);
        const double v = evaluate_field(u, x);
        const double w = v * v * v;
        for (int k = 1; k <= basis.M; ++k)
            out(k - 1) += w * std::sqrt(2.0) * std::sin(k * kPi * x);
    }
    return out / (m + 1);
}
} // namespace

TEST_CASE("heat drift is the diagonal Laplacian") {
    const BasisSpec basis = make_basis(4);
    const DriftModel heat = DriftModel::heat();
    CHECK(heat.declared_lambda == 0.0);

    SpectralField e1 = SpectralField::Zero(4);
    e1(0) = 1.0;
    const SpectralField Ae1 = apply_drift(heat, basis, e1);
    CHECK(Ae1(0) == doctest::Approx(-kPi * kPi).epsilon(1e-14));
    for (int k = 1; k < 4; ++k) CHECK(Ae1(k) == 0.0);

    // Linearity.
    std::mt19937 gen(7);
    const SpectralField u = random_field(4, gen);
    const SpectralField v = random_field(4, gen);
    const SpectralField lhs = apply_drift(heat, basis, u + v);
    const SpectralField rhs =
        apply_drift(heat, basis, u) + apply_drift(heat, basis, v);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Allen-Cahn drift: closed-form cubic of a single mode") {
    // For u = s e_1 the cube is s^3 (3 e_1 / 2 - e_3 / 2) exactly, so with
    // a = 1, b = 0, c = 0 the drift is -(pi^2 + 1.5 s^3) on mode 1 and
    // +0.5 s^3 on mode 3.  The collocation grid resolves this alias-free.
    const BasisSpec basis = make_basis(3);
    const DriftModel ac = DriftModel::allen_cahn(1.0, 0.0, 0.0);
    const double s = 1.7;
    SpectralField u = SpectralField::Zero(3);
    u(0) = s;
    const SpectralField Au = apply_drift(ac, basis, u);
    const double s3 = s * s * s;
    CHECK(Au(0) == doctest::Approx(-kPi * kPi * s - 1.5 * s3).epsilon(1e-12));
    CHECK(Au(1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(Au(1)) < 1e-12);
    CHECK(Au(2) == doctest::Approx(0.5 * s3).epsilon(1e-12));
}

TEST_CASE("Allen-Cahn drift matches a fine-grid quadrature oracle") {
    const BasisSpec basis = make_basis(6);
    const DriftModel ac = DriftModel::allen_cahn(1.3, 0.8, 0.0);
    std::mt19937 gen(11);
    for (int trial = 0; trial < 5; ++trial) {
        SpectralField u = random_field(6, gen);
        if (h_norm(u) > 10.0) u *= 10.0 / h_norm(u);
        const SpectralField cubic = cube_on_fine_grid(basis, u);
        SpectralField expect(6);
        for (int k = 0; k < 6; ++k)
            expect(k) = -basis.mu(k) * u(k) - 1.3 * cubic(k) + 0.8 * u(k);
        const SpectralField got = apply_drift(ac, basis, u);
        CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("Allen-Cahn constant forcing uses the grid projection") {
    // With u = 0 the drift reduces to the projection of the constant c;
    // verify against the same projection computed directly from the nodes.
    const BasisSpec basis = make_basis(4);
    const DriftModel ac = DriftModel::allen_cahn(1.0, 0.0, 2.5);
    const SpectralField got =
        apply_drift(ac, basis, SpectralField::Zero(4));
    const Eigen::VectorXd ones =
        Eigen::VectorXd::Constant(basis.grid_size(), 2.5);
    const SpectralField expect = to_spectral(basis, ones);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("linear-operator drift multiplies by the matrix") {
    Eigen::MatrixXd A(2, 2);
    A << -1.0, 0.5, 0.0, 2.0;
    const BasisSpec basis = make_basis(2);
    const DriftModel lin = DriftModel::linear(A);
    SpectralField u(2);
    u << 3.0, -4.0;
    const SpectralField Au = apply_drift(lin, basis, u);
    CHECK(Au(0) == doctest::Approx(-3.0 - 2.0).epsilon(1e-15));
    CHECK(Au(1) == doctest::Approx(-8.0).epsilon(1e-15));

    // declared lambda is the top eigenvalue of A + A^T.
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
    D(0, 0) = -1.0;
    D(1, 1) = 2.0;
    CHECK(DriftModel::linear(D).declared_lambda ==
          doctest::Approx(4.0).epsilon(1e-12));

    CHECK_THROWS_AS(DriftModel::linear(Eigen::MatrixXd::Zero(2, 3)),
                    invalid_argument_error);
}

TEST_CASE("drift constructor guards") {
    CHECK_THROWS_AS(DriftModel::allen_cahn(-1.0, 0.0, 0.0),
                    invalid_argument_error);
    CHECK(DriftModel::allen_cahn(1.0, 3.0, 0.0).declared_lambda ==
          doctest::Approx(6.0));
    CHECK(DriftModel::allen_cahn(1.0, -2.0, 0.0).declared_lambda == 0.0);

    const BasisSpec basis = make_basis(3);
    CHECK_THROWS_AS(apply_drift(DriftModel::heat(), basis, SpectralField::Zero(5)),
                    invalid_argument_error);
}

TEST_CASE("one-sided Lipschitz estimates respect the declared constants") {
    std::mt19937 gen(23);
    const DiffusionModel id = DiffusionModel::identity();

    SUBCASE("heat: ratio is at most -2 pi^2") {
        const BasisSpec basis = make_basis(5);
        std::vector<std::pair<SpectralField, SpectralField>> pairs;
        for (int i = 0; i < 100; ++i)
            pairs.emplace_back(random_field(5, gen), random_field(5, gen));
        const double est =
            one_sided_lipschitz_check(DriftModel::heat(), id, basis, pairs);
        CHECK(est <= -2.0 * kPi * kPi + 1e-9);
    }

    SUBCASE("c I: ratio is exactly 2c for every pair") {
        const BasisSpec basis = make_basis(3);
        const double c = 0.7;
        const DriftModel lin =
            DriftModel::linear(c * Eigen::MatrixXd::Identity(3, 3));
        std::vector<std::pair<SpectralField, SpectralField>> pairs;
        for (int i = 0; i < 20; ++i)
            pairs.emplace_back(random_field(3, gen), random_field(3, gen));
        const double est = one_sided_lipschitz_check(lin, id, basis, pairs);
        CHECK(est == doctest::Approx(2.0 * c).epsilon(1e-12));
    }

    SUBCASE("Allen-Cahn with b = 1: ratio stays below 2") {
        const BasisSpec basis = make_basis(4);
        const DriftModel ac = DriftModel::allen_cahn(1.0, 1.0, 0.3);
        std::vector<std::pair<SpectralField, SpectralField>> pairs;
        for (int i = 0; i < 1000; ++i)
            pairs.emplace_back(random_field(4, gen, 2.0),
                               random_field(4, gen, 2.0));
        // Antipodal low-amplitude pair along the first mode: the damping
        // -pi^2 and the cubic vanish to leading order, so this pair attains
        // the sharp supremum 2(b - pi^2) over all pairs.
        SpectralField probe = SpectralField::Zero(4);
        probe(0) = 1e-6;
        pairs.emplace_back(probe, -probe);
        const double est = one_sided_lipschitz_check(ac, id, basis, pairs);
        CHECK(est <= 2.0 + 1e-9);  // the declared conservative constant
        CHECK(est == doctest::Approx(2.0 * (1.0 - kPi * kPi)).epsilon(1e-9));
    }

    SUBCASE("identical pairs are skipped; all-identical throws") {
        const BasisSpec basis = make_basis(2);
        const SpectralField u = random_field(2, gen);
        std::vector<std::pair<SpectralField, SpectralField>> pairs;
        pairs.emplace_back(u, u);
        CHECK_THROWS_AS(
            one_sided_lipschitz_check(DriftModel::heat(), id, basis, pairs),
            invalid_argument_error);
        pairs.emplace_back(u, 2.0 * u);  // one informative pair suffices
        CHECK(one_sided_lipschitz_check(DriftModel::heat(), id, basis, pairs) <
              0.0);
    }
}

TEST_CASE("q-spectrum: power-law decay normalised to the trace target") {
    const QSpectrum q = make_q_spectrum(8, 1.0, 2.5);
    CHECK(q.q.size() == 8);
    CHECK(q.trace() == doctest::Approx(2.5).epsilon(1e-12));
    // q_k proportional to k^{-2 alpha}: ratio of consecutive entries.
    CHECK(q.q(0) / q.q(1) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(q.q(0) / q.q(3) == doctest::Approx(16.0).epsilon(1e-12));
    for (int k = 0; k < 8; ++k) CHECK(q.q(k) > 0.0);

    CHECK_THROWS_AS(make_q_spectrum(4, 0.5, 1.0), invalid_argument_error);
    CHECK_THROWS_AS(make_q_spectrum(4, 1.0, 0.0), invalid_argument_error);
    CHECK_THROWS_AS(make_q_spectrum(0, 1.0, 1.0), invalid_argument_error);
}

TEST_CASE("diffusion model: identity fast path and matrix trace bound") {
    const QSpectrum q = make_q_spectrum(2, 1.0, 1.0);
    const DiffusionModel id = DiffusionModel::identity();
    CHECK(id.is_identity());
    SpectralField w(2);
    w << 0.25, -0.5;
    const SpectralField applied = id.apply(w);
    CHECK(applied(0) == w(0));
    CHECK(applied(1) == w(1));
    CHECK(id.trace_bound(q) == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXd B(2, 2);
    B << 1.0, 1.0, 0.0, 1.0;
    const DiffusionModel mat = DiffusionModel::matrix(B);
    CHECK_FALSE(mat.is_identity());
    const SpectralField mapped = mat.apply(w);
    CHECK(mapped(0) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(mapped(1) == doctest::Approx(-0.5).epsilon(1e-15));
    // trace(B Q B^T) = sum_k q_k ||B e_k||^2 = q_1 * 1 + q_2 * 2.
    const double expect = q.q(0) + 2.0 * q.q(1);
    CHECK(mat.trace_bound(q) == doctest::Approx(expect).epsilon(1e-12));

    ModelSpec model;
    model.basis = make_basis(2);
    model.drift = DriftModel::heat();
    model.diffusion = mat;
    model.q = q;
    CHECK(model.beta() == doctest::Approx(expect).epsilon(1e-12));
}
