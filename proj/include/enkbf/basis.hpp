#pragma once

// Spectral Galerkin basis on (0,1) with homogeneous Dirichlet boundary:
// e_k(x) = sqrt(2) sin(k pi x), k = 1..M.  The negative Laplacian is
// diagonal in this basis with eigenvalues mu_k = (k pi)^2.  Nonlinear
// terms are evaluated pseudo-spectrally on a uniform collocation grid of
// 2M+1 interior nodes; with that oversampling the first M modes of a
// cubic are alias-free.

#include <Eigen/Dense>

#include <vector>

namespace enkbf {

// A field is its coefficient vector in the orthonormal sine basis.
using SpectralField = Eigen::VectorXd;

struct BasisSpec {
    int M = 0;                     // truncation dimension
    Eigen::VectorXd mu;            // Laplacian eigenvalues (k pi)^2, k=1..M
    Eigen::VectorXd nodes;         // collocation nodes x_j = j/(n+1), j=1..n
    Eigen::MatrixXd synth;         // (n x M): values = synth * coeffs
    Eigen::MatrixXd analyze;       // (M x n): coeffs = analyze * values

    int grid_size() const { return static_cast<int>(nodes.size()); }
};

// Build the basis for dimension M (M >= 1).  Throws invalid_argument_error
// for M < 1.  The synth/analyze transforms are mutually inverse on fields
// of at most M modes.
BasisSpec make_basis(int M);

// Physical-space values of `u` on the collocation grid.
Eigen::VectorXd to_physical(const BasisSpec& basis, const SpectralField& u);

// Project grid values back to the first M sine coefficients.
SpectralField to_spectral(const BasisSpec& basis, const Eigen::VectorXd& values);

// Evaluate the field at an arbitrary point x in (0,1).
double evaluate_field(const SpectralField& u, double x);

// Squared H-norm: plain sequential sum of squared coefficients, so the
// Parseval identity holds bit-for-bit against an explicit loop.
double h_norm2(const SpectralField& u);
inline double h_norm(const SpectralField& u) { return std::sqrt(h_norm2(u)); }

// Squared V-norm for the Dirichlet H^1_0 case: sum of mu_k u_k^2.
double v_norm2(const BasisSpec& basis, const SpectralField& u);

// H inner product, sequential summation order.
double h_dot(const SpectralField& u, const SpectralField& v);

} // namespace enkbf
