#pragma once

// Quadratic Separation stability test of order N. The delay state is
// projected on the first N + 1 shifted Legendre polynomials over [-tau, 0];
// N = 0 is the plain test with a Jensen-type bound on the delay block.

#include "wavestab/model.hpp"
#include "wavestab/polynomial.hpp"
#include "wavestab/sdp.hpp"

#include <string>
#include <vector>

namespace wavestab {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

struct LegendreBundle {
    int order = 0;
    double c = 0.0;  ///< 1 / tau
    /// Derivative matrix: d/dtheta [L_0 .. L_N]' = deriv * [L_0 .. L_N]'. Strictly lower triangular.
    Matrix deriv;
    /// Alternating column [(-1)^0 .. (-1)^N]'.
    Vector ones;
    /// Diagonal of diag(1 / sqrt(2k + 1)).
    Vector itilde;
};

LegendreBundle legendre_bundle(int order, const WaveChannel& channel);

/// Shifted Legendre polynomial on [-tau, 0]: L_k(0) = 1, L_k(-tau) = (-1)^k.
double shifted_legendre(int k, double theta, double tau);
double shifted_legendre_derivative(int k, double theta, double tau);

/// delta_N(s)_k = sqrt(2k + 1) * int_{-tau}^0 e^{theta s} L_k(theta) dtheta, k = 0..N.
/// Satisfies ||delta_N(s)||^2 <= tau^2 on the closed right half-plane.
CVector delta_n(cplx s, double tau, int order);

/// (1 + alpha) / (1 + alpha e^{-2 tau s}): the neutral part of the channel.
cplx channel_delta(cplx s, const WaveChannel& channel);

struct QsProblem {
    int order = 0;
    int n = 0;
    int z_dim = 0;      ///< n + N + 3
    int omega_dim = 0;  ///< n + 2N + 3
    Matrix E;
    Matrix A;
    /// Orthonormal basis of ker [E  -A].
    Matrix V;
    double nullspace_residual = 0.0;
};

QsProblem assemble_problem(int order, const LtiPlant& plant, const WaveChannel& channel);

struct SeparatorParams {
    Matrix P;  ///< symmetric (n + N) x (n + N)
    double Q = 0.0;
    double R = 0.0;
    double S = 0.0;
};

/// Theta_N, square of size z_dim + omega_dim, affine (in fact linear) in (P, Q, R, S).
Matrix assemble_separator(int order, int n, const WaveChannel& channel, const SeparatorParams& params);

/// The uncertainty block diag(s^{-1} I, e^{-tau s}, delta(s), delta_N(s)) mapping z to omega.
CMatrix uncertainty_operator(cplx s, int order, int n, const WaveChannel& channel);

struct SeparatorCheck {
    bool passed = true;
    double worst = 0.0;  ///< largest eigenvalue of [I; Nabla]^* Theta [I; Nabla] seen
    int samples = 0;
};

/// Samples sample_count log-spaced points s = i w, plus a quarter as many just right of
/// the axis, and verifies that the separator quadratic form is negative semidefinite
/// (tolerance 1e-8, relative to the largest entry of Theta).
SeparatorCheck separator_negativity_check(int order, int n, const WaveChannel& channel,
                                          const SeparatorParams& params, int sample_count);

inline constexpr double kQsPositivityMargin = 1e-8;
inline constexpr double kQsWitnessTolerance = 1e-9;
/// The projected LMI must hold with margin t > kQsStrictMargin; t = 0 is reachable by degenerate separators.
inline constexpr double kQsStrictMargin = 1e-10;

/// The feasibility problem for a given order; variables vech(P), Q, R, S, t.
LmiProblem qs_lmi(const QsProblem& problem, const WaveChannel& channel);
SeparatorParams unpack_witness(const QsProblem& problem, const Vector& x);

enum class QsVerdict { Stable, Unknown };

struct QsReport {
    QsVerdict verdict = QsVerdict::Unknown;
    int order = 0;
    std::string status;
    SeparatorParams witness;
    /// Smallest eigenvalues of V' Theta V and P at the witness, recomputed from scratch.
    std::vector<double> eigen_margins;
    int newton_steps = 0;
    std::vector<std::string> warnings;
};

/// Throws GateRefused unless |alpha| < 1.
QsReport qs_feasible(int order, const LtiPlant& plant, const WaveChannel& channel, const SdpBackend& backend);

std::string to_string(QsVerdict v);

}  // namespace wavestab
