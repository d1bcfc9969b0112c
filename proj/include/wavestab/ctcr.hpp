#pragma once

// Exact delay-stability analysis (Cluster Treatment of Characteristic Roots)
// at a fixed c1 = c * c0 = c0 / tau. With c1 fixed the quasipolynomial
// coefficients no longer depend on tau, so the delay can be swept exactly.

#include "wavestab/model.hpp"
#include "wavestab/transfer.hpp"

#include <array>
#include <string>
#include <vector>

namespace wavestab {

/// D(s)(1 + 2 c1 T s + T^2 s^2) - N(s)(1 - T^2 s^2) = sum_k b_k(T) s^k,
/// with b_k(T) = beta[k][0] + beta[k][1] T + beta[k][2] T^2.
struct TransformedPoly {
    std::vector<std::array<double, 3>> beta;
    double c1 = 0.0;

    cplx operator()(cplx s, double T) const;
    /// Coefficients of s^k at a given T.
    Poly at(double T) const;
    int degree() const { return static_cast<int>(beta.size()) - 1; }
};

TransformedPoly transformed_poly(const RationalTf& reduced, double c1);
TransformedPoly transformed_poly(const LtiPlant& plant, double c1);

/// Imaginary-axis root s = i omega of the quasipolynomial for the Rekasius parameter T.
/// T = +inf encodes e^{-i omega tau} = -1.
struct Crossing {
    double omega;
    double T;
};

inline constexpr double kCrossingResidualTolerance = 1e-8;
inline constexpr double kRootMergeTolerance = 1e-6;
inline constexpr double kTendencyTolerance = 1e-9;
inline constexpr double kImagAxisTolerance = 1e-9;

/// Every (omega > 0, T) with transformed_poly(i omega, T) = 0, via the resultant in T.
/// Throws DegenerateFamily when the resultant vanishes identically.
std::vector<Crossing> crossing_set(const RationalTf& reduced, double c1);
std::vector<Crossing> crossing_set(const LtiPlant& plant, double c1);

/// Delays in (0, tau_max] at which the crossing (omega, T) happens, ascending.
std::vector<double> delays_for_crossing(double omega, double T, double tau_max);

/// The first `count` positive delays of a crossing, ignoring any upper bound.
std::vector<double> first_delays(double omega, double T, int count);

enum class Tendency : int { Stabilizing = -1, Degenerate = 0, Destabilizing = 1 };

/// Sign of Re(ds/dtau) at the crossing. Checked for agreement over its first three delays.
Tendency root_tendency(const QuasiPolynomial& ceq, double omega, double T);
Tendency root_tendency(const LtiPlant& plant, double c1, double omega, double T);

/// Roots of D - N (reduced pair) in the open right half-plane. Throws MarginalAtZero.
int count_unstable_at_zero(const RationalTf& reduced);
int count_unstable_at_zero(const LtiPlant& plant);

struct CrossingEvent {
    double omega;
    double T;
    Tendency tendency;
    std::vector<double> delays;
};

struct DelayInterval {
    double lo;
    double hi;
    int unstable_count;
};

struct StabilityAccount {
    double c1 = 0.0;
    double tau_max = 0.0;
    int nu_at_zero = 0;  ///< includes unstable modes removed by pole-zero cancellation
    std::vector<CrossingEvent> events;
    /// Partition of (0, tau_max] with the unstable-root count on each piece.
    std::vector<DelayInterval> intervals;
    std::vector<cplx> cancelled;

    int unstable_count_at(double tau) const;
    bool stable_at(double tau) const { return unstable_count_at(tau) == 0; }
    std::vector<DelayInterval> stable_intervals() const;
    /// Every crossing delay in (0, tau_max], ascending.
    std::vector<double> crossing_delays() const;
};

StabilityAccount stable_intervals(const RationalTf& reduced, double c1, double tau_max);
StabilityAccount stable_intervals(const LtiPlant& plant, double c1, double tau_max);

std::string to_string(Tendency t);

}  // namespace wavestab
