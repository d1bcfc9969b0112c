#pragma once

// Time-domain integration of the neutral delay-differential form of the
// coupled system,
//
//   X'(t) + a X'(t - 2 tau) = A X(t) + 2/(1 + c1) B K X(t - tau) + a A X(t - 2 tau)
//                             + B r(t) + a B r(t - tau),
//
// by the method of steps with a fixed-step RK4 scheme aligned on the delays.

#include "wavestab/model.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace wavestab {

struct SimConfig {
    /// Steps per delay: h = tau / steps_per_tau. At least 20.
    int steps_per_tau = 40;
    double t_end = 50.0;
    /// Constant initial history X(theta) = x0, X'(theta) = 0 on [-2 tau, 0).
    Vector x0;
    /// Optional sampled history on [-2 tau, 0]; replaces x0 when set. X(0) = history(0).
    std::function<Vector(double)> history;
    std::function<Vector(double)> history_derivative;
    /// Scalar exogenous input; zero when unset.
    std::function<double(double)> input;
};

inline constexpr double kDivergenceCap = 1e12;
inline constexpr double kNormFloor = 1e-12;

struct Trajectory {
    double h = 0.0;
    double tau = 0.0;
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> derivs;  ///< right limits; X' jumps at multiples of 2 tau
    std::vector<double> norm_series;
    bool diverged = false;
};

/// Throws GateRefused when |alpha| >= 1 and DomainError on a bad configuration.
Trajectory simulate(const CoupledSystem& sys, const SimConfig& cfg);

enum class TrajectoryClass { Decaying, Growing, Inconclusive };

/// Least-squares slope of log ||X|| over the trailing tail_fraction of the horizon.
/// tol_rate <= 0 selects the default 1e-3 / tau.
TrajectoryClass classify_trajectory(const Trajectory& traj, double tail_fraction = 0.5, double tol_rate = 0.0);

/// Slope used by classify_trajectory, exposed for reports.
double tail_log_slope(const Trajectory& traj, double tail_fraction = 0.5);

/// CSV with header "t,x1,..,xn,norm", 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

std::string to_string(TrajectoryClass c);

}  // namespace wavestab
