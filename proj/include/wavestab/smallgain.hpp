#pragma once

#include "wavestab/model.hpp"

#include <string>
#include <vector>

namespace wavestab {

struct HinfResult {
    double norm = 0.0;            ///< upper end of the final bisection bracket
    double lower_bound = 0.0;     ///< lower end; |H(i w)| reaches it somewhere
    double peak_frequency = 0.0;  ///< rad / time
    int iterations = 0;
};

inline constexpr double kHinfDefaultRtol = 1e-6;
inline constexpr double kHurwitzMargin = 1e-10;
inline constexpr double kHamiltonianAxisTolerance = 1e-8;

bool is_hurwitz(const Matrix& a);

/// ||K (sI - A)^{-1} B||_inf by bisection on the Hamiltonian imaginary-eigenvalue test.
/// Throws NotHurwitz when A has an eigenvalue with Re >= -1e-10.
HinfResult hinf_norm(const LtiPlant& plant, double rtol = kHinfDefaultRtol);

/// True when the Hamiltonian at level gamma has an eigenvalue on the imaginary axis,
/// i.e. gamma < ||H||_inf. Frequencies of those eigenvalues are appended to `freqs` if given.
bool hamiltonian_has_axis_eigenvalue(const LtiPlant& plant, double gamma, std::vector<double>* freqs = nullptr);

enum class SmallGainVerdict { Stable, Inconclusive, Inapplicable };

struct SmallGainReport {
    SmallGainVerdict verdict;
    double hinf = 0.0;  ///< NaN when A is not Hurwitz
    std::string reason;
};

/// Stable when ||H||_inf < c c0, given A Hurwitz and ||H||_inf < 1.
SmallGainReport small_gain_verdict(const CoupledSystem& sys);
/// Same decision with a precomputed norm (NaN means A is not Hurwitz).
SmallGainReport small_gain_verdict(double hinf, const WaveChannel& channel);

struct CminPoint {
    double c0;
    double c_min_bound;
};

/// Guaranteed c_min(c0) <= ||H||_inf / c0. Throws GateRefused when the small-gain gate fails.
std::vector<CminPoint> cmin_curve(const LtiPlant& plant, const std::vector<double>& c0_list);

std::string to_string(SmallGainVerdict v);

}  // namespace wavestab
