#pragma once

#include "wavestab/model.hpp"
#include "wavestab/polynomial.hpp"

#include <vector>

namespace wavestab {

/// H(s) = K (sI - A)^{-1} B = num(s) / den(s), both ascending-degree.
struct RationalTf {
    Poly num;
    Poly den;
    /// Roots removed from both num and den by pole-zero cancellation.
    std::vector<cplx> cancelled;

    cplx operator()(cplx s) const { return num(s) / den(s); }
};

inline constexpr double kCancellationTolerance = 1e-7;
inline constexpr double kWavePoleTolerance = 1e-14;

/// Numerator and denominator of the plant, without cancellation. den is det(sI - A) (monic).
RationalTf plant_tf(const LtiPlant& plant);

/// Cancels common roots of num and den closer than kCancellationTolerance.
RationalTf cancel_common_roots(const RationalTf& tf);

/// plant_tf followed by cancel_common_roots; the pair all delay analyses use.
RationalTf reduced_plant_tf(const LtiPlant& plant);

/// Direct K (sI - A)^{-1} B by a linear solve.
cplx plant_response(const LtiPlant& plant, cplx s);

/// W(x, s) = U(x, s) / U(0, s). Throws PoleEvaluationError near a pole.
cplx wave_tf(double x, cplx s, const WaveChannel& channel);

/// Real part (c/2) log|alpha| shared by every pole of W. Throws NoChannelPoles when alpha == 0.
double wave_pole_abscissa(const WaveChannel& channel);

/// ||W(1, .)||_inf = max(1 / (c c0), 1) for c0 > 0.
double wave_hinf_norm(const WaveChannel& channel);

/// c_eq(s, tau) = a0(s) + a1(s) e^{-tau s} + a2(s) e^{-2 tau s}.
struct QuasiPolynomial {
    Poly a0;
    Poly a1;
    Poly a2;
    double tau = 0.0;

    cplx operator()(cplx s) const { return eval(s, tau); }
    cplx eval(cplx s, double delay) const;
    /// d c_eq / ds at fixed delay.
    cplx ds(cplx s, double delay) const;
    /// d c_eq / d tau at fixed s.
    cplx dtau(cplx s, double delay) const;
};

/// Characteristic quasipolynomial at fixed c1; uses the reduced plant pair.
QuasiPolynomial build_ceq(const RationalTf& reduced, double c1, double tau);
QuasiPolynomial build_ceq(const LtiPlant& plant, const WaveChannel& channel);

}  // namespace wavestab
